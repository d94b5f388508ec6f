//! Random Gaussian-state constructions shared by the integration suites.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;

pub fn random_unitary(rng: &mut impl Rng, n: usize) -> DMatrix<C64> {
    let g = DMatrix::<C64>::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    g.qr().q()
}

/// Real xxpp form of a passive unitary: [[Re U, −Im U], [Im U, Re U]].
pub fn orthosymplectic(u: &DMatrix<C64>) -> DMatrix<f64> {
    let n = u.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = u[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// S = O₁ diag(R, R⁻¹) O₂ with log R uniform in [0, r_max).
pub fn random_symplectic(rng: &mut impl Rng, n: usize, r_max: f64) -> (DMatrix<f64>, Vec<f64>) {
    let o1 = orthosymplectic(&random_unitary(rng, n));
    let o2 = orthosymplectic(&random_unitary(rng, n));
    let r: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..r_max).exp()).collect();
    let d = DVector::from_iterator(2 * n, r.iter().copied().chain(r.iter().map(|x| 1.0 / x)));
    (o1 * DMatrix::from_diagonal(&d) * o2, r)
}

/// Pure Bogoliubov pair V = U cosh(r) Y, W = U sinh(r) Y*.
pub fn random_bogoliubov(rng: &mut impl Rng, n: usize, r_max: f64) -> (DMatrix<C64>, DMatrix<C64>) {
    let u = random_unitary(rng, n);
    let y = random_unitary(rng, n);
    let r: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..r_max)).collect();
    let ch = DMatrix::from_diagonal(&DVector::from_iterator(n, r.iter().map(|x| C64::from(x.cosh()))));
    let sh = DMatrix::from_diagonal(&DVector::from_iterator(n, r.iter().map(|x| C64::from(x.sinh()))));
    (&u * ch * &y, &u * sh * y.conjugate())
}

pub fn omega(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        if j == i + n {
            1.0
        } else if i == j + n {
            -1.0
        } else {
            0.0
        }
    })
}

pub fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}
