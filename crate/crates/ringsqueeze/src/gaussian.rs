//! Gaussian-state observables of the output fields.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Zero-mean Gaussian state: N_ij = ⟨b_i† b_j⟩, M_ij = ⟨b_i b_j⟩.
#[derive(Clone, Debug)]
pub struct GaussianState {
    /// Original row index of each mode.
    pub modes: Vec<usize>,
    pub n: DMatrix<C64>,
    pub m: DMatrix<C64>,
}

/// N = W*Wᵀ, M = VWᵀ for vacuum input.
pub fn moments_from_vw(v: &DMatrix<C64>, w: &DMatrix<C64>) -> GaussianState {
    let n = w.map(|z| z.conj()) * w.transpose();
    let m = v * w.transpose();
    GaussianState { modes: (0..v.nrows()).collect(), n, m }
}

/// Ω = [[0, I], [−I, 0]] in xxpp order.
pub fn omega(n: usize) -> DMatrix<f64> {
    let mut o = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        o[(i, n + i)] = 1.0;
        o[(n + i, i)] = -1.0;
    }
    o
}

impl GaussianState {
    pub fn n_modes(&self) -> usize {
        self.n.nrows()
    }

    pub fn vacuum(n: usize) -> Self {
        GaussianState { modes: (0..n).collect(), n: DMatrix::zeros(n, n), m: DMatrix::zeros(n, n) }
    }

    /// Σ with X = (b+b†)/√2, Y = (b−b†)/(i√2); vacuum is ½I.
    pub fn sigma(&self) -> DMatrix<f64> {
        let k = self.n_modes();
        let mut s = DMatrix::zeros(2 * k, 2 * k);
        for i in 0..k {
            for j in 0..k {
                let (n, m) = (self.n[(i, j)], self.m[(i, j)]);
                let d = if i == j { 0.5 } else { 0.0 };
                s[(i, j)] = n.re + m.re + d;
                s[(i, k + j)] = m.im + n.im;
                s[(k + i, j)] = m.im - n.im;
                s[(k + i, k + j)] = n.re - m.re + d;
            }
        }
        s
    }

    /// Restriction to the listed modes (positions in this state).
    pub fn reduce(&self, subset: &[usize]) -> Result<GaussianState> {
        if subset.is_empty() {
            return Err(Error::EmptySubset);
        }
        let k = subset.len();
        let n = DMatrix::from_fn(k, k, |a, b| self.n[(subset[a], subset[b])]);
        let m = DMatrix::from_fn(k, k, |a, b| self.m[(subset[a], subset[b])]);
        Ok(GaussianState { modes: subset.iter().map(|&i| self.modes[i]).collect(), n, m })
    }

    pub fn total_photons(&self) -> f64 {
        self.n.diagonal().iter().map(|z| z.re).sum()
    }

    /// max-abs deviation from N Hermitian and M symmetric.
    pub fn symmetry_residual(&self) -> f64 {
        (&self.n - self.n.adjoint()).camax().max((&self.m - self.m.transpose()).camax())
    }
}

fn sym_sqrt(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let e = SymmetricEigen::new(a.clone());
    if e.eigenvalues.iter().any(|&x| x <= 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    let q = &e.eigenvectors;
    let s = q * DMatrix::from_diagonal(&e.eigenvalues.map(f64::sqrt)) * q.transpose();
    let si = q * DMatrix::from_diagonal(&e.eigenvalues.map(|x| 1.0 / x.sqrt())) * q.transpose();
    Ok((s, si))
}

fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

#[derive(Clone, Debug)]
pub struct Williamson {
    pub s: DMatrix<f64>,
    /// Symplectic eigenvalues, descending.
    pub d: Vec<f64>,
}

/// Σ = S (D ⊕ D) Sᵀ with S symplectic.
pub fn williamson(sigma: &DMatrix<f64>) -> Result<Williamson> {
    let sigma = symmetrize(sigma);
    let n = sigma.nrows() / 2;
    let (k, ki) = sym_sqrt(&sigma)?;
    let a = &ki * omega(n) * &ki;
    let ia = a.map(|x| C64::new(0.0, x));
    let e = SymmetricEigen::new(ia);
    let mut pos: Vec<usize> = (0..2 * n).filter(|&i| e.eigenvalues[i] > 0.0).collect();
    if pos.len() != n {
        return Err(Error::NotPositiveDefinite);
    }
    // descending symplectic eigenvalue = ascending λ
    pos.sort_by(|&x, &y| e.eigenvalues[x].total_cmp(&e.eigenvalues[y]));
    let mut o = DMatrix::zeros(2 * n, 2 * n);
    let mut d = Vec::with_capacity(n);
    for (c, &idx) in pos.iter().enumerate() {
        let w = e.eigenvectors.column(idx);
        let s2 = std::f64::consts::SQRT_2;
        for r in 0..2 * n {
            o[(r, c)] = s2 * w[r].re;
            o[(r, n + c)] = -s2 * w[r].im;
        }
        d.push(1.0 / e.eigenvalues[idx]);
    }
    let scale = DVector::from_iterator(2 * n, d.iter().chain(d.iter()).map(|x| 1.0 / x.sqrt()));
    let s = k * o * DMatrix::from_diagonal(&scale);
    Ok(Williamson { s, d })
}

#[derive(Clone, Debug)]
pub struct BlochMessiah {
    pub o: DMatrix<f64>,
    /// Squeezing factors R ≥ 1, descending.
    pub r: Vec<f64>,
    pub o_prime: DMatrix<f64>,
}

pub fn symplectic_residual(s: &DMatrix<f64>) -> f64 {
    let o = omega(s.nrows() / 2);
    (s * &o * s.transpose() - o).amax()
}

/// S = O (R ⊕ R⁻¹) O′ with O, O′ orthogonal symplectic.
pub fn bloch_messiah(s: &DMatrix<f64>) -> Result<BlochMessiah> {
    let res = symplectic_residual(s);
    if res > 1e-6 * s.amax().max(1.0).powi(2) {
        return Err(Error::NotSymplectic { residual: res });
    }
    let n = s.nrows() / 2;
    let om = omega(n);
    let (p, _) = sym_sqrt(&symmetrize(&(s * s.transpose())))?;
    let pi = p.clone().try_inverse().ok_or(Error::NotSymplectic { residual: res })?;
    let u = &pi * s;
    let e = SymmetricEigen::new(symmetrize(&p));
    let mut idx: Vec<usize> = (0..2 * n).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[b].total_cmp(&e.eigenvalues[a]));
    let mut cols: Vec<DVector<f64>> = Vec::new();
    let mut r = Vec::new();
    let tol = 1e-7;
    for &i in &idx {
        if cols.len() == n || e.eigenvalues[i].ln() <= tol {
            break;
        }
        cols.push(e.eigenvectors.column(i).into_owned());
        r.push(e.eigenvalues[i]);
    }
    // unit cluster: symplectic Gram–Schmidt within its eigenspace
    let cluster: Vec<DVector<f64>> =
        idx.iter().filter(|&&i| e.eigenvalues[i].ln().abs() <= tol).map(|&i| e.eigenvectors.column(i).into_owned()).collect();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for c in cluster {
        if cols.len() == n {
            break;
        }
        let mut v = c;
        for _ in 0..2 {
            for b in cols.iter().chain(basis.iter()) {
                let f = om.transpose() * b;
                v -= b * b.dot(&v);
                v -= &f * f.dot(&v);
            }
        }
        let nv = v.norm();
        if nv < 1e-6 {
            continue;
        }
        v /= nv;
        basis.push(v.clone());
        cols.push(v);
        r.push(1.0);
    }
    if cols.len() != n {
        return Err(Error::NotSymplectic { residual: res });
    }
    let mut o = DMatrix::zeros(2 * n, 2 * n);
    for (k, c) in cols.iter().enumerate() {
        o.set_column(k, c);
        o.set_column(n + k, &(om.transpose() * c));
    }
    let o_prime = o.transpose() * u;
    Ok(BlochMessiah { o, r, o_prime })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhotonNumbers {
    pub thermal: f64,
    pub squeezed: f64,
    pub total: f64,
}

pub fn photon_numbers(w: &Williamson, bm: &BlochMessiah, state: &GaussianState) -> PhotonNumbers {
    PhotonNumbers {
        thermal: w.d.iter().map(|d| d - 0.5).sum(),
        squeezed: bm.r.iter().map(|r| r.ln().sinh().powi(2)).sum(),
        total: state.total_photons(),
    }
}

pub fn db(variance: f64) -> f64 {
    10.0 * (variance / 0.5).log10()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuadratureExtremes {
    pub min_db: f64,
    pub max_db: f64,
    /// Quadrature vector of the least variance (xxpp).
    pub min_mode: Vec<f64>,
}

/// Extreme quadrature variances from the eigendecomposition of Σ.
pub fn max_squeezing_db(sigma: &DMatrix<f64>) -> QuadratureExtremes {
    let e = SymmetricEigen::new(symmetrize(sigma));
    let (imin, _) = e.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty");
    QuadratureExtremes {
        min_db: db(e.eigenvalues.min()),
        max_db: db(e.eigenvalues.max()),
        min_mode: e.eigenvectors.column(imin).iter().copied().collect(),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MercerWolfMode {
    pub occupancy: f64,
    /// ⟨c c⟩ of the mode c = Σ_j u_j b_j.
    pub anomalous: C64,
    pub vector: Vec<C64>,
    pub min_variance: f64,
    pub max_variance: f64,
    pub squeezing_db: f64,
}

/// Modes diagonalizing Ñ, by decreasing occupancy, with their single-mode variances.
pub fn mercer_wolf(state: &GaussianState) -> Vec<MercerWolfMode> {
    let e = SymmetricEigen::new((&state.n + state.n.adjoint()) * C64::from(0.5));
    let mut idx: Vec<usize> = (0..state.n_modes()).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[b].total_cmp(&e.eigenvalues[a]));
    idx.iter()
        .map(|&k| {
            let u = e.eigenvectors.column(k);
            let occ = e.eigenvalues[k];
            let m = (u.transpose() * &state.m * u)[(0, 0)];
            let min_variance = 0.5 + occ - m.norm();
            MercerWolfMode {
                occupancy: occ,
                anomalous: m,
                vector: u.iter().copied().collect(),
                min_variance,
                max_variance: 0.5 + occ + m.norm(),
                squeezing_db: db(min_variance),
            }
        })
        .collect()
}

/// Principal square root through the complex Schur form (tolerates singular input).
pub fn sqrtm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    // a roundoff-level matrix (identical states) stalls the QR sweep; its root is zero to that accuracy
    if a.amax() < 1e-12 {
        return Ok(DMatrix::zeros(n, n));
    }
    let (q, t) = a
        .map(C64::from)
        .try_schur(f64::EPSILON, 1000 * n.max(1))
        .ok_or(Error::SchurNotConverged)?
        .unpack();
    let mut u = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        u[(i, i)] = t[(i, i)].sqrt();
    }
    for d in 1..n {
        for i in 0..n - d {
            let j = i + d;
            let mut x = t[(i, j)];
            for k in i + 1..j {
                x -= u[(i, k)] * u[(k, j)];
            }
            let den = u[(i, i)] + u[(j, j)];
            u[(i, j)] = if den.norm() > 0.0 { x / den } else { C64::new(0.0, 0.0) };
        }
    }
    Ok((&q * u * q.adjoint()).map(|z| z.re))
}

/// Fidelity (Tr√(√ρ σ √ρ))² of two zero-mean Gaussian states from their covariances.
pub fn fidelity(sa: &DMatrix<f64>, sb: &DMatrix<f64>) -> Result<f64> {
    let n = sa.nrows() / 2;
    let om = omega(n);
    let sum = sa + sb;
    let det_sum = sum.determinant();
    if det_sum <= 0.0 {
        return Err(Error::NotPositiveDefinite);
    }
    let si = sum.clone().try_inverse().ok_or(Error::NotPositiveDefinite)?;
    let v_aux = om.transpose() * &si * (&om * 0.25 + sb * &om * sa);
    let x = &v_aux * &om;
    let xi = x.clone().try_inverse().ok_or(Error::NotPositiveDefinite)?;
    let inner = DMatrix::identity(2 * n, 2 * n) + &xi * &xi * 0.25;
    let root = sqrtm(&inner)?;
    let f4 = ((root + DMatrix::identity(2 * n, 2 * n)) * &v_aux * 2.0).determinant();
    if !(f4 >= 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    // the expression above is Tr√(√ρσ√ρ); square it
    Ok((f4.sqrt() / det_sum.sqrt()).min(1.0))
}

/// Symplectic eigenvalues, descending.
pub fn symplectic_eigenvalues(sigma: &DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(williamson(sigma)?.d)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InterlacingReport {
    pub full: Vec<f64>,
    pub reduced: Vec<f64>,
    pub holds: bool,
    pub worst_violation: f64,
}

/// Checks d̃_i ≥ d_{i+1} and d_{i−1} ≥ d̃_i after dropping `mode`.
pub fn interlacing_check(state: &GaussianState, mode: usize) -> Result<InterlacingReport> {
    let keep: Vec<usize> = (0..state.n_modes()).filter(|&i| i != mode).collect();
    let full = symplectic_eigenvalues(&state.sigma())?;
    let reduced = symplectic_eigenvalues(&state.reduce(&keep)?.sigma())?;
    let mut worst: f64 = 0.0;
    for i in 0..reduced.len() {
        worst = worst.max(full[i + 1] - reduced[i]);
        if i >= 1 {
            worst = worst.max(reduced[i] - full[i - 1]);
        }
    }
    worst = worst.max(0.5 - reduced.iter().cloned().fold(f64::INFINITY, f64::min));
    Ok(InterlacingReport { full, reduced, holds: worst <= 1e-8, worst_violation: worst })
}

/// Purity-like comparison value: det Σ scaled so pure states give 1.
pub fn purity(sigma: &DMatrix<f64>) -> f64 {
    let n = sigma.nrows() / 2;
    1.0 / (sigma.determinant() * 4f64.powi(n as i32)).sqrt()
}

/// Complex covariance ½⟨{ξ, ξ†}⟩ with ξ = (b, b†).
pub fn complex_covariance(state: &GaussianState) -> DMatrix<C64> {
    let k = state.n_modes();
    let mut g = DMatrix::zeros(2 * k, 2 * k);
    for i in 0..k {
        for j in 0..k {
            let d = if i == j { 0.5 } else { 0.0 };
            g[(i, j)] = state.n[(j, i)] + d;
            g[(i, k + j)] = state.m[(i, j)];
            g[(k + i, j)] = state.m[(i, j)].conj();
            g[(k + i, k + j)] = state.n[(i, j)] + d;
        }
    }
    g
}

/// 𝓛 mapping (b, b†) to (X, Y).
pub fn quadrature_map(k: usize) -> DMatrix<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut l = DMatrix::zeros(2 * k, 2 * k);
    for i in 0..k {
        l[(i, i)] = C64::new(s, 0.0);
        l[(i, k + i)] = C64::new(s, 0.0);
        l[(k + i, i)] = C64::new(0.0, -s);
        l[(k + i, k + i)] = C64::new(0.0, s);
    }
    l
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub fn random_unitary(rng: &mut impl Rng, n: usize) -> DMatrix<C64> {
        let g = DMatrix::<C64>::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        g.qr().q()
    }

    pub fn orthosymplectic(u: &DMatrix<C64>) -> DMatrix<f64> {
        let n = u.nrows();
        let mut o = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                o[(i, j)] = u[(i, j)].re;
                o[(i, n + j)] = -u[(i, j)].im;
                o[(n + i, j)] = u[(i, j)].im;
                o[(n + i, n + j)] = u[(i, j)].re;
            }
        }
        o
    }

    pub fn random_symplectic(rng: &mut impl Rng, n: usize) -> (DMatrix<f64>, Vec<f64>) {
        let o1 = orthosymplectic(&random_unitary(rng, n));
        let o2 = orthosymplectic(&random_unitary(rng, n));
        let r: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.2f64).exp()).collect();
        let d = DVector::from_iterator(2 * n, r.iter().copied().chain(r.iter().map(|x| 1.0 / x)));
        (o1 * DMatrix::from_diagonal(&d) * o2, r)
    }

    fn squeezer(r: f64) -> GaussianState {
        let v = DMatrix::from_element(1, 1, C64::from(r.cosh()));
        let w = DMatrix::from_element(1, 1, C64::from(r.sinh()));
        moments_from_vw(&v, &w)
    }

    #[test]
    fn vacuum_and_squeezer_moments() {
        let z = moments_from_vw(&DMatrix::identity(3, 3), &DMatrix::zeros(3, 3));
        assert!((z.sigma() - DMatrix::identity(6, 6) * 0.5).amax() < 1e-15);
        let s = squeezer(0.7);
        assert!((s.n[(0, 0)].re - 0.7f64.sinh().powi(2)).abs() < 1e-14);
        assert!((s.m[(0, 0)].re - 0.7f64.sinh() * 0.7f64.cosh()).abs() < 1e-14);
        let q = max_squeezing_db(&s.sigma());
        assert!((q.min_db + 20.0 * std::f64::consts::E.log10() * 0.7).abs() < 1e-10);
    }

    #[test]
    fn sigma_matches_quadrature_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 4;
        let v = random_unitary(&mut rng, n) * C64::from(1.3);
        let w = random_unitary(&mut rng, n) * C64::from(0.83);
        let st = moments_from_vw(&v, &w);
        let l = quadrature_map(n);
        let sig = (&l * complex_covariance(&st) * l.adjoint()).map(|z| z.re);
        assert!((sig - st.sigma()).amax() < 1e-12);
    }

    #[test]
    fn williamson_of_thermal_and_vacuum() {
        for a in [0.5, 1.7] {
            let w = williamson(&(DMatrix::identity(4, 4) * a)).unwrap();
            assert!(w.d.iter().all(|d| (d - a).abs() < 1e-12));
            assert!(symplectic_residual(&w.s) < 1e-12);
        }
        let bm = bloch_messiah(&DMatrix::identity(4, 4)).unwrap();
        assert!(bm.r.iter().all(|r| (r - 1.0).abs() < 1e-12));
    }

    #[test]
    fn bloch_messiah_single_mode_squeezer() {
        let r = 0.4f64;
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![r.exp(), (-r).exp()]));
        let bm = bloch_messiah(&s).unwrap();
        assert!((bm.r[0] - r.exp()).abs() < 1e-12);
        assert!((bm.o.abs() - DMatrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn fidelity_vacuum_thermal_closed_form() {
        for nbar in [0.1, 0.5, 1.0, 2.0] {
            let f = fidelity(&(DMatrix::identity(2, 2) * 0.5), &(DMatrix::identity(2, 2) * (nbar + 0.5))).unwrap();
            assert!((f - 1.0 / (1.0 + nbar)).abs() < 1e-10, "{nbar} {f}");
        }
    }

    #[test]
    fn fidelity_of_many_mode_vacuum_with_itself() {
        let vac = DMatrix::identity(42, 42) * 0.5;
        assert!((fidelity(&vac, &vac).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interlacing_two_mode_squeezed() {
        let r = 0.6f64;
        let v = DMatrix::from_diagonal(&DVector::from_vec(vec![C64::from(r.cosh()); 2]));
        let mut w = DMatrix::zeros(2, 2);
        w[(0, 1)] = C64::from(r.sinh());
        w[(1, 0)] = C64::from(r.sinh());
        let st = moments_from_vw(&v, &w);
        let rep = interlacing_check(&st, 1).unwrap();
        assert!(rep.holds);
        assert!((rep.reduced[0] - (2.0 * r).cosh() / 2.0).abs() < 1e-10);
    }

    fn fock_thermal(nbar: f64, dim: usize) -> DMatrix<C64> {
        DMatrix::from_fn(dim, dim, |i, j| if i == j { C64::from(nbar.powi(i as i32) / (1.0 + nbar).powi(i as i32 + 1)) } else { C64::from(0.0) })
    }

    fn fock_squeeze(r: f64, dim: usize) -> DMatrix<C64> {
        let mut a = DMatrix::<C64>::zeros(dim, dim);
        for k in 1..dim {
            a[(k - 1, k)] = C64::from((k as f64).sqrt());
        }
        let ad = a.adjoint();
        let gen = (&a * &a * C64::from(-r) + &ad * &ad * C64::from(r)) * C64::from(0.5);
        gen.exp()
    }

    fn psd_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
        let e = SymmetricEigen::new((m + m.adjoint()) * C64::from(0.5));
        let d = e.eigenvalues.map(|x| C64::from(x.max(0.0).sqrt()));
        &e.eigenvectors * DMatrix::from_diagonal(&d) * e.eigenvectors.adjoint()
    }

    fn fock_fidelity(rho: &DMatrix<C64>, sigma: &DMatrix<C64>) -> f64 {
        let sr = psd_sqrt(rho);
        let inner = &sr * sigma * &sr;
        psd_sqrt(&inner).trace().re.powi(2)
    }

    #[test]
    fn fidelity_matches_fock_truncation() {
        let dim = 90;
        for &(r, n1, n2) in &[(0.3, 0.0, 0.5), (0.5, 0.4, 1.0), (0.2, 1.5, 0.1), (0.0, 2.0, 0.7)] {
            let s = fock_squeeze(r, dim);
            let rho = &s * fock_thermal(n1, dim) * s.adjoint();
            let sigma = fock_thermal(n2, dim);
            let want = fock_fidelity(&rho, &sigma);
            let sa = DMatrix::from_diagonal(&DVector::from_vec(vec![(n1 + 0.5) * (2.0 * r).exp(), (n1 + 0.5) * (-2.0 * r).exp()]));
            let sb = DMatrix::identity(2, 2) * (n2 + 0.5);
            let got = fidelity(&sa, &sb).unwrap();
            assert!((got - want).abs() < 1e-6, "{r} {n1} {n2}: {got} vs {want}");
            assert!((fidelity(&sa, &sa).unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn williamson_recovers_constructed_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = 3;
            let (s0, _) = random_symplectic(&mut rng, n);
            let mut d0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..3.0)).collect();
            let dd = DVector::from_iterator(2 * n, d0.iter().chain(d0.iter()).copied());
            let sigma = &s0 * DMatrix::from_diagonal(&dd) * s0.transpose();
            let w = williamson(&sigma).unwrap();
            d0.sort_by(|a, b| b.total_cmp(a));
            for (a, b) in w.d.iter().zip(&d0) {
                assert!((a - b).abs() < 1e-8);
            }
            let dd = DVector::from_iterator(2 * n, w.d.iter().chain(w.d.iter()).copied());
            let back = &w.s * DMatrix::from_diagonal(&dd) * w.s.transpose();
            assert!((back - &sigma).norm() / sigma.norm() < 1e-8);
            assert!(symplectic_residual(&w.s) < 1e-8);
        }
    }

    #[test]
    fn mercer_wolf_of_diagonal_state() {
        let mut st = GaussianState::vacuum(3);
        st.n[(0, 0)] = C64::from(0.2);
        st.n[(1, 1)] = C64::from(0.9);
        st.n[(2, 2)] = C64::from(0.4);
        let modes = mercer_wolf(&st);
        assert!((modes[0].occupancy - 0.9).abs() < 1e-14);
        assert!((modes[0].vector[1].norm() - 1.0).abs() < 1e-14);
        let total: f64 = modes.iter().map(|m| m.occupancy).sum();
        assert!((total - st.total_photons()).abs() < 1e-14);
        let all = st.reduce(&[0, 1, 2]).unwrap();
        assert_eq!(all.n, st.n);
        assert!(matches!(st.reduce(&[]), Err(Error::EmptySubset)));
    }
}
