//! Split-step evolution of the signal and idler operators over the pump trajectory.

use crate::error::{Error, Result};
use crate::model::BinLabel;
use crate::network::BinGrid;
use crate::nonlinear::{chi_terms, ChiTerm, NonlinearTable, ProcessMask};
use crate::pump::{interpolate, PumpSystem, PumpTrajectory};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Row order of the operator vector: bin J ∈ (LI, S, RI), then k_i, then segment.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeVectorLayout {
    pub n_k: [usize; 3],
    pub n_ports: usize,
}

impl ModeVectorLayout {
    pub fn offset(&self, j: usize) -> usize {
        self.n_k[..j].iter().sum::<usize>() * self.n_ports
    }

    pub fn index(&self, j: usize, i: usize, s: usize) -> usize {
        self.offset(j) + i * self.n_ports + s
    }

    /// Number of annihilators; the conjugate of row r sits at r + len().
    pub fn len(&self) -> usize {
        self.n_k.iter().sum::<usize>() * self.n_ports
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn label(j: usize) -> BinLabel {
        BinLabel::GENERATED[j]
    }

    /// Rows of the output-waveguide port of bin `j`.
    pub fn output_rows(&self, j: usize) -> Vec<usize> {
        (0..self.n_k[j]).map(|i| self.index(j, i, 0)).collect()
    }
}

/// Everything needed to step the generated-bin operators.
#[derive(Clone, Debug)]
pub struct QuantumSystem {
    pub grids: [BinGrid; 3],
    pub table: NonlinearTable,
    pub mask: ProcessMask,
    pub layout: ModeVectorLayout,
    /// √δk_J C_J(k_i), per (J, i).
    u: Vec<Vec<DMatrix<C64>>>,
    /// √δk_J H_out(k_i) and its adjoint: the same factors seen from the out basis.
    r_out: Vec<Vec<DMatrix<C64>>>,
    u_out: Vec<Vec<DMatrix<C64>>>,
    /// C̄_J = δk_J Σ_i C_J(k_i).
    cbar: [DMatrix<C64>; 3],
}

impl QuantumSystem {
    pub fn new(grids: [BinGrid; 3], table: NonlinearTable, mask: ProcessMask) -> Self {
        let p = grids[0].maps[0].c.nrows();
        let layout = ModeVectorLayout { n_k: [grids[0].n_k(), grids[1].n_k(), grids[2].n_k()], n_ports: p };
        let u = grids
            .iter()
            .map(|g| g.maps.iter().map(|m| &m.c * C64::from(g.bin.dk.sqrt())).collect())
            .collect();
        let r_out: Vec<Vec<DMatrix<C64>>> =
            grids.iter().map(|g| g.maps.iter().map(|m| &m.h_out * C64::from(g.bin.dk.sqrt())).collect()).collect();
        let u_out = r_out.iter().map(|v| v.iter().map(|m| m.adjoint()).collect()).collect();
        let cbar = std::array::from_fn(|j| {
            let g = &grids[j];
            let mut s = DMatrix::zeros(p, p);
            for m in &g.maps {
                s += &m.c;
            }
            s * C64::from(g.bin.dk)
        });
        QuantumSystem { grids, table, mask, layout, u, r_out, u_out, cbar }
    }

    pub fn with_mask(&self, mask: ProcessMask) -> Self {
        QuantumSystem { mask, ..self.clone() }
    }

    fn p(&self) -> usize {
        self.layout.n_ports
    }

    /// Compressed coupling Γ = [[G, F], [−F*, −G*]] (6P × 6P) at time t.
    pub fn coupling(&self, s1: &[C64], s2: &[C64], t: f64) -> Result<DMatrix<C64>> {
        let terms = chi_terms(&self.table, s1, s2, t, self.mask)?;
        Ok(self.coupling_from_terms(&terms))
    }

    pub fn coupling_from_terms(&self, terms: &[ChiTerm]) -> DMatrix<C64> {
        let p = self.p();
        let n = 3 * p;
        let mut gam = DMatrix::<C64>::zeros(2 * n, 2 * n);
        for t in terms {
            let r = t.row.generated_index().expect("generated row") * p;
            let c = t.col.generated_index().expect("generated col") * p + if t.conjugate { n } else { 0 };
            for s in 0..p {
                gam[(r + s, c + s)] += t.coeff[s];
            }
        }
        for r in 0..n {
            for c in 0..2 * n {
                let cc = if c < n { c + n } else { c - n };
                gam[(r + n, cc)] = -gam[(r, c)].conj();
            }
        }
        gam
    }

    /// M = φ₁(Z)·iΔtΓ with Z = iΔtΓ·blockdiag(C̄, C̄*).
    pub fn step_kernel(&self, gam: &DMatrix<C64>, dt: f64) -> Result<DMatrix<C64>> {
        let p = self.p();
        let n = 3 * p;
        let y = gam * C64::new(0.0, dt);
        let mut ru = DMatrix::zeros(2 * n, 2 * n);
        for j in 0..3 {
            let o = j * p;
            ru.view_mut((o, o), (p, p)).copy_from(&self.cbar[j]);
            ru.view_mut((n + o, n + o), (p, p)).copy_from(&self.cbar[j].map(|z| z.conj()));
        }
        let z = &y * ru;
        Ok(phi1(&z)? * y)
    }

    /// Pump arc sums of both pumps at time t.
    pub fn pump_sums(&self, pumps: &PumpSystem, traj: &PumpTrajectory, t: f64) -> (Vec<C64>, Vec<C64>) {
        let a = interpolate(pumps, traj, t);
        (pumps.arc_sums(0, &a[0]), pumps.arc_sums(1, &a[1]))
    }

    /// Applies one Strang step on [t, t+Δt] to the top rows [V | W], in the basis of `prop`.
    ///
    /// The basis change ℋ is block diagonal in k and commutes with the linear rotation,
    /// so in the out basis the low-rank factors become ℋ⁻¹U = √δk H_outᴴ (since C = H_out H_outᴴ)
    /// and Rℋ = √δk H_out. No inverse of the possibly ill-conditioned ℋ is needed.
    pub fn apply_step(&self, prop: &mut Propagator, kernel: &DMatrix<C64>, dt: f64) {
        let lay = &self.layout;
        let p = self.p();
        let n = 3 * p;
        let nn = lay.len();
        let d: Vec<C64> = (0..3)
            .flat_map(|j| {
                let g = &self.grids[j];
                (0..g.n_k()).flat_map(move |i| std::iter::repeat(C64::from_polar(1.0, -g.detunings[i] * dt / 2.0)).take(p))
            })
            .collect();
        scale_rows(&mut prop.v, &d);
        scale_rows(&mut prop.w, &d);
        let ya = self.compress(&prop.v, prop.basis);
        let yb = self.compress(&prop.w, prop.basis);
        let m11 = kernel.view((0, 0), (n, n));
        let m12 = kernel.view((0, n), (n, n));
        let zv = m11 * &ya + m12 * yb.map(|z| z.conj());
        let zw = m11 * &yb + m12 * ya.map(|z| z.conj());
        for j in 0..3 {
            for i in 0..lay.n_k[j] {
                let r = lay.index(j, i, 0);
                let u = match prop.basis {
                    Basis::Local => &self.u[j][i],
                    Basis::Out => &self.u_out[j][i],
                };
                prop.v.rows_mut(r, p).gemm(C64::from(1.0), u, &zv.rows(j * p, p), C64::from(1.0));
                prop.w.rows_mut(r, p).gemm(C64::from(1.0), u, &zw.rows(j * p, p), C64::from(1.0));
            }
        }
        scale_rows(&mut prop.v, &d);
        scale_rows(&mut prop.w, &d);
        debug_assert_eq!(prop.v.nrows(), nn);
        prop.t1 += dt;
    }

    /// R·X: Σ_i √δk_J X[(J,i,s), :] in the local basis, Σ_i √δk_J H_out X[(J,i,·), :] in the out basis.
    fn compress(&self, x: &DMatrix<C64>, basis: Basis) -> DMatrix<C64> {
        if basis == Basis::Out {
            let p = self.p();
            let mut y = DMatrix::zeros(3 * p, x.ncols());
            for j in 0..3 {
                for i in 0..self.layout.n_k[j] {
                    let r = self.layout.index(j, i, 0);
                    y.rows_mut(j * p, p).gemm(C64::from(1.0), &self.r_out[j][i], &x.rows(r, p), C64::from(1.0));
                }
            }
            return y;
        }
        let lay = &self.layout;
        let p = self.p();
        let cols = x.ncols();
        let mut y = DMatrix::zeros(3 * p, cols);
        for c in 0..cols {
            let col = x.column(c);
            for j in 0..3 {
                let sq = self.grids[j].bin.dk.sqrt();
                for i in 0..lay.n_k[j] {
                    let r = lay.index(j, i, 0);
                    for s in 0..p {
                        y[(j * p + s, c)] += col[r + s] * sq;
                    }
                }
            }
        }
        y
    }

    /// Composes the steps between trajectory samples `from` and `to` onto `prop`.
    pub fn evolve(&self, prop: &mut Propagator, pumps: &PumpSystem, traj: &PumpTrajectory, from: usize, to: usize) -> Result<()> {
        let dt = traj.dt;
        for n in from..to {
            let t = traj.states[n].t + 0.5 * dt;
            let (s1, s2) = self.pump_sums(pumps, traj, t);
            let gam = self.coupling(&s1, &s2, t)?;
            let k = self.step_kernel(&gam, dt)?;
            self.apply_step(prop, &k, dt);
        }
        Ok(())
    }

    /// Full propagation over the trajectory, in the local basis.
    pub fn compose(&self, pumps: &PumpSystem, traj: &PumpTrajectory) -> Result<Propagator> {
        let mut prop = Propagator::identity(self.layout.len(), traj.t0());
        self.evolve(&mut prop, pumps, traj, 0, traj.n_steps())?;
        Ok(prop)
    }

    /// Full propagation evolved directly in the asymptotic-out basis.
    pub fn compose_out(&self, pumps: &PumpSystem, traj: &PumpTrajectory) -> Result<Propagator> {
        let mut prop = Propagator { basis: Basis::Out, ..Propagator::identity(self.layout.len(), traj.t0()) };
        self.evolve(&mut prop, pumps, traj, 0, traj.n_steps())?;
        Ok(prop)
    }

    /// Diagonal of 𝒜^L: −Δω on annihilator rows, +Δω on conjugate rows.
    pub fn linear_generator(&self) -> Vec<f64> {
        let mut a: Vec<f64> = Vec::with_capacity(2 * self.layout.len());
        for g in &self.grids {
            for d in &g.detunings {
                a.extend(std::iter::repeat(-d).take(self.p()));
            }
        }
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        a.extend(neg);
        a
    }

    /// Dense 𝒜^NL = blockdiag(U, U*) Γ blockdiag(R, R).
    pub fn nonlinear_generator(&self, gam: &DMatrix<C64>) -> DMatrix<C64> {
        let lay = &self.layout;
        let p = self.p();
        let n3 = 3 * p;
        let nn = lay.len();
        let mut a = DMatrix::zeros(2 * nn, 2 * nn);
        for (half_r, conj_r) in [(0usize, false), (1, true)] {
            for j in 0..3 {
                for i in 0..lay.n_k[j] {
                    let u = if conj_r { self.u[j][i].map(|z| z.conj()) } else { self.u[j][i].clone() };
                    let rows = half_r * nn + lay.index(j, i, 0);
                    for half_c in 0..2 {
                        for j2 in 0..3 {
                            let block = gam.view((half_r * n3 + j * p, half_c * n3 + j2 * p), (p, p));
                            let ub = &u * block;
                            let sq = self.grids[j2].bin.dk.sqrt();
                            for i2 in 0..lay.n_k[j2] {
                                let cols = half_c * nn + lay.index(j2, i2, 0);
                                a.view_mut((rows, cols), (p, p)).copy_from(&(&ub * C64::from(sq)));
                            }
                        }
                    }
                }
            }
        }
        a
    }
}

fn scale_rows(x: &mut DMatrix<C64>, d: &[C64]) {
    let n = x.nrows();
    for c in 0..x.ncols() {
        let col = &mut x.as_mut_slice()[c * n..(c + 1) * n];
        for (v, s) in col.iter_mut().zip(d) {
            *v *= s;
        }
    }
}

/// φ₁(Z) = Σ Zⁿ/(n+1)!; series for small ‖Z‖, augmented exponential otherwise.
pub fn phi1(z: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    if one_norm(z) < 0.5 {
        phi1_series(z)
    } else {
        Ok(phi1_exp(z))
    }
}

pub fn one_norm(z: &DMatrix<C64>) -> f64 {
    z.column_iter().map(|c| c.iter().map(|x| x.norm()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn phi1_series(z: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let n = z.nrows();
    let mut sum = DMatrix::<C64>::identity(n, n);
    let mut term = DMatrix::<C64>::identity(n, n);
    for k in 1..=30 {
        term = &term * z * C64::from(1.0 / (k as f64 + 1.0));
        sum += &term;
        if one_norm(&term) <= 1e-16 * one_norm(&sum) {
            return Ok(sum);
        }
    }
    Err(Error::SeriesDiverged { terms: 30 })
}

pub fn phi1_exp(z: &DMatrix<C64>) -> DMatrix<C64> {
    let n = z.nrows();
    let mut aug = DMatrix::<C64>::zeros(2 * n, 2 * n);
    aug.view_mut((0, 0), (n, n)).copy_from(z);
    aug.view_mut((0, n), (n, n)).fill_with_identity();
    aug.exp().view((0, n), (n, n)).into_owned()
}

/// exp(A) − I by its power series (terms until relative norm < 1e-14, at most 30).
pub fn expm1_series(a: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let n = a.nrows();
    let mut term = DMatrix::<C64>::identity(n, n);
    let mut sum = DMatrix::<C64>::zeros(n, n);
    for k in 1..=30 {
        term = &term * a * C64::from(1.0 / k as f64);
        sum += &term;
        if one_norm(&term) <= 1e-14 * one_norm(&sum).max(1e-300) {
            return Ok(sum);
        }
    }
    Err(Error::SeriesDiverged { terms: 30 })
}

/// Dense reference step K = e^{i𝒜ᴸΔt/2}(I + K^NL)e^{i𝒜ᴸΔt/2}.
pub fn short_step_dense(a_l: &[f64], a_nl: &DMatrix<C64>, dt: f64, use_series: bool) -> Result<DMatrix<C64>> {
    let n = a_nl.nrows();
    let arg = a_nl * C64::new(0.0, dt);
    let knl = if use_series { expm1_series(&arg)? } else { arg.exp() - DMatrix::identity(n, n) };
    let mut k = DMatrix::identity(n, n) + knl;
    for r in 0..n {
        let dr = C64::from_polar(1.0, a_l[r] * dt / 2.0);
        for c in 0..n {
            let dc = C64::from_polar(1.0, a_l[c] * dt / 2.0);
            k[(r, c)] *= dr * dc;
        }
    }
    Ok(k)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Local,
    Out,
}

/// Top block rows [V | W] of the Bogoliubov matrix [[V, W], [W*, V*]].
#[derive(Clone, Debug)]
pub struct Propagator {
    pub v: DMatrix<C64>,
    pub w: DMatrix<C64>,
    pub basis: Basis,
    pub t0: f64,
    pub t1: f64,
}

impl Propagator {
    pub fn identity(n: usize, t: f64) -> Self {
        Propagator { v: DMatrix::identity(n, n), w: DMatrix::zeros(n, n), basis: Basis::Local, t0: t, t1: t }
    }

    pub fn dense(&self) -> DMatrix<C64> {
        let n = self.v.nrows();
        let mut k = DMatrix::zeros(2 * n, 2 * n);
        k.view_mut((0, 0), (n, n)).copy_from(&self.v);
        k.view_mut((0, n), (n, n)).copy_from(&self.w);
        k.view_mut((n, 0), (n, n)).copy_from(&self.w.map(|z| z.conj()));
        k.view_mut((n, n), (n, n)).copy_from(&self.v.map(|z| z.conj()));
        k
    }

    pub fn from_dense(k: &DMatrix<C64>, basis: Basis, t0: f64, t1: f64) -> Self {
        let n = k.nrows() / 2;
        Propagator { v: k.view((0, 0), (n, n)).into_owned(), w: k.view((0, n), (n, n)).into_owned(), basis, t0, t1 }
    }

    /// max(‖VV† − WW† − I‖, ‖VWᵀ − WVᵀ‖) (max-abs entry).
    pub fn bogoliubov_residual(&self) -> f64 {
        let n = self.v.nrows();
        let a = &self.v * self.v.adjoint() - &self.w * self.w.adjoint() - DMatrix::<C64>::identity(n, n);
        let vw = &self.v * self.w.transpose();
        let b = &vw - vw.transpose();
        a.camax().max(b.camax())
    }

    /// Converts to the asymptotic-out basis: V ← ℋ⁻¹Vℋ, W ← ℋ⁻¹Wℋ*.
    pub fn to_out_basis(&self, sys: &QuantumSystem) -> Result<Propagator> {
        if self.basis == Basis::Out {
            return Ok(self.clone());
        }
        let lay = &sys.layout;
        let p = lay.n_ports;
        let mut v = self.v.clone();
        let mut w = self.w.clone();
        for j in 0..3 {
            for i in 0..lay.n_k[j] {
                let m = &sys.grids[j].maps[i];
                if !m.cond.is_finite() || m.cond > 1e12 {
                    return Err(Error::IllConditioned { cond: m.cond });
                }
                let r = lay.index(j, i, 0);
                let h = &m.h_out;
                let hinv = m.l_out.transpose();
                // right multiplication acts on column blocks
                let vc = v.columns(r, p) * h;
                v.columns_mut(r, p).copy_from(&vc);
                let wc = w.columns(r, p) * h.map(|z| z.conj());
                w.columns_mut(r, p).copy_from(&wc);
                let vr = &hinv * v.rows(r, p);
                v.rows_mut(r, p).copy_from(&vr);
                let wr = &hinv * w.rows(r, p);
                w.rows_mut(r, p).copy_from(&wr);
            }
        }
        Ok(Propagator { v, w, basis: Basis::Out, t0: self.t0, t1: self.t1 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SystemConfig;
    use crate::network::Network;
    const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
    use crate::nonlinear::lambda_bar;
    use crate::pump::{solve_pumps, PumpState};
    use crate::scenarios::{build_config, example1_params, Fidelity};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small(n_k: usize, gamma_nl: f64) -> (SystemConfig, PumpSystem, QuantumSystem) {
        let mut p = example1_params(Fidelity::Low);
        p.n_k = n_k;
        p.gamma_nl = gamma_nl;
        p.n_phantom = 2;
        let cfg = build_config(&p).unwrap();
        let net = Network::new(&cfg).unwrap();
        let table = lambda_bar(&cfg, &net).unwrap();
        let pumps = PumpSystem::new(&cfg, &net, &table).unwrap();
        let g = |l| BinGrid::new(&net, cfg.bin(l).unwrap()).unwrap();
        let q = QuantumSystem::new([g(BinLabel::LI), g(BinLabel::S), g(BinLabel::RI)], table, ProcessMask::ALL);
        (cfg, pumps, q)
    }

    fn pump_sums_at_peak(cfg: &SystemConfig, pumps: &PumpSystem) -> (Vec<C64>, Vec<C64>, f64) {
        let traj = solve_pumps(cfg, pumps).unwrap();
        let best = (0..traj.states.len())
            .max_by(|&a, &b| pumps.ring_photons(0, &traj.states[a].alpha[0]).total_cmp(&pumps.ring_photons(0, &traj.states[b].alpha[0])))
            .unwrap();
        let st = &traj.states[best];
        (pumps.arc_sums(0, &st.alpha[0]), pumps.arc_sums(1, &st.alpha[1]), st.t)
    }

    #[test]
    fn layout_is_a_bijection() {
        let lay = ModeVectorLayout { n_k: [3, 5, 3], n_ports: 4 };
        let mut seen = vec![false; lay.len()];
        for j in 0..3 {
            for i in 0..lay.n_k[j] {
                for s in 0..4 {
                    let r = lay.index(j, i, s);
                    assert!(!seen[r]);
                    seen[r] = true;
                }
            }
        }
        assert!(seen.iter().all(|&x| x));
    }

    #[test]
    fn generator_matches_term_by_term_assembly() {
        let (cfg, pumps, q) = small(3, 1.0);
        let (s1, s2, t) = pump_sums_at_peak(&cfg, &pumps);
        let terms = chi_terms(&q.table, &s1, &s2, t, ProcessMask::ALL).unwrap();
        let a = q.nonlinear_generator(&q.coupling_from_terms(&terms));
        let lay = &q.layout;
        let nn = lay.len();
        let p = lay.n_ports;
        let mut b = DMatrix::<C64>::zeros(2 * nn, 2 * nn);
        for term in &terms {
            let j = term.row.generated_index().unwrap();
            let j2 = term.col.generated_index().unwrap();
            for i in 0..lay.n_k[j] {
                let c = &q.grids[j].maps[i].c;
                for i2 in 0..lay.n_k[j2] {
                    let w = (q.grids[j].bin.dk * q.grids[j2].bin.dk).sqrt();
                    for s in 0..p {
                        for s2 in 0..p {
                            let val = c[(s, s2)] * term.coeff[s2] * w;
                            let (r, col) = (lay.index(j, i, s), lay.index(j2, i2, s2));
                            let coff = if term.conjugate { nn } else { 0 };
                            b[(r, col + coff)] += val;
                            // conjugate rows: adjoint of the annihilator rows
                            b[(r + nn, (col + coff + nn) % (2 * nn))] -= val.conj();
                        }
                    }
                }
            }
        }
        let scale = b.camax();
        assert!(scale > 0.0);
        assert!((&a - &b).camax() < 1e-12 * scale);
    }

    #[test]
    fn dp_only_touches_signal_conjugate_block() {
        let (cfg, pumps, q) = small(3, 1.0);
        let (s1, s2, t) = pump_sums_at_peak(&cfg, &pumps);
        let dp = q.with_mask(ProcessMask::DP_ONLY);
        let a = dp.nonlinear_generator(&dp.coupling(&s1, &s2, t).unwrap());
        let lay = &q.layout;
        let nn = lay.len();
        let is_s = |r: usize| {
            let r = r % nn;
            r >= lay.offset(1) && r < lay.offset(2)
        };
        for r in 0..2 * nn {
            for c in 0..2 * nn {
                if a[(r, c)].norm() > 0.0 {
                    assert!(is_s(r) && is_s(c) && (r < nn) != (c < nn));
                }
            }
        }
        assert!(a.camax() > 0.0);
    }

    #[test]
    fn zero_pumps_give_zero_generator() {
        let (_, _, q) = small(3, 1.0);
        let z = vec![ZERO; q.layout.n_ports];
        assert_eq!(q.coupling(&z, &z, 1e-10).unwrap().camax(), 0.0);
    }

    #[test]
    fn series_and_exponential_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let n = 6;
            let a = DMatrix::<C64>::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * 0.3);
            let l: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let x = short_step_dense(&l, &a, 0.2, false).unwrap();
            let y = short_step_dense(&l, &a, 0.2, true).unwrap();
            assert!((&x - &y).camax() < 1e-12);
            let z = a.clone() * C64::from(0.2);
            assert!((phi1_series(&z).unwrap() - phi1_exp(&z)).camax() < 1e-12);
        }
    }

    #[test]
    fn pure_phase_without_nonlinearity() {
        let a = DMatrix::<C64>::zeros(4, 4);
        let l = [1.0, -2.0, 3.0, 0.5];
        let k = short_step_dense(&l, &a, 0.3, false).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let want = if r == c { C64::from_polar(1.0, l[r] * 0.3) } else { ZERO };
                assert!((k[(r, c)] - want).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn factored_step_equals_dense_step() {
        let (cfg, pumps, q) = small(3, 1.0);
        let (s1, s2, t) = pump_sums_at_peak(&cfg, &pumps);
        // strong coupling so the comparison is not trivially near identity
        let gam = q.coupling(&s1, &s2, t).unwrap() * C64::from(300.0);
        let dt = pumps.default_dt();
        let dense = short_step_dense(&q.linear_generator(), &q.nonlinear_generator(&gam), dt, false).unwrap();
        let mut prop = Propagator::identity(q.layout.len(), 0.0);
        q.apply_step(&mut prop, &q.step_kernel(&gam, dt).unwrap(), dt);
        let d = (&prop.dense() - &dense).camax();
        assert!(d < 1e-11, "{d}");
        assert!((&dense - DMatrix::identity(dense.nrows(), dense.nrows())).camax() > 1e-3);
    }

    #[test]
    fn strang_step_is_second_order() {
        let (cfg, pumps, q) = small(3, 1.0);
        let (s1, s2, t) = pump_sums_at_peak(&cfg, &pumps);
        let gam = q.coupling(&s1, &s2, t).unwrap();
        let a_l = q.linear_generator();
        let a_nl = q.nonlinear_generator(&gam);
        let n = a_nl.nrows();
        let mut full = a_nl.clone() * C64::from(1.0);
        for r in 0..n {
            full[(r, r)] += a_l[r];
        }
        // local error of one split step against the exact exponential
        let err = |dt: f64| {
            let exact = (&full * C64::new(0.0, dt)).exp();
            (short_step_dense(&a_l, &a_nl, dt, false).unwrap() - exact).camax()
        };
        let dt = 4.0 * pumps.default_dt();
        let slope = (err(dt) / err(dt / 2.0)).log2();
        assert!((2.6..=3.4).contains(&slope), "{slope}");
    }

    #[test]
    fn composition_is_associative_and_bogoliubov() {
        let (cfg, pumps, q) = small(3, 1.0);
        let traj = solve_pumps(&cfg, &pumps).unwrap();
        let n = traj.n_steps();
        let whole = q.compose(&pumps, &traj).unwrap();
        let mut first = Propagator::identity(q.layout.len(), traj.t0());
        q.evolve(&mut first, &pumps, &traj, 0, n / 3).unwrap();
        let mut second = Propagator::identity(q.layout.len(), traj.states[n / 3].t);
        q.evolve(&mut second, &pumps, &traj, n / 3, n).unwrap();
        let prod = second.dense() * first.dense();
        assert!((&prod - whole.dense()).camax() < 1e-10);
        let out = whole.to_out_basis(&q).unwrap();
        assert!(out.bogoliubov_residual() < 1e-8, "{}", out.bogoliubov_residual());
        assert!(out.w.camax() > 1e-4);
    }

    #[test]
    fn out_basis_evolution_matches_conversion() {
        let (cfg, pumps, q) = small(3, 1.0);
        let traj = solve_pumps(&cfg, &pumps).unwrap();
        let converted = q.compose(&pumps, &traj).unwrap().to_out_basis(&q).unwrap();
        let direct = q.compose_out(&pumps, &traj).unwrap();
        assert_eq!(direct.basis, Basis::Out);
        assert!((converted.dense() - direct.dense()).camax() < 1e-9);
    }

    #[test]
    fn linear_run_creates_no_pairs() {
        let (cfg, pumps, q) = small(3, 0.0);
        let traj = solve_pumps(&cfg, &pumps).unwrap();
        let out = q.compose(&pumps, &traj).unwrap().to_out_basis(&q).unwrap();
        assert!(out.w.camax() < 1e-12);
        let n = out.v.nrows();
        assert!((&out.v * out.v.adjoint() - DMatrix::<C64>::identity(n, n)).camax() < 1e-8);
    }

    #[test]
    fn zero_interval_is_identity() {
        let (cfg, pumps, q) = small(3, 1.0);
        let net = Network::new(&cfg).unwrap();
        let _ = net;
        let traj = PumpTrajectory { dt: 1e-12, states: vec![PumpState { t: 0.0, alpha: [DMatrix::zeros(1, 1), DMatrix::zeros(1, 1)] }] };
        let prop = q.compose(&pumps, &traj).unwrap();
        assert_eq!(prop.v, DMatrix::identity(q.layout.len(), q.layout.len()));
        assert_eq!(prop.w.camax(), 0.0);
    }
}
