//! Nonlinear coupling constants and the coefficient matrices of the linearized equations.

use crate::error::{Error, Result};
use crate::model::{BinLabel, SystemConfig, HBAR};
use crate::network::{ArcGeometry, Network};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use BinLabel::*;

pub type Quad = [BinLabel; 4];

/// Λ = ħ ω v² γ / (8π²).
pub fn strength(omega: f64, v: f64, gamma_nl: f64) -> f64 {
    HBAR * omega * v * v * gamma_nl / (8.0 * PI * PI)
}

/// ∫_{start}^{end} e^{−iΔk ξ} dξ.
pub fn arc_integral(delta_k: f64, start: f64, end: f64) -> C64 {
    let len = end - start;
    let x = delta_k * len;
    if x.abs() < 1e-6 {
        // series of (1 − e^{−ix})/(ix), shifted to the arc start
        let s = C64::new(1.0 - x * x / 6.0, -x / 2.0 + x * x * x / 24.0);
        return C64::from_polar(len, -delta_k * start) * s;
    }
    (C64::from_polar(1.0, -delta_k * end) - C64::from_polar(1.0, -delta_k * start)) / C64::new(0.0, -delta_k)
}

/// Λ̃ on one arc with unit local amplitudes.
pub fn arc_overlap(lambda: f64, delta_k: f64, arc: &ArcGeometry) -> C64 {
    lambda * arc_integral(delta_k, arc.start, arc.end)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuadEntry {
    pub quad: Quad,
    /// Λ̄ per segment (zero on the output waveguide).
    pub lambda_bar: Vec<C64>,
    /// ΔΩ = −ω₁ − ω₂ + ω₃ + ω₄.
    pub delta_omega: f64,
    /// Δk = k₁ + k₂ − k₃ − k₄.
    pub delta_k: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NonlinearTable {
    pub n_seg: usize,
    pub entries: Vec<QuadEntry>,
}

/// Quadruples of the five-resonance model.
pub fn model_quads() -> Vec<Quad> {
    let mut q = vec![
        [P1, P1, P1, P1],
        [P2, P2, P2, P2],
        [P1, P2, P1, P2],
        [P1, P2, P2, P1],
        [P2, P1, P2, P1],
        [P2, P1, P1, P2],
        [S, S, P1, P2],
        [S, S, P2, P1],
        [LI, S, P1, P1],
        [S, LI, P1, P1],
        [S, RI, P2, P2],
        [RI, S, P2, P2],
        [LI, RI, P1, P2],
        [RI, LI, P1, P2],
        [LI, P2, S, P1],
        [S, P1, LI, P2],
        [S, P2, RI, P1],
        [RI, P1, S, P2],
    ];
    for j in [LI, S, RI] {
        for p in [P1, P2] {
            q.push([j, p, j, p]);
        }
    }
    q
}

pub fn quad_name(q: &Quad) -> String {
    format!("({},{},{},{})", q[0], q[1], q[2], q[3])
}

/// Builds one table entry from bin centers and arc geometry.
pub fn quad_entry(cfg: &SystemConfig, arcs: &[Option<ArcGeometry>], quad: Quad) -> Result<QuadEntry> {
    let d = &cfg.dispersion;
    let mut w = [0.0; 4];
    let mut kk = [0.0; 4];
    let mut v = [0.0; 4];
    for (n, l) in quad.iter().enumerate() {
        let b = cfg.bin(*l).ok_or_else(|| Error::MissingQuad(quad_name(&quad)))?;
        w[n] = b.center_omega;
        kk[n] = d.dk(b.center_omega);
        v[n] = d.group_velocity_at(b.center_omega);
    }
    let wg = (w[0] * w[1] * w[2] * w[3]).powf(0.25);
    let vg = (v[0] * v[1] * v[2] * v[3]).powf(0.25);
    let lambda = strength(wg, vg, cfg.gamma_nl);
    let delta_k = kk[0] + kk[1] - kk[2] - kk[3];
    let delta_omega = -w[0] - w[1] + w[2] + w[3];
    let degeneracy = if quad[0] == quad[1] { 2.0 } else { 1.0 };
    let lambda_bar = arcs
        .iter()
        .map(|a| a.as_ref().map_or(C64::new(0.0, 0.0), |a| degeneracy * arc_overlap(lambda, delta_k, a)))
        .collect();
    Ok(QuadEntry { quad, lambda_bar, delta_omega, delta_k })
}

/// Λ̄ = (1+δ_{J₁J₂}) Λ̃ for every quadruple of the model.
pub fn lambda_bar(cfg: &SystemConfig, net: &Network) -> Result<NonlinearTable> {
    let arcs = net.arc_geometry();
    let entries = model_quads().into_iter().map(|q| quad_entry(cfg, &arcs, q)).collect::<Result<Vec<_>>>()?;
    Ok(NonlinearTable { n_seg: arcs.len(), entries })
}

impl NonlinearTable {
    pub fn get(&self, q: Quad) -> Result<&QuadEntry> {
        self.entries.iter().find(|e| e.quad == q).ok_or_else(|| Error::MissingQuad(quad_name(&q)))
    }

    pub fn delta_omega(&self, q: Quad) -> Result<f64> {
        Ok(self.get(q)?.delta_omega)
    }
}

/// Per-segment SPM and XPM constants of the two pumps (index 0: P1, 1: P2).
#[derive(Clone, Debug)]
pub struct PumpCoeffs {
    pub spm: [Vec<C64>; 2],
    pub xpm: [Vec<C64>; 2],
}

pub fn pump_nl_coeffs(t: &NonlinearTable) -> Result<PumpCoeffs> {
    let spm1 = t.get([P1, P1, P1, P1])?.lambda_bar.clone();
    let spm2 = t.get([P2, P2, P2, P2])?.lambda_bar.clone();
    let x = |a: Quad, b: Quad| -> Result<Vec<C64>> {
        let (ea, eb) = (t.get(a)?, t.get(b)?);
        Ok(ea.lambda_bar.iter().zip(&eb.lambda_bar).map(|(p, q)| 2.0 * (p + q)).collect())
    };
    Ok(PumpCoeffs {
        spm: [spm1, spm2],
        xpm: [x([P1, P2, P1, P2], [P1, P2, P2, P1])?, x([P2, P1, P2, P1], [P2, P1, P1, P2])?],
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChiFamily {
    Xpm,
    Dp,
    Sp1,
    Sp2,
    Hp,
    Bs1,
    Bs2,
}

/// Which process families enter the generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessMask {
    pub xpm: bool,
    pub dp: bool,
    pub sp: bool,
    pub hp: bool,
    pub bs: bool,
}

impl ProcessMask {
    pub const ALL: ProcessMask = ProcessMask { xpm: true, dp: true, sp: true, hp: true, bs: true };
    pub const DP_ONLY: ProcessMask = ProcessMask { xpm: false, dp: true, sp: false, hp: false, bs: false };
    /// Reference for fidelity: DP-SFWM with the pump-induced phase modulation kept,
    /// every parasitic SFWM/BS-FWM channel removed.
    pub const IDEAL: ProcessMask = ProcessMask { xpm: true, dp: true, sp: false, hp: false, bs: false };

    pub fn allows(&self, f: ChiFamily) -> bool {
        match f {
            ChiFamily::Xpm => self.xpm,
            ChiFamily::Dp => self.dp,
            ChiFamily::Sp1 | ChiFamily::Sp2 => self.sp,
            ChiFamily::Hp => self.hp,
            ChiFamily::Bs1 | ChiFamily::Bs2 => self.bs,
        }
    }
}

/// One coefficient family: A^χ_{row}(k) = C_row(k) · diag(coeff), coupling to `col`
/// (to its conjugate when `conjugate`).
#[derive(Clone, Debug)]
pub struct ChiTerm {
    pub family: ChiFamily,
    pub row: BinLabel,
    pub col: BinLabel,
    pub conjugate: bool,
    pub coeff: Vec<C64>,
}

/// Evaluates every coefficient family at time t from the pumps' δk-weighted arc sums.
pub fn chi_terms(table: &NonlinearTable, s1: &[C64], s2: &[C64], t: f64, mask: ProcessMask) -> Result<Vec<ChiTerm>> {
    let n = table.n_seg;
    let mut out = Vec::new();
    for j in [LI, S, RI] {
        if mask.xpm {
            let e1 = table.get([j, P1, j, P1])?;
            let e2 = table.get([j, P2, j, P2])?;
            let coeff = (0..n)
                .map(|s| 4.0 * (e1.lambda_bar[s] * s1[s].norm_sqr() + e2.lambda_bar[s] * s2[s].norm_sqr()))
                .collect();
            out.push(ChiTerm { family: ChiFamily::Xpm, row: j, col: j, conjugate: false, coeff });
        }
    }
    let phase = |q: Quad| -> Result<C64> { Ok(C64::from_polar(1.0, -table.delta_omega(q)? * t)) };
    let mut push = |family, row, col, conjugate, pref: f64, q: Quad, f: &dyn Fn(usize) -> C64| -> Result<()> {
        if !mask.allows(family) {
            return Ok(());
        }
        let e = table.get(q)?;
        let ph = phase(q)?;
        let coeff = (0..n).map(|s| pref * e.lambda_bar[s] * f(s) * ph).collect();
        out.push(ChiTerm { family, row, col, conjugate, coeff });
        Ok(())
    };
    push(ChiFamily::Dp, S, S, true, 2.0, [S, S, P1, P2], &|s| s1[s] * s2[s])?;
    push(ChiFamily::Sp1, LI, S, true, 2.0, [LI, S, P1, P1], &|s| s1[s] * s1[s])?;
    push(ChiFamily::Sp1, S, LI, true, 2.0, [S, LI, P1, P1], &|s| s1[s] * s1[s])?;
    push(ChiFamily::Sp2, S, RI, true, 2.0, [S, RI, P2, P2], &|s| s2[s] * s2[s])?;
    push(ChiFamily::Sp2, RI, S, true, 2.0, [RI, S, P2, P2], &|s| s2[s] * s2[s])?;
    push(ChiFamily::Hp, LI, RI, true, 4.0, [LI, RI, P1, P2], &|s| s1[s] * s2[s])?;
    push(ChiFamily::Hp, RI, LI, true, 4.0, [RI, LI, P1, P2], &|s| s1[s] * s2[s])?;
    push(ChiFamily::Bs1, LI, S, false, 4.0, [LI, P2, S, P1], &|s| s2[s].conj() * s1[s])?;
    push(ChiFamily::Bs1, S, LI, false, 4.0, [S, P1, LI, P2], &|s| s1[s].conj() * s2[s])?;
    push(ChiFamily::Bs2, S, RI, false, 4.0, [S, P2, RI, P1], &|s| s2[s].conj() * s1[s])?;
    push(ChiFamily::Bs2, RI, S, false, 4.0, [RI, P1, S, P2], &|s| s1[s].conj() * s2[s])?;
    Ok(out)
}

/// A^χ_{J,ν,ν′}(k) for one family term at one grid point.
pub fn a_chi(term: &ChiTerm, c_k: &nalgebra::DMatrix<C64>) -> nalgebra::DMatrix<C64> {
    let mut m = c_k.clone();
    for (col, g) in term.coeff.iter().enumerate() {
        for r in 0..m.nrows() {
            m[(r, col)] *= g;
        }
    }
    m
}
