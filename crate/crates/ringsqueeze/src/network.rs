//! Linear scattering of the point-coupled waveguide / primary ring / auxiliary ring chain.

use crate::error::{Error, Result};
use crate::model::{BinLabel, DispersionModel, Element, RingLabel, RingSpec, SystemConfig};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Where a local mode lives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SegmentId {
    OutputWaveguide,
    Arc { ring: RingLabel, index: usize },
}

/// Phantom self-couplings are capped here: an exactly lossless channel would
/// disconnect its port and make the local basis singular.
pub const LOSSLESS_SIGMA: f64 = 1.0 - 1e-11;

#[derive(Clone, Debug)]
struct RingGeom {
    tuning: f64,
    points: Vec<f64>,
    sigmas: Vec<f64>,
    /// kref·ℓ_j mod 2π for each arc j (arc j runs from point j to point j+1).
    arc_len: Vec<f64>,
    arc_phase0: Vec<f64>,
    /// kref·ξ_j mod 2π at each arc start.
    start_phase0: Vec<f64>,
    x_offset: usize,
    port_offset: usize,
}

impl RingGeom {
    fn new(plan: &RingSpec, points: Vec<f64>, k_ref: f64, x_offset: usize, port_offset: usize) -> Self {
        let n = points.len();
        let arc_len: Vec<f64> = (0..n)
            .map(|j| if j + 1 < n { points[j + 1] - points[j] } else { plan.length - points[j] + points[0] })
            .collect();
        let arc_phase0 = arc_len.iter().map(|l| (k_ref * l).rem_euclid(2.0 * PI)).collect();
        let start_phase0 = points.iter().map(|x| (k_ref * x).rem_euclid(2.0 * PI)).collect();
        RingGeom {
            tuning: plan.tuning_phase,
            points,
            sigmas: plan.phantom_self_couplings.iter().map(|&s| s.min(LOSSLESS_SIGMA)).collect(),
            arc_len,
            arc_phase0,
            start_phase0,
            x_offset,
            port_offset,
        }
    }

    fn n(&self) -> usize {
        self.points.len()
    }

    fn point_index(&self, x: f64) -> usize {
        let mut best = 0;
        for (i, p) in self.points.iter().enumerate() {
            if (p - x).abs() < (self.points[best] - x).abs() {
                best = i;
            }
        }
        best
    }

    fn arc_phase(&self, j: usize, dk: f64) -> f64 {
        let extra = if j + 1 == self.n() { self.tuning } else { 0.0 };
        self.arc_phase0[j] + dk * self.arc_len[j] + extra
    }
}

/// Arc geometry of one ring, as used by the nonlinear overlaps.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ArcGeometry {
    pub ring: RingLabel,
    pub start: f64,
    pub end: f64,
}

/// Precomputed network of one configuration.
#[derive(Clone, Debug)]
pub struct Network {
    disp: DispersionModel,
    prim: RingGeom,
    aux: RingGeom,
    wg_self: f64,
    wg_cross: f64,
    wg_point: usize,
    pa_self: f64,
    pa_cross: f64,
    pa_point_p: usize,
    pa_point_a: usize,
}

/// Port-to-port scattering and arc-start fields for one ω.
#[derive(Clone, Debug)]
pub struct ScatteringSolution {
    pub omega: f64,
    /// Outgoing amplitudes, P×P (row: output port, column: input port).
    pub s: DMatrix<C64>,
    /// Full field at each arc start, n_arcs×P.
    pub arcs: DMatrix<C64>,
}

/// Basis maps of one (J, k) point.
#[derive(Clone, Debug)]
pub struct ModeBasisMaps {
    /// H[s,ν]: slowly varying amplitude of in-mode ν at the start of segment s.
    pub h_in: DMatrix<C64>,
    pub h_out: DMatrix<C64>,
    pub l_in: DMatrix<C64>,
    pub l_out: DMatrix<C64>,
    pub c: DMatrix<C64>,
    pub cond: f64,
}

impl Network {
    pub fn new(cfg: &SystemConfig) -> Result<Self> {
        let p = cfg.ring(RingLabel::Primary).ok_or_else(|| missing("primary ring"))?;
        let a = cfg.ring(RingLabel::Auxiliary).ok_or_else(|| missing("auxiliary ring"))?;
        let pp = crate::model::phantom_positions(cfg, p);
        let ap = crate::model::phantom_positions(cfg, a);
        let np = pp.len();
        let k_ref = cfg.dispersion.k_ref;
        let prim = RingGeom::new(p, pp, k_ref, 0, 1);
        let aux = RingGeom::new(a, ap, k_ref, np, 1 + np);
        let wg = cfg.coupler(Element::Waveguide, Element::Primary).ok_or_else(|| missing("waveguide coupler"))?;
        let pa = cfg.coupler(Element::Primary, Element::Auxiliary).ok_or_else(|| missing("ring coupler"))?;
        let wg_point = prim.point_index(wg.position_on(Element::Primary).unwrap_or(0.0));
        let pa_point_p = prim.point_index(pa.position_on(Element::Primary).unwrap_or(0.0));
        let pa_point_a = aux.point_index(pa.position_on(Element::Auxiliary).unwrap_or(0.0));
        Ok(Network {
            disp: cfg.dispersion,
            prim,
            aux,
            wg_self: wg.self_coupling,
            wg_cross: wg.cross_coupling,
            wg_point,
            pa_self: pa.self_coupling,
            pa_cross: pa.cross_coupling,
            pa_point_p,
            pa_point_a,
        })
    }

    pub fn n_ports(&self) -> usize {
        1 + self.prim.n() + self.aux.n()
    }

    pub fn dispersion(&self) -> &DispersionModel {
        &self.disp
    }

    pub fn segments(&self) -> Vec<SegmentId> {
        let mut v = vec![SegmentId::OutputWaveguide];
        v.extend((0..self.prim.n()).map(|i| SegmentId::Arc { ring: RingLabel::Primary, index: i }));
        v.extend((0..self.aux.n()).map(|i| SegmentId::Arc { ring: RingLabel::Auxiliary, index: i }));
        v
    }

    /// Arc geometry in segment order (None for the output waveguide).
    pub fn arc_geometry(&self) -> Vec<Option<ArcGeometry>> {
        let mut v = vec![None];
        for (g, label) in [(&self.prim, RingLabel::Primary), (&self.aux, RingLabel::Auxiliary)] {
            for j in 0..g.n() {
                v.push(Some(ArcGeometry { ring: label, start: g.points[j], end: g.points[j] + g.arc_len[j] }));
            }
        }
        v
    }

    /// Scattering solution at angular frequency ω.
    pub fn solve(&self, omega: f64) -> Result<ScatteringSolution> {
        self.check_denominators(omega)?;
        let dk = self.disp.dk(omega);
        let np = self.prim.n();
        let na = self.aux.n();
        let nx = np + na;
        let nport = self.n_ports();
        let width = nx + nport;
        let mut a = DMatrix::<C64>::zeros(nx, nx);
        let mut b = DMatrix::<C64>::zeros(nx, nport);
        let mut out = DMatrix::<C64>::zeros(nport, width);

        let arriving = |g: &RingGeom, p: usize| -> DVector<C64> {
            let j = (p + g.n() - 1) % g.n();
            let mut v = DVector::<C64>::zeros(width);
            v[g.x_offset + j] = C64::from_polar(1.0, g.arc_phase(j, dk));
            v
        };
        let f_pa_p = arriving(&self.prim, self.pa_point_p);
        let f_pa_a = arriving(&self.aux, self.pa_point_a);

        for (g, is_prim) in [(&self.prim, true), (&self.aux, false)] {
            for p in 0..g.n() {
                let mut f = arriving(g, p);
                if is_prim && p == self.wg_point {
                    let mut o = f.clone() * (I * self.wg_cross);
                    o[nx] += C64::from(self.wg_self);
                    out.row_mut(0).copy_from(&o.transpose());
                    f *= C64::from(self.wg_self);
                    f[nx] += I * self.wg_cross;
                }
                if is_prim && p == self.pa_point_p {
                    f = f * C64::from(self.pa_self) + &f_pa_a * (I * self.pa_cross);
                }
                if !is_prim && p == self.pa_point_a {
                    f = f * C64::from(self.pa_self) + &f_pa_p * (I * self.pa_cross);
                }
                let sigma = g.sigmas[p];
                let kph = (1.0 - sigma * sigma).max(0.0).sqrt();
                let port = g.port_offset + p;
                let mut o = f.clone() * (I * kph);
                o[nx + port] += C64::from(sigma);
                out.row_mut(port).copy_from(&o.transpose());
                f *= C64::from(sigma);
                f[nx + port] += I * kph;
                let row = g.x_offset + p;
                for c in 0..nx {
                    a[(row, c)] = f[c];
                }
                for c in 0..nport {
                    b[(row, c)] = f[nx + c];
                }
            }
        }
        let m = DMatrix::<C64>::identity(nx, nx) - a;
        let lu = m.lu();
        let x = lu.solve(&b).ok_or(Error::SingularNetwork { omega })?;
        let cm = out.columns(0, nx).into_owned();
        let d = out.columns(nx, nport).into_owned();
        let s = &cm * &x + d;
        if !s.iter().all(|z| z.is_finite()) {
            return Err(Error::SingularNetwork { omega });
        }
        Ok(ScatteringSolution { omega, s, arcs: x })
    }

    fn check_denominators(&self, omega: f64) -> Result<()> {
        let dk = self.disp.dk(omega);
        let ga: f64 = self.aux.sigmas.iter().product();
        let gp: f64 = self.prim.sigmas.iter().product();
        let pa = self.total_phase(&self.aux, dk);
        let pp = self.total_phase(&self.prim, dk);
        let ea = C64::from_polar(ga, pa);
        let d1 = C64::from(1.0) - self.pa_self * ea;
        if d1.norm() < 1e-14 {
            return Err(Error::SingularNetwork { omega });
        }
        let t = (C64::from(self.pa_self) - ea) / d1;
        let d2 = C64::from(1.0) - self.wg_self * t * C64::from_polar(gp, pp);
        if d2.norm() < 1e-14 {
            return Err(Error::SingularNetwork { omega });
        }
        Ok(())
    }

    fn total_phase(&self, g: &RingGeom, dk: f64) -> f64 {
        (0..g.n()).map(|j| g.arc_phase(j, dk)).sum()
    }

    /// Waveguide-to-waveguide amplitude from the general solve.
    pub fn transmission(&self, omega: f64) -> Result<C64> {
        Ok(self.solve(omega)?.s[(0, 0)])
    }

    /// H[s,ν] with local modes normalized to unit slowly varying amplitude at each segment start.
    pub fn segment_matrix(&self, sol: &ScatteringSolution, beta_offset: f64) -> DMatrix<C64> {
        let p = self.n_ports();
        let mut h = DMatrix::<C64>::zeros(p, p);
        h.row_mut(0).copy_from(&sol.s.row(0));
        for g in [&self.prim, &self.aux] {
            for j in 0..g.n() {
                let ph = C64::from_polar(1.0, -(g.start_phase0[j] + beta_offset * g.points[j]));
                let r = g.x_offset + j;
                for c in 0..p {
                    h[(1 + r, c)] = sol.arcs[(r, c)] * ph;
                }
            }
        }
        h
    }

    /// Local-basis maps at grid frequency ω of a bin with center wavenumber offset `beta_offset` (β_J − k₀).
    pub fn local_basis_maps(&self, omega: f64, beta_offset: f64) -> Result<ModeBasisMaps> {
        let sol = self.solve(omega)?;
        let h_in = self.segment_matrix(&sol, beta_offset);
        let svd = h_in.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if !cond.is_finite() {
            return Err(Error::IllConditioned { cond });
        }
        let s_inv = sol.s.clone().try_inverse().ok_or(Error::SingularNetwork { omega })?;
        let h_out = &h_in * s_inv;
        let l_in = h_in.transpose().try_inverse().ok_or(Error::IllConditioned { cond })?;
        let l_out = h_out.transpose().try_inverse().ok_or(Error::IllConditioned { cond })?;
        let c = &h_in * h_in.adjoint();
        Ok(ModeBasisMaps { h_in, h_out, l_in, l_out, c, cond })
    }
}

fn missing(what: &str) -> Error {
    Error::InvalidConfig { field: what.to_string(), reason: "missing".to_string() }
}

/// Unreduced round-trip phase k(ω)L plus the ring's tuning phase.
pub fn round_trip_phase(ring: &RingSpec, disp: &DispersionModel, omega: f64) -> f64 {
    disp.k(omega) * ring.length + ring.tuning_phase
}

/// Same phase reduced to (−π, π], computed without forming k₀L.
pub fn round_trip_phase_reduced(ring: &RingSpec, disp: &DispersionModel, omega: f64) -> f64 {
    let base = (disp.k_ref * ring.length).rem_euclid(2.0 * PI);
    wrap(base + disp.dk(omega) * ring.length + ring.tuning_phase)
}

pub fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

fn gamma_of(r: &RingSpec) -> f64 {
    r.phantom_self_couplings.iter().product()
}

/// T_ar = (ς − Γ e^{iφ}) / (1 − ς Γ e^{iφ}) of the auxiliary ring.
pub fn aux_transmission(cfg: &SystemConfig, omega: f64) -> C64 {
    let a = cfg.ring(RingLabel::Auxiliary).expect("auxiliary ring");
    let s = cfg.coupler(Element::Primary, Element::Auxiliary).map_or(1.0, |c| c.self_coupling);
    let e = C64::from_polar(gamma_of(a), round_trip_phase_reduced(a, &cfg.dispersion, omega));
    (C64::from(s) - e) / (C64::from(1.0) - s * e)
}

/// Closed-form waveguide transmission h(ω).
pub fn waveguide_transmission(cfg: &SystemConfig, omega: f64) -> C64 {
    let p = cfg.ring(RingLabel::Primary).expect("primary ring");
    let s = cfg.coupler(Element::Waveguide, Element::Primary).map_or(1.0, |c| c.self_coupling);
    let t = aux_transmission(cfg, omega);
    let e = t * C64::from_polar(gamma_of(p), round_trip_phase_reduced(p, &cfg.dispersion, omega));
    (C64::from(s) - e) / (C64::from(1.0) - s * e)
}

/// Minima of |h|² in a frequency window.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ResonanceFeatures {
    pub centers: Vec<f64>,
    pub fwhms: Vec<f64>,
    pub depths: Vec<f64>,
    /// Distance between the two deepest minima (0 when only one).
    pub splitting: f64,
    /// Deepest minimum relative to the decoupled-primary minimum.
    pub shift: f64,
}

const SCAN_POINTS: usize = 20001;

fn power(cfg: &SystemConfig, w: f64) -> f64 {
    waveguide_transmission(cfg, w).norm_sqr()
}

fn scan_minima(cfg: &SystemConfig, lo: f64, hi: f64) -> Vec<(f64, f64, f64)> {
    let n = SCAN_POINTS;
    let step = (hi - lo) / (n - 1) as f64;
    let ws: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
    let p: Vec<f64> = ws.iter().map(|&w| power(cfg, w)).collect();
    let mut out = Vec::new();
    for i in 1..n - 1 {
        if p[i] < p[i - 1] && p[i] <= p[i + 1] && p[i] < 0.99 {
            let (wmin, pmin) = golden_min(|w| power(cfg, w), ws[i - 1], ws[i + 1], step * 1e-6);
            let fwhm = half_depth_width(cfg, wmin, pmin, step, lo, hi);
            out.push((wmin, pmin, fwhm));
        }
    }
    out
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

fn half_depth_width(cfg: &SystemConfig, w0: f64, p0: f64, step: f64, lo: f64, hi: f64) -> f64 {
    let level = 0.5 * (1.0 + p0);
    let cross = |dir: f64| -> Option<f64> {
        let mut a = w0;
        let mut b = w0 + dir * step;
        let mut last = p0;
        while (lo..=hi).contains(&b) {
            let pb = power(cfg, b);
            if pb >= level {
                for _ in 0..60 {
                    let m = 0.5 * (a + b);
                    if power(cfg, m) >= level {
                        b = m
                    } else {
                        a = m
                    }
                }
                return Some((0.5 * (a + b) - w0).abs());
            }
            if pb < last - 1e-12 {
                return None;
            }
            last = pb;
            a = b;
            b += dir * step;
        }
        None
    };
    match (cross(-1.0), cross(1.0)) {
        (Some(l), Some(r)) => l + r,
        (Some(x), None) | (None, Some(x)) => 2.0 * x,
        (None, None) => f64::NAN,
    }
}

/// Locates transmission minima (golden-section refined) in [lo, hi].
pub fn find_resonance_features(cfg: &SystemConfig, lo: f64, hi: f64) -> Result<ResonanceFeatures> {
    let mins = scan_minima(cfg, lo, hi);
    if mins.is_empty() {
        return Err(Error::NoFeature { lo, hi });
    }
    let mut dec = cfg.clone();
    dec.set_aux_cross_coupling(0.0);
    let reference = scan_minima(&dec, lo, hi)
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|m| m.0);
    let mut by_depth = mins.clone();
    by_depth.sort_by(|a, b| a.1.total_cmp(&b.1));
    let splitting = if by_depth.len() >= 2 { (by_depth[0].0 - by_depth[1].0).abs() } else { 0.0 };
    let shift = reference.map_or(0.0, |r| by_depth[0].0 - r);
    Ok(ResonanceFeatures {
        centers: mins.iter().map(|m| m.0).collect(),
        fwhms: mins.iter().map(|m| m.2).collect(),
        depths: mins.iter().map(|m| 1.0 - m.1).collect(),
        splitting,
        shift,
    })
}

/// How the five bins are placed around primary resonances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinPlan {
    /// Pumps sit this many primary FSRs from S.
    pub pump_order: i32,
    /// Idlers sit this many primary FSRs from S.
    pub idler_order: i32,
    pub n_k: usize,
    /// Span in loaded linewidths.
    pub span_linewidths: f64,
    /// Bins holding a two-peak split resonance; centered on the uncoupled-primary position.
    pub split: Vec<BinLabel>,
}

impl Default for BinPlan {
    fn default() -> Self {
        BinPlan { pump_order: 1, idler_order: 2, n_k: 21, span_linewidths: 12.0, split: Vec::new() }
    }
}

/// Decoupled-primary resonance `order` FSRs from the one nearest ω̄.
pub fn primary_resonance(cfg: &SystemConfig, order: i32) -> Result<f64> {
    let p = cfg.ring(RingLabel::Primary).ok_or_else(|| missing("primary ring"))?;
    let phi0 = round_trip_phase_reduced(p, &cfg.dispersion, cfg.dispersion.omega_ref);
    cfg.dispersion.omega_from_dk((2.0 * PI * order as f64 - phi0) / p.length)
}

pub fn primary_fsr(cfg: &SystemConfig) -> f64 {
    let p = cfg.ring(RingLabel::Primary).expect("primary ring");
    2.0 * PI * cfg.dispersion.group_velocity / p.length
}

/// Resolved (label, center, span) for each bin, plus features per bin.
pub fn plan_bins(cfg: &SystemConfig, plan: &BinPlan) -> Result<Vec<(BinLabel, f64, f64, ResonanceFeatures)>> {
    let orders = [
        (BinLabel::LI, -plan.idler_order),
        (BinLabel::P1, -plan.pump_order),
        (BinLabel::S, 0),
        (BinLabel::P2, plan.pump_order),
        (BinLabel::RI, plan.idler_order),
    ];
    let fsr = primary_fsr(cfg);
    let mut out = Vec::new();
    for (label, m) in orders {
        let w0 = primary_resonance(cfg, m)?;
        let half = 0.15 * fsr;
        let f = find_resonance_features(cfg, w0 - half, w0 + half)?;
        let deepest = f.depths.iter().cloned().fold(0.0, f64::max);
        let mut idx: Vec<usize> = (0..f.centers.len()).collect();
        idx.sort_by(|&a, &b| f.depths[b].total_cmp(&f.depths[a]));
        let (center, span) = if plan.split.contains(&label) && idx.len() >= 2 && f.depths[idx[1]] > 0.1 * deepest {
            let (a, b) = (f.centers[idx[0]], f.centers[idx[1]]);
            let lw = f.fwhms[idx[0]].max(f.fwhms[idx[1]]);
            let spread = (a - w0).abs().max((b - w0).abs());
            (w0, 2.0 * spread + plan.span_linewidths * lw)
        } else {
            (f.centers[idx[0]], plan.span_linewidths * f.fwhms[idx[0]])
        };
        out.push((label, center, span, f));
    }
    Ok(out)
}

/// Dip depth at the span edges relative to the deepest dip inside the span.
pub fn edge_dip_ratio(cfg: &SystemConfig, center: f64, span: f64) -> f64 {
    let n = 2001;
    let (lo, hi) = (center - 0.5 * span, center + 0.5 * span);
    let max_dip = (0..n)
        .map(|i| 1.0 - power(cfg, lo + (hi - lo) * i as f64 / (n - 1) as f64))
        .fold(0.0, f64::max);
    let edge = (1.0 - power(cfg, lo)).max(1.0 - power(cfg, hi));
    edge / max_dip
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;

    fn cfg(ws: f64, kappa: f64, gp: f64, ga: f64) -> SystemConfig {
        let lp = 2.0 * PI * 120e-6;
        let mut p = RingSpec::new(RingLabel::Primary, lp, gp, 3);
        p.tuning_phase = 0.0;
        let a = RingSpec::new(RingLabel::Auxiliary, 0.75 * lp, ga, 3);
        SystemConfig {
            dispersion: DispersionModel { omega_ref: 1.2e15, k_ref: 2.0 * PI * 924.0 / lp, group_velocity: 1.5e8, gvd: 0.0 },
            rings: vec![p, a],
            couplers: vec![
                CouplerSpec::from_self(ws, (Element::Waveguide, 0.0), (Element::Primary, 0.0)),
                CouplerSpec::from_cross(kappa, (Element::Primary, 0.5 * lp), (Element::Auxiliary, 0.0)),
            ],
            gamma_nl: 1.0,
            bins: vec![],
            pumps: vec![],
            time_grid: TimeGrid { t0: 0.0, tf: None, dt: None },
            aux_detuning: 0.0,
        }
    }

    #[test]
    fn general_solve_matches_closed_form() {
        let c = cfg(0.997, 0.05, 0.9991, 0.99935);
        let net = Network::new(&c).unwrap();
        for i in 0..50 {
            let w = 1.2e15 + (i as f64 - 25.0) * 3.7e9;
            let a = net.transmission(w).unwrap();
            let b = waveguide_transmission(&c, w);
            assert!((a - b).norm() < 1e-10, "{a} {b}");
        }
    }

    #[test]
    fn scattering_is_unitary() {
        let c = cfg(0.99, 0.2, 0.995, 0.993);
        let net = Network::new(&c).unwrap();
        for i in 0..20 {
            let s = net.solve(1.2e15 + i as f64 * 1.3e10).unwrap().s;
            let e = (&s * s.adjoint() - DMatrix::identity(7, 7)).camax();
            assert!(e < 1e-10, "{e}");
        }
    }

    #[test]
    fn decoupled_everything_leaves_rings_dark() {
        let c = cfg(1.0, 0.0, 0.99, 0.99);
        let net = Network::new(&c).unwrap();
        let sol = net.solve(1.2e15 + 1e9).unwrap();
        assert!((sol.s[(0, 0)] - C64::from(1.0)).norm() < 1e-14);
        for r in 0..sol.arcs.nrows() {
            assert!(sol.arcs[(r, 0)].norm() < 1e-14);
        }
    }

    #[test]
    fn lossless_on_resonance_is_minus_one() {
        let c = cfg(0.99, 0.0, 1.0, 1.0);
        let w = primary_resonance(&c, 0).unwrap();
        let h = waveguide_transmission(&c, w);
        assert!((h + C64::from(1.0)).norm() < 1e-9, "{h}");
    }

    #[test]
    fn critical_coupling_extinguishes() {
        let c = cfg(0.9991, 0.0, 0.9991, 0.99);
        let w = primary_resonance(&c, 0).unwrap();
        assert!(waveguide_transmission(&c, w).norm_sqr() < 1e-14);
    }

    #[test]
    fn enhancement_matches_geometric_series() {
        let c = cfg(0.997, 0.0, 0.9991, 0.99935);
        let net = Network::new(&c).unwrap();
        let w = primary_resonance(&c, 0).unwrap();
        let sol = net.solve(w).unwrap();
        // field just after the coupler: iκ Σ (ςΓ)^n with the phantom at the coupler applied
        let sw = 0.997f64;
        let kw = (1.0 - sw * sw).sqrt();
        let sigma = 0.9991f64.powf(1.0 / 3.0);
        let series: C64 = (0..20000).map(|n| C64::from((sw * 0.9991f64).powi(n))).sum();
        let want = I * kw * sigma * series;
        assert!((sol.arcs[(0, 0)].norm() - want.norm()).abs() < 1e-8 * want.norm());
    }

    #[test]
    fn commutator_matrix_is_hermitian_psd_and_basis_independent() {
        let c = cfg(0.997, 0.0643, 0.9991, 0.99935);
        let net = Network::new(&c).unwrap();
        let w = primary_resonance(&c, 2).unwrap();
        let beta = c.dispersion.dk(w);
        for i in -3..=3 {
            let m = net.local_basis_maps(w + i as f64 * 1e9, beta).unwrap();
            assert!((&m.c - m.c.adjoint()).camax() < 1e-12);
            let eig = m.c.clone().symmetric_eigen();
            assert!(eig.eigenvalues.min() > -1e-10);
            let c_out = &m.h_out * m.h_out.adjoint();
            assert!((&c_out - &m.c).camax() < 1e-10 * m.c.camax());
            let rows = m.l_in.transpose().try_inverse().unwrap();
            for s in 0..rows.nrows() {
                let sum: f64 = rows.row(s).iter().map(|z| z.norm_sqr()).sum();
                assert!((sum - m.c[(s, s)].re).abs() < 1e-10 * sum.max(1.0));
            }
        }
    }

    #[test]
    fn decoupled_fsr_spacing() {
        let c = cfg(0.997, 0.0, 0.9991, 0.99935);
        let fsr = primary_fsr(&c);
        let w0 = primary_resonance(&c, 0).unwrap();
        let w1 = primary_resonance(&c, 1).unwrap();
        let f0 = find_resonance_features(&c, w0 - 0.1 * fsr, w0 + 0.1 * fsr).unwrap();
        let f1 = find_resonance_features(&c, w1 - 0.1 * fsr, w1 + 0.1 * fsr).unwrap();
        let d = f1.centers[0] - f0.centers[0];
        assert!(((d - fsr) / fsr).abs() < 1e-6);
        assert_eq!(f0.splitting, 0.0);
        assert!(f0.shift.abs() < 1e-6 * fsr);
    }
}

/// A bin's k-grid with the basis maps at every grid point.
#[derive(Clone, Debug)]
pub struct BinGrid {
    pub bin: crate::model::ResonanceBin,
    pub omegas: Vec<f64>,
    /// Δω_J(k_i) = ω(k_i) − ω_J.
    pub detunings: Vec<f64>,
    pub maps: Vec<ModeBasisMaps>,
}

impl BinGrid {
    pub fn new(net: &Network, bin: &crate::model::ResonanceBin) -> Result<Self> {
        let disp = net.dispersion();
        let omegas = bin.omegas(disp)?;
        let beta = disp.dk(bin.center_omega);
        let maps = omegas.iter().map(|&w| net.local_basis_maps(w, beta)).collect::<Result<Vec<_>>>()?;
        let detunings = omegas.iter().map(|w| w - bin.center_omega).collect();
        Ok(BinGrid { bin: *bin, omegas, detunings, maps })
    }

    pub fn n_k(&self) -> usize {
        self.omegas.len()
    }

    pub fn max_detuning(&self) -> f64 {
        self.detunings.iter().fold(0.0, |m, d| m.max(d.abs()))
    }

    pub fn max_cond(&self) -> f64 {
        self.maps.iter().fold(0.0, |m, x| m.max(x.cond))
    }
}
