//! System description: dispersion, rings, couplers, resonance bins and pump pulses.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const HBAR: f64 = 1.054_571_817e-34;
pub const C_LIGHT: f64 = 299_792_458.0;

/// k(ω) = k₀ + (ω−ω̄)/v̄ + (β̄/2)(ω−ω̄)².
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionModel {
    pub omega_ref: f64,
    pub k_ref: f64,
    pub group_velocity: f64,
    pub gvd: f64,
}

impl DispersionModel {
    /// Wavenumber offset k(ω) − k₀; kept separate from k₀ to avoid cancellation.
    pub fn dk(&self, omega: f64) -> f64 {
        let x = omega - self.omega_ref;
        x / self.group_velocity + 0.5 * self.gvd * x * x
    }

    pub fn k(&self, omega: f64) -> f64 {
        self.k_ref + self.dk(omega)
    }

    pub fn group_velocity_at(&self, omega: f64) -> f64 {
        1.0 / (1.0 / self.group_velocity + self.gvd * (omega - self.omega_ref))
    }

    /// Inverse of `dk` on the branch through ω̄.
    pub fn omega_from_dk(&self, dk: f64) -> Result<f64> {
        let a = 1.0 / self.group_velocity;
        if self.gvd == 0.0 {
            return Ok(self.omega_ref + dk * self.group_velocity);
        }
        let disc = a * a + 2.0 * self.gvd * dk;
        if disc <= 0.0 || !disc.is_finite() {
            return Err(Error::BranchOverflow { dk });
        }
        Ok(self.omega_ref + 2.0 * dk / (a + disc.sqrt()))
    }

    pub fn dispersion_omega(&self, k: f64) -> Result<f64> {
        self.omega_from_dk(k - self.k_ref)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RingLabel {
    Primary,
    Auxiliary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Element {
    Waveguide,
    Primary,
    Auxiliary,
}

impl From<RingLabel> for Element {
    fn from(r: RingLabel) -> Self {
        match r {
            RingLabel::Primary => Element::Primary,
            RingLabel::Auxiliary => Element::Auxiliary,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RingSpec {
    pub label: RingLabel,
    pub length: f64,
    pub round_trip_attenuation: f64,
    pub n_phantom: usize,
    pub phantom_self_couplings: Vec<f64>,
    /// Explicit phantom points; derived from the coupler layout when absent.
    #[serde(default)]
    pub phantom_positions: Option<Vec<f64>>,
    /// Static round-trip phase offset (sub-wavelength length trim), rad.
    #[serde(default)]
    pub tuning_phase: f64,
}

impl RingSpec {
    pub fn new(label: RingLabel, length: f64, gamma: f64, n_phantom: usize) -> Self {
        RingSpec {
            label,
            length,
            round_trip_attenuation: gamma,
            n_phantom,
            phantom_self_couplings: uniform_sigmas(gamma, n_phantom),
            phantom_positions: None,
            tuning_phase: 0.0,
        }
    }
}

/// σᵢ = Γ^(1/n).
pub fn uniform_sigmas(gamma: f64, n: usize) -> Vec<f64> {
    vec![gamma.powf(1.0 / n as f64); n]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplerSpec {
    pub self_coupling: f64,
    pub cross_coupling: f64,
    pub endpoints: [(Element, f64); 2],
}

impl CouplerSpec {
    pub fn from_self(self_coupling: f64, a: (Element, f64), b: (Element, f64)) -> Self {
        CouplerSpec {
            self_coupling,
            cross_coupling: (1.0 - self_coupling * self_coupling).max(0.0).sqrt(),
            endpoints: [a, b],
        }
    }

    pub fn from_cross(cross: f64, a: (Element, f64), b: (Element, f64)) -> Self {
        CouplerSpec {
            self_coupling: (1.0 - cross * cross).max(0.0).sqrt(),
            cross_coupling: cross,
            endpoints: [a, b],
        }
    }

    pub fn joins(&self, a: Element, b: Element) -> bool {
        let (x, y) = (self.endpoints[0].0, self.endpoints[1].0);
        (x == a && y == b) || (x == b && y == a)
    }

    pub fn position_on(&self, e: Element) -> Option<f64> {
        self.endpoints.iter().find(|p| p.0 == e).map(|p| p.1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BinLabel {
    LI,
    P1,
    S,
    P2,
    RI,
}

impl BinLabel {
    pub const ALL: [BinLabel; 5] = [BinLabel::LI, BinLabel::P1, BinLabel::S, BinLabel::P2, BinLabel::RI];
    pub const GENERATED: [BinLabel; 3] = [BinLabel::LI, BinLabel::S, BinLabel::RI];

    pub fn name(self) -> &'static str {
        match self {
            BinLabel::LI => "LI",
            BinLabel::P1 => "P1",
            BinLabel::S => "S",
            BinLabel::P2 => "P2",
            BinLabel::RI => "RI",
        }
    }

    pub fn is_pump(self) -> bool {
        matches!(self, BinLabel::P1 | BinLabel::P2)
    }

    /// Index within `GENERATED`, if any.
    pub fn generated_index(self) -> Option<usize> {
        match self {
            BinLabel::LI => Some(0),
            BinLabel::S => Some(1),
            BinLabel::RI => Some(2),
            _ => None,
        }
    }
}

impl std::fmt::Display for BinLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceBin {
    pub label: BinLabel,
    pub center_omega: f64,
    pub center_k: f64,
    pub span: f64,
    pub n_k: usize,
    pub dk: f64,
}

impl ResonanceBin {
    /// Grid offsets k_i − β_J, center point included.
    pub fn k_offsets(&self) -> Vec<f64> {
        let c = (self.n_k / 2) as f64;
        (0..self.n_k).map(|i| (i as f64 - c) * self.dk).collect()
    }

    /// ω_J(k_i) on the grid.
    pub fn omegas(&self, disp: &DispersionModel) -> Result<Vec<f64>> {
        let base = disp.dk(self.center_omega);
        self.k_offsets().iter().map(|o| disp.omega_from_dk(base + o)).collect()
    }

    pub fn omega_range(&self) -> (f64, f64) {
        (self.center_omega - 0.5 * self.span, self.center_omega + 0.5 * self.span)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PumpPulse {
    pub target: BinLabel,
    pub energy: f64,
    pub duration: f64,
    pub center_k: f64,
    pub delay_position: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    /// End time; chosen from the pump ring-down when absent.
    pub tf: Option<f64>,
    /// Step; chosen from the bin detunings when absent.
    pub dt: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub dispersion: DispersionModel,
    pub rings: Vec<RingSpec>,
    pub couplers: Vec<CouplerSpec>,
    pub gamma_nl: f64,
    pub bins: Vec<ResonanceBin>,
    pub pumps: Vec<PumpPulse>,
    pub time_grid: TimeGrid,
    pub aux_detuning: f64,
}

impl SystemConfig {
    pub fn ring(&self, label: RingLabel) -> Option<&RingSpec> {
        self.rings.iter().find(|r| r.label == label)
    }

    pub fn ring_mut(&mut self, label: RingLabel) -> Option<&mut RingSpec> {
        self.rings.iter_mut().find(|r| r.label == label)
    }

    pub fn coupler(&self, a: Element, b: Element) -> Option<&CouplerSpec> {
        self.couplers.iter().find(|c| c.joins(a, b))
    }

    pub fn coupler_mut(&mut self, a: Element, b: Element) -> Option<&mut CouplerSpec> {
        self.couplers.iter_mut().find(|c| c.joins(a, b))
    }

    pub fn bin(&self, label: BinLabel) -> Option<&ResonanceBin> {
        self.bins.iter().find(|b| b.label == label)
    }

    pub fn pump(&self, label: BinLabel) -> Option<&PumpPulse> {
        self.pumps.iter().find(|p| p.target == label)
    }

    /// Sets κ of the primary–auxiliary coupler (ς follows).
    pub fn set_aux_cross_coupling(&mut self, kappa: f64) {
        if let Some(c) = self.coupler_mut(Element::Primary, Element::Auxiliary) {
            c.cross_coupling = kappa;
            c.self_coupling = (1.0 - kappa * kappa).max(0.0).sqrt();
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

/// Phantom points of a ring: one at each real coupler location, the rest
/// spread over the gaps in proportion to gap length and equally spaced within each gap.
pub fn phantom_positions(cfg: &SystemConfig, ring: &RingSpec) -> Vec<f64> {
    if let Some(p) = &ring.phantom_positions {
        let mut p = p.clone();
        p.sort_by(f64::total_cmp);
        return p;
    }
    let elem: Element = ring.label.into();
    let len = ring.length;
    let mut fixed: Vec<f64> = cfg
        .couplers
        .iter()
        .filter_map(|c| c.position_on(elem))
        .map(|x| x.rem_euclid(len))
        .collect();
    fixed.sort_by(f64::total_cmp);
    fixed.dedup_by(|a, b| (*a - *b).abs() < 1e-15 * len);
    if fixed.is_empty() {
        fixed.push(0.0);
    }
    let n_fixed = fixed.len().min(ring.n_phantom);
    fixed.truncate(n_fixed);
    let extra = ring.n_phantom - n_fixed;
    let gaps: Vec<f64> = (0..n_fixed)
        .map(|i| {
            let a = fixed[i];
            let b = if i + 1 < n_fixed { fixed[i + 1] } else { fixed[0] + len };
            b - a
        })
        .collect();
    // largest-remainder apportionment of the extra points
    let mut counts: Vec<usize> = gaps.iter().map(|g| (extra as f64 * g / len).floor() as usize).collect();
    let mut left = extra - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..n_fixed).collect();
    order.sort_by(|&i, &j| {
        let ri = extra as f64 * gaps[i] / len - counts[i] as f64;
        let rj = extra as f64 * gaps[j] / len - counts[j] as f64;
        rj.total_cmp(&ri).then(i.cmp(&j))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    let mut pts = Vec::with_capacity(ring.n_phantom);
    for i in 0..n_fixed {
        pts.push(fixed[i]);
        for j in 1..=counts[i] {
            pts.push((fixed[i] + gaps[i] * j as f64 / (counts[i] + 1) as f64).rem_euclid(len));
        }
    }
    pts.sort_by(f64::total_cmp);
    pts
}

/// Checks every structural invariant of the configuration.
pub fn validate_config(cfg: &SystemConfig) -> Result<()> {
    let d = &cfg.dispersion;
    if !(d.group_velocity > 0.0) {
        return Err(invalid("dispersion.group_velocity", "must be positive"));
    }
    if !(d.omega_ref > 0.0) {
        return Err(invalid("dispersion.omega_ref", "must be positive"));
    }
    for (i, c) in cfg.couplers.iter().enumerate() {
        let s = c.self_coupling * c.self_coupling + c.cross_coupling * c.cross_coupling;
        if (s - 1.0).abs() > 1e-12 || c.self_coupling < 0.0 || c.self_coupling > 1.0 {
            return Err(Error::InvalidCoupling { field: format!("couplers[{i}]"), value: s });
        }
        for (e, x) in c.endpoints {
            if let Some(r) = ring_of(cfg, e) {
                if !(0.0..r.length).contains(&x) {
                    return Err(invalid(&format!("couplers[{i}].endpoints"), "position outside [0, L)"));
                }
            }
        }
    }
    let n_wg = cfg.couplers.iter().filter(|c| c.joins(Element::Waveguide, Element::Primary)).count();
    let n_pa = cfg.couplers.iter().filter(|c| c.joins(Element::Primary, Element::Auxiliary)).count();
    if n_wg != 1 || n_pa != 1 || cfg.couplers.len() != 2 {
        return Err(invalid("couplers", "need exactly one waveguide-primary and one primary-auxiliary coupler"));
    }
    if cfg.ring(RingLabel::Primary).is_none() || cfg.ring(RingLabel::Auxiliary).is_none() || cfg.rings.len() != 2 {
        return Err(invalid("rings", "need one primary and one auxiliary ring"));
    }
    let wg_x = cfg.coupler(Element::Waveguide, Element::Primary).and_then(|c| c.position_on(Element::Primary));
    let pa_x = cfg.coupler(Element::Primary, Element::Auxiliary).and_then(|c| c.position_on(Element::Primary));
    if let (Some(a), Some(b)) = (wg_x, pa_x) {
        if (a - b).abs() < 1e-15 {
            return Err(invalid("couplers", "couplers on the primary ring must sit at distinct points"));
        }
    }
    for r in &cfg.rings {
        let field = format!("rings[{:?}]", r.label);
        if !(r.length > 0.0) {
            return Err(invalid(&field, "length must be positive"));
        }
        if !(r.round_trip_attenuation > 0.0 && r.round_trip_attenuation <= 1.0) {
            return Err(invalid(&field, "round_trip_attenuation must lie in (0, 1]"));
        }
        if r.n_phantom < 1 || r.phantom_self_couplings.len() != r.n_phantom {
            return Err(invalid(&field, "need n_phantom >= 1 self-couplings"));
        }
        let prod: f64 = r.phantom_self_couplings.iter().product();
        if !close(prod, r.round_trip_attenuation, 1e-12) {
            return Err(invalid(&field, "phantom self-couplings must multiply to the round-trip attenuation"));
        }
        if r.phantom_self_couplings.iter().any(|s| !(*s > 0.0 && *s <= 1.0)) {
            return Err(invalid(&field, "phantom self-couplings must lie in (0, 1]"));
        }
        let pts = phantom_positions(cfg, r);
        if pts.len() != r.n_phantom {
            return Err(invalid(&field, "phantom position count differs from n_phantom"));
        }
        let elem: Element = r.label.into();
        for c in &cfg.couplers {
            if let Some(x) = c.position_on(elem) {
                if !pts.iter().any(|p| (p - x).abs() <= 1e-12 * r.length) {
                    return Err(Error::MisalignedPhantom { field, position: x });
                }
            }
        }
    }
    if cfg.bins.len() != 5 {
        return Err(invalid("bins", "need exactly five bins"));
    }
    for (b, want) in cfg.bins.iter().zip(BinLabel::ALL) {
        if b.label != want {
            return Err(invalid("bins", "labels must be LI, P1, S, P2, RI in order of frequency"));
        }
        if b.n_k < 3 || b.n_k % 2 == 0 {
            return Err(invalid(&format!("bins[{}].n_k", b.label), "must be odd and >= 3"));
        }
        if !(b.span > 0.0 && b.dk > 0.0) {
            return Err(invalid(&format!("bins[{}]", b.label), "span and dk must be positive"));
        }
    }
    check_disjoint(&cfg.bins)?;
    for p in &cfg.pumps {
        if !p.target.is_pump() {
            return Err(invalid("pumps", "pump target must be P1 or P2"));
        }
        if !(p.energy >= 0.0) || !(p.duration > 0.0) {
            return Err(invalid(&format!("pumps[{}]", p.target), "energy >= 0 and duration > 0 required"));
        }
    }
    if !(cfg.gamma_nl >= 0.0) {
        return Err(invalid("gamma_nl", "must be non-negative"));
    }
    Ok(())
}

fn ring_of(cfg: &SystemConfig, e: Element) -> Option<&RingSpec> {
    match e {
        Element::Primary => cfg.ring(RingLabel::Primary),
        Element::Auxiliary => cfg.ring(RingLabel::Auxiliary),
        Element::Waveguide => None,
    }
}

fn invalid(field: &str, reason: &str) -> Error {
    Error::InvalidConfig { field: field.to_string(), reason: reason.to_string() }
}

fn check_disjoint(bins: &[ResonanceBin]) -> Result<()> {
    for i in 0..bins.len() {
        for j in i + 1..bins.len() {
            let (a0, a1) = bins[i].omega_range();
            let (b0, b1) = bins[j].omega_range();
            if a0 < b1 && b0 < a1 {
                return Err(Error::BinOverlap { a: bins[i].label.to_string(), b: bins[j].label.to_string() });
            }
        }
    }
    Ok(())
}

/// Builds the five bins from (label, center, span) triples.
pub fn build_bins(cfg: &SystemConfig, centers: &[(BinLabel, f64, f64)], n_k: usize) -> Result<Vec<ResonanceBin>> {
    if n_k < 3 || n_k % 2 == 0 {
        return Err(invalid("n_k", "must be odd and >= 3"));
    }
    let d = &cfg.dispersion;
    let mut bins: Vec<ResonanceBin> = centers
        .iter()
        .map(|&(label, w, span)| {
            let kprime = 1.0 / d.group_velocity_at(w);
            ResonanceBin {
                label,
                center_omega: w,
                center_k: d.k(w),
                span,
                n_k,
                dk: span * kprime / n_k as f64,
            }
        })
        .collect();
    bins.sort_by(|a, b| a.center_omega.total_cmp(&b.center_omega));
    check_disjoint(&bins)?;
    Ok(bins)
}

/// Angular frequency ↔ GHz (ω/2π).
pub fn ghz_to_omega(ghz: f64) -> f64 {
    2.0 * PI * ghz * 1e9
}

pub fn omega_to_ghz(omega: f64) -> f64 {
    omega / (2.0 * PI * 1e9)
}
