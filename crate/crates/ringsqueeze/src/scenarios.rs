//! The two example systems and their parameter sweeps.

use crate::error::{Error, Result};
use crate::model::*;
use crate::gaussian::{moments_from_vw, GaussianState};
use crate::network::{plan_bins, primary_resonance, round_trip_phase_reduced, wrap, BinGrid, BinPlan, Network};
use crate::nonlinear::{lambda_bar, ProcessMask};
use crate::propagator::{Propagator, QuantumSystem};
use crate::pump::{solve_pumps, PumpSystem, PumpTrajectory};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Example1,
    Example2,
}

impl std::str::FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "example1" => Ok(Scenario::Example1),
            "example2" => Ok(Scenario::Example2),
            _ => Err(Error::InvalidConfig { field: "scenario".into(), reason: format!("unknown scenario {s}") }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fidelity {
    Low,
    High,
}

/// Scenario parameters in boundary units (GHz, MHz, µm, pJ, ps).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioParams {
    pub wavelength_nm: f64,
    pub group_velocity: f64,
    pub gvd_ps2_per_m: f64,
    pub primary_radius_um: f64,
    pub aux_radius_um: f64,
    pub waveguide_self_coupling: f64,
    pub primary_attenuation: f64,
    pub aux_attenuation: f64,
    pub kappa_aux: f64,
    /// Aux resonance relative to the first pump resonance; `None` aligns it to RI.
    pub aux_offset_ghz: Option<f64>,
    pub pump_order: i32,
    pub idler_order: i32,
    pub split_idlers: bool,
    pub pump_detuning_mhz: [f64; 2],
    pub pump_energy_pj: f64,
    pub pulse_duration_ps: f64,
    pub gamma_nl: f64,
    pub n_k: usize,
    pub n_phantom: usize,
    pub span_linewidths: f64,
    pub dt_ps: Option<f64>,
    pub tf_ps: Option<f64>,
    /// Sweep values of κ^aux.
    pub kappa_values: Vec<f64>,
    /// Sweep values of the pump detuning, MHz.
    pub detuning_values_mhz: Vec<f64>,
    /// Which pumps the detuning axis moves.
    pub detune_pumps: [bool; 2],
}

impl Default for ScenarioParams {
    fn default() -> Self {
        example1_params(Fidelity::Low)
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

pub fn example1_params(fid: Fidelity) -> ScenarioParams {
    let (n_k, n_phantom) = match fid {
        Fidelity::Low => (15, 3),
        Fidelity::High => (31, 5),
    };
    ScenarioParams {
        wavelength_nm: 1550.0,
        group_velocity: 1.494e8,
        gvd_ps2_per_m: 0.0,
        primary_radius_um: 120.0,
        aux_radius_um: 90.0,
        waveguide_self_coupling: 0.997,
        primary_attenuation: 0.9991,
        aux_attenuation: 0.99935,
        kappa_aux: 0.0643,
        aux_offset_ghz: None,
        pump_order: 1,
        idler_order: 2,
        split_idlers: true,
        pump_detuning_mhz: [-284.0, -284.0],
        pump_energy_pj: 100.0,
        pulse_duration_ps: 70.0,
        gamma_nl: 1.0,
        n_k,
        n_phantom,
        span_linewidths: 12.0,
        dt_ps: None,
        tf_ps: None,
        kappa_values: linspace(0.0, 0.09, 8),
        detuning_values_mhz: linspace(-500.0, 200.0, 8),
        detune_pumps: [true, true],
    }
}

pub fn example2_params(fid: Fidelity) -> ScenarioParams {
    ScenarioParams {
        gvd_ps2_per_m: 0.5,
        aux_radius_um: 75.0,
        kappa_aux: 0.0355,
        aux_offset_ghz: Some(-4.77),
        pump_order: 5,
        idler_order: 10,
        split_idlers: false,
        pump_detuning_mhz: [-170.0, -170.0],
        kappa_values: linspace(0.0, 0.06, 8),
        detuning_values_mhz: linspace(-500.0, 200.0, 8),
        detune_pumps: [true, false],
        ..example1_params(fid)
    }
}

pub fn default_params(s: Scenario, fid: Fidelity) -> ScenarioParams {
    match s {
        Scenario::Example1 => example1_params(fid),
        Scenario::Example2 => example2_params(fid),
    }
}

/// Network-only configuration (no bins, no pumps).
pub fn geometry(p: &ScenarioParams) -> Result<SystemConfig> {
    for (field, v) in [("kappa_aux", p.kappa_aux), ("waveguide_self_coupling", p.waveguide_self_coupling)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidConfig { field: field.into(), reason: format!("{v} outside [0, 1]") });
        }
    }
    let lp = 2.0 * PI * p.primary_radius_um * 1e-6;
    let la = 2.0 * PI * p.aux_radius_um * 1e-6;
    let omega_ref = 2.0 * PI * C_LIGHT / (p.wavelength_nm * 1e-9);
    // k₀ on a primary resonance so that S sits at ω̄
    let m0 = (omega_ref / p.group_velocity * lp / (2.0 * PI)).round();
    let dispersion = DispersionModel {
        omega_ref,
        k_ref: 2.0 * PI * m0 / lp,
        group_velocity: p.group_velocity,
        gvd: p.gvd_ps2_per_m * 1e-24,
    };
    let rings = vec![
        RingSpec::new(RingLabel::Primary, lp, p.primary_attenuation, p.n_phantom),
        RingSpec::new(RingLabel::Auxiliary, la, p.aux_attenuation, p.n_phantom),
    ];
    let couplers = vec![
        CouplerSpec::from_self(p.waveguide_self_coupling, (Element::Waveguide, 0.0), (Element::Primary, 0.0)),
        CouplerSpec::from_cross(p.kappa_aux, (Element::Primary, 0.5 * lp), (Element::Auxiliary, 0.0)),
    ];
    let mut cfg = SystemConfig {
        dispersion,
        rings,
        couplers,
        gamma_nl: p.gamma_nl,
        bins: Vec::new(),
        pumps: Vec::new(),
        time_grid: TimeGrid { t0: 0.0, tf: p.tf_ps.map(|t| t * 1e-12), dt: p.dt_ps.map(|t| t * 1e-12) },
        aux_detuning: 0.0,
    };
    let target = match p.aux_offset_ghz {
        None => primary_resonance(&cfg, p.idler_order)?,
        Some(off) => primary_resonance(&cfg, -p.pump_order)? + ghz_to_omega(off),
    };
    cfg.aux_detuning = target - primary_resonance(&cfg, -p.pump_order)?;
    let aux = cfg.ring(RingLabel::Auxiliary).expect("auxiliary ring").clone();
    let phase = round_trip_phase_reduced(&aux, &cfg.dispersion, target);
    cfg.ring_mut(RingLabel::Auxiliary).expect("auxiliary ring").tuning_phase = -wrap(phase);
    Ok(cfg)
}

/// Full configuration: geometry, bins placed on the resonances, pumps.
pub fn build_config(p: &ScenarioParams) -> Result<SystemConfig> {
    let mut cfg = geometry(p)?;
    let plan = BinPlan {
        pump_order: p.pump_order,
        idler_order: p.idler_order,
        n_k: p.n_k,
        span_linewidths: p.span_linewidths,
        split: if p.split_idlers { vec![BinLabel::LI, BinLabel::RI] } else { Vec::new() },
    };
    // lossless rings have no transmission dip, so bins are placed on a slightly lossy twin
    let mut probe = cfg.clone();
    for r in probe.rings.iter_mut() {
        if r.round_trip_attenuation >= 1.0 {
            *r = RingSpec { round_trip_attenuation: 0.999, phantom_self_couplings: uniform_sigmas(0.999, r.n_phantom), ..r.clone() };
        }
    }
    let planned = plan_bins(&probe, &plan)?;
    let centers: Vec<_> = planned.iter().map(|(l, c, s, _)| (*l, *c, *s)).collect();
    cfg.bins = build_bins(&cfg, &centers, p.n_k)?;
    let dt = p.pulse_duration_ps * 1e-12;
    for (i, label) in [BinLabel::P1, BinLabel::P2].into_iter().enumerate() {
        let b = *cfg.bin(label).expect("pump bin");
        let w = b.center_omega + 2.0 * PI * p.pump_detuning_mhz[i] * 1e6;
        let v = cfg.dispersion.group_velocity_at(w);
        cfg.pumps.push(PumpPulse {
            target: label,
            energy: p.pump_energy_pj * 1e-12,
            duration: dt,
            center_k: cfg.dispersion.k(w),
            delay_position: -4.0 * v * dt,
        });
    }
    validate_config(&cfg)?;
    Ok(cfg)
}

/// Resonance splitting of the RI bin (Example 1 observable).
pub fn idler_splitting(p: &ScenarioParams) -> Result<f64> {
    let cfg = geometry(p)?;
    let w0 = primary_resonance(&cfg, p.idler_order)?;
    let fsr = crate::network::primary_fsr(&cfg);
    let f = crate::network::find_resonance_features(&cfg, w0 - 0.15 * fsr, w0 + 0.15 * fsr)?;
    Ok(f.splitting)
}

/// ΔΩ_(S,S,P1,P2) = ω_P1 + ω_P2 − 2ω_S with each ω at its deepest transmission dip.
pub fn dp_detuning(p: &ScenarioParams) -> Result<f64> {
    let cfg = geometry(p)?;
    let fsr = crate::network::primary_fsr(&cfg);
    let dip = |m: i32| -> Result<f64> {
        let w0 = primary_resonance(&cfg, m)?;
        let f = crate::network::find_resonance_features(&cfg, w0 - 0.05 * fsr, w0 + 0.05 * fsr)?;
        let i = (0..f.centers.len()).max_by(|&a, &b| f.depths[a].total_cmp(&f.depths[b])).expect("dip");
        Ok(f.centers[i])
    };
    Ok(dip(-p.pump_order)? + dip(p.pump_order)? - 2.0 * dip(0)?)
}


/// One configured system, ready to simulate.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub cfg: SystemConfig,
    pub pumps: PumpSystem,
    pub quantum: QuantumSystem,
}

impl Simulation {
    pub fn new(cfg: SystemConfig) -> Result<Self> {
        let net = Network::new(&cfg)?;
        let table = lambda_bar(&cfg, &net)?;
        let pumps = PumpSystem::new(&cfg, &net, &table)?;
        let grid = |l: BinLabel| -> Result<BinGrid> {
            BinGrid::new(&net, cfg.bin(l).ok_or_else(|| Error::InvalidConfig { field: "bins".into(), reason: format!("missing {l}") })?)
        };
        let quantum = QuantumSystem::new([grid(BinLabel::LI)?, grid(BinLabel::S)?, grid(BinLabel::RI)?], table, ProcessMask::ALL);
        Ok(Simulation { cfg, pumps, quantum })
    }

    pub fn pump_trajectory(&self) -> Result<PumpTrajectory> {
        solve_pumps(&self.cfg, &self.pumps)
    }

    /// Out-basis propagator for the given process mask.
    pub fn propagate(&self, traj: &PumpTrajectory, mask: ProcessMask) -> Result<Propagator> {
        let q = self.quantum.with_mask(mask);
        q.compose_out(&self.pumps, traj)
    }

    pub fn signal_rows(&self) -> Vec<usize> {
        self.quantum.layout.output_rows(1)
    }
}

/// Reduced signal-output state of a propagator.
pub fn signal_state(sim: &Simulation, prop: &Propagator) -> Result<GaussianState> {
    moments_from_vw(&prop.v, &prop.w).reduce(&sim.signal_rows())
}
