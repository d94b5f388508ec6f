//! Browser bindings: linear spectra, κ^aux scans and classical pump energies.
//!
//! Every function takes a JSON configuration in the CLI format (scenario key plus
//! parameter overrides) and returns JSON.

use ringsqueeze::config::ConfigFile;
use ringsqueeze::model::{ghz_to_omega, omega_to_ghz};
use ringsqueeze::network::Network;
use ringsqueeze::scenarios::{dp_detuning, idler_splitting, Simulation};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn load(config: &str) -> Result<ConfigFile, String> {
    let v: Value = if config.trim().is_empty() { json!({}) } else { serde_json::from_str(config).map_err(|e| e.to_string())? };
    ConfigFile::from_value(&v, None, None).map_err(|e| e.to_string())
}

/// Waveguide transmission over `[lo_ghz, hi_ghz]` around the signal resonance.
pub fn spectrum_json(config: &str, lo_ghz: f64, hi_ghz: f64, points: usize) -> Result<String, String> {
    if !(lo_ghz < hi_ghz) || points < 2 || points > 100_000 {
        return Err("need lo < hi and 2 <= points <= 100000".into());
    }
    let cfg = load(config)?;
    let sys = cfg.system().map_err(|e| e.to_string())?;
    let net = Network::new(&sys).map_err(|e| e.to_string())?;
    let mut det = Vec::with_capacity(points);
    let mut power = Vec::with_capacity(points);
    let mut phase = Vec::with_capacity(points);
    for i in 0..points {
        let d = lo_ghz + (hi_ghz - lo_ghz) * i as f64 / (points - 1) as f64;
        let h = net.transmission(sys.dispersion.omega_ref + ghz_to_omega(d)).map_err(|e| e.to_string())?;
        det.push(d);
        power.push(h.norm_sqr());
        phase.push(h.arg());
    }
    Ok(json!({ "detuning_ghz": det, "power_transmission": power, "phase_rad": phase }).to_string())
}

/// Idler splitting (GHz) and DP detuning (MHz) as κ^aux runs over `[k_lo, k_hi]`.
pub fn kappa_scan_json(config: &str, k_lo: f64, k_hi: f64, points: usize) -> Result<String, String> {
    if !(k_lo < k_hi) || points < 2 || points > 2000 {
        return Err("need k_lo < k_hi and 2 <= points <= 2000".into());
    }
    let cfg = load(config)?;
    let mut kappa = Vec::new();
    let mut split = Vec::new();
    let mut dp = Vec::new();
    for i in 0..points {
        let mut p = cfg.params.clone();
        p.kappa_aux = k_lo + (k_hi - k_lo) * i as f64 / (points - 1) as f64;
        kappa.push(p.kappa_aux);
        // a failed point becomes null so the plot shows a gap
        split.push(idler_splitting(&p).ok().map(omega_to_ghz));
        dp.push(dp_detuning(&p).ok().map(|w| omega_to_ghz(w) * 1e3));
    }
    Ok(json!({ "kappa": kappa, "splitting_ghz": split, "dp_detuning_mhz": dp }).to_string())
}

/// Ring and output-waveguide energies of both pumps over the classical trajectory.
pub fn pumps_json(config: &str) -> Result<String, String> {
    let cfg = load(config)?;
    let sim = Simulation::new(cfg.system().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let traj = sim.pump_trajectory().map_err(|e| e.to_string())?;
    let t0 = traj.t0();
    let t: Vec<f64> = traj.states.iter().map(|s| s.t * 1e12).collect();
    let series = |p: usize| {
        let ring: Vec<f64> = traj.states.iter().map(|s| sim.pumps.ring_energy(p, &s.alpha[p]) * 1e12).collect();
        let wg: Vec<f64> = traj.states.iter().map(|s| sim.pumps.waveguide_energy(p, &s.alpha[p], s.t - t0) * 1e12).collect();
        json!({ "ring_energy_pj": ring, "waveguide_energy_pj": wg })
    };
    Ok(json!({ "t_ps": t, "p1": series(0), "p2": series(1) }).to_string())
}

#[wasm_bindgen]
pub fn spectrum(config: &str, lo_ghz: f64, hi_ghz: f64, points: usize) -> Result<String, JsValue> {
    spectrum_json(config, lo_ghz, hi_ghz, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn kappa_scan(config: &str, k_lo: f64, k_hi: f64, points: usize) -> Result<String, JsValue> {
    kappa_scan_json(config, k_lo, k_hi, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn pumps(config: &str) -> Result<String, JsValue> {
    pumps_json(config).map_err(|e| JsValue::from_str(&e))
}
