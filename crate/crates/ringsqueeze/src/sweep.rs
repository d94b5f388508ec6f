//! Parameter sweeps over κ^aux and pump detuning, with CSV/JSON/SVG emission.

use crate::config::ConfigFile;
use crate::error::{Error, Result};
use crate::gaussian::{bloch_messiah, fidelity, max_squeezing_db, mercer_wolf, moments_from_vw, photon_numbers, williamson};
use crate::model::omega_to_ghz;
use crate::nonlinear::ProcessMask;
use crate::scenarios::{build_config, dp_detuning, idler_splitting, ScenarioParams, Simulation};
use crate::svg;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

/// Grids coarser than this in N_k are flagged as unconverged.
pub const CONVERGED_N_K: usize = 31;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    MaxSqueezingDb,
    MaxAntisqueezingDb,
    FidelityVsDpOnly,
    NTotLi,
    NTotS,
    NTotRi,
    NTh,
    NSq,
    Mw1SqueezingDb,
    Mw2SqueezingDb,
    Mw3SqueezingDb,
    Mw1Occupancy,
    Mw2Occupancy,
    Mw3Occupancy,
    DpDetuningMhz,
    SplittingGhz,
}

impl Observable {
    pub const ALL: [Observable; 16] = [
        Observable::MaxSqueezingDb,
        Observable::MaxAntisqueezingDb,
        Observable::FidelityVsDpOnly,
        Observable::NTotLi,
        Observable::NTotS,
        Observable::NTotRi,
        Observable::NTh,
        Observable::NSq,
        Observable::Mw1SqueezingDb,
        Observable::Mw2SqueezingDb,
        Observable::Mw3SqueezingDb,
        Observable::Mw1Occupancy,
        Observable::Mw2Occupancy,
        Observable::Mw3Occupancy,
        Observable::DpDetuningMhz,
        Observable::SplittingGhz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Observable::MaxSqueezingDb => "max_squeezing_db",
            Observable::MaxAntisqueezingDb => "max_antisqueezing_db",
            Observable::FidelityVsDpOnly => "fidelity_vs_dp_only",
            Observable::NTotLi => "n_tot_li",
            Observable::NTotS => "n_tot_s",
            Observable::NTotRi => "n_tot_ri",
            Observable::NTh => "n_th",
            Observable::NSq => "n_sq",
            Observable::Mw1SqueezingDb => "mw1_squeezing_db",
            Observable::Mw2SqueezingDb => "mw2_squeezing_db",
            Observable::Mw3SqueezingDb => "mw3_squeezing_db",
            Observable::Mw1Occupancy => "mw1_occupancy",
            Observable::Mw2Occupancy => "mw2_occupancy",
            Observable::Mw3Occupancy => "mw3_occupancy",
            Observable::DpDetuningMhz => "dp_detuning_mhz",
            Observable::SplittingGhz => "splitting_ghz",
        }
    }

    /// Needs only the linear network, no time evolution.
    pub fn is_linear(self) -> bool {
        matches!(self, Observable::DpDetuningMhz | Observable::SplittingGhz)
    }
}

impl std::str::FromStr for Observable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Observable::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| Error::InvalidConfig { field: "observables".into(), reason: format!("unknown observable {s}") })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    KappaAux,
    /// Applied to the pumps selected by `detune_pumps`.
    PumpDetuningMhz,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::KappaAux => "kappa_aux",
            SweepParam::PumpDetuningMhz => "pump_detuning_mhz",
        }
    }

    fn apply(self, p: &mut ScenarioParams, v: f64) {
        match self {
            SweepParam::KappaAux => p.kappa_aux = v,
            SweepParam::PumpDetuningMhz => {
                for i in 0..2 {
                    if p.detune_pumps[i] {
                        p.pump_detuning_mhz[i] = v;
                    }
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub axes: Vec<Axis>,
    pub observables: Vec<Observable>,
}

impl SweepPlan {
    /// κ^aux × detuning grid from the parameter file, with every observable that applies.
    pub fn from_params(p: &ScenarioParams) -> Self {
        let mut observables: Vec<Observable> = Observable::ALL.to_vec();
        if !p.split_idlers {
            observables.retain(|o| *o != Observable::SplittingGhz);
        }
        SweepPlan {
            axes: vec![
                Axis { param: SweepParam::KappaAux, values: p.kappa_values.clone() },
                Axis { param: SweepParam::PumpDetuningMhz, values: p.detuning_values_mhz.clone() },
            ],
            observables,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::InvalidConfig { field: "sweep".into(), reason });
        if self.axes.len() > 2 {
            return bad(format!("{} axes, at most 2 allowed", self.axes.len()));
        }
        if self.axes.len() == 2 && self.axes[0].param == self.axes[1].param {
            return bad("both axes sweep the same parameter".into());
        }
        if self.axes.iter().any(|a| a.values.is_empty() || a.values.iter().any(|v| !v.is_finite())) {
            return bad("axis values must be finite and nonempty".into());
        }
        if self.observables.is_empty() {
            return bad("no observables".into());
        }
        Ok(())
    }

    pub fn n_points(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    /// Axis values of point `index`, first axis slowest.
    pub fn point(&self, index: usize) -> Vec<f64> {
        let mut rem = index;
        let mut out = vec![0.0; self.axes.len()];
        for (k, a) in self.axes.iter().enumerate().rev() {
            out[k] = a.values[rem % a.values.len()];
            rem /= a.values.len();
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub n_k: usize,
    pub n_phantom: usize,
    pub dt_ps: Option<f64>,
    pub tf_ps: Option<f64>,
    pub steps: Option<usize>,
    pub bogoliubov_residual: Option<f64>,
    pub below_convergence_threshold: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub index: usize,
    pub config_hash: String,
    pub axis_values: Vec<f64>,
    pub observables: BTreeMap<Observable, f64>,
    pub wall_time_s: f64,
    pub diagnostics: Diagnostics,
    pub error: Option<String>,
}

/// Evaluates `observables` for one parameter set. The DP-only reference reuses the pump trajectory.
pub fn evaluate(p: &ScenarioParams, observables: &[Observable]) -> Result<(BTreeMap<Observable, f64>, Diagnostics)> {
    let mut diag = Diagnostics {
        n_k: p.n_k,
        n_phantom: p.n_phantom,
        dt_ps: None,
        tf_ps: None,
        steps: None,
        bogoliubov_residual: None,
        below_convergence_threshold: p.n_k < CONVERGED_N_K,
    };
    let mut out = BTreeMap::new();
    for o in observables.iter().filter(|o| o.is_linear()) {
        let v = match o {
            Observable::DpDetuningMhz => omega_to_ghz(dp_detuning(p)?) * 1e3,
            _ => omega_to_ghz(idler_splitting(p)?),
        };
        out.insert(*o, v);
    }
    if observables.iter().all(|o| o.is_linear()) {
        return Ok((out, diag));
    }
    let sim = Simulation::new(build_config(p)?)?;
    let traj = sim.pump_trajectory()?;
    diag.dt_ps = Some(traj.dt * 1e12);
    diag.tf_ps = Some((traj.tf() - traj.t0()) * 1e12);
    diag.steps = Some(traj.n_steps());
    let full = sim.propagate(&traj, ProcessMask::ALL)?;
    diag.bogoliubov_residual = Some(full.bogoliubov_residual());
    let state = moments_from_vw(&full.v, &full.w);
    let layout = &sim.quantum.layout;
    let signal = state.reduce(&layout.output_rows(1))?;
    let sigma = signal.sigma();
    let need = |o: &[Observable]| observables.iter().any(|x| o.contains(x));
    if need(&[Observable::MaxSqueezingDb, Observable::MaxAntisqueezingDb]) {
        let q = max_squeezing_db(&sigma);
        out.insert(Observable::MaxSqueezingDb, q.min_db);
        out.insert(Observable::MaxAntisqueezingDb, q.max_db);
    }
    for (o, j) in [(Observable::NTotLi, 0), (Observable::NTotS, 1), (Observable::NTotRi, 2)] {
        if need(&[o]) {
            out.insert(o, state.reduce(&layout.output_rows(j))?.total_photons());
        }
    }
    if need(&[Observable::NTh, Observable::NSq]) {
        let w = williamson(&sigma)?;
        let bm = bloch_messiah(&w.s)?;
        let n = photon_numbers(&w, &bm, &signal);
        out.insert(Observable::NTh, n.thermal);
        out.insert(Observable::NSq, n.squeezed);
    }
    let mw_obs = [
        (Observable::Mw1SqueezingDb, Observable::Mw1Occupancy),
        (Observable::Mw2SqueezingDb, Observable::Mw2Occupancy),
        (Observable::Mw3SqueezingDb, Observable::Mw3Occupancy),
    ];
    if mw_obs.iter().any(|(a, b)| need(&[*a, *b])) {
        let mw = mercer_wolf(&signal);
        for (k, (sq, occ)) in mw_obs.iter().enumerate() {
            let m = mw.get(k);
            out.insert(*sq, m.map_or(f64::NAN, |m| m.squeezing_db));
            out.insert(*occ, m.map_or(f64::NAN, |m| m.occupancy));
        }
    }
    if need(&[Observable::FidelityVsDpOnly]) {
        let reference = sim.propagate(&traj, ProcessMask::IDEAL)?;
        let sr = moments_from_vw(&reference.v, &reference.w).reduce(&layout.output_rows(1))?;
        out.insert(Observable::FidelityVsDpOnly, fidelity(&sigma, &sr.sigma())?);
    }
    out.retain(|o, _| observables.contains(o));
    Ok((out, diag))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepResult {
    pub plan: SweepPlan,
    pub records: Vec<RunRecord>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.error.is_some()).count()
    }

    /// `PartialFailure` if any grid point failed.
    pub fn status(&self) -> Result<()> {
        match self.failures() {
            0 => Ok(()),
            failed => Err(Error::PartialFailure { failed, total: self.records.len() }),
        }
    }
}

fn run_point(base: &ConfigFile, plan: &SweepPlan, index: usize) -> RunRecord {
    let start = Instant::now();
    let axis_values = plan.point(index);
    let mut cfg = base.clone();
    for (a, v) in plan.axes.iter().zip(&axis_values) {
        a.param.apply(&mut cfg.params, *v);
    }
    let (observables, diagnostics, error) = match evaluate(&cfg.params, &plan.observables) {
        Ok((o, d)) => (o, d, None),
        Err(e) => {
            let d = Diagnostics {
                n_k: cfg.params.n_k,
                n_phantom: cfg.params.n_phantom,
                dt_ps: None,
                tf_ps: None,
                steps: None,
                bogoliubov_residual: None,
                below_convergence_threshold: cfg.params.n_k < CONVERGED_N_K,
            };
            (BTreeMap::new(), d, Some(e.to_string()))
        }
    };
    RunRecord { index, config_hash: cfg.hash(), axis_values, observables, wall_time_s: start.elapsed().as_secs_f64(), diagnostics, error }
}

/// Evaluates every grid point. Failed points carry their error; check [`SweepResult::status`].
pub fn sweep(base: &ConfigFile, plan: &SweepPlan) -> Result<SweepResult> {
    plan.validate()?;
    let n = plan.n_points();
    #[cfg(feature = "parallel")]
    let records = {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(|i| run_point(base, plan, i)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let records = (0..n).map(|i| run_point(base, plan, i)).collect();
    Ok(SweepResult { plan: plan.clone(), records })
}

fn fmt(v: f64) -> String {
    if v.is_finite() {
        format!("{v:e}")
    } else {
        String::new()
    }
}

/// One row per grid point. Wall times are left out so reruns give identical bytes.
pub fn to_csv(res: &SweepResult) -> String {
    let mut head: Vec<String> = vec!["index".into()];
    head.extend(res.plan.axes.iter().map(|a| a.param.name().to_string()));
    head.extend(res.plan.observables.iter().map(|o| o.name().to_string()));
    head.extend(["n_k", "n_phantom", "dt_ps", "tf_ps", "below_convergence_threshold", "error"].map(String::from));
    let mut out = head.join(",") + "\n";
    for r in &res.records {
        let mut row = vec![r.index.to_string()];
        row.extend(r.axis_values.iter().map(|v| fmt(*v)));
        row.extend(res.plan.observables.iter().map(|o| r.observables.get(o).map_or(String::new(), |v| fmt(*v))));
        let d = &r.diagnostics;
        row.push(d.n_k.to_string());
        row.push(d.n_phantom.to_string());
        row.push(d.dt_ps.map_or(String::new(), fmt));
        row.push(d.tf_ps.map_or(String::new(), fmt));
        row.push(d.below_convergence_threshold.to_string());
        row.push(r.error.as_ref().map_or(String::new(), |e| format!("\"{}\"", e.replace('"', "'"))));
        out += &(row.join(",") + "\n");
    }
    out
}

fn axis_label(p: SweepParam) -> &'static str {
    match p {
        SweepParam::KappaAux => "aux cross-coupling kappa",
        SweepParam::PumpDetuningMhz => "pump detuning (MHz)",
    }
}

/// One SVG per observable: a heatmap for 2-D grids, a line plot otherwise.
pub fn plots(res: &SweepResult) -> Vec<(String, String)> {
    let plan = &res.plan;
    let value = |r: &RunRecord, o: Observable| r.observables.get(&o).copied().unwrap_or(f64::NAN);
    let mut out = Vec::new();
    for &o in &plan.observables {
        let file = format!("{}.svg", o.name());
        let doc = match plan.axes.as_slice() {
            [a, b] if a.values.len() > 1 && b.values.len() > 1 => {
                let mut z = vec![vec![f64::NAN; b.values.len()]; a.values.len()];
                for r in &res.records {
                    z[r.index / b.values.len()][r.index % b.values.len()] = value(r, o);
                }
                svg::heatmap(o.name(), axis_label(a.param), axis_label(b.param), &a.values, &b.values, &z)
            }
            [] => svg::line_plot(o.name(), "point", o.name(), &[0.0], &[(o.name().into(), res.records.iter().map(|r| value(r, o)).collect())]),
            axes => {
                // the longest axis becomes x; a short other axis gives one series per value
                let k = (0..axes.len()).max_by_key(|&k| axes[k].values.len()).expect("axes");
                let x = axes[k].values.clone();
                let series: Vec<(String, Vec<f64>)> = if axes.len() == 2 {
                    let other = &axes[1 - k];
                    (0..other.values.len())
                        .map(|m| {
                            let ys = (0..x.len())
                                .map(|i| {
                                    let idx = if k == 0 { i * other.values.len() + m } else { m * x.len() + i };
                                    value(&res.records[idx], o)
                                })
                                .collect();
                            (format!("{} = {}", other.param.name(), other.values[m]), ys)
                        })
                        .collect()
                } else {
                    vec![(o.name().into(), res.records.iter().map(|r| value(r, o)).collect())]
                };
                svg::line_plot(o.name(), axis_label(axes[k].param), o.name(), &x, &series)
            }
        };
        out.push((file, doc));
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Meta {
    pub config_hash: String,
    pub config: serde_json::Value,
    pub crate_version: String,
    pub n_points: usize,
    pub failed_points: usize,
    pub total_wall_time_s: f64,
    pub point_wall_time_s: Vec<f64>,
    pub below_convergence_threshold: bool,
    pub note: String,
}

/// Writes `grid.csv`, `grid.json`, `meta.json` and one SVG per observable into `dir`.
pub fn write_artifacts(dir: &Path, base: &ConfigFile, res: &SweepResult, total_wall_time_s: f64) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("grid.csv"), to_csv(res))?;
    std::fs::write(dir.join("grid.json"), serde_json::to_string_pretty(res)?)?;
    for (name, doc) in plots(res) {
        std::fs::write(dir.join(name), doc)?;
    }
    let meta = Meta {
        config_hash: base.hash(),
        config: base.to_value(),
        crate_version: env!("CARGO_PKG_VERSION").into(),
        n_points: res.records.len(),
        failed_points: res.failures(),
        total_wall_time_s,
        point_wall_time_s: res.records.iter().map(|r| r.wall_time_s).collect(),
        below_convergence_threshold: res.records.iter().any(|r| r.diagnostics.below_convergence_threshold),
        note: format!(
            "Desk-scale grid of {} points; coarser than publication sweeps. N_k = {} (converged at N_k >= {CONVERGED_N_K}).",
            res.records.len(),
            base.params.n_k
        ),
    };
    std::fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}
