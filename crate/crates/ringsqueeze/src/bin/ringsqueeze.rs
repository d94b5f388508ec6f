use clap::{Parser, Subcommand};
use ringsqueeze::config::ConfigFile;
use ringsqueeze::gaussian::{bloch_messiah, max_squeezing_db, mercer_wolf, moments_from_vw, photon_numbers, williamson, MercerWolfMode, PhotonNumbers};
use ringsqueeze::io::{read_vw, subset_rows, write_vw};
use ringsqueeze::model::ghz_to_omega;
use ringsqueeze::network::Network;
use ringsqueeze::nonlinear::{lambda_bar, ProcessMask};
use ringsqueeze::pump::PumpSystem;
use ringsqueeze::scenarios::{Fidelity, Scenario, Simulation};
use ringsqueeze::sweep::{sweep, write_artifacts, SweepPlan};
use ringsqueeze::{Error, Result};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "ringsqueeze", version, about = "Squeezed light from pulsed SFWM in coupled microrings")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Waveguide power transmission and phase over a detuning range.
    Spectrum {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Detuning from the reference frequency, `lo:hi` in GHz.
        #[arg(long, default_value = "-20:20")]
        range: String,
        #[arg(long, default_value_t = 2001)]
        points: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Nonlinear coupling table for every quadruple of the model.
    Nltable {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classical pump trajectory: ring and waveguide energies over time.
    Pumps {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full quantum propagation; writes the out-basis V and W blocks.
    Propagate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Binary output; the JSON sidecar is written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Gaussian-state analysis of a mode subset of a dumped propagator.
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "signal_out")]
        subset: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Scenario sweep over κ^aux and pump detuning.
    Run {
        #[arg(long)]
        scenario: Scenario,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = parse_fidelity)]
        fidelity: Option<Fidelity>,
    },
}

fn parse_fidelity(s: &str) -> std::result::Result<Fidelity, String> {
    match s {
        "low" => Ok(Fidelity::Low),
        "high" => Ok(Fidelity::High),
        _ => Err(format!("expected low or high, got {s}")),
    }
}

fn load(path: &Option<PathBuf>, scenario: Option<Scenario>, fidelity: Option<Fidelity>) -> Result<ConfigFile> {
    let v = match path {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
        None => serde_json::json!({}),
    };
    ConfigFile::from_value(&v, scenario, fidelity)
}

fn parse_range(s: &str) -> Result<(f64, f64)> {
    let bad = || Error::InvalidConfig { field: "range".into(), reason: format!("expected lo:hi in GHz, got {s}") };
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let (a, b): (f64, f64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if !(a < b) {
        return Err(bad());
    }
    Ok((a, b))
}

fn spectrum(cfg: &ConfigFile, range: &str, points: usize, out: &Path) -> Result<()> {
    let (lo, hi) = parse_range(range)?;
    if points < 2 {
        return Err(Error::InvalidConfig { field: "points".into(), reason: "need at least 2".into() });
    }
    let sys = cfg.system()?;
    let net = Network::new(&sys)?;
    let mut csv = String::from("detuning_GHz,power_transmission,phase_rad\n");
    for i in 0..points {
        let d = lo + (hi - lo) * i as f64 / (points - 1) as f64;
        let h = net.transmission(sys.dispersion.omega_ref + ghz_to_omega(d))?;
        let _ = writeln!(csv, "{d:.9},{:.12e},{:.12e}", h.norm_sqr(), h.arg());
    }
    std::fs::write(out, csv)?;
    Ok(())
}

fn nltable(cfg: &ConfigFile, out: &Path) -> Result<()> {
    let sys = cfg.system()?;
    let table = lambda_bar(&sys, &Network::new(&sys)?)?;
    std::fs::write(out, serde_json::to_string_pretty(&table)?)?;
    Ok(())
}

fn pumps(cfg: &ConfigFile, out: &Path) -> Result<()> {
    let sys = cfg.system()?;
    let net = Network::new(&sys)?;
    let ps = PumpSystem::new(&sys, &net, &lambda_bar(&sys, &net)?)?;
    let traj = ringsqueeze::pump::solve_pumps(&sys, &ps)?;
    let mut csv = String::from("t_ps,pump,ring_energy_pJ,waveguide_energy_pJ\n");
    for s in &traj.states {
        for (p, name) in ["P1", "P2"].iter().enumerate() {
            let ring = ps.ring_energy(p, &s.alpha[p]) * 1e12;
            let wg = ps.waveguide_energy(p, &s.alpha[p], s.t - traj.t0()) * 1e12;
            let _ = writeln!(csv, "{:.6},{name},{ring:.9e},{wg:.9e}", s.t * 1e12);
        }
    }
    std::fs::write(out, csv)?;
    Ok(())
}

fn propagate(cfg: &ConfigFile, out: &Path) -> Result<()> {
    let sim = Simulation::new(cfg.system()?)?;
    let traj = sim.pump_trajectory()?;
    let prop = sim.propagate(&traj, ProcessMask::ALL)?;
    write_vw(out, &prop, &sim.quantum.layout)
}

#[derive(Serialize)]
struct StateReport {
    subset: String,
    rows: Vec<usize>,
    n_modes: usize,
    bogoliubov_residual: f64,
    photon_numbers: PhotonNumbers,
    /// Williamson symplectic eigenvalues, descending (vacuum = 0.5).
    symplectic_eigenvalues: Vec<f64>,
    /// Bloch-Messiah squeezing factors R ≥ 1, descending.
    squeezing_factors: Vec<f64>,
    /// −20 log10 R per Bloch-Messiah mode.
    squeezing_factors_db: Vec<f64>,
    max_squeezing_db: f64,
    max_antisqueezing_db: f64,
    mercer_wolf: Vec<MercerWolfMode>,
}

fn analyze(input: &Path, subset: &str, out: &Path) -> Result<()> {
    let (prop, side) = read_vw(input)?;
    let rows = subset_rows(&side.layout, subset)?;
    let state = moments_from_vw(&prop.v, &prop.w).reduce(&rows)?;
    let sigma = state.sigma();
    let w = williamson(&sigma)?;
    let bm = bloch_messiah(&w.s)?;
    let q = max_squeezing_db(&sigma);
    let report = StateReport {
        subset: subset.into(),
        n_modes: rows.len(),
        rows,
        bogoliubov_residual: prop.bogoliubov_residual(),
        photon_numbers: photon_numbers(&w, &bm, &state),
        symplectic_eigenvalues: w.d.clone(),
        squeezing_factors_db: bm.r.iter().map(|r| -20.0 * r.log10()).collect(),
        squeezing_factors: bm.r,
        max_squeezing_db: q.min_db,
        max_antisqueezing_db: q.max_db,
        mercer_wolf: mercer_wolf(&state),
    };
    std::fs::write(out, serde_json::to_string_pretty(&report)?)?;
    Ok(())
}

fn run(cfg: &ConfigFile, out: &Path) -> Result<()> {
    let start = Instant::now();
    let plan = SweepPlan::from_params(&cfg.params);
    eprintln!(
        "{} points, N_k = {}, {} phantoms per ring",
        plan.n_points(),
        cfg.params.n_k,
        cfg.params.n_phantom
    );
    let res = sweep(cfg, &plan)?;
    write_artifacts(out, cfg, &res, start.elapsed().as_secs_f64())?;
    for r in res.records.iter().filter(|r| r.error.is_some()) {
        eprintln!("point {} {:?}: {}", r.index, r.axis_values, r.error.as_deref().unwrap_or(""));
    }
    res.status()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Spectrum { config, range, points, out } => load(&config, None, None).and_then(|c| spectrum(&c, &range, points, &out)),
        Cmd::Nltable { config, out } => load(&config, None, None).and_then(|c| nltable(&c, &out)),
        Cmd::Pumps { config, out } => load(&config, None, None).and_then(|c| pumps(&c, &out)),
        Cmd::Propagate { config, out } => load(&config, None, None).and_then(|c| propagate(&c, &out)),
        Cmd::Analyze { input, subset, out } => analyze(&input, &subset, &out),
        Cmd::Run { scenario, config, out, fidelity } => load(&config, Some(scenario), fidelity).and_then(|c| run(&c, &out)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::PartialFailure { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
