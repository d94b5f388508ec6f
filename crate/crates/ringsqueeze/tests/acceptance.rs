//! Acceptance checks: one PASS/FAIL line per criterion, with the measured values.

mod common;

use common::{omega, random_bogoliubov, random_symplectic, rel};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ringsqueeze::gaussian::{bloch_messiah, interlacing_check, moments_from_vw, williamson};
use ringsqueeze::model::omega_to_ghz;
use ringsqueeze::nonlinear::ProcessMask;
use ringsqueeze::pump::{initial_pump, integrate_pumps, PumpState, StopRule};
use ringsqueeze::scenarios::{build_config, dp_detuning, example1_params, example2_params, idler_splitting, Fidelity, ScenarioParams, Simulation};
use ringsqueeze::sweep::{evaluate, Observable};
use std::time::Instant;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(n: usize, name: &str, budget_s: f64, f: impl FnOnce(&mut Vec<f64>) -> Outcome, residuals: &mut Vec<f64>, lines: &mut Vec<(usize, bool, String)>) {
    let t = Instant::now();
    let o = f(residuals);
    let secs = t.elapsed().as_secs_f64();
    let pass = o.pass && secs < budget_s;
    let over = if secs >= budget_s { format!(", over the {budget_s} s budget") } else { String::new() };
    lines.push((n, pass, format!("{} {n} {name}: {} [{secs:.2} s{over}]", if pass { "PASS" } else { "FAIL" }, o.detail)));
}

fn signal_observables(p: &ScenarioParams, obs: &[Observable]) -> std::collections::BTreeMap<Observable, f64> {
    evaluate(p, obs).expect("simulation runs").0
}

fn crit1() -> Outcome {
    let s = omega_to_ghz(idler_splitting(&example1_params(Fidelity::Low)).expect("splitting"));
    Outcome { pass: (s - 4.77).abs() <= 0.02 * 4.77, detail: format!("splitting {s:.4} GHz, target 4.77 GHz +-2%") }
}

fn crit2() -> Outcome {
    let mut p = example2_params(Fidelity::Low);
    p.kappa_aux = 0.0;
    let d = omega_to_ghz(dp_detuning(&p).expect("detuning")) * 1e3;
    Outcome { pass: (d + 453.0).abs() <= 0.02 * 453.0, detail: format!("DP detuning {d:.1} MHz, target -453 MHz +-2%") }
}

fn crit3(res: &mut Vec<f64>) -> Outcome {
    let obs = [Observable::FidelityVsDpOnly];
    let f = |k: f64, res: &mut Vec<f64>| {
        let mut p = example1_params(Fidelity::Low);
        p.kappa_aux = k;
        let (o, d) = evaluate(&p, &obs).expect("simulation runs");
        res.push(d.bogoliubov_residual.expect("propagated"));
        o[&Observable::FidelityVsDpOnly]
    };
    let (hi, lo) = (f(0.0643, res), f(0.0, res));
    Outcome {
        pass: hi > 0.97 && hi - lo >= 0.15,
        detail: format!("F(0.0643) = {hi:.4}, F(0) = {lo:.4}, gain {:.4}; need > 0.97 and gain >= 0.15", hi - lo),
    }
}

fn crit4() -> Outcome {
    let sq = |k: f64| {
        let mut p = example2_params(Fidelity::Low);
        p.kappa_aux = k;
        signal_observables(&p, &[Observable::Mw1SqueezingDb])[&Observable::Mw1SqueezingDb]
    };
    let base = sq(0.0);
    let (best_k, best) = [0.030, 0.0325, 0.035, 0.0375, 0.040].into_iter().map(|k| (k, sq(k))).fold((f64::NAN, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let gain = base - best;
    Outcome {
        pass: gain >= 2.0,
        detail: format!("primary Mercer-Wolf squeezing {base:.3} dB at kappa 0, {best:.3} dB at best kappa {best_k}; improvement {gain:.3} dB, need >= 2.0"),
    }
}

fn crit5(res: &mut Vec<f64>) -> Outcome {
    let mut p = example1_params(Fidelity::Low);
    p.primary_attenuation = 1.0;
    p.aux_attenuation = 1.0;
    let sim = Simulation::new(build_config(&p).expect("config")).expect("simulation");
    let traj = sim.pump_trajectory().expect("pumps");
    let prop = sim.propagate(&traj, ProcessMask::DP_ONLY).expect("propagation");
    res.push(prop.bogoliubov_residual());
    let state = moments_from_vw(&prop.v, &prop.w);
    let w = williamson(&state.sigma()).expect("williamson");
    let n_th: f64 = w.d.iter().map(|d| d - 0.5).sum();
    let n_tot = state.total_photons();
    Outcome { pass: n_th.abs() < 1e-6 && n_tot > 1e-3, detail: format!("n_th = {n_th:.3e} over {} modes (n_tot = {n_tot:.3e}); need |n_th| < 1e-6", state.n_modes()) }
}

fn crit6(res: &[f64]) -> Outcome {
    let worst = res.iter().cloned().fold(0.0, f64::max);
    Outcome { pass: !res.is_empty() && worst < 1e-8, detail: format!("{} composed propagators, worst residual {worst:.2e}; need < 1e-8", res.len()) }
}

fn crit7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_w, mut worst_bm, mut worst_d) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let n = rng.gen_range(1..=4);
        let (s0, _) = random_symplectic(&mut rng, n, 1.0);
        let mut d0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..3.0)).collect();
        let dd = DVector::from_iterator(2 * n, d0.iter().chain(d0.iter()).copied());
        let sigma = &s0 * DMatrix::from_diagonal(&dd) * s0.transpose();
        let w = williamson(&sigma).expect("williamson");
        d0.sort_by(|a, b| b.total_cmp(a));
        worst_d = worst_d.max(w.d.iter().zip(&d0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        let dw = DVector::from_iterator(2 * n, w.d.iter().chain(w.d.iter()).copied());
        worst_w = worst_w.max(rel(&(&w.s * DMatrix::from_diagonal(&dw) * w.s.transpose()), &sigma));
        let bm = bloch_messiah(&s0).expect("bloch-messiah");
        let rr = DVector::from_iterator(2 * n, bm.r.iter().copied().chain(bm.r.iter().map(|x| 1.0 / x)));
        let back = &bm.o * DMatrix::from_diagonal(&rr) * &bm.o_prime;
        let om = omega(n);
        let ortho = (&bm.o * bm.o.transpose() - DMatrix::identity(2 * n, 2 * n)).amax().max((&bm.o * &om * bm.o.transpose() - &om).amax());
        worst_bm = worst_bm.max(rel(&back, &s0)).max(ortho);
    }
    let mut worst_il = 0.0f64;
    let mut all_hold = true;
    for _ in 0..100 {
        let n = rng.gen_range(2..=4);
        let (v, w) = random_bogoliubov(&mut rng, 2 * n, 1.0);
        let keep: Vec<usize> = (0..n).collect();
        let state = moments_from_vw(&v, &w).reduce(&keep).expect("reduce");
        let rep = interlacing_check(&state, rng.gen_range(0..n)).expect("interlacing");
        all_hold &= rep.holds;
        worst_il = worst_il.max(rep.worst_violation);
    }
    let worst = worst_w.max(worst_bm).max(worst_d);
    Outcome {
        pass: worst < 1e-8 && all_hold,
        detail: format!("1000 round trips: Williamson {worst_w:.1e}, spectrum {worst_d:.1e}, Bloch-Messiah {worst_bm:.1e}; 100 interlacing checks hold = {all_hold} (worst {worst_il:.1e})"),
    }
}

fn crit8(res: &mut Vec<f64>) -> Outcome {
    let obs = [Observable::NTotS, Observable::MaxSqueezingDb];
    let run = |p: &ScenarioParams, res: &mut Vec<f64>| {
        let (o, d) = evaluate(p, &obs).expect("simulation runs");
        res.push(d.bogoliubov_residual.expect("propagated"));
        (o[&Observable::NTotS], o[&Observable::MaxSqueezingDb], d.dt_ps.expect("dt"))
    };
    let p15 = example1_params(Fidelity::Low);
    let (n15, q15, dt) = run(&p15, res);
    let mut p31 = p15.clone();
    p31.n_k = 31;
    let (n31, q31, _) = run(&p31, res);
    let mut ph = p15.clone();
    ph.dt_ps = Some(dt / 2.0);
    let (nh, qh, _) = run(&ph, res);
    let r = |a: f64, b: f64| (a / b - 1.0).abs();
    let (dn_k, dq_k, dn_t, dq_t) = (r(n15, n31), r(q15, q31), r(n15, nh), r(q15, qh));

    let sim = Simulation::new(build_config(&p15).expect("config")).expect("simulation");
    let ps = &sim.pumps;
    let cfg = &sim.cfg;
    let init = || PumpState {
        t: cfg.time_grid.t0,
        alpha: [
            initial_pump(cfg, &ps.grids[0], ps.pulses[0].as_ref()).expect("pump"),
            initial_pump(cfg, &ps.grids[1], ps.pulses[1].as_ref()).expect("pump"),
        ],
    };
    let h = 4.0 * ps.default_dt();
    let tf = cfg.time_grid.t0 + 128.0 * h;
    let end = |h: f64| integrate_pumps(ps, init(), h, StopRule::At(tf)).expect("pumps").states.pop().expect("state").alpha;
    let (a, b, c) = (end(h), end(h / 2.0), end(h / 4.0));
    let d1 = (&a[0] - &b[0]).norm() + (&a[1] - &b[1]).norm();
    let d2 = (&b[0] - &c[0]).norm() + (&b[1] - &c[1]).norm();
    let order = (d1 / d2).log2();

    let pass = dn_k < 0.02 && dq_k < 0.02 && dn_t < 0.005 && dq_t < 0.005 && (3.5..=4.5).contains(&order);
    Outcome {
        pass,
        detail: format!(
            "N_k 15->31: n_tot {n15:.4} -> {n31:.4} ({:.2}%), max sq {q15:.3} -> {q31:.3} dB ({:.2}%), need < 2%; \
             dt/2: n_tot {:.3}%, max sq {:.3}%, need < 0.5%; pump Richardson order {order:.2}, need [3.5, 4.5]",
            100.0 * dn_k,
            100.0 * dq_k,
            100.0 * dn_t,
            100.0 * dq_t
        ),
    }
}

fn crit9(res: &mut Vec<f64>) -> Outcome {
    let mut p = example1_params(Fidelity::Low);
    p.gamma_nl = 0.0;
    p.primary_attenuation = 1.0;
    p.aux_attenuation = 1.0;
    let sim = Simulation::new(build_config(&p).expect("config")).expect("simulation");
    let traj = sim.pump_trajectory().expect("pumps");
    let (first, last) = (&traj.states[0].alpha, &traj.states.last().expect("state").alpha);
    let drift = (0..2).map(|k| (sim.pumps.output_energy(k, &last[k]) / sim.pumps.input_energy(k, &first[k]) - 1.0).abs()).fold(0.0, f64::max);
    let prop = sim.propagate(&traj, ProcessMask::ALL).expect("propagation");
    res.push(prop.bogoliubov_residual());
    let w_max = prop.w.iter().map(|z: &C64| z.norm()).fold(0.0, f64::max);
    Outcome {
        pass: drift < 1e-6 && w_max < 1e-12,
        detail: format!("lossless linear pump transit energy drift {drift:.2e} (need < 1e-6); linear quantum run max|W| = {w_max:.1e} (need < 1e-12)"),
    }
}

fn main() {
    let start = Instant::now();
    let mut res = Vec::new();
    let mut lines = Vec::new();
    check(1, "linear spectrum splitting", 1.0, |_| crit1(), &mut res, &mut lines);
    check(2, "dispersion detuning", 1.0, |_| crit2(), &mut res, &mut lines);
    check(3, "fidelity trend", 1800.0, crit3, &mut res, &mut lines);
    check(4, "squeezing trend", 1800.0, |_| crit4(), &mut res, &mut lines);
    check(5, "lossless DP-only purity", 1800.0, crit5, &mut res, &mut lines);
    check(7, "decomposition suite", 1800.0, |_| crit7(), &mut res, &mut lines);
    check(8, "convergence", 1800.0, crit8, &mut res, &mut lines);
    check(9, "conservation", 1800.0, crit9, &mut res, &mut lines);
    // every propagator composed above
    let composed = res.clone();
    check(6, "Bogoliubov identities", 1800.0, |_| crit6(&composed), &mut res, &mut lines);
    lines.sort_by_key(|l| l.0);
    for l in &lines {
        println!("{}", l.2);
    }
    let failed = lines.iter().filter(|l| !l.1).count();
    println!("{failed} of {} criteria failed ({:.1} s)", lines.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
