//! Classical pump dynamics (SPM, XPM, detuning rotation) in the local basis.

use crate::error::{Error, Result};
use crate::model::{BinLabel, PumpPulse, SystemConfig, HBAR};
use crate::network::{BinGrid, Network};
use crate::nonlinear::{pump_nl_coeffs, NonlinearTable, PumpCoeffs};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// α^loc for both pumps: column i holds the P segment amplitudes at k_i.
#[derive(Clone, Debug)]
pub struct PumpState {
    pub t: f64,
    pub alpha: [DMatrix<C64>; 2],
}

impl PumpState {
    pub fn max_abs(&self) -> f64 {
        self.alpha.iter().flat_map(|m| m.iter()).fold(0.0, |a, z| a.max(z.norm()))
    }
}

#[derive(Clone, Debug)]
pub struct PumpTrajectory {
    pub dt: f64,
    pub states: Vec<PumpState>,
}

impl PumpTrajectory {
    pub fn t0(&self) -> f64 {
        self.states[0].t
    }

    pub fn tf(&self) -> f64 {
        self.states.last().map_or(0.0, |s| s.t)
    }

    pub fn n_steps(&self) -> usize {
        self.states.len() - 1
    }
}

/// Everything the pump equations need.
#[derive(Clone, Debug)]
pub struct PumpSystem {
    pub grids: [BinGrid; 2],
    pub coeffs: PumpCoeffs,
    /// Arc length per segment (0 for the output waveguide).
    pub arc_len: Vec<f64>,
    /// Segment indices of ring arcs.
    pub ring_segments: Vec<usize>,
    /// Carrier frequencies of the pulses.
    pub carrier: [f64; 2],
    pub pulses: [Option<PumpPulse>; 2],
}

impl PumpSystem {
    pub fn new(cfg: &SystemConfig, net: &Network, table: &NonlinearTable) -> Result<Self> {
        let g = |l: BinLabel| -> Result<BinGrid> {
            let b = cfg.bin(l).ok_or_else(|| Error::InvalidConfig { field: "bins".into(), reason: format!("missing {l}") })?;
            BinGrid::new(net, b)
        };
        Self::with_grids(cfg, net, table, [g(BinLabel::P1)?, g(BinLabel::P2)?])
    }

    pub fn with_grids(cfg: &SystemConfig, net: &Network, table: &NonlinearTable, grids: [BinGrid; 2]) -> Result<Self> {
        let arcs = net.arc_geometry();
        let arc_len: Vec<f64> = arcs.iter().map(|a| a.as_ref().map_or(0.0, |a| a.end - a.start)).collect();
        let ring_segments = (0..arcs.len()).filter(|&s| arcs[s].is_some()).collect();
        let pulses = [cfg.pump(BinLabel::P1).copied(), cfg.pump(BinLabel::P2).copied()];
        let mut carrier = [grids[0].bin.center_omega, grids[1].bin.center_omega];
        for (c, p) in carrier.iter_mut().zip(&pulses) {
            if let Some(p) = p {
                *c = cfg.dispersion.dispersion_omega(p.center_k)?;
            }
        }
        Ok(PumpSystem { grids, coeffs: pump_nl_coeffs(table)?, arc_len, ring_segments, carrier, pulses })
    }

    /// S_s = Σ_i δk α_s(k_i).
    pub fn arc_sums(&self, p: usize, alpha: &DMatrix<C64>) -> Vec<C64> {
        let dk = self.grids[p].bin.dk;
        alpha.row_iter().map(|r| r.iter().sum::<C64>() * dk).collect()
    }

    /// dα/dt = −iΔω α + i C q, with q the SPM and XPM drive on each segment.
    pub fn rhs(&self, alpha: &[DMatrix<C64>; 2]) -> [DMatrix<C64>; 2] {
        let mut out = self.nonlinear_rhs(alpha);
        for p in 0..2 {
            for (i, d) in self.grids[p].detunings.iter().enumerate() {
                let rot = -I * *d;
                for r in 0..out[p].nrows() {
                    out[p][(r, i)] += rot * alpha[p][(r, i)];
                }
            }
        }
        out
    }

    /// The i C q part of the right-hand side alone.
    pub fn nonlinear_rhs(&self, alpha: &[DMatrix<C64>; 2]) -> [DMatrix<C64>; 2] {
        let s = [self.arc_sums(0, &alpha[0]), self.arc_sums(1, &alpha[1])];
        let mut out = [DMatrix::zeros(alpha[0].nrows(), alpha[0].ncols()), DMatrix::zeros(alpha[1].nrows(), alpha[1].ncols())];
        for p in 0..2 {
            let q = 1 - p;
            let n = s[p].len();
            let drive = nalgebra::DVector::from_iterator(
                n,
                (0..n).map(|j| {
                    (self.coeffs.spm[p][j] * s[p][j].norm_sqr() + self.coeffs.xpm[p][j] * s[q][j].norm_sqr()) * s[p][j]
                }),
            );
            for (i, m) in self.grids[p].maps.iter().enumerate() {
                let nl = &m.c * &drive;
                for r in 0..n {
                    out[p][(r, i)] = I * nl[r];
                }
            }
        }
        out
    }

    /// Multiplies column i by e^{∓iΔω_i τ} (sign −1 rotates forward in time).
    fn rotate(&self, y: &[DMatrix<C64>; 2], tau: f64) -> [DMatrix<C64>; 2] {
        let mut out = y.clone();
        for p in 0..2 {
            for (i, d) in self.grids[p].detunings.iter().enumerate() {
                let ph = C64::from_polar(1.0, -d * tau);
                for r in 0..out[p].nrows() {
                    out[p][(r, i)] *= ph;
                }
            }
        }
        out
    }

    /// Right-hand side for the co-rotating amplitudes β = α e^{iΔω τ}.
    fn corotating_rhs(&self, beta: &[DMatrix<C64>; 2], tau: f64) -> [DMatrix<C64>; 2] {
        let alpha = self.rotate(beta, tau);
        self.rotate(&self.nonlinear_rhs(&alpha), -tau)
    }

    /// Photons inside the ring arcs: Σ_s ℓ_s |S_s|² / 2π.
    pub fn ring_photons(&self, p: usize, alpha: &DMatrix<C64>) -> f64 {
        let s = self.arc_sums(p, alpha);
        self.ring_segments.iter().map(|&j| self.arc_len[j] * s[j].norm_sqr()).sum::<f64>() / (2.0 * PI)
    }

    pub fn ring_energy(&self, p: usize, alpha: &DMatrix<C64>) -> f64 {
        HBAR * self.carrier[p] * self.ring_photons(p, alpha)
    }

    /// Energy that has left through the output waveguide: ∫₀^{v(t−t₀)} |ψ(ξ)|² dξ.
    pub fn waveguide_energy(&self, p: usize, alpha: &DMatrix<C64>, elapsed: f64) -> f64 {
        let g = &self.grids[p];
        let dk = g.bin.dk;
        let offs = g.bin.k_offsets();
        let period = 2.0 * PI / dk;
        let x = (elapsed * self.group_velocity(p)).clamp(0.0, period);
        let c: Vec<C64> = (0..g.n_k()).map(|i| alpha[(0, i)] * dk).collect();
        let mut acc = 0.0;
        for i in 0..c.len() {
            acc += c[i].norm_sqr() * x;
            for j in 0..c.len() {
                if i != j {
                    let d = offs[i] - offs[j];
                    let f = (C64::from_polar(1.0, d * x) - 1.0) / (I * d);
                    acc += (c[i] * c[j].conj() * f).re;
                }
            }
        }
        HBAR * self.carrier[p] * acc / (2.0 * PI)
    }

    fn group_velocity(&self, p: usize) -> f64 {
        grid_velocity(&self.grids[p])
    }

    /// Input-port energy Σ_k |α^in|² δk ħω with α^in = H⁻¹ α^loc.
    pub fn input_energy(&self, p: usize, alpha: &DMatrix<C64>) -> f64 {
        let g = &self.grids[p];
        let mut n = 0.0;
        for i in 0..g.n_k() {
            let a_in = g.maps[i].l_in.transpose() * alpha.column(i);
            n += a_in.norm_squared() * g.bin.dk;
        }
        HBAR * self.carrier[p] * n
    }

    /// Energy in the asymptotic-out output port: Σ_k |(H_out⁻¹ α^loc)₀|² δk ħω.
    pub fn output_energy(&self, p: usize, alpha: &DMatrix<C64>) -> f64 {
        let g = &self.grids[p];
        let mut n = 0.0;
        for i in 0..g.n_k() {
            let a_out = g.maps[i].l_out.transpose() * alpha.column(i);
            n += a_out[0].norm_sqr() * g.bin.dk;
        }
        HBAR * self.carrier[p] * n
    }

    /// Shortest full period of the pump grids, 2π/δω.
    pub fn revival_time(&self) -> f64 {
        self.grids
            .iter()
            .map(|g| 2.0 * PI / (g.bin.dk * grid_velocity(g)))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn default_dt(&self) -> f64 {
        let m = self.grids.iter().map(|g| g.max_detuning()).fold(0.0, f64::max);
        1.0 / (40.0 * m)
    }
}

/// Group velocity at the bin center, as used for its k spacing.
fn grid_velocity(g: &BinGrid) -> f64 {
    g.bin.span / (g.bin.dk * g.bin.n_k as f64)
}

/// α^in(k) = (2/π)^{1/4} √(E δt v/ħω) e^{−v²δt²(k−kᵖ)²} e^{−i(k−kᵖ)μ}.
pub fn input_spectrum(cfg: &SystemConfig, grid: &BinGrid, pulse: &PumpPulse) -> Result<Vec<C64>> {
    let d = &cfg.dispersion;
    let w = d.dispersion_omega(pulse.center_k)?;
    let v = d.group_velocity_at(w);
    let amp = (2.0 / PI).powf(0.25) * (pulse.energy * pulse.duration * v / (HBAR * w)).sqrt();
    let shift = grid.bin.center_k - pulse.center_k;
    Ok(grid
        .bin
        .k_offsets()
        .iter()
        .map(|o| {
            let x = shift + o;
            let vt = v * pulse.duration * x;
            C64::from_polar(amp * (-vt * vt).exp(), -x * pulse.delay_position)
        })
        .collect())
}

/// Local amplitudes at t₀: α^loc(k) = H(k)[:,0] α^in(k).
pub fn initial_pump(cfg: &SystemConfig, grid: &BinGrid, pulse: Option<&PumpPulse>) -> Result<DMatrix<C64>> {
    let p = grid.maps[0].h_in.nrows();
    let mut a = DMatrix::zeros(p, grid.n_k());
    let Some(pulse) = pulse else { return Ok(a) };
    let v = cfg.dispersion.group_velocity_at(cfg.dispersion.dispersion_omega(pulse.center_k)?);
    if pulse.delay_position > -4.0 * v * pulse.duration * (1.0 - 1e-9) && pulse.energy > 0.0 {
        return Err(Error::PulseNotContained(format!(
            "pulse {} starts {:.3e} m from the coupler, less than 4 v δt",
            pulse.target, -pulse.delay_position
        )));
    }
    let plan = input_spectrum(cfg, grid, pulse)?;
    for (i, s) in plan.iter().enumerate() {
        let col = grid.maps[i].h_in.column(0) * *s;
        a.set_column(i, &col);
    }
    Ok(a)
}

/// How the integration ends.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StopRule {
    /// Fixed end time; the step is shrunk to divide the interval evenly.
    At(f64),
    /// Stop once both rings hold < `fraction` of their peak pump energy. If `limit`
    /// comes first, the trajectory is cut back to the emptiest point after the peak.
    RingDown { fraction: f64, limit: f64 },
}

fn rk4_step(sys: &PumpSystem, y: &[DMatrix<C64>; 2], tau: f64, h: f64) -> [DMatrix<C64>; 2] {
    let st = |a: &[DMatrix<C64>; 2], d: &[DMatrix<C64>; 2], s: f64| [&a[0] + &d[0] * C64::from(s), &a[1] + &d[1] * C64::from(s)];
    let k1 = sys.corotating_rhs(y, tau);
    let k2 = sys.corotating_rhs(&st(y, &k1, h / 2.0), tau + h / 2.0);
    let k3 = sys.corotating_rhs(&st(y, &k2, h / 2.0), tau + h / 2.0);
    let k4 = sys.corotating_rhs(&st(y, &k3, h), tau + h);
    let mut out = y.clone();
    for p in 0..2 {
        out[p] += (&k1[p] + &k2[p] * C64::from(2.0) + &k3[p] * C64::from(2.0) + &k4[p]) * C64::from(h / 6.0);
    }
    out
}

/// Fourth-order Adams–Bashforth with an RK4 start, applied to the co-rotating
/// amplitudes so the detuning rotation is exact. Every step is stored.
pub fn integrate_pumps(sys: &PumpSystem, init: PumpState, dt: f64, stop: StopRule) -> Result<PumpTrajectory> {
    let t0 = init.t;
    let (dt, fixed_steps) = match stop {
        StopRule::At(tf) => {
            let n = ((tf - t0) / dt).ceil().max(0.0) as usize;
            (if n > 0 { (tf - t0) / n as f64 } else { dt }, Some(n))
        }
        StopRule::RingDown { .. } => (dt, None),
    };
    let mut beta = init.alpha.clone();
    let mut states = vec![init];
    let mut hist: Vec<[DMatrix<C64>; 2]> = Vec::new();
    let mut peak = [0.0f64; 2];
    let mut residual: Vec<f64> = Vec::new();
    let mut n = 0usize;
    loop {
        if let Some(nmax) = fixed_steps {
            if n >= nmax {
                break;
            }
        }
        let cur = states.last().expect("state");
        if let StopRule::RingDown { fraction, limit } = stop {
            let e = [sys.ring_photons(0, &cur.alpha[0]), sys.ring_photons(1, &cur.alpha[1])];
            for p in 0..2 {
                peak[p] = peak[p].max(e[p]);
            }
            let started = peak.iter().any(|&x| x > 0.0);
            let rung_down = (0..2).all(|p| e[p] <= fraction * peak[p]);
            let past_peak = (0..2).all(|p| peak[p] == 0.0 || e[p] < peak[p]);
            residual.push(if started && past_peak {
                (0..2).filter(|&p| peak[p] > 0.0).map(|p| e[p] / peak[p]).fold(0.0, f64::max)
            } else {
                f64::INFINITY
            });
            if started && past_peak && rung_down {
                break;
            }
            if cur.t + 0.5 * dt >= limit {
                // the grid revival refills the rings; end where they were emptiest
                let best = (0..residual.len()).min_by(|&a, &b| residual[a].total_cmp(&residual[b])).unwrap_or(0);
                if residual[best].is_finite() {
                    states.truncate(best + 1);
                }
                break;
            }
        }
        let tau = dt * n as f64;
        hist.push(sys.corotating_rhs(&beta, tau));
        if hist.len() > 4 {
            hist.remove(0);
        }
        beta = if hist.len() < 4 {
            rk4_step(sys, &beta, tau, dt)
        } else {
            let c = [55.0, -59.0, 37.0, -9.0];
            let mut next = beta.clone();
            for (m, w) in [(3usize, c[0]), (2, c[1]), (1, c[2]), (0, c[3])] {
                for p in 0..2 {
                    next[p] += &hist[m][p] * C64::from(w * dt / 24.0);
                }
            }
            next
        };
        let next = PumpState { t: t0 + dt * (n + 1) as f64, alpha: sys.rotate(&beta, dt * (n + 1) as f64) };
        let before = cur.max_abs();
        let after = next.max_abs();
        if !after.is_finite() || (before > 0.0 && after > 10.0 * before) {
            return Err(Error::StepUnstable { t: next.t });
        }
        states.push(next);
        n += 1;
    }
    Ok(PumpTrajectory { dt, states })
}

/// Initial state, step and stop rule from the configuration, then integration.
pub fn solve_pumps(cfg: &SystemConfig, sys: &PumpSystem) -> Result<PumpTrajectory> {
    let t0 = cfg.time_grid.t0;
    let alpha = [
        initial_pump(cfg, &sys.grids[0], sys.pulses[0].as_ref())?,
        initial_pump(cfg, &sys.grids[1], sys.pulses[1].as_ref())?,
    ];
    let dt = cfg.time_grid.dt.unwrap_or_else(|| sys.default_dt());
    let stop = match cfg.time_grid.tf {
        Some(tf) => StopRule::At(tf),
        None => StopRule::RingDown { fraction: 1e-4, limit: t0 + sys.revival_time() },
    };
    integrate_pumps(sys, PumpState { t: t0, alpha }, dt, stop)
}

/// α at time t by linear interpolation of the co-rotating amplitudes α e^{iΔω t}.
pub fn interpolate(sys: &PumpSystem, traj: &PumpTrajectory, t: f64) -> [DMatrix<C64>; 2] {
    let t0 = traj.t0();
    let x = ((t - t0) / traj.dt).clamp(0.0, traj.n_steps() as f64);
    let n = (x.floor() as usize).min(traj.n_steps().saturating_sub(1));
    if traj.n_steps() == 0 {
        return traj.states[0].alpha.clone();
    }
    let (a, b) = (&traj.states[n], &traj.states[n + 1]);
    let w = x - n as f64;
    let mut out = a.alpha.clone();
    for p in 0..2 {
        let g = &sys.grids[p];
        for i in 0..g.n_k() {
            let ra = C64::from_polar(1.0 - w, g.detunings[i] * (a.t - t));
            let rb = C64::from_polar(w, g.detunings[i] * (b.t - t));
            for r in 0..out[p].nrows() {
                out[p][(r, i)] = a.alpha[p][(r, i)] * ra + b.alpha[p][(r, i)] * rb;
            }
        }
    }
    out
}
