//! Time-dependent simulation of the full system, in the lab frame or a
//! moving frame, with front tracking and comparison probes.
//!
//! One step advances the chemicals (quasi-statically or by their own
//! parabolic equations), then the cell density with an IMEX split: implicit
//! diffusion, explicit upwind transport of the conservative chemotactic and
//! frame fluxes, explicit logistic reaction. The split keeps ordering between
//! solutions and conserves trapezoidal mass exactly when no transport acts.

use thiserror::Error;

use crate::constants;
use crate::elliptic::{self, solve_tridiagonal};
use crate::grid::{Field, Grid1D, GridError};
use crate::params::{ModelParams, Species};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("simulation hypothesis fails: {0}")]
    Hypothesis(String),
    #[error("parabolic chemical mode requires tau > 0")]
    TauRequired,
    #[error("time step violates the transport CFL bound at t = {t}: {detail}")]
    Cfl { t: f64, detail: String },
    #[error("density blew past {limit:e} at t = {t}")]
    Blowup { t: f64, limit: f64 },
    #[error("ceiling for {field} violated at t = {t}, x = {x}: {value} > {ceiling}")]
    CeilingViolation {
        field: &'static str,
        t: f64,
        x: f64,
        value: f64,
        ceiling: f64,
    },
    #[error("state did not reach the target distance {target:e} by t = {t_end}; final distances {dists:?}")]
    Timeout {
        t_end: f64,
        target: f64,
        dists: (f64, f64, f64),
    },
    #[error("front track has {0} usable samples; need at least 20")]
    InsufficientSamples(usize),
    #[error("probe invalid: {0}")]
    ProbeInvalid(String),
    #[error("probe anchoring failed: {0}")]
    Anchoring(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// How the chemicals are advanced each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChemMode {
    /// Chemicals solved quasi-statically from the current density.
    Elliptic,
    /// Chemicals time-stepped with their own relaxation rate `tau`.
    Parabolic,
}

/// Boundary treatment: zero-derivative on both ends for lab-frame runs, or
/// the wave pair (left zero-derivative, right decay at rate `mu`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    NeumannBoth,
    WaveFrame { mu: f64 },
}

impl Boundary {
    fn robin_mu(&self) -> f64 {
        match self {
            Boundary::NeumannBoth => 0.0,
            Boundary::WaveFrame { mu } => *mu,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub grid: Grid1D,
    pub dt: f64,
    pub t_end: f64,
    /// Frame speed `c`; 0 selects the lab frame.
    pub frame_speed: f64,
    pub chem_mode: ChemMode,
    pub boundary: Boundary,
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub u: Field,
    pub v1: Field,
    pub v2: Field,
    initial_bound: f64,
    pub clipped_mass: f64,
}

impl SimState {
    /// Starts from a density with chemicals at their quasi-static response.
    pub fn from_density(p: &ModelParams, cfg: &SimConfig, u0: Field) -> Result<Self, SimError> {
        if cfg.chem_mode == ChemMode::Parabolic && p.tau <= 0.0 {
            return Err(SimError::TauRequired);
        }
        let mu = cfg.boundary.robin_mu();
        let v1 = elliptic::solve_v(p, cfg.frame_speed, &u0, Species::Attractant, mu);
        let v2 = elliptic::solve_v(p, cfg.frame_speed, &u0, Species::Repellent, mu);
        let initial_bound = u0.max_abs().max(1.0);
        Ok(Self {
            t: 0.0,
            u: u0,
            v1,
            v2,
            initial_bound,
            clipped_mass: 0.0,
        })
    }
}

fn chemo_drift(p: &ModelParams, v1: &Field, v2: &Field) -> Vec<f64> {
    let dv1 = elliptic::derivative(v1);
    let dv2 = elliptic::derivative(v2);
    dv1.values()
        .iter()
        .zip(dv2.values())
        .map(|(a, b)| p.chi1 * a - p.chi2 * b)
        .collect()
}

/// Implicit diffusion solve `(I - dt D2) u = rhs` with ghost folding for the
/// configured boundary.
fn implicit_diffusion(grid: Grid1D, dt: f64, robin_mu: f64, rhs: &[f64]) -> Vec<f64> {
    let n = grid.n;
    let h = grid.h();
    let r = dt / (h * h);
    let mut lower = vec![-r; n - 1];
    let mut diag = vec![1.0 + 2.0 * r; n];
    let mut upper = vec![-r; n - 1];
    upper[0] = -2.0 * r;
    lower[n - 2] = -2.0 * r;
    diag[n - 1] = 1.0 + 2.0 * r * (1.0 + h * robin_mu);
    solve_tridiagonal(&lower, &diag, &upper, rhs)
}

/// One parabolic chemical step: implicit diffusion and decay, explicit
/// upwind frame advection, explicit production from the current density.
fn parabolic_chem_step(
    p: &ModelParams,
    cfg: &SimConfig,
    sp: Species,
    v: &Field,
    u: &[f64],
) -> Field {
    let grid = cfg.grid;
    let n = grid.n;
    let h = grid.h();
    let lambda = p.lambda(sp);
    let mu_i = p.production(sp);
    let robin_mu = cfg.boundary.robin_mu();
    let tau_dt = p.tau / cfg.dt;
    let adv = cfg.frame_speed * p.tau;
    let vv = v.values();

    let ghost_left = vv[1];
    let ghost_right = vv[n - 2] - 2.0 * h * robin_mu * vv[n - 1];
    let vx_upwind = |j: usize| -> f64 {
        if adv >= 0.0 {
            let ahead = if j == n - 1 { ghost_right } else { vv[j + 1] };
            (ahead - vv[j]) / h
        } else {
            let behind = if j == 0 { ghost_left } else { vv[j - 1] };
            (vv[j] - behind) / h
        }
    };

    let r = 1.0 / (h * h);
    let mut lower = vec![-r; n - 1];
    let mut diag = vec![tau_dt + lambda + 2.0 * r; n];
    let mut upper = vec![-r; n - 1];
    upper[0] = -2.0 * r;
    lower[n - 2] = -2.0 * r;
    diag[n - 1] = tau_dt + lambda + 2.0 * r * (1.0 + h * robin_mu);

    let rhs: Vec<f64> = (0..n)
        .map(|j| tau_dt * vv[j] + adv * vx_upwind(j) + mu_i * u[j])
        .collect();
    Field::new(grid, solve_tridiagonal(&lower, &diag, &upper, &rhs))
        .expect("chemical step stays finite")
}

/// Advances one IMEX step in place. Reports the mass clipped to keep the
/// density nonnegative (roundoff scale under the CFL bound).
pub fn step(state: &mut SimState, p: &ModelParams, cfg: &SimConfig) -> Result<(), SimError> {
    let grid = cfg.grid;
    let n = grid.n;
    let h = grid.h();
    let robin_mu = cfg.boundary.robin_mu();

    match cfg.chem_mode {
        ChemMode::Elliptic => {
            state.v1 = elliptic::solve_v(p, cfg.frame_speed, &state.u, Species::Attractant, robin_mu);
            state.v2 = elliptic::solve_v(p, cfg.frame_speed, &state.u, Species::Repellent, robin_mu);
        }
        ChemMode::Parabolic => {
            if p.tau <= 0.0 {
                return Err(SimError::TauRequired);
            }
            let u_now = state.u.values().to_vec();
            state.v1 = parabolic_chem_step(p, cfg, Species::Attractant, &state.v1, &u_now);
            state.v2 = parabolic_chem_step(p, cfg, Species::Repellent, &state.v2, &u_now);
        }
    }

    // Conservative transport: u_t + (vel u)_x = ... with vel = w - c.
    let w = chemo_drift(p, &state.v1, &state.v2);
    let u = state.u.values();
    let mut vel_face = vec![0.0; n + 1];
    for j in 0..n - 1 {
        vel_face[j + 1] = 0.5 * (w[j] + w[j + 1]) - cfg.frame_speed;
    }
    vel_face[0] = w[0] - cfg.frame_speed;
    vel_face[n] = w[n - 1] - cfg.frame_speed;

    let max_vel = vel_face.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if cfg.dt * max_vel / h > 1.0 {
        return Err(SimError::Cfl {
            t: state.t,
            detail: format!("dt |vel| / h = {}", cfg.dt * max_vel / h),
        });
    }
    let reaction_rate = p.a + 2.0 * p.b * state.u.max_abs();
    if cfg.dt * reaction_rate > 1.0 {
        return Err(SimError::Cfl {
            t: state.t,
            detail: format!("dt (a + 2 b max u) = {}", cfg.dt * reaction_rate),
        });
    }

    let ghost_left = u[0];
    let ghost_right = u[n - 2] - 2.0 * h * robin_mu * u[n - 1];
    let upwind = |face: usize| -> f64 {
        let vel = vel_face[face];
        let (behind, ahead) = if face == 0 {
            (ghost_left, u[0])
        } else if face == n {
            (u[n - 1], ghost_right)
        } else {
            (u[face - 1], u[face])
        };
        if vel >= 0.0 {
            vel * behind
        } else {
            vel * ahead
        }
    };

    let mut rhs = vec![0.0; n];
    for j in 0..n {
        let advection = -(upwind(j + 1) - upwind(j)) / h;
        let reaction = u[j] * (p.a - p.b * u[j]);
        rhs[j] = u[j] + cfg.dt * (advection + reaction);
    }

    let mut next = implicit_diffusion(grid, cfg.dt, robin_mu, &rhs);
    for v in next.iter_mut() {
        if *v < 0.0 {
            state.clipped_mass += -*v * h;
            *v = 0.0;
        }
    }
    let new_max = next.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let limit = 1e6 * state.initial_bound;
    if new_max > limit {
        return Err(SimError::Blowup { t: state.t, limit });
    }

    state.u = Field::new(grid, next)?;
    state.t += cfg.dt;
    Ok(())
}

/// Maxima attained during a bound-check run; produced only when every
/// checkpoint stayed under its ceiling (1% allowance).
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub ceiling_u: f64,
    pub ceiling_v1: f64,
    pub ceiling_v2: f64,
    pub max_u: f64,
    pub max_v1: f64,
    pub max_v2: f64,
    pub checkpoints: usize,
}

/// Simulates to `t_end` asserting the global sup-norm ceilings
/// `max(|u0|, a / (b - m_under - c tau k))` for the density and the matching
/// production/decay ratios for the chemicals.
pub fn run_bound_check(
    p: &ModelParams,
    u0: Field,
    cfg: &SimConfig,
) -> Result<BoundReport, SimError> {
    let kc = constants::kernel_constants(p);
    let c = cfg.frame_speed.abs();
    let damping = p.b - kc.m_under - c * p.tau * kc.k;
    if damping <= 0.0 {
        return Err(SimError::Hypothesis(format!(
            "need b > m_under + c tau k, margin {damping}"
        )));
    }
    let u0_norm = u0.max_abs();
    let ceiling_u = u0_norm.max(p.a / damping);
    let ceiling_v1 = (p.mu1 * u0_norm / p.lambda1).max(p.a * p.mu1 / (damping * p.lambda1));
    let ceiling_v2 = (p.mu2 * u0_norm / p.lambda2).max(p.a * p.mu2 / (damping * p.lambda2));

    let mut state = SimState::from_density(p, cfg, u0)?;
    let check_every = ((0.5 / cfg.dt).ceil() as usize).max(1);
    let mut maxima = (0.0f64, 0.0f64, 0.0f64);
    let mut checkpoints = 0usize;

    let check = |state: &SimState, maxima: &mut (f64, f64, f64)| -> Result<(), SimError> {
        for (field, values, ceiling, slot) in [
            ("u", &state.u, ceiling_u, 0usize),
            ("v1", &state.v1, ceiling_v1, 1),
            ("v2", &state.v2, ceiling_v2, 2),
        ] {
            let mx = values.max_abs();
            let entry = match slot {
                0 => &mut maxima.0,
                1 => &mut maxima.1,
                _ => &mut maxima.2,
            };
            *entry = entry.max(mx);
            if mx > ceiling * 1.01 {
                let (i, _) = values
                    .values()
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
                    .unwrap();
                return Err(SimError::CeilingViolation {
                    field,
                    t: state.t,
                    x: values.grid().node(i),
                    value: mx,
                    ceiling,
                });
            }
        }
        Ok(())
    };

    check(&state, &mut maxima)?;
    checkpoints += 1;
    let steps = (cfg.t_end / cfg.dt).ceil() as usize;
    for s in 1..=steps {
        step(&mut state, p, cfg)?;
        if s % check_every == 0 || s == steps {
            check(&state, &mut maxima)?;
            checkpoints += 1;
        }
    }

    Ok(BoundReport {
        ceiling_u,
        ceiling_v1,
        ceiling_v2,
        max_u: maxima.0,
        max_v1: maxima.1,
        max_v2: maxima.2,
        checkpoints,
    })
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    /// First time the sup distances to the positive equilibrium all dropped
    /// below the target.
    pub convergence_time: f64,
    pub dists: (f64, f64, f64),
    /// Margin of the governing threshold `b - 2 (m_under + c tau k)`.
    pub margin_lower: f64,
    /// Margin of the stricter variant `b - 2 (m_bar + c tau k)`, reported so
    /// runs where only the governing form holds are visible.
    pub margin_upper: f64,
    pub only_lower_form_holds: bool,
}

/// Runs until the state is within `target` of the positive equilibrium in
/// sup norm (all three components) or the horizon is exhausted. The run is
/// gated on `b > 2 (m_under + c tau k)`; the variant with `m_bar` in place of
/// `m_under` is evaluated alongside and reported, not enforced.
pub fn run_stability_experiment(
    p: &ModelParams,
    u0: Field,
    cfg: &SimConfig,
    target: f64,
) -> Result<StabilityReport, SimError> {
    let kc = constants::kernel_constants(p);
    let c = cfg.frame_speed.abs();
    let margin = p.b - 2.0 * (kc.m_under + c * p.tau * kc.k);
    let margin_upper = p.b - 2.0 * (kc.m_bar + c * p.tau * kc.k);
    if margin <= 0.0 {
        return Err(SimError::Hypothesis(format!(
            "need b > 2 (m_under + c tau k), margin {margin}"
        )));
    }
    if u0.min() <= 0.0 {
        return Err(SimError::Hypothesis(
            "stability run needs inf u0 > 0".to_string(),
        ));
    }

    let (ue, v1e, v2e) = p.positive_equilibrium();
    let distances = |state: &SimState| -> (f64, f64, f64) {
        let d = |f: &Field, level: f64| {
            f.values()
                .iter()
                .fold(0.0f64, |m, v| m.max((v - level).abs()))
        };
        (d(&state.u, ue), d(&state.v1, v1e), d(&state.v2, v2e))
    };

    let mut state = SimState::from_density(p, cfg, u0)?;
    let steps = (cfg.t_end / cfg.dt).ceil() as usize;
    let report = |state: &SimState, dists: (f64, f64, f64)| StabilityReport {
        convergence_time: state.t,
        dists,
        margin_lower: margin,
        margin_upper,
        only_lower_form_holds: margin > 0.0 && margin_upper <= 0.0,
    };
    for _ in 0..steps {
        let dists = distances(&state);
        if dists.0 <= target && dists.1 <= target && dists.2 <= target {
            return Ok(report(&state, dists));
        }
        step(&mut state, p, cfg)?;
    }
    let dists = distances(&state);
    if dists.0 <= target && dists.1 <= target && dists.2 <= target {
        return Ok(report(&state, dists));
    }
    Err(SimError::Timeout {
        t_end: cfg.t_end,
        target,
        dists,
    })
}

/// Level-crossing positions of the density over time.
#[derive(Debug, Clone, Default)]
pub struct FrontTrack {
    pub samples: Vec<(f64, f64)>,
}

impl FrontTrack {
    /// Records the rightmost downward crossing of `level`, with linear
    /// interpolation between nodes. Times without a crossing are skipped.
    pub fn record(&mut self, t: f64, u: &Field, level: f64) {
        let g = u.grid();
        let v = u.values();
        for j in (0..g.n - 1).rev() {
            if v[j] >= level && v[j + 1] < level {
                let frac = (v[j] - level) / (v[j] - v[j + 1]);
                self.samples.push((t, g.node(j) + frac * g.h()));
                return;
            }
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,front_x")?;
        for (t, x) in &self.samples {
            writeln!(
                w,
                "{},{}",
                crate::report::fmt_float(*t),
                crate::report::fmt_float(*x)
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SpeedEstimate {
    pub speed: f64,
    /// Fit residual divided by the spatial span of the fitted segment.
    pub confidence: f64,
    pub samples_used: usize,
}

/// Least-squares slope over the final half of the track.
pub fn measure_front_speed(track: &FrontTrack) -> Result<SpeedEstimate, SimError> {
    let n = track.samples.len();
    if n < 20 {
        return Err(SimError::InsufficientSamples(n));
    }
    let tail = &track.samples[n / 2..];
    let m = tail.len() as f64;
    let (st, sx): (f64, f64) = tail.iter().fold((0.0, 0.0), |(a, b), (t, x)| (a + t, b + x));
    let (tbar, xbar) = (st / m, sx / m);
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, x) in tail {
        num += (t - tbar) * (x - xbar);
        den += (t - tbar) * (t - tbar);
    }
    let speed = num / den;
    let mut ss = 0.0;
    let mut span: f64 = 0.0;
    for (t, x) in tail {
        let fit = xbar + speed * (t - tbar);
        ss += (x - fit) * (x - fit);
        span = span.max((x - xbar).abs());
    }
    let confidence = (ss / m).sqrt() / span.max(1e-30);
    Ok(SpeedEstimate {
        speed,
        confidence,
        samples_used: tail.len(),
    })
}

/// Traveling comparison bump `m0 e^{-(q+eps)(x-qt)/2} sin(pi (x-qt)/L)` on
/// the moving window `qt <= x <= qt + L`.
#[derive(Debug, Clone, Copy)]
pub struct SineProbe {
    pub q: f64,
    pub eps: f64,
    pub l: f64,
    pub m0: f64,
    pub t0: f64,
}

impl SineProbe {
    /// Builds the probe anchored at time `t0` of a recorded run: the width
    /// comes from `L = 2 pi / sqrt(4 (a - eps) - (q + eps)^2)` which must be
    /// real, and the amplitude is the smallest density value on the initial
    /// window (which makes the initial ordering automatic).
    pub fn anchor(a: f64, q: f64, eps: f64, u_t0: &Field, t0: f64) -> Result<Self, SimError> {
        let disc = 4.0 * (a - eps) - (q + eps) * (q + eps);
        if disc <= 0.0 {
            return Err(SimError::ProbeInvalid(format!(
                "4 (a - eps) - (q + eps)^2 = {disc} <= 0; probe width undefined"
            )));
        }
        let l = 2.0 * std::f64::consts::PI / disc.sqrt();
        let g = u_t0.grid();
        let (lo, hi) = (q * t0, q * t0 + l);
        if lo < g.x_lo || hi > g.x_hi {
            return Err(SimError::Anchoring(format!(
                "initial window [{lo}, {hi}] leaves the grid"
            )));
        }
        let mut m0 = f64::INFINITY;
        for (j, x) in g.nodes().enumerate() {
            if x >= lo && x <= hi {
                m0 = m0.min(u_t0.values()[j]);
            }
        }
        m0 = m0.min(u_t0.interp(lo)).min(u_t0.interp(hi));
        if m0 <= 0.0 {
            return Err(SimError::Anchoring(format!(
                "density not positive on the initial window (min {m0})"
            )));
        }
        Ok(Self { q, eps, l, m0, t0 })
    }

    /// Value of the bump at (x, t); zero outside the moving window.
    pub fn eval(&self, x: f64, t: f64) -> f64 {
        let xi = x - self.q * t;
        if xi < 0.0 || xi > self.l {
            return 0.0;
        }
        self.m0
            * (-(self.q + self.eps) * xi / 2.0).exp()
            * (std::f64::consts::PI * xi / self.l).sin()
    }
}

#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub ordered_throughout: bool,
    pub first_violation: Option<(f64, f64, f64)>,
    pub snapshots_checked: usize,
}

/// Verifies `bump(x, t) <= u(x, t)` on the moving window for every recorded
/// snapshot at or after the anchor time. A persistent violation certifies
/// that the solution travels slower than the probe speed.
pub fn sine_probe_check(history: &[Snapshot], probe: &SineProbe) -> ProbeReport {
    let tol = 1e-9 * probe.m0;
    let mut checked = 0usize;
    for snap in history {
        let (t, u) = (snap.t, &snap.u);
        if t < probe.t0 {
            continue;
        }
        let g = u.grid();
        if probe.q * t + probe.l > g.x_hi {
            break;
        }
        checked += 1;
        for (j, x) in g.nodes().enumerate() {
            let bump = probe.eval(x, t);
            if bump > u.values()[j] + tol {
                return ProbeReport {
                    ordered_throughout: false,
                    first_violation: Some((t, x, bump - u.values()[j])),
                    snapshots_checked: checked,
                };
            }
        }
    }
    ProbeReport {
        ordered_throughout: true,
        first_violation: None,
        snapshots_checked: checked,
    }
}

/// Smooth ramp from `height` down to zero across `cells` grid cells,
/// centered at `x0`; the usual front seed.
pub fn ramp_initial(grid: Grid1D, height: f64, x0: f64, cells: usize) -> Result<Field, GridError> {
    let w = cells as f64 * grid.h();
    Field::from_fn(grid, |x| {
        if x <= x0 {
            height
        } else if x >= x0 + w {
            0.0
        } else {
            let s = (x - x0) / w;
            height * 0.5 * (1.0 + (std::f64::consts::PI * s).cos())
        }
    })
}

/// One archived instant of a tracked run.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub u: Field,
    pub v1: Field,
    pub v2: Field,
}

/// A completed run with its front track and snapshot history.
#[derive(Debug, Clone)]
pub struct SimRun {
    pub state: SimState,
    pub track: FrontTrack,
    pub history: Vec<Snapshot>,
}

/// Advances to `t_end`, sampling the front crossing of `level` and a full
/// state snapshot every `sample_every` time units.
pub fn run_with_tracking(
    p: &ModelParams,
    u0: Field,
    cfg: &SimConfig,
    level: f64,
    sample_every: f64,
) -> Result<SimRun, SimError> {
    let mut state = SimState::from_density(p, cfg, u0)?;
    let mut track = FrontTrack::default();
    let mut history = Vec::new();
    let stride = ((sample_every / cfg.dt).round() as usize).max(1);

    let snap = |state: &SimState| Snapshot {
        t: state.t,
        u: state.u.clone(),
        v1: state.v1.clone(),
        v2: state.v2.clone(),
    };
    track.record(state.t, &state.u, level);
    history.push(snap(&state));
    let steps = (cfg.t_end / cfg.dt).ceil() as usize;
    for s in 1..=steps {
        step(&mut state, p, cfg)?;
        if s % stride == 0 || s == steps {
            track.record(state.t, &state.u, level);
            history.push(snap(&state));
        }
    }
    Ok(SimRun {
        state,
        track,
        history,
    })
}

/// Largest per-unit-time drift of the constant equilibrium over a short run;
/// exercises both chemical modes of the stepper.
pub fn equilibrium_drift(p: &ModelParams, cfg: &SimConfig) -> Result<f64, SimError> {
    let (ue, v1e, v2e) = p.positive_equilibrium();
    let u0 = Field::constant(cfg.grid, ue)?;
    let mut state = SimState::from_density(p, cfg, u0)?;
    state.v1 = Field::constant(cfg.grid, v1e)?;
    state.v2 = Field::constant(cfg.grid, v2e)?;
    let steps = (cfg.t_end / cfg.dt).ceil() as usize;
    for _ in 0..steps {
        step(&mut state, p, cfg)?;
    }
    let drift = state
        .u
        .values()
        .iter()
        .fold(0.0f64, |m, v| m.max((v - ue).abs()))
        .max(
            state
                .v1
                .values()
                .iter()
                .fold(0.0f64, |m, v| m.max((v - v1e).abs())),
        )
        .max(
            state
                .v2
                .values()
                .iter()
                .fold(0.0f64, |m, v| m.max((v - v2e).abs())),
        );
    Ok(drift / state.t.max(cfg.dt))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_chi() -> ModelParams {
        ModelParams::new(1.0, 0.02, 0.05, 1.0, 1.0, 1.0, 1.0, 1.0, 4.0).unwrap()
    }

    fn lab_cfg(grid: Grid1D, dt: f64, t_end: f64, mode: ChemMode) -> SimConfig {
        SimConfig {
            grid,
            dt,
            t_end,
            frame_speed: 0.0,
            chem_mode: mode,
            boundary: Boundary::NeumannBoth,
        }
    }

    #[test]
    fn equilibrium_is_preserved_in_both_modes() {
        let p = small_chi();
        let grid = Grid1D::new(-15.0, 15.0, 301).unwrap();
        for mode in [ChemMode::Elliptic, ChemMode::Parabolic] {
            let cfg = lab_cfg(grid, 0.01, 3.0, mode);
            let drift = equilibrium_drift(&p, &cfg).unwrap();
            assert!(drift <= 1e-8, "mode {mode:?}: drift {drift}");
        }
    }

    #[test]
    fn parabolic_mode_requires_positive_tau() {
        let p = ModelParams::new(0.0, 0.1, 0.1, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let grid = Grid1D::new(-5.0, 5.0, 101).unwrap();
        let cfg = lab_cfg(grid, 0.01, 1.0, ChemMode::Parabolic);
        let u0 = Field::constant(grid, 1.0).unwrap();
        assert!(matches!(
            SimState::from_density(&p, &cfg, u0),
            Err(SimError::TauRequired)
        ));
    }

    #[test]
    fn constant_density_follows_the_logistic_law() {
        // Without chemotaxis a spatially constant state obeys the logistic
        // equation exactly; the explicit reaction converges first order in dt.
        let p = ModelParams::fisher_kpp(1.0, 1.0).unwrap();
        let grid = Grid1D::new(-1.0, 1.0, 5).unwrap();
        let u_c = 2.0;
        let cfg = lab_cfg(grid, 5e-7, 1.0, ChemMode::Elliptic);
        let u0 = Field::constant(grid, u_c).unwrap();
        let mut state = SimState::from_density(&p, &cfg, u0).unwrap();
        let steps = (cfg.t_end / cfg.dt).round() as usize;
        for _ in 0..steps {
            step(&mut state, &p, &cfg).unwrap();
        }
        let cap = p.a / p.b;
        let exact = u_c * cap / (u_c + (cap - u_c) * (-p.a * state.t).exp());
        let got = state.u.values()[2];
        assert!((got - exact).abs() < 1e-6, "got {got}, exact {exact}");
    }

    #[test]
    fn zero_density_is_invariant() {
        let p = small_chi();
        let grid = Grid1D::new(-5.0, 5.0, 101).unwrap();
        let cfg = lab_cfg(grid, 0.01, 2.0, ChemMode::Elliptic);
        let u0 = Field::constant(grid, 0.0).unwrap();
        let mut state = SimState::from_density(&p, &cfg, u0).unwrap();
        for _ in 0..200 {
            step(&mut state, &p, &cfg).unwrap();
        }
        assert_eq!(state.u.max_abs(), 0.0);
    }

    #[test]
    fn ordered_initial_data_stay_ordered_without_chemotaxis() {
        let p = ModelParams::fisher_kpp(1.0, 1.0).unwrap();
        let grid = Grid1D::new(-20.0, 20.0, 401).unwrap();
        let cfg = lab_cfg(grid, 0.01, 4.0, ChemMode::Elliptic);
        let lowf = ramp_initial(grid, 0.6, -5.0, 10).unwrap();
        let high = Field::from_fn(grid, |x| 0.2 + lowf.interp(x)).unwrap();
        let mut s_lo = SimState::from_density(&p, &cfg, lowf).unwrap();
        let mut s_hi = SimState::from_density(&p, &cfg, high).unwrap();
        for _ in 0..400 {
            step(&mut s_lo, &p, &cfg).unwrap();
            step(&mut s_hi, &p, &cfg).unwrap();
            for (a, b) in s_lo.u.values().iter().zip(s_hi.u.values()) {
                assert!(a <= &(b + 1e-12));
            }
        }
    }

    #[test]
    fn pure_diffusion_conserves_trapezoidal_mass() {
        let p = ModelParams::new(1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1e-12, 1e-12).unwrap();
        // a, b effectively zero: the reaction is below roundoff over the run.
        let grid = Grid1D::new(-40.0, 40.0, 801).unwrap();
        let cfg = lab_cfg(grid, 0.02, 5.0, ChemMode::Elliptic);
        let u0 = Field::from_fn(grid, |x| (-x * x / 4.0).exp()).unwrap();
        let m0 = u0.trapezoid();
        let mut state = SimState::from_density(&p, &cfg, u0).unwrap();
        for _ in 0..250 {
            step(&mut state, &p, &cfg).unwrap();
        }
        let m1 = state.u.trapezoid();
        assert!(
            (m1 - m0).abs() / state.t <= 1e-8,
            "mass drift {} over t = {}",
            (m1 - m0).abs(),
            state.t
        );
    }

    #[test]
    fn front_speed_of_a_synthetic_linear_track_is_exact() {
        let mut track = FrontTrack::default();
        for i in 0..40 {
            let t = i as f64 * 0.5;
            track.samples.push((t, 2.0 * t));
        }
        let est = measure_front_speed(&track).unwrap();
        assert_eq!(est.speed, 2.0);
        assert!(est.confidence < 1e-12);
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let mut track = FrontTrack::default();
        track.samples.push((0.0, 0.0));
        assert!(matches!(
            measure_front_speed(&track),
            Err(SimError::InsufficientSamples(1))
        ));
    }

    #[test]
    fn blowup_guard_fires_when_density_leaves_the_initial_scale() {
        // Carrying capacity far above 1e6 times the initial bound.
        let p = ModelParams::new(1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 5.0, 1e-9).unwrap();
        let grid = Grid1D::new(-2.0, 2.0, 51).unwrap();
        let cfg = lab_cfg(grid, 0.05, 2e4, ChemMode::Elliptic);
        let u0 = Field::constant(grid, 1e-3).unwrap();
        let mut state = SimState::from_density(&p, &cfg, u0).unwrap();
        let mut tripped = false;
        for _ in 0..400_000 {
            match step(&mut state, &p, &cfg) {
                Err(SimError::Blowup { .. }) => {
                    tripped = true;
                    break;
                }
                Err(SimError::Cfl { .. }) => break,
                Err(e) => panic!("unexpected error {e}"),
                Ok(()) => {}
            }
        }
        assert!(tripped, "blowup guard never fired");
    }

    #[test]
    fn probe_requires_a_real_width() {
        let grid = Grid1D::new(0.0, 50.0, 101).unwrap();
        let u = Field::constant(grid, 1.0).unwrap();
        assert!(matches!(
            SineProbe::anchor(1.0, 2.5, 0.05, &u, 0.0),
            Err(SimError::ProbeInvalid(_))
        ));
        let probe = SineProbe::anchor(1.0, 1.5, 0.05, &u, 0.0).unwrap();
        assert!(probe.l > 0.0 && probe.m0 == 1.0);
    }

    #[test]
    fn zero_amplitude_probe_is_always_below() {
        let grid = Grid1D::new(0.0, 30.0, 301).unwrap();
        let u = Field::constant(grid, 0.5).unwrap();
        let mut probe = SineProbe::anchor(1.0, 0.0, 0.05, &u, 0.0).unwrap();
        probe.m0 = 0.0;
        let history: Vec<Snapshot> = (0..10)
            .map(|i| Snapshot {
                t: i as f64,
                u: u.clone(),
                v1: u.clone(),
                v2: u.clone(),
            })
            .collect();
        let rep = sine_probe_check(&history, &probe);
        assert!(rep.ordered_throughout);
    }
}
