//! Constructive traveling-wave machinery.
//!
//! The construction runs in two nested loops. The inner loop freezes the
//! chemicals at `V_i(.; u)` for a given density `u` and evolves
//!
//! ```text
//!   U_t = U_xx + (c_mu - w) U_x + U (a + z + c_mu tau w - (b + chi2 mu2 - chi1 mu1) U)
//! ```
//!
//! from the upper envelope until it settles; monotone decay and confinement
//! between the envelopes are monitored at checkpoints. The outer loop feeds
//! the settled state back in as the next frozen density until the iteration
//! stops moving in the weighted sup norm, yielding a stationary profile of
//! the moving-frame system together with its chemicals.

use thiserror::Error;

use crate::constants::{self, ConstantsError};
use crate::elliptic::{self, EllipticError};
use crate::grid::{Field, Grid1D, GridError};
use crate::params::{ModelParams, Species};
use crate::report::fmt_float;
use crate::speed::{self, SpeedError};

#[derive(Debug, Error)]
pub enum WaveError {
    #[error("construction hypothesis fails at mu = {mu}: {detail}")]
    Hypothesis { mu: f64, detail: String },
    #[error("exponent pair invalid: mu = {mu}, mu_tilde = {mu_tilde} ({detail})")]
    BadExponents {
        mu: f64,
        mu_tilde: f64,
        detail: String,
    },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Constants(#[from] ConstantsError),
    #[error(transparent)]
    Speed(#[from] SpeedError),
    #[error(transparent)]
    Elliptic(#[from] EllipticError),
    #[error("frozen density leaves the envelope sandwich at node {node}: {detail}")]
    SandwichViolation { node: usize, detail: String },
    #[error("inner evolution hit the step cap ({steps} steps, last change {delta:e})")]
    StepLimit { steps: usize, delta: f64 },
    #[error("inner evolution increased by {increase:e}, beyond the slack {slack:e}; discretization too coarse")]
    MonotonicityViolation { increase: f64, slack: f64 },
    #[error("inner evolution left the envelopes by {breach:e}, beyond the slack {slack:e}")]
    EnvelopeViolation { breach: f64, slack: f64 },
    #[error("outer iteration did not converge in {iters} iterations (last delta {delta:e})")]
    NonConvergence { iters: usize, delta: f64 },
    #[error("converged profile failed its checks: {detail}")]
    PostCheck {
        detail: String,
        profile: Box<WaveProfile>,
    },
}

/// Everything a construction run needs. Build with [`IterationConfig::auto`]
/// for defaults derived from the parameters.
#[derive(Debug, Clone)]
pub struct IterationConfig {
    pub mu: f64,
    pub mu_tilde: f64,
    pub d: f64,
    pub delta: f64,
    pub c0: f64,
    pub grid: Grid1D,
    pub dt: f64,
    pub inner_tol: f64,
    pub outer_tol: f64,
    pub max_inner_steps: usize,
    pub max_outer_iters: usize,
}

/// The envelope family for one `(mu, mu_tilde, d, C0)` choice.
#[derive(Debug, Clone)]
pub struct ProfileSet {
    /// `phi(x) = e^{-mu x}`.
    pub phi: Field,
    /// Upper envelope `min(C0, phi)`.
    pub u_plus: Field,
    /// Lower envelope `max(0, phi - d e^{-mu_tilde x})`.
    pub u_minus: Field,
    /// Lower envelope flattened left of its zero by a small shift `delta`.
    pub u_minus_shift: Field,
    /// Zero of the lower envelope, `ln(d) / (mu_tilde - mu)`.
    pub a_under: f64,
    /// Argmax of the lower envelope, `ln(d mu_tilde / mu) / (mu_tilde - mu)`.
    pub a_bar: f64,
}

/// A converged wave profile with its chemicals and quality measures.
#[derive(Debug, Clone)]
pub struct WaveProfile {
    pub u: Field,
    pub v1: Field,
    pub v2: Field,
    pub mu: f64,
    pub c: f64,
    /// Sup norm of the stationary-equation residual at interior nodes.
    pub residual: f64,
    /// Mean of `u` over the leftmost tenth of the grid.
    pub plateau: f64,
    /// Worst of `|e^{mu x} u(x) - 1|` over the decay probe window.
    pub decay_error: f64,
}

impl WaveProfile {
    /// Profile table with a `#`-prefixed metadata block, gnuplot friendly.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        for (k, v) in [
            ("mu", self.mu),
            ("c", self.c),
            ("residual", self.residual),
            ("plateau", self.plateau),
            ("decay_error", self.decay_error),
        ] {
            writeln!(w, "# {k} = {}", fmt_float(v))?;
        }
        writeln!(w, "x,u,v1,v2")?;
        let g = self.u.grid();
        for (i, x) in g.nodes().enumerate() {
            writeln!(
                w,
                "{},{},{},{}",
                fmt_float(x),
                fmt_float(self.u.values()[i]),
                fmt_float(self.v1.values()[i]),
                fmt_float(self.v2.values()[i]),
            )?;
        }
        Ok(())
    }
}

/// Ceiling above which every constant state is a super-solution:
/// `a / (b + chi2 mu2 - chi1 mu1 - m_bar - c_mu tau k)`.
pub fn ceiling_constant(p: &ModelParams, mu: f64) -> Result<f64, WaveError> {
    let kc = constants::kernel_constants(p);
    let c_mu = speed::c_of_mu(p.a, mu)?;
    let denom = p.quad_damping() - kc.m_bar - c_mu * p.tau * kc.k;
    if denom <= 0.0 {
        return Err(WaveError::Hypothesis {
            mu,
            detail: format!("ceiling denominator {denom} <= 0"),
        });
    }
    Ok(p.a / denom)
}

/// Midpoint of the admissible interval for the secondary exponent
/// `mu_tilde`, whose upper end is the five-way minimum
/// `min(mu_cap, 2 mu, mu + (b + chi2 mu2 - chi1 mu1 - (tau c + mu) k_tm) / (1 + k_tm))`.
pub fn select_mu_tilde(p: &ModelParams, mu: f64) -> Result<f64, WaveError> {
    let rc = constants::rate_constants(p, mu)?;
    let c_mu = speed::c_of_mu(p.a, mu)?;
    let headroom = p.quad_damping() - (p.tau * c_mu + mu) * rc.k_tm;
    let upper = speed::mu_cap(p)
        .min(2.0 * mu)
        .min(mu + headroom / (1.0 + rc.k_tm));
    if upper <= mu {
        return Err(WaveError::Hypothesis {
            mu,
            detail: format!("empty secondary-exponent interval (upper = {upper})"),
        });
    }
    Ok(0.5 * (mu + upper))
}

/// Minimal sub-solution coefficient with its breakdown.
#[derive(Debug, Clone, Copy)]
pub struct DZero {
    pub d0: f64,
    pub a0: f64,
    pub a1: f64,
}

/// `d0 = max(1, A1 / A0, C0^{(mu - mu_tilde)/mu})` with
/// `A0 = (mu_tilde - mu)(a - mu mu_tilde)/mu` and
/// `A1 = (c tau + mu) k_tm + m_under_tm + b + chi2 mu2 - chi1 mu1`.
pub fn d_zero(p: &ModelParams, mu: f64, mu_tilde: f64, c0: f64) -> Result<DZero, WaveError> {
    if mu >= mu_tilde || mu * mu_tilde >= p.a {
        return Err(WaveError::BadExponents {
            mu,
            mu_tilde,
            detail: "need mu < mu_tilde and mu mu_tilde < a".to_string(),
        });
    }
    let rc = constants::rate_constants(p, mu)?;
    let c_mu = speed::c_of_mu(p.a, mu)?;
    let a0 = (mu_tilde - mu) * (p.a - mu * mu_tilde) / mu;
    let a1 = (c_mu * p.tau + mu) * rc.k_tm + rc.m_under_tm + p.quad_damping();
    let d0 = 1.0f64.max(a1 / a0).max(c0.powf((mu - mu_tilde) / mu));
    Ok(DZero { d0, a0, a1 })
}

/// Checks the two standing-assumption branches at this exponent: the shifted
/// quadratic damping must dominate the weighted constants, and `b` the
/// doubled unweighted ones.
pub fn standing_assumption(p: &ModelParams, mu: f64) -> Result<(), WaveError> {
    let kc = constants::kernel_constants(p);
    let rc = constants::rate_constants(p, mu)?;
    let c_mu = speed::c_of_mu(p.a, mu)?;
    let first = p.b + 2.0 * p.signal_imbalance() - 2.0 * (kc.m_bar + p.tau * c_mu * kc.k);
    if first <= 0.0 {
        return Err(WaveError::Hypothesis {
            mu,
            detail: format!("doubled kernel branch fails by {first}"),
        });
    }
    let second = p.quad_damping() - (p.tau * c_mu + mu) * rc.k_tm - rc.m_bar_tm;
    if second <= 0.0 {
        return Err(WaveError::Hypothesis {
            mu,
            detail: format!("weighted branch fails by {second}"),
        });
    }
    Ok(())
}

impl IterationConfig {
    /// Derives a full configuration from the parameters and a wave exponent:
    /// ceiling `C0` at its minimal admissible value, `d` at twice its floor,
    /// a grid wide enough for the plateau on the left and for
    /// `U^+(x_hi) <= 1e-8 C0` on the right, and a time step limited by the
    /// reaction Lipschitz scale only (diffusion and advection are implicit).
    pub fn auto(p: &ModelParams, mu: f64, n: usize) -> Result<Self, WaveError> {
        standing_assumption(p, mu)?;
        let c0 = ceiling_constant(p, mu)?;
        let mu_tilde = select_mu_tilde(p, mu)?;
        let dz = d_zero(p, mu, mu_tilde, c0)?;
        let d = 2.0 * dz.d0;
        let a_under = d.ln() / (mu_tilde - mu);

        let c_mu = speed::c_of_mu(p.a, mu)?;
        // Decay rate of the approach to the plateau at the far left.
        let kappa = 0.5 * (-c_mu + (c_mu * c_mu + 4.0 * p.a).sqrt());
        let margin = (12.0 / kappa).max(20.0);
        let x_lo = a_under.min(0.0) - margin;
        // Far enough right that the upper envelope has dropped to 1e-8 C0
        // and the lower envelope's hump (which moves right as d grows near
        // the window endpoint) is well inside the grid.
        let a_bar = (d * mu_tilde / mu).ln() / (mu_tilde - mu);
        let x_hi = ((8.0 * std::f64::consts::LN_10 - c0.ln()) / mu + 1.0).max(a_bar + 8.0 / mu);
        let grid = Grid1D::new(x_lo, x_hi, n)?;

        let dt = 0.4 / reaction_rate_scale(p, mu, c0);
        Ok(Self {
            mu,
            mu_tilde,
            d,
            delta: grid.h(),
            c0,
            grid,
            dt,
            inner_tol: 1e-9,
            outer_tol: 1e-8,
            max_inner_steps: 400_000,
            max_outer_iters: 80,
        })
    }
}

/// Lipschitz scale of the reaction term over the invariant box `[0, C0]`,
/// used both for the time step and for the monitoring slack.
fn reaction_rate_scale(p: &ModelParams, mu: f64, c0: f64) -> f64 {
    let kc = constants::kernel_constants(p);
    let c_mu = mu + p.a / mu;
    let b_eff = p.b.max(p.quad_damping());
    p.a + (kc.m_bar + c_mu * p.tau * kc.k) * c0 + 2.0 * b_eff * c0
}

/// Evaluates the envelope family on the configured grid.
pub fn build_profiles(cfg: &IterationConfig) -> Result<ProfileSet, WaveError> {
    let (mu, mu_tilde, d, c0) = (cfg.mu, cfg.mu_tilde, cfg.d, cfg.c0);
    if mu >= mu_tilde {
        return Err(WaveError::BadExponents {
            mu,
            mu_tilde,
            detail: "profiles need mu < mu_tilde".to_string(),
        });
    }
    let phi = Field::from_fn(cfg.grid, |x| (-mu * x).exp())?;
    let u_plus = Field::from_fn(cfg.grid, |x| c0.min((-mu * x).exp()))?;
    let lower = |x: f64| ((-mu * x).exp() - d * (-mu_tilde * x).exp()).max(0.0);
    let u_minus = Field::from_fn(cfg.grid, lower)?;
    let a_under = d.ln() / (mu_tilde - mu);
    let a_bar = (d * mu_tilde / mu).ln() / (mu_tilde - mu);
    let x_shift = a_under + cfg.delta;
    let shift_value = lower(x_shift);
    let u_minus_shift = Field::from_fn(cfg.grid, |x| if x >= x_shift { lower(x) } else { shift_value })?;
    Ok(ProfileSet {
        phi,
        u_plus,
        u_minus,
        u_minus_shift,
        a_under,
        a_bar,
    })
}

/// Weighted sup norm `sum_{n >= 1} 2^{-n} max_{|x| <= n} |u1 - u2|`,
/// truncated at the grid extent.
pub fn star_norm(u1: &Field, u2: &Field) -> Result<f64, WaveError> {
    if u1.grid() != u2.grid() {
        return Err(GridError::GridMismatch.into());
    }
    let g = u1.grid();
    let extent = g.x_lo.abs().max(g.x_hi.abs()).ceil() as usize;
    let radii: Vec<f64> = g.nodes().map(|x| x.abs()).collect();
    let diffs: Vec<f64> = u1
        .values()
        .iter()
        .zip(u2.values())
        .map(|(a, b)| (a - b).abs())
        .collect();

    let mut order: Vec<usize> = (0..g.n).collect();
    order.sort_by(|&i, &j| radii[i].partial_cmp(&radii[j]).unwrap());

    let mut total = 0.0;
    let mut running_max = 0.0f64;
    let mut cursor = 0usize;
    for level in 1..=extent.max(1) {
        let radius = level as f64;
        while cursor < order.len() && radii[order[cursor]] <= radius {
            running_max = running_max.max(diffs[order[cursor]]);
            cursor += 1;
        }
        total += running_max / 2f64.powi(level as i32);
    }
    Ok(total)
}

/// Result of one inner evolution: the settled field plus what the monitors
/// observed on the way there.
#[derive(Debug, Clone)]
pub struct InnerOutcome {
    pub u: Field,
    pub steps: usize,
    pub max_time_increase: f64,
    pub min_upper_margin: f64,
    pub min_lower_margin: f64,
    pub slack: f64,
    /// Final sup-norm change per unit time.
    pub final_rate: f64,
    /// True when the run ended at the translation-drift floor of the
    /// discretization rather than below `inner_tol`.
    pub stalled: bool,
}

struct FactoredTridiagonal {
    lower: Vec<f64>,
    c_prime: Vec<f64>,
    denom_inv: Vec<f64>,
}

impl FactoredTridiagonal {
    fn new(lower: &[f64], diag: &[f64], upper: &[f64]) -> Self {
        let n = diag.len();
        let mut c_prime = vec![0.0; n - 1];
        let mut denom_inv = vec![0.0; n];
        c_prime[0] = upper[0] / diag[0];
        denom_inv[0] = 1.0 / diag[0];
        for i in 1..n {
            let denom = diag[i] - lower[i - 1] * c_prime[i - 1];
            denom_inv[i] = 1.0 / denom;
            if i < n - 1 {
                c_prime[i] = upper[i] * denom_inv[i];
            }
        }
        Self {
            lower: lower.to_vec(),
            c_prime,
            denom_inv,
        }
    }

    fn solve_into(&self, rhs: &[f64], work: &mut Vec<f64>, out: &mut Vec<f64>) {
        let n = rhs.len();
        work.clear();
        work.resize(n, 0.0);
        work[0] = rhs[0] * self.denom_inv[0];
        for i in 1..n {
            work[i] = (rhs[i] - self.lower[i - 1] * work[i - 1]) * self.denom_inv[i];
        }
        out.clear();
        out.resize(n, 0.0);
        out[n - 1] = work[n - 1];
        for i in (0..n - 1).rev() {
            out[i] = work[i] - self.c_prime[i] * out[i + 1];
        }
    }
}

/// Assembles `I - dt L` where `L = D2 + drift D1` with the left ghost
/// enforcing a zero derivative and the right ghost the decay condition
/// `U_x = -mu U`. The advection difference is centered wherever the local
/// mesh Peclet number allows it and one-sided (into the wind) otherwise, so
/// the matrix stays an M-matrix and the step preserves ordering.
fn assemble_step_matrix(
    grid: Grid1D,
    dt: f64,
    drift: &[f64],
    decay_mu: f64,
) -> FactoredTridiagonal {
    let n = grid.n;
    let h = grid.h();
    let d2 = 1.0 / (h * h);
    let mut lower = vec![0.0; n - 1];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n - 1];

    let mut l_lower = vec![0.0; n - 1];
    let mut l_diag = vec![0.0; n];
    let mut l_upper = vec![0.0; n - 1];

    for j in 0..n {
        let v = drift[j];
        let centered_ok = v.abs() * h / 2.0 <= 0.9;
        // Diffusion.
        if j == 0 {
            l_diag[0] += -2.0 * d2;
            l_upper[0] += 2.0 * d2;
        } else if j == n - 1 {
            l_lower[n - 2] += 2.0 * d2;
            l_diag[n - 1] += -2.0 * d2 * (1.0 + h * decay_mu);
        } else {
            l_lower[j - 1] += d2;
            l_diag[j] += -2.0 * d2;
            l_upper[j] += d2;
        }
        // Advection drift * U_x.
        if j == 0 {
            // Ghost U[-1] = U[1]: centered difference vanishes; one-sided
            // differences fold onto the superdiagonal.
            if !centered_ok {
                if v > 0.0 {
                    l_diag[0] += -v / h;
                    l_upper[0] += v / h;
                } else {
                    l_diag[0] += v / h;
                    l_upper[0] += -v / h;
                }
            }
        } else if j == n - 1 {
            // Ghost U[n] = U[n-2] - 2 h decay_mu U[n-1].
            if centered_ok {
                l_diag[n - 1] += -v * decay_mu;
            } else if v > 0.0 {
                // Forward difference through the ghost.
                l_lower[n - 2] += v / h;
                l_diag[n - 1] += -v * (1.0 / h + 2.0 * decay_mu);
            } else {
                l_lower[n - 2] += -v / h;
                l_diag[n - 1] += v / h;
            }
        } else if centered_ok {
            l_lower[j - 1] += -v / (2.0 * h);
            l_upper[j] += v / (2.0 * h);
        } else if v > 0.0 {
            l_diag[j] += -v / h;
            l_upper[j] += v / h;
        } else {
            l_lower[j - 1] += -v / h;
            l_diag[j] += v / h;
        }
    }

    for j in 0..n {
        diag[j] = 1.0 - dt * l_diag[j];
        if j < n - 1 {
            upper[j] = -dt * l_upper[j];
            lower[j] = -dt * l_lower[j];
        }
    }
    FactoredTridiagonal::new(&lower, &diag, &upper)
}

/// Evolves the inner equation with chemicals frozen at `V_i(.; u_frozen)`
/// from the upper envelope until the per-unit-time change drops below
/// `inner_tol`. Monotone decay in time and confinement between the shifted
/// lower envelope and the upper envelope are enforced up to a slack scaled
/// by `10 dt h^2` times the reaction rate.
pub fn inner_evolve(
    p: &ModelParams,
    u_frozen: &Field,
    cfg: &IterationConfig,
    profiles: &ProfileSet,
) -> Result<InnerOutcome, WaveError> {
    let grid = cfg.grid;
    let n = grid.n;
    let h = grid.h();
    let c_mu = speed::c_of_mu(p.a, cfg.mu)?;
    let rate_scale = reaction_rate_scale(p, cfg.mu, cfg.c0);
    let slack = 10.0 * cfg.dt * h * h * rate_scale * cfg.c0.max(1.0) + 1e-12 * (1.0 + cfg.c0);

    // The frozen density must lie inside the sandwich (up to the slack the
    // iteration itself is allowed).
    let pre_tol = slack + 1e-9 * cfg.c0;
    for i in 0..n {
        let v = u_frozen.values()[i];
        let lo = profiles.u_minus.values()[i];
        let hi = profiles.u_plus.values()[i];
        if v < lo - pre_tol || v > hi + pre_tol {
            return Err(WaveError::SandwichViolation {
                node: i,
                detail: format!("u = {v} outside [{lo}, {hi}] at x = {}", grid.node(i)),
            });
        }
    }

    let v1 = elliptic::solve_v(p, c_mu, u_frozen, Species::Attractant, cfg.mu);
    let v2 = elliptic::solve_v(p, c_mu, u_frozen, Species::Repellent, cfg.mu);
    let pots = elliptic::combo_fields(p, &v1, &v2)?;
    let drift: Vec<f64> = pots.w.values().iter().map(|w| c_mu - w).collect();
    let linear: Vec<f64> = pots
        .z
        .values()
        .iter()
        .zip(pots.w.values())
        .map(|(z, w)| p.a + z + c_mu * p.tau * w)
        .collect();
    let b_eff = p.quad_damping();

    let matrix = assemble_step_matrix(grid, cfg.dt, &drift, cfg.mu);

    let mut u: Vec<f64> = profiles.u_plus.values().to_vec();
    let mut rhs = vec![0.0; n];
    let mut work = Vec::with_capacity(n);
    let mut next = Vec::with_capacity(n);

    let mut run_min = u.clone();
    let mut max_time_increase = 0.0f64;
    let mut min_upper_margin = f64::INFINITY;
    let mut min_lower_margin = f64::INFINITY;
    // Ordering and confinement are checked after every step.
    let check_every = 1usize;

    let monitor = |u: &[f64],
                       run_min: &mut Vec<f64>,
                       max_inc: &mut f64,
                       up_margin: &mut f64,
                       lo_margin: &mut f64| {
        for j in 0..n {
            *max_inc = (*max_inc).max(u[j] - run_min[j]);
            run_min[j] = run_min[j].min(u[j]);
            *up_margin = (*up_margin).min(profiles.u_plus.values()[j] - u[j]);
            *lo_margin = (*lo_margin).min(u[j] - profiles.u_minus_shift.values()[j]);
        }
    };

    let mut steps = 0usize;
    let mut delta;
    let stalled;
    // A settled profile still translates at the O(h^2) gap between the
    // imposed frame speed and the discrete wave speed, so the change rate
    // bottoms out instead of vanishing. Once it stops improving for a long
    // window, the run is at that floor and the state is the steady profile.
    let stall_window = ((50.0 / cfg.dt).ceil() as usize).max(200);
    let mut best_delta = f64::INFINITY;
    let mut last_improvement = 0usize;
    loop {
        for j in 0..n {
            rhs[j] = u[j] + cfg.dt * u[j] * (linear[j] - b_eff * u[j]);
        }
        matrix.solve_into(&rhs, &mut work, &mut next);
        delta = u
            .iter()
            .zip(&next)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        std::mem::swap(&mut u, &mut next);
        steps += 1;

        if delta < 0.999 * best_delta {
            best_delta = delta;
            last_improvement = steps;
        }
        let converged = delta / cfg.dt < cfg.inner_tol;
        let at_floor =
            steps - last_improvement >= stall_window && delta / cfg.dt < 1e-3 * cfg.c0.max(1.0);
        if steps.is_multiple_of(check_every) || converged || at_floor {
            monitor(
                &u,
                &mut run_min,
                &mut max_time_increase,
                &mut min_upper_margin,
                &mut min_lower_margin,
            );
        }
        if converged || at_floor {
            stalled = at_floor && !converged;
            break;
        }
        if steps >= cfg.max_inner_steps {
            return Err(WaveError::StepLimit { steps, delta });
        }
    }

    if max_time_increase > slack {
        return Err(WaveError::MonotonicityViolation {
            increase: max_time_increase,
            slack,
        });
    }
    let breach = (-min_upper_margin).max(-min_lower_margin);
    if breach > slack {
        return Err(WaveError::EnvelopeViolation { breach, slack });
    }

    Ok(InnerOutcome {
        u: Field::new(grid, u)?,
        steps,
        max_time_increase,
        min_upper_margin,
        min_lower_margin,
        slack,
        final_rate: delta / cfg.dt,
        stalled,
    })
}

/// Initial iterate for the outer loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OuterStart {
    UpperEnvelope,
    LowerShifted,
}

/// A converged construction with its iteration record.
#[derive(Debug, Clone)]
pub struct WaveOutcome {
    pub profile: WaveProfile,
    pub outer_iters: usize,
    pub star_delta: f64,
    pub sup_delta: f64,
}

pub fn outer_fixed_point(p: &ModelParams, cfg: &IterationConfig) -> Result<WaveOutcome, WaveError> {
    outer_fixed_point_from(p, cfg, OuterStart::UpperEnvelope)
}

/// Iterates `u -> settled(u)` until the weighted sup norm stops moving, then
/// assembles the profile, recomputes its chemicals, and checks the residual,
/// plateau, and decay quality gates.
pub fn outer_fixed_point_from(
    p: &ModelParams,
    cfg: &IterationConfig,
    start: OuterStart,
) -> Result<WaveOutcome, WaveError> {
    standing_assumption(p, cfg.mu)?;
    let profiles = build_profiles(cfg)?;
    let mut u = match start {
        OuterStart::UpperEnvelope => profiles.u_plus.clone(),
        OuterStart::LowerShifted => profiles.u_minus_shift.clone(),
    };

    let mut star_delta = f64::INFINITY;
    for iter in 1..=cfg.max_outer_iters {
        let out = inner_evolve(p, &u, cfg, &profiles)?;
        star_delta = star_norm(&out.u, &u)?;
        let sup_delta = out.u.sup_distance(&u)?;
        u = out.u;
        if star_delta < cfg.outer_tol {
            return finish_profile(p, cfg, u, iter, star_delta, sup_delta);
        }
    }
    Err(WaveError::NonConvergence {
        iters: cfg.max_outer_iters,
        delta: star_delta,
    })
}

fn finish_profile(
    p: &ModelParams,
    cfg: &IterationConfig,
    u: Field,
    outer_iters: usize,
    star_delta: f64,
    sup_delta: f64,
) -> Result<WaveOutcome, WaveError> {
    let c_mu = speed::c_of_mu(p.a, cfg.mu)?;
    let v1 = elliptic::solve_v(p, c_mu, &u, Species::Attractant, cfg.mu);
    let v2 = elliptic::solve_v(p, c_mu, &u, Species::Repellent, cfg.mu);

    let grid = cfg.grid;
    let tenth = (grid.n / 10).max(1);
    let plateau = u.values()[..tenth].iter().sum::<f64>() / tenth as f64;

    // The probe band sits in the decreasing tail: past the upper envelope's
    // corner the profile only passes through these values once.
    let corner = -cfg.c0.ln() / cfg.mu;
    let mut decay_error: f64 = 0.0;
    let mut probes = 0usize;
    let (lo_band, hi_band) = (1e-6 * cfg.c0, 1e-3 * cfg.c0);
    for (i, x) in grid.nodes().enumerate() {
        let v = u.values()[i];
        if x > corner && v >= lo_band && v <= hi_band {
            decay_error = decay_error.max(((cfg.mu * x).exp() * v - 1.0).abs());
            probes += 1;
        }
    }

    let mut profile = WaveProfile {
        u,
        v1,
        v2,
        mu: cfg.mu,
        c: c_mu,
        residual: 0.0,
        plateau,
        decay_error,
    };
    profile.residual = stationary_residual(p, &profile)?;

    let carrying = p.a / p.b;
    let mut failures = Vec::new();
    if (profile.plateau - carrying).abs() > 0.01 * carrying {
        failures.push(format!(
            "plateau {} deviates from {carrying} by more than 1%",
            profile.plateau
        ));
    }
    if probes == 0 {
        failures.push("decay probe window is empty".to_string());
    } else if profile.decay_error > 0.05 {
        failures.push(format!("decay error {} exceeds 5%", profile.decay_error));
    }
    let residual_cap = 1e-4 * profile.u.max_abs();
    if profile.residual > residual_cap {
        failures.push(format!(
            "residual {} exceeds {residual_cap}",
            profile.residual
        ));
    }
    if !failures.is_empty() {
        return Err(WaveError::PostCheck {
            detail: failures.join("; "),
            profile: Box::new(profile),
        });
    }

    Ok(WaveOutcome {
        profile,
        outer_iters,
        star_delta,
        sup_delta,
    })
}

/// Sup norm over interior nodes of the stationary equation evaluated with
/// centered differences and the profile's own chemicals.
pub fn stationary_residual(p: &ModelParams, prof: &WaveProfile) -> Result<f64, WaveError> {
    let pots = elliptic::combo_fields(p, &prof.v1, &prof.v2)?;
    let grid = prof.u.grid();
    let h = grid.h();
    let u = prof.u.values();
    let b_eff = p.quad_damping();
    let mut worst = 0.0f64;
    for j in 1..grid.n - 1 {
        let uxx = (u[j + 1] - 2.0 * u[j] + u[j - 1]) / (h * h);
        let ux = (u[j + 1] - u[j - 1]) / (2.0 * h);
        let w = pots.w.values()[j];
        let z = pots.z.values()[j];
        let r = uxx + (prof.c - w) * ux + u[j] * (p.a + z + prof.c * p.tau * w - b_eff * u[j]);
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kpp() -> ModelParams {
        ModelParams::fisher_kpp(1.0, 1.0).unwrap()
    }

    fn small_chi() -> ModelParams {
        ModelParams::new(1.0, 0.02, 0.05, 1.0, 1.0, 1.0, 1.0, 1.0, 4.0).unwrap()
    }

    #[test]
    fn ceiling_reduces_to_carrying_capacity() {
        let c0 = ceiling_constant(&kpp(), 0.5).unwrap();
        assert!((c0 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ceiling_rejects_nonpositive_denominator() {
        // chi1 mu1 large makes the denominator negative.
        let p = ModelParams::new(1.0, 10.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            ceiling_constant(&p, 0.5),
            Err(WaveError::Hypothesis { .. })
        ));
    }

    #[test]
    fn mu_tilde_midpoint_without_chemotaxis() {
        // Upper end is min(1, 0.8, 0.4 + 1) = 0.8; midpoint 0.6.
        let mt = select_mu_tilde(&kpp(), 0.4).unwrap();
        assert!((mt - 0.6).abs() < 1e-12);
    }

    #[test]
    fn selected_mu_tilde_satisfies_every_constraint() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for _ in 0..25 {
            let p = ModelParams::new(
                rng.gen_range(0.2..1.5),
                rng.gen_range(0.0..0.1),
                rng.gen_range(0.0..0.1),
                rng.gen_range(0.5..2.0),
                rng.gen_range(0.5..2.0),
                rng.gen_range(0.5..1.5),
                rng.gen_range(0.5..1.5),
                1.0,
                rng.gen_range(1.0..4.0),
            )
            .unwrap();
            let cap = speed::mu_cap(&p);
            let mu = rng.gen_range(0.3 * cap..0.7 * cap);
            let Ok(mt) = select_mu_tilde(&p, mu) else {
                continue;
            };
            let rc = constants::rate_constants(&p, mu).unwrap();
            let c = mu + p.a / mu;
            assert!(mu < mt);
            assert!(mt < cap);
            assert!(mt < 2.0 * mu);
            let fifth =
                mu + (p.quad_damping() - (p.tau * c + mu) * rc.k_tm) / (1.0 + rc.k_tm);
            assert!(mt < fifth, "{p:?} at mu = {mu}");
        }
    }

    #[test]
    fn mu_tilde_interval_can_be_empty() {
        // Strong attraction drains the headroom of the weighted branch.
        let p = ModelParams::new(1.0, 1.2, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.3).unwrap();
        assert!(matches!(
            select_mu_tilde(&p, 0.9),
            Err(WaveError::Hypothesis { .. })
        ));
    }

    #[test]
    fn ceiling_matches_hand_arithmetic_at_small_repulsion() {
        // tau = 1, a = b = 1, lambda = mu_prod = 1, chi2 = 0.05, mu = 0.5:
        // m_bar = 0.05, k = 0.025, c = 2.5, so the ceiling is 1 / 0.9375.
        let p = ModelParams::new(1.0, 0.0, 0.05, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let c0 = ceiling_constant(&p, 0.5).unwrap();
        assert!((c0 - 1.0 / 0.9375).abs() < 1e-12, "got {c0}");
    }

    #[test]
    fn d_zero_hand_example() {
        // chi = 0, a = b = 1, mu = 0.5, mu_tilde = 0.75, c0 = 1:
        // A0 = 0.25 * 0.625 / 0.5 = 0.3125, A1 = 1, d0 = 3.2.
        let dz = d_zero(&kpp(), 0.5, 0.75, 1.0).unwrap();
        assert!((dz.a0 - 0.3125).abs() < 1e-12);
        assert!((dz.a1 - 1.0).abs() < 1e-12);
        assert!((dz.d0 - 3.2).abs() < 1e-12);
    }

    #[test]
    fn d_zero_rejects_exponents_past_the_growth_rate() {
        assert!(matches!(
            d_zero(&kpp(), 0.9, 1.2, 1.0),
            Err(WaveError::BadExponents { .. })
        ));
    }

    #[test]
    fn small_ceiling_makes_the_power_term_dominate() {
        // c0 < 1 turns c0^{(mu - mu_tilde)/mu} into a value above one.
        let dz = d_zero(&kpp(), 0.5, 0.75, 0.01).unwrap();
        assert!(dz.d0 >= 0.01f64.powf(-0.5) - 1e-12);
    }

    #[test]
    fn profiles_have_the_documented_shape() {
        let p = kpp();
        let cfg = IterationConfig::auto(&p, 0.5, 4097).unwrap();
        let prof = build_profiles(&cfg).unwrap();
        // Zero of the lower envelope at a_under.
        let lower_at = |x: f64| ((-cfg.mu * x).exp() - cfg.d * (-cfg.mu_tilde * x).exp()).max(0.0);
        assert!(lower_at(prof.a_under).abs() < 1e-12);
        // Derivative of phi - d phi_tilde vanishes at a_bar.
        let deriv = |x: f64| -cfg.mu * (-cfg.mu * x).exp() + cfg.d * cfg.mu_tilde * (-cfg.mu_tilde * x).exp();
        assert!(deriv(prof.a_bar).abs() < 1e-10);
        assert!(prof.a_under < prof.a_bar);
        // Nodewise ordering 0 <= U- <= U+ <= C0 and the shifted envelope stays below U+.
        for i in 0..cfg.grid.n {
            let lo = prof.u_minus.values()[i];
            let hi = prof.u_plus.values()[i];
            let sh = prof.u_minus_shift.values()[i];
            assert!(lo >= 0.0 && lo <= hi + 1e-15 && hi <= cfg.c0 + 1e-15);
            assert!(sh >= 0.0 && sh <= hi + 1e-12);
            assert!(sh + 1e-15 >= lo || prof.u_minus.grid().node(i) < prof.a_under + cfg.delta);
        }
    }

    #[test]
    fn exponential_ansatz_satisfies_the_discrete_equations_to_second_order() {
        // phi'' + c phi' + a phi = 0 and the shifted variant, discretely O(h^2).
        let p = small_chi();
        let mu = 0.5;
        let c = mu + p.a / mu;
        let mut residuals = Vec::new();
        for n in [513usize, 1025] {
            let grid = Grid1D::new(-5.0, 5.0, n).unwrap();
            let h = grid.h();
            let phi = Field::from_fn(grid, |x| (-mu * x).exp()).unwrap();
            let v = phi.values();
            let mut worst = 0.0f64;
            let mut worst_shift = 0.0f64;
            for j in 1..n - 1 {
                let x = grid.node(j);
                let scale = (-mu * x).exp();
                let d2 = (v[j + 1] - 2.0 * v[j] + v[j - 1]) / (h * h);
                let d1 = (v[j + 1] - v[j - 1]) / (2.0 * h);
                worst = worst.max((d2 + c * d1 + p.a * v[j]).abs() / scale);
                let r = p.tau * mu * c - mu * mu;
                let shifted = d2 + p.tau * c * d1 - p.lambda1 * v[j] + (p.lambda1 + r) * v[j];
                worst_shift = worst_shift.max(shifted.abs() / scale);
            }
            residuals.push((worst, worst_shift, h));
        }
        let (r1, s1, h1) = residuals[0];
        let (r2, s2, h2) = residuals[1];
        let order = (r1 / r2).ln() / (h1 / h2).ln();
        let order_s = (s1 / s2).ln() / (h1 / h2).ln();
        assert!((1.8..=2.2).contains(&order), "order {order}");
        assert!((1.8..=2.2).contains(&order_s), "order {order_s}");
    }

    #[test]
    fn star_norm_properties() {
        let grid = Grid1D::new(-8.0, 8.0, 257).unwrap();
        let z = Field::constant(grid, 0.0).unwrap();
        assert_eq!(star_norm(&z, &z).unwrap(), 0.0);

        // Constant difference sums the geometric weights.
        let c = Field::constant(grid, 1.0).unwrap();
        let expected: f64 = (1..=8).map(|k| 0.5f64.powi(k)).sum();
        assert!((star_norm(&c, &z).unwrap() - expected).abs() < 1e-12);

        // A difference supported outside [-1, 1] is weighted at most 1/4
        // relative to the same bump centered at the origin.
        let bump_far = Field::from_fn(grid, |x| if (x - 5.0).abs() < 0.5 { 1.0 } else { 0.0 }).unwrap();
        let bump_near = Field::from_fn(grid, |x| if x.abs() < 0.5 { 1.0 } else { 0.0 }).unwrap();
        let far = star_norm(&bump_far, &z).unwrap();
        let near = star_norm(&bump_near, &z).unwrap();
        assert!(far <= near / 4.0 + 1e-12);
    }

    #[test]
    fn inner_evolution_without_coupling_ignores_the_frozen_density() {
        let p = kpp();
        let cfg = IterationConfig::auto(&p, 0.5, 2049).unwrap();
        let profiles = build_profiles(&cfg).unwrap();
        let out1 = inner_evolve(&p, &profiles.u_plus, &cfg, &profiles).unwrap();
        let out2 = inner_evolve(&p, &profiles.u_minus_shift, &cfg, &profiles).unwrap();
        assert!(out1.u.sup_distance(&out2.u).unwrap() < 1e-12);
    }

    #[test]
    fn stationary_residual_trivial_solutions() {
        let p = kpp();
        let grid = Grid1D::new(-10.0, 10.0, 257).unwrap();
        let mk = |value: f64| {
            let u = Field::constant(grid, value).unwrap();
            let v1 = elliptic::solve_v(&p, 2.5, &u, Species::Attractant, 0.0);
            let v2 = elliptic::solve_v(&p, 2.5, &u, Species::Repellent, 0.0);
            WaveProfile {
                u,
                v1,
                v2,
                mu: 0.5,
                c: 2.5,
                residual: 0.0,
                plateau: value,
                decay_error: 0.0,
            }
        };
        assert_eq!(stationary_residual(&p, &mk(0.0)).unwrap(), 0.0);
        assert!(stationary_residual(&p, &mk(1.0)).unwrap() < 1e-12);
    }
}
