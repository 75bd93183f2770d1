//! Quasi-static chemical solves and the combination fields they induce.
//!
//! On the moving frame the chemicals satisfy
//!
//! ```text
//!   0 = V'' + c tau V' - lambda_i V + mu_i u
//! ```
//!
//! solved here with a zero-derivative condition on the left (profiles flatten
//! to a plateau) and a decay condition `V' = -mu V` on the right. The
//! Green's-function convolution provides an independent pointwise oracle for
//! the same solve.

use thiserror::Error;

use crate::constants;
use crate::grid::{Field, GridError};
use crate::params::{ModelParams, Species};
use crate::quad::{self, QuadError};
use crate::wave::ProfileSet;

#[derive(Debug, Error)]
pub enum EllipticError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Constants(#[from] constants::ConstantsError),
    #[error("input field leaves the envelope sandwich at node {node} (x = {x}): {detail}")]
    SandwichViolation { node: usize, x: f64, detail: String },
}

/// Thomas elimination for a tridiagonal system. `lower` and `upper` hold
/// n-1 entries each. Panics only on a vanishing pivot, which the diagonally
/// dominant systems assembled here never produce.
pub(crate) fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Vec<f64> {
    let n = diag.len();
    assert!(n >= 2 && lower.len() == n - 1 && upper.len() == n - 1 && rhs.len() == n);
    let mut c = vec![0.0; n - 1];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - lower[i - 1] * c[i - 1];
        assert!(denom != 0.0, "singular tridiagonal system at row {i}");
        if i < n - 1 {
            c[i] = upper[i] / denom;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Second-order centered solve of `V'' + c tau V' - lambda V = -mu_i u` with
/// a zero-derivative ghost at the left end and the Robin decay condition
/// `V' = -decay_mu V` at the right end (pass 0 when no wave exponent
/// applies; that reduces to a zero-derivative condition).
pub fn solve_v(p: &ModelParams, c: f64, u: &Field, sp: Species, decay_mu: f64) -> Field {
    let grid = u.grid();
    let n = grid.n;
    let h = grid.h();
    let lambda = p.lambda(sp);
    let mu_i = p.production(sp);
    let adv = c * p.tau / (2.0 * h);
    let d2 = 1.0 / (h * h);

    let mut lower = vec![d2 - adv; n - 1];
    let mut diag = vec![-2.0 * d2 - lambda; n];
    let mut upper = vec![d2 + adv; n - 1];
    let rhs: Vec<f64> = u.values().iter().map(|&v| -mu_i * v).collect();

    // Left ghost V[-1] = V[1]: the advection difference cancels and the
    // second difference folds onto the superdiagonal.
    upper[0] = 2.0 * d2;
    // Right ghost V[n] = V[n-2] - 2 h decay_mu V[n-1].
    lower[n - 2] = 2.0 * d2;
    diag[n - 1] = -2.0 * d2 * (1.0 + h * decay_mu) - c * p.tau * decay_mu - lambda;

    let values = solve_tridiagonal(&lower, &diag, &upper, &rhs);
    Field::new(grid, values).expect("tridiagonal solve produced non-finite values")
}

/// A field extended off its grid: constant on the left, exponential decay
/// with rate `decay_mu` on the right.
#[derive(Debug, Clone, Copy)]
pub struct ExtendedField<'a> {
    pub field: &'a Field,
    pub decay_mu: f64,
}

impl ExtendedField<'_> {
    pub fn eval(&self, x: f64) -> f64 {
        let g = self.field.grid();
        if x < g.x_lo {
            self.field.values()[0]
        } else if x > g.x_hi {
            self.field.values()[g.n - 1] * (-self.decay_mu * (x - g.x_hi)).exp()
        } else {
            self.field.interp(x)
        }
    }
}

/// Green's-function evaluation of the chemical at a single point:
///
/// ```text
///   V_i(x) = mu_i int_0^inf int_R e^{-lambda_i s} / sqrt(4 pi s)
///            e^{-|x-z|^2 / 4s} u(z + tau c s) dz ds
/// ```
///
/// evaluated after the substitution `z = x + 2 sqrt(s) zeta` (inner Gaussian
/// quadrature) and `s = t^2` (outer). Serves as the oracle for [`solve_v`]
/// away from the boundaries.
pub fn greens_quadrature_v(
    p: &ModelParams,
    c: f64,
    ext: &ExtendedField,
    sp: Species,
    x: f64,
    tol: f64,
) -> Result<f64, EllipticError> {
    let lambda = p.lambda(sp);
    let mu_i = p.production(sp);
    let bound = ext.field.max_abs();
    if bound == 0.0 || mu_i == 0.0 {
        return Ok(0.0);
    }
    let inner_tol = (tol * 0.05).max(1e-13);
    let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
    let inner = |s: f64| -> f64 {
        let shift = x + p.tau * c * s;
        let two_sqrt_s = 2.0 * s.sqrt();
        quad::simpson_doubling(
            &|zeta: f64| (-zeta * zeta).exp() * inv_sqrt_pi * ext.eval(shift + two_sqrt_s * zeta),
            -8.0,
            8.0,
            inner_tol,
        )
        .expect("inner Gaussian quadrature converges for bounded fields")
    };
    let outer = quad::integrate_decaying(
        &|s: f64| (-lambda * s).exp() * inner(s),
        bound.max(1.0),
        lambda,
        &[],
        tol,
    )?;
    Ok(mu_i * outer)
}

/// Chemical concentrations together with their derived combination fields:
/// `z = chi2 lambda2 v2 - chi1 lambda1 v1` drives the linear reaction term
/// and `w = (chi1 v1 - chi2 v2)_x` the chemotactic drift.
#[derive(Debug, Clone)]
pub struct ChemPotentials {
    pub v1: Field,
    pub v2: Field,
    pub dv1: Field,
    pub dv2: Field,
    pub z: Field,
    pub w: Field,
}

/// Centered first derivative, second-order one-sided at the endpoints.
pub fn derivative(f: &Field) -> Field {
    let g = f.grid();
    let h = g.h();
    let v = f.values();
    let n = g.n;
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    for i in 1..n - 1 {
        d[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
    }
    d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
    Field::new(g, d).expect("derivative of a finite field is finite")
}

pub fn combo_fields(
    p: &ModelParams,
    v1: &Field,
    v2: &Field,
) -> Result<ChemPotentials, EllipticError> {
    if v1.grid() != v2.grid() {
        return Err(GridError::GridMismatch.into());
    }
    let g = v1.grid();
    let dv1 = derivative(v1);
    let dv2 = derivative(v2);
    let z: Vec<f64> = v1
        .values()
        .iter()
        .zip(v2.values())
        .map(|(a, b)| p.chi2 * p.lambda2 * b - p.chi1 * p.lambda1 * a)
        .collect();
    let w: Vec<f64> = dv1
        .values()
        .iter()
        .zip(dv2.values())
        .map(|(a, b)| p.chi1 * a - p.chi2 * b)
        .collect();
    Ok(ChemPotentials {
        v1: v1.clone(),
        v2: v2.clone(),
        dv1,
        dv2,
        z: Field::new(g, z)?,
        w: Field::new(g, w)?,
    })
}

/// Outcome of the nodewise envelope bound check. Margins are the smallest
/// slack (bound + allowance - value); nonnegative margins mean the bound held
/// everywhere.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub z_upper_margin: f64,
    pub z_lower_margin: f64,
    pub w_margin: f64,
    pub nodes: usize,
    pub allowance_scale: f64,
}

impl BoundReport {
    pub fn ok(&self) -> bool {
        self.z_upper_margin >= 0.0 && self.z_lower_margin >= 0.0 && self.w_margin >= 0.0
    }
}

/// Verifies the pointwise envelope bounds for a density `u` inside the
/// sandwich: with `phi(x) = e^{-mu x}`,
///
/// ```text
///   -min(m_under C0, m_under_tm phi) <= z <= min(m_bar C0, m_bar_tm phi)
///   |w| <= min(k C0, k_tm phi)
/// ```
///
/// up to a discretization allowance of `10 h^2` times the local bound (plus a
/// roundoff floor). Fails fast if `u` leaves the sandwich itself.
pub fn check_sandwich_bounds(
    p: &ModelParams,
    mu: f64,
    c0: f64,
    profiles: &ProfileSet,
    u: &Field,
    pots: &ChemPotentials,
) -> Result<BoundReport, EllipticError> {
    let g = u.grid();
    if g != pots.z.grid() || g != profiles.phi.grid() {
        return Err(GridError::GridMismatch.into());
    }
    let eps = 1e-9 * c0;
    for i in 0..g.n {
        let v = u.values()[i];
        let lo = profiles.u_minus.values()[i];
        let hi = profiles.u_plus.values()[i];
        if v < lo - eps || v > hi + eps {
            return Err(EllipticError::SandwichViolation {
                node: i,
                x: g.node(i),
                detail: format!("u = {v}, envelope [{lo}, {hi}]"),
            });
        }
    }

    let kc = constants::kernel_constants(p);
    let rc = constants::rate_constants(p, mu)?;
    let h = g.h();
    let floor = 1e-12 * (1.0 + c0);
    let allow = |bound: f64| 10.0 * h * h * bound + floor;

    let mut z_upper_margin = f64::INFINITY;
    let mut z_lower_margin = f64::INFINITY;
    let mut w_margin = f64::INFINITY;
    for i in 0..g.n {
        let phi = profiles.phi.values()[i];
        let z = pots.z.values()[i];
        let w = pots.w.values()[i];
        let up = (kc.m_bar * c0).min(rc.m_bar_tm * phi);
        let lo = (kc.m_under * c0).min(rc.m_under_tm * phi);
        let wb = (kc.k * c0).min(rc.k_tm * phi);
        z_upper_margin = z_upper_margin.min(up + allow(up) - z);
        z_lower_margin = z_lower_margin.min(z + lo + allow(lo));
        w_margin = w_margin.min(wb + allow(wb) - w.abs());
    }

    Ok(BoundReport {
        z_upper_margin,
        z_lower_margin,
        w_margin,
        nodes: g.n,
        allowance_scale: 10.0 * h * h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;

    fn small_chi() -> ModelParams {
        ModelParams::new(1.0, 0.02, 0.05, 1.0, 1.0, 1.0, 1.0, 1.0, 4.0).unwrap()
    }

    #[test]
    fn tridiagonal_solver_inverts_a_random_system() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let n = 40;
        let lower: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let upper: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(3.0..5.0)).collect();
        let x_true: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            rhs[i] = diag[i] * x_true[i];
            if i > 0 {
                rhs[i] += lower[i - 1] * x_true[i - 1];
            }
            if i < n - 1 {
                rhs[i] += upper[i] * x_true[i + 1];
            }
        }
        let x = solve_tridiagonal(&lower, &diag, &upper, &rhs);
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_input_gives_equilibrium_ratio() {
        let p = small_chi();
        let grid = Grid1D::new(-10.0, 10.0, 201).unwrap();
        let u = Field::constant(grid, 1.0).unwrap();
        let v = solve_v(&p, 0.0, &u, Species::Attractant, 0.0);
        let expected = p.mu1 / p.lambda1;
        for &val in v.values() {
            assert!((val - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn exponential_is_an_eigenfunction() {
        // V = mu_i e^{-mu x} / (lambda + tau mu c - mu^2) away from the left
        // boundary layer.
        let p = ModelParams::new(1.0, 0.1, 0.1, 4.0, 4.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let mu = 0.25;
        let c = mu + p.a / mu;
        let grid = Grid1D::new(-20.0, 40.0, 4096).unwrap();
        let u = Field::from_fn(grid, |x| (-mu * x).exp()).unwrap();
        let v = solve_v(&p, c, &u, Species::Attractant, mu);
        let denom = p.lambda1 + p.tau * mu * c - mu * mu;
        let mut worst = 0.0f64;
        for (i, x) in grid.nodes().enumerate() {
            if !(-10.0..=39.5).contains(&x) {
                continue;
            }
            let exact = p.mu1 * (-mu * x).exp() / denom;
            worst = worst.max((v.values()[i] / exact - 1.0).abs());
        }
        assert!(worst < 1e-6, "relative error {worst}");
    }

    #[test]
    fn solve_is_linear() {
        let p = small_chi();
        let grid = Grid1D::new(-5.0, 5.0, 401).unwrap();
        let u1 = Field::from_fn(grid, |x| (0.3 * x).sin().abs()).unwrap();
        let u2 = Field::from_fn(grid, |x| 1.0 / (1.0 + x * x)).unwrap();
        let (alpha, beta) = (1.7, -0.4);
        let combo = Field::new(
            grid,
            u1.values()
                .iter()
                .zip(u2.values())
                .map(|(a, b)| alpha * a + beta * b)
                .collect(),
        )
        .unwrap();
        let v1 = solve_v(&p, 1.0, &u1, Species::Repellent, 0.3);
        let v2 = solve_v(&p, 1.0, &u2, Species::Repellent, 0.3);
        let vc = solve_v(&p, 1.0, &combo, Species::Repellent, 0.3);
        for i in 0..grid.n {
            let lin = alpha * v1.values()[i] + beta * v2.values()[i];
            assert!((vc.values()[i] - lin).abs() < 1e-12);
        }
    }

    #[test]
    fn second_order_convergence_on_the_eigenfunction() {
        let p = ModelParams::new(1.0, 0.1, 0.1, 4.0, 4.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let mu = 0.25;
        let c = mu + p.a / mu;
        let denom = p.lambda1 + p.tau * mu * c - mu * mu;
        let mut errs = Vec::new();
        let mut hs = Vec::new();
        for n in [1024usize, 2048, 4096] {
            let grid = Grid1D::new(-20.0, 40.0, n).unwrap();
            let u = Field::from_fn(grid, |x| (-mu * x).exp()).unwrap();
            let v = solve_v(&p, c, &u, Species::Attractant, mu);
            let mut worst = 0.0f64;
            for (i, x) in grid.nodes().enumerate() {
                if !(-10.0..=39.5).contains(&x) {
                    continue;
                }
                let exact = p.mu1 * (-mu * x).exp() / denom;
                worst = worst.max((v.values()[i] / exact - 1.0).abs());
            }
            errs.push(worst);
            hs.push(grid.h());
        }
        for i in 0..errs.len() - 1 {
            let order = (errs[i] / errs[i + 1]).ln() / (hs[i] / hs[i + 1]).ln();
            assert!((1.8..=2.2).contains(&order), "observed order {order}");
        }
    }

    #[test]
    fn nonnegative_input_stays_essentially_nonnegative() {
        use rand::{Rng, SeedableRng};
        let p = small_chi();
        let grid = Grid1D::new(-8.0, 8.0, 513).unwrap();
        let h = grid.h();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let (a1, a2) = (rng.gen_range(0.2..2.0), rng.gen_range(0.2..2.0));
            let u = Field::from_fn(grid, |x| ((a1 * x).sin() * (a2 * x).cos()).max(0.0)).unwrap();
            let v = solve_v(&p, 1.5, &u, Species::Attractant, 0.0);
            assert!(v.min() >= -10.0 * h * h * u.max());
        }
    }

    #[test]
    fn sup_bounds_track_the_production_decay_ratio() {
        use rand::{Rng, SeedableRng};
        let p = small_chi();
        let grid = Grid1D::new(-10.0, 10.0, 801).unwrap();
        let h = grid.h();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let amp = rng.gen_range(0.1..3.0);
            let freq = rng.gen_range(0.1..1.5);
            let phase = rng.gen_range(0.0..6.2);
            let u = Field::from_fn(grid, |x| amp * (0.5 + 0.5 * (freq * x + phase).sin())).unwrap();
            let v = solve_v(&p, 0.7, &u, Species::Repellent, 0.0);
            let dv = derivative(&v);
            let cap = p.mu2 / p.lambda2 * u.max_abs() + 10.0 * h * h;
            assert!(v.max_abs() <= cap, "|v| = {} > {}", v.max_abs(), cap);
            assert!(dv.max_abs() <= cap, "|v'| = {} > {}", dv.max_abs(), cap);
        }
    }

    #[test]
    fn greens_oracle_matches_the_tridiagonal_solve() {
        let p = small_chi();
        let mu = 0.5;
        let c = mu + p.a / mu;
        let grid = Grid1D::new(-15.0, 25.0, 2001).unwrap();
        let h = grid.h();
        let u = Field::from_fn(grid, |x| {
            (1.0f64.min((-mu * x).exp())) * (0.6 + 0.4 * (0.5 * x).sin())
        })
        .unwrap();
        let v = solve_v(&p, c, &u, Species::Attractant, mu);
        let ext = ExtendedField {
            field: &u,
            decay_mu: mu,
        };
        let tol = 1e-7;
        let budget = (1e-6f64).max(10.0 * h * h);
        for k in 1..=10 {
            let x = -10.0 + 3.0 * k as f64;
            let oracle = greens_quadrature_v(&p, c, &ext, Species::Attractant, x, tol).unwrap();
            let fd = v.interp(x);
            assert!(
                (oracle - fd).abs() <= budget,
                "x = {x}: oracle {oracle} vs fd {fd} (budget {budget})"
            );
        }
    }

    #[test]
    fn greens_oracle_constant_and_eigenfunction_values() {
        // Fine grid: the oracle convolves the piecewise-linear field, whose
        // interpolation bias scales with h^2.
        let p = small_chi();
        let grid = Grid1D::new(-30.0, 30.0, 4001).unwrap();
        let u = Field::constant(grid, 1.0).unwrap();
        let ext = ExtendedField {
            field: &u,
            decay_mu: 0.0,
        };
        let v = greens_quadrature_v(&p, 0.8, &ext, Species::Repellent, 0.0, 1e-8).unwrap();
        assert!((v - p.mu2 / p.lambda2).abs() < 1e-7);

        let mu = 0.4;
        let c = mu + p.a / mu;
        let ue = Field::from_fn(grid, |x| (-mu * x).exp()).unwrap();
        let exte = ExtendedField {
            field: &ue,
            decay_mu: mu,
        };
        // Left extension is constant, not exponential, so probe to the right
        // of the origin where the kernel mass ignores that mismatch.
        let x = 10.0;
        let v = greens_quadrature_v(&p, c, &exte, Species::Attractant, x, 1e-8).unwrap();
        let exact = p.mu1 * (-mu * x).exp() / (p.lambda1 + p.tau * mu * c - mu * mu);
        assert!((v - exact).abs() < 1e-6, "got {v}, exact {exact}");
    }

    #[test]
    fn combo_fields_trivial_cases() {
        let grid = Grid1D::new(-3.0, 3.0, 101).unwrap();
        let v = Field::from_fn(grid, |x| (0.7 * x).cos()).unwrap();

        let p0 = ModelParams::new(1.0, 0.0, 0.0, 1.0, 2.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let pots = combo_fields(&p0, &v, &v).unwrap();
        assert_eq!(pots.z.max_abs(), 0.0);
        assert_eq!(pots.w.max_abs(), 0.0);

        // chi1 lambda1 = chi2 lambda2 with v1 = v2 cancels z.
        let p1 = ModelParams::new(1.0, 2.0, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let pots = combo_fields(&p1, &v, &v).unwrap();
        assert!(pots.z.max_abs() < 1e-12);
    }

    #[test]
    fn combo_fields_constant_upstream() {
        let p = small_chi();
        let grid = Grid1D::new(-10.0, 10.0, 401).unwrap();
        let u = Field::constant(grid, 1.0).unwrap();
        let v1 = solve_v(&p, 0.0, &u, Species::Attractant, 0.0);
        let v2 = solve_v(&p, 0.0, &u, Species::Repellent, 0.0);
        let pots = combo_fields(&p, &v1, &v2).unwrap();
        let expected = p.signal_imbalance();
        for &z in pots.z.values() {
            assert!((z - expected).abs() < 1e-11);
        }
        assert!(pots.w.max_abs() < 1e-11);
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let p = small_chi();
        let ga = Grid1D::new(0.0, 1.0, 11).unwrap();
        let gb = Grid1D::new(0.0, 1.0, 12).unwrap();
        let va = Field::constant(ga, 1.0).unwrap();
        let vb = Field::constant(gb, 1.0).unwrap();
        assert!(combo_fields(&p, &va, &vb).is_err());
    }

    #[test]
    fn bound_check_rejects_densities_outside_the_sandwich() {
        use crate::wave::{build_profiles, IterationConfig};
        let p = small_chi();
        let mu = 0.5;
        let cfg = IterationConfig::auto(&p, mu, 2049).unwrap();
        let profiles = build_profiles(&cfg).unwrap();
        // Identically zero drops below the lower envelope where it is active.
        let u = Field::constant(cfg.grid, 0.0).unwrap();
        let c = mu + p.a / mu;
        let v1 = solve_v(&p, c, &u, Species::Attractant, mu);
        let v2 = solve_v(&p, c, &u, Species::Repellent, mu);
        let pots = combo_fields(&p, &v1, &v2).unwrap();
        assert!(matches!(
            check_sandwich_bounds(&p, mu, cfg.c0, &profiles, &u, &pots),
            Err(EllipticError::SandwichViolation { .. })
        ));
    }
}
