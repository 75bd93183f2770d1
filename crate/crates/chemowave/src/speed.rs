//! Wave speeds, the admissibility function f, and the speed window.
//!
//! Every admissible decay exponent `mu` in (0, mu_cap) carries the speed
//! `c_mu = mu + a/mu`. The window of constructible speeds is read off the
//! rightmost connected component of `{ mu : f(mu) < b }`, where
//!
//! ```text
//!   f(mu) = max{ 2 (m_under + tau c_mu k),
//!                chi1 mu1 - chi2 mu2 + (tau c_mu + mu) k_tm + m_bar_tm }
//! ```

use rayon::prelude::*;
use thiserror::Error;

use crate::constants::{self, ConstantsError};
use crate::params::ModelParams;

#[derive(Debug, Error)]
pub enum SpeedError {
    #[error("wave exponent must be positive, got {0}")]
    NonPositiveMu(f64),
    #[error("speed {c} below the minimum 2 sqrt(a) = {min}")]
    SpeedBelowMinimum { c: f64, min: f64 },
    #[error("mu = {mu} outside the admissible interval (0, {cap})")]
    MuOutsideCap { mu: f64, cap: f64 },
    #[error("sample count {0} too small; need at least 100")]
    TooFewSamples(usize),
    #[error("hypothesis infeasible: min f = {min_f} >= b = {b}")]
    InfeasibleHypothesis { min_f: f64, b: f64 },
    #[error(transparent)]
    Constants(#[from] ConstantsError),
}

/// Speed of the exponential ansatz `e^{-mu x}`: strictly decreasing on
/// (0, sqrt(a)) with minimum `2 sqrt(a)` at `mu = sqrt(a)`.
pub fn c_of_mu(a: f64, mu: f64) -> Result<f64, SpeedError> {
    if mu <= 0.0 {
        return Err(SpeedError::NonPositiveMu(mu));
    }
    Ok(mu + a / mu)
}

/// Inverse of [`c_of_mu`] on the branch in (0, sqrt(a)].
pub fn mu_of_c(a: f64, c: f64) -> Result<f64, SpeedError> {
    let min = 2.0 * a.sqrt();
    if c < min {
        return Err(SpeedError::SpeedBelowMinimum { c, min });
    }
    let disc = (c * c - 4.0 * a).max(0.0);
    Ok((c - disc.sqrt()) / 2.0)
}

/// Upper limit for the decay exponent:
/// `min{ sqrt(a), sqrt((lambda_i + tau a)/(1 - tau)_+) }`, where a vanishing
/// denominator removes the constraint.
pub fn mu_cap(p: &ModelParams) -> f64 {
    let mut cap = p.a.sqrt();
    let denom = (1.0 - p.tau).max(0.0);
    if denom > 0.0 {
        cap = cap.min(((p.lambda1 + p.tau * p.a) / denom).sqrt());
        cap = cap.min(((p.lambda2 + p.tau * p.a) / denom).sqrt());
    }
    cap
}

/// The admissibility function f, continuous on (0, mu_cap).
pub fn f_of_mu(p: &ModelParams, mu: f64) -> Result<f64, SpeedError> {
    let cap = mu_cap(p);
    if !(mu > 0.0 && mu < cap) {
        return Err(SpeedError::MuOutsideCap { mu, cap });
    }
    let kc = constants::kernel_constants(p);
    let rc = constants::rate_constants(p, mu)?;
    let c = mu + p.a / mu;
    let first = 2.0 * (kc.m_under + p.tau * c * kc.k);
    let second =
        p.chi1 * p.mu1 - p.chi2 * p.mu2 + (p.tau * c + mu) * rc.k_tm + rc.m_bar_tm;
    Ok(first.max(second))
}

/// Outcome of the feasibility scan for `b > inf f`.
#[derive(Debug, Clone)]
pub struct HypothesisReport {
    pub holds: bool,
    /// Argmin of the sampled (and golden-section refined) threshold, present
    /// only when the hypothesis holds at this resolution.
    pub witness: Option<(f64, f64)>,
    pub min_f: f64,
    /// Largest gap observed between the two algebraically equal forms of the
    /// first branch condition.
    pub equivalence_gap: f64,
    /// Whether the two formulations produced identical decisions everywhere.
    pub formulations_agree: bool,
}

/// Samples f on `n` interior points, refines the best sample by golden
/// section, and checks that the two equivalent writings of the first branch
/// (difference form vs. shifted form) agree at every sample.
pub fn hypothesis_h(p: &ModelParams, n: usize) -> Result<HypothesisReport, SpeedError> {
    if n < 100 {
        return Err(SpeedError::TooFewSamples(n));
    }
    let cap = mu_cap(p);
    let kc = constants::kernel_constants(p);
    let sample_mu = |i: usize| cap * (i + 1) as f64 / (n + 1) as f64;

    let values: Result<Vec<f64>, SpeedError> =
        (0..n).into_par_iter().map(|i| f_of_mu(p, sample_mu(i))).collect();
    let values = values?;

    let mut equivalence_gap = 0.0f64;
    let mut formulations_agree = true;
    for (i, _) in values.iter().enumerate() {
        let mu = sample_mu(i);
        let c = mu + p.a / mu;
        let lhs_direct = 2.0 * (kc.m_under + p.tau * c * kc.k);
        let lhs_shifted =
            2.0 * (kc.m_bar + p.tau * c * kc.k) - 2.0 * p.signal_imbalance();
        let gap = (lhs_direct - lhs_shifted).abs();
        equivalence_gap = equivalence_gap.max(gap / lhs_direct.abs().max(1.0));
        if (lhs_direct < p.b) != (lhs_shifted < p.b) {
            formulations_agree = false;
        }
    }

    let (best_i, &best_f) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .expect("n >= 100");

    // Golden-section refinement around the best sample; f can have a kink
    // where the max branches cross, so no derivatives are used.
    let lo = if best_i == 0 { cap * 1e-12 } else { sample_mu(best_i - 1) };
    let hi = if best_i + 1 == n { cap * (1.0 - 1e-12) } else { sample_mu(best_i + 1) };
    let refined = golden_min(&|mu| f_of_mu(p, mu).unwrap_or(f64::INFINITY), lo, hi, 60);
    let (min_mu, min_f) = if refined.1 < best_f {
        refined
    } else {
        (sample_mu(best_i), best_f)
    };

    let holds = min_f < p.b;
    Ok(HypothesisReport {
        holds,
        witness: holds.then_some((min_mu, min_f)),
        min_f,
        equivalence_gap,
        formulations_agree,
    })
}

fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let m = 0.5 * (a + b);
    (m, f(m))
}

/// Upper speed endpoint; unbounded exactly when the feasible set reaches the
/// left edge of the exponent interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UpperSpeed {
    Finite(f64),
    Unbounded,
}

impl std::fmt::Display for UpperSpeed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UpperSpeed::Finite(v) => write!(f, "{}", crate::report::fmt_float(*v)),
            UpperSpeed::Unbounded => write!(f, "inf"),
        }
    }
}

impl UpperSpeed {
    pub fn exceeds(&self, bound: f64) -> bool {
        match self {
            UpperSpeed::Finite(v) => *v > bound,
            UpperSpeed::Unbounded => true,
        }
    }
}

/// The admissible exponent component and its speed window.
#[derive(Debug, Clone)]
pub struct WaveWindow {
    pub mu_lo: f64,
    pub mu_hi: f64,
    pub c_star: f64,
    pub c_double_star: UpperSpeed,
    pub mu_cap: f64,
}

impl WaveWindow {
    pub const CSV_HEADER: &'static str = "mu_lo,mu_hi,c_star,c_double_star,mu_cap";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            crate::report::fmt_float(self.mu_lo),
            crate::report::fmt_float(self.mu_hi),
            crate::report::fmt_float(self.c_star),
            self.c_double_star,
            crate::report::fmt_float(self.mu_cap),
        )
    }
}

/// Extracts the rightmost feasible component of `{ mu : f(mu) < b }` by a
/// right-to-left scan over `n` samples, then sharpens both endpoints by
/// bisection on `b - f` to width `tol`. A feasible leftmost sample pins
/// `mu_lo = 0` exactly and reports the upper speed as unbounded.
pub fn wave_window(p: &ModelParams, n: usize, tol: f64) -> Result<WaveWindow, SpeedError> {
    let report = hypothesis_h(p, n)?;
    if !report.holds {
        return Err(SpeedError::InfeasibleHypothesis {
            min_f: report.min_f,
            b: p.b,
        });
    }

    let cap = mu_cap(p);
    let sample_mu = |i: usize| cap * (i + 1) as f64 / (n + 1) as f64;
    let feasible: Result<Vec<bool>, SpeedError> = (0..n)
        .into_par_iter()
        .map(|i| Ok(f_of_mu(p, sample_mu(i))? < p.b))
        .collect();
    let feasible = feasible?;

    let hi_idx = match feasible.iter().rposition(|&ok| ok) {
        Some(i) => i,
        None => {
            // The refined minimum was below b but no grid sample is; treat the
            // witness as a degenerate bracket around the refined point.
            let (mu_w, _) = report.witness.expect("hypothesis holds");
            let lo = bisect_edge(p, mu_w, (mu_w - cap / n as f64).max(cap * 1e-12), tol);
            let hi = bisect_edge(p, mu_w, (mu_w + cap / n as f64).min(cap * (1.0 - 1e-12)), tol);
            return finish_window(p, cap, lo, hi);
        }
    };

    // Sharpen the right endpoint.
    let mu_hi = if hi_idx == n - 1 {
        let near_cap = cap * (1.0 - 1e-9);
        if f_of_mu(p, near_cap)? < p.b {
            cap
        } else {
            bisect_edge(p, sample_mu(hi_idx), near_cap, tol)
        }
    } else {
        bisect_edge(p, sample_mu(hi_idx), sample_mu(hi_idx + 1), tol)
    };

    // Walk left through the feasible block.
    let mut lo_idx = hi_idx;
    while lo_idx > 0 && feasible[lo_idx - 1] {
        lo_idx -= 1;
    }
    let mu_lo = if lo_idx == 0 {
        0.0
    } else {
        bisect_edge(p, sample_mu(lo_idx), sample_mu(lo_idx - 1), tol)
    };

    finish_window(p, cap, mu_lo, mu_hi)
}

fn finish_window(
    p: &ModelParams,
    cap: f64,
    mu_lo: f64,
    mu_hi: f64,
) -> Result<WaveWindow, SpeedError> {
    let c_star = c_of_mu(p.a, mu_hi)?;
    let c_double_star = if mu_lo == 0.0 {
        UpperSpeed::Unbounded
    } else {
        UpperSpeed::Finite(c_of_mu(p.a, mu_lo)?)
    };
    Ok(WaveWindow {
        mu_lo,
        mu_hi,
        c_star,
        c_double_star,
        mu_cap: cap,
    })
}

/// Bisection on `b - f` between a feasible and an infeasible point. Keeps the
/// feasible side, so the reported endpoint always lies inside the window.
fn bisect_edge(p: &ModelParams, mut feasible: f64, mut infeasible: f64, tol: f64) -> f64 {
    for _ in 0..40 {
        if (feasible - infeasible).abs() <= tol {
            break;
        }
        let mid = 0.5 * (feasible + infeasible);
        let ok = f_of_mu(p, mid).map(|f| f < p.b).unwrap_or(false);
        if ok {
            feasible = mid;
        } else {
            infeasible = mid;
        }
    }
    feasible
}

/// Window behaviour as both sensitivities shrink. Each row scales
/// `(chi1, chi2)` by the given factor and recomputes the window; failures
/// propagate per row.
pub fn chi_limit_study(
    p: &ModelParams,
    scales: &[f64],
    n: usize,
    tol: f64,
) -> Vec<(f64, Result<WaveWindow, SpeedError>)> {
    scales
        .iter()
        .map(|&s| (s, wave_window(&p.with_chi_scaled(s), n, tol)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_chi() -> ModelParams {
        ModelParams::new(1.0, 0.02, 0.05, 1.0, 1.0, 1.0, 1.0, 1.0, 4.0).unwrap()
    }

    #[test]
    fn speed_examples() {
        assert!((c_of_mu(1.0, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((c_of_mu(1.0, 0.5).unwrap() - 2.5).abs() < 1e-15);
        assert!((c_of_mu(4.0, 1.0).unwrap() - 5.0).abs() < 1e-15);
        assert!(c_of_mu(1.0, 0.0).is_err());
    }

    #[test]
    fn speed_strictly_decreasing_below_sqrt_a() {
        let a = 2.3f64;
        let cap = a.sqrt();
        for i in 0..100 {
            let m1 = cap * (i + 1) as f64 / 102.0;
            let m2 = cap * (i + 2) as f64 / 102.0;
            assert!(c_of_mu(a, m1).unwrap() > c_of_mu(a, m2).unwrap());
        }
    }

    #[test]
    fn exponent_speed_roundtrip() {
        use rand::{Rng, SeedableRng};
        let a = 1.7f64;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        assert!((mu_of_c(1.0, 2.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((mu_of_c(1.0, 2.5).unwrap() - 0.5).abs() < 1e-12);
        for _ in 0..100 {
            let c = rng.gen_range(2.0 * a.sqrt()..10.0 * a.sqrt());
            let mu = mu_of_c(a, c).unwrap();
            assert!(mu > 0.0 && mu <= a.sqrt() + 1e-12);
            assert!((c_of_mu(a, mu).unwrap() - c).abs() <= 1e-12 * c);
        }
        assert!(mu_of_c(1.0, 1.9).is_err());
    }

    #[test]
    fn cap_examples() {
        let p1 = ModelParams::new(1.0, 0.1, 0.1, 0.01, 0.02, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!((mu_cap(&p1) - 1.0).abs() < 1e-15, "tau = 1 drops the constraints");
        let p2 = ModelParams::new(0.0, 0.1, 0.1, 0.25, 9.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!((mu_cap(&p2) - 0.5).abs() < 1e-15);
        let p3 = ModelParams::new(0.0, 0.1, 0.1, 4.0, 4.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!((mu_cap(&p3) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn f_vanishes_without_chemotaxis() {
        let p = ModelParams::fisher_kpp(1.0, 1.0).unwrap();
        for mu in [0.1, 0.5, 0.9] {
            assert!(f_of_mu(&p, mu).unwrap().abs() < 1e-14);
        }
        assert!(f_of_mu(&p, 1.5).is_err());
    }

    #[test]
    fn f_is_continuous_at_random_points() {
        use rand::{Rng, SeedableRng};
        let p = small_chi();
        let cap = mu_cap(&p);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            // Away from the left edge, where the speed factor 1 - a/mu^2
            // makes the local Lipschitz constant blow up.
            let mu = rng.gen_range(0.2 * cap..0.9 * cap);
            let f0 = f_of_mu(&p, mu).unwrap();
            let mut h = 1e-3;
            let mut prev_gap = f64::INFINITY;
            for _ in 0..6 {
                let gap = (f_of_mu(&p, mu + h).unwrap() - f0).abs();
                assert!(gap <= prev_gap + 1e-12, "gap not shrinking at mu = {mu}");
                prev_gap = gap;
                h /= 4.0;
            }
            assert!(prev_gap < 1e-5);
        }
    }

    #[test]
    fn hypothesis_trivially_true_without_chemotaxis() {
        let p = ModelParams::fisher_kpp(1.0, 1.0).unwrap();
        let rep = hypothesis_h(&p, 128).unwrap();
        assert!(rep.holds);
        assert!(rep.min_f.abs() < 1e-14);
        assert!(rep.formulations_agree);
    }

    #[test]
    fn hypothesis_fails_for_dominant_attraction() {
        // f >= chi1 mu1 - chi2 mu2 = 50 > b everywhere.
        let p = ModelParams::new(1.0, 50.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.1).unwrap();
        let rep = hypothesis_h(&p, 256).unwrap();
        assert!(!rep.holds);
        assert!(rep.witness.is_none());
    }

    #[test]
    fn equivalent_formulations_never_disagree() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        // Direct check of the two writings of the first branch condition on
        // 500 parameter draws, sampled across each admissible interval.
        for _ in 0..500 {
            let p = ModelParams::new(
                rng.gen_range(0.0..2.0),
                rng.gen_range(0.0..1.5),
                rng.gen_range(0.0..1.5),
                rng.gen_range(0.3..3.0),
                rng.gen_range(0.3..3.0),
                rng.gen_range(0.3..2.0),
                rng.gen_range(0.3..2.0),
                rng.gen_range(0.5..2.0),
                rng.gen_range(0.5..4.0),
            )
            .unwrap();
            let kc = crate::constants::kernel_constants(&p);
            let cap = mu_cap(&p);
            for k in 0..8 {
                let mu = cap * (k + 1) as f64 / 9.0;
                let c = mu + p.a / mu;
                let direct = 2.0 * (kc.m_under + p.tau * c * kc.k);
                let shifted =
                    2.0 * (kc.m_bar + p.tau * c * kc.k) - 2.0 * p.signal_imbalance();
                assert!(
                    (direct - shifted).abs() <= 1e-12 * direct.abs().max(1.0),
                    "{p:?} at mu = {mu}"
                );
                assert_eq!(direct < p.b, shifted < p.b, "{p:?} at mu = {mu}");
            }
        }
        // And through the scanning interface on a smaller sample.
        for _ in 0..25 {
            let p = ModelParams::new(
                rng.gen_range(0.0..2.0),
                rng.gen_range(0.0..0.5),
                rng.gen_range(0.0..0.5),
                rng.gen_range(0.3..3.0),
                rng.gen_range(0.3..3.0),
                rng.gen_range(0.3..2.0),
                rng.gen_range(0.3..2.0),
                rng.gen_range(0.5..2.0),
                rng.gen_range(0.5..4.0),
            )
            .unwrap();
            let rep = hypothesis_h(&p, 128).unwrap();
            assert!(rep.formulations_agree, "{p:?}");
            assert!(rep.equivalence_gap <= 1e-12, "{p:?}");
        }
    }

    #[test]
    fn threshold_assembles_identically_from_closed_weighted_forms() {
        // Mixed-branch value of f rebuilt from the exact piecewise forms of
        // the weighted constants; the quadrature route must agree to 1e-8.
        let p = ModelParams::new(1.0, 0.0, 0.1, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let mu = 0.5;
        let f = f_of_mu(&p, mu).unwrap();
        let kc = crate::constants::kernel_constants(&p);
        let c = mu + p.a / mu;
        let r = p.tau * mu * c - mu * mu;
        let (m_bar_tm, _) = crate::constants::m_weighted_closed(&p, r);
        let k_tm = crate::constants::k_weighted_closed(&p, mu, r);
        let first = 2.0 * (kc.m_under + p.tau * c * kc.k);
        let second = p.chi1 * p.mu1 - p.chi2 * p.mu2 + (p.tau * c + mu) * k_tm + m_bar_tm;
        let assembled = first.max(second);
        assert!(
            (f - assembled).abs() <= 1e-8 * assembled.abs().max(1.0),
            "quadrature {f} vs closed assembly {assembled}"
        );
    }

    #[test]
    fn kpp_window_is_the_full_interval() {
        let p = ModelParams::fisher_kpp(1.0, 1.0).unwrap();
        let w = wave_window(&p, 512, 1e-9).unwrap();
        assert_eq!(w.mu_lo, 0.0);
        assert!((w.mu_hi - 1.0).abs() < 1e-12);
        assert!((w.c_star - 2.0).abs() < 1e-9);
        assert_eq!(w.c_double_star, UpperSpeed::Unbounded);
    }

    #[test]
    fn cap_bound_window_with_tau_zero() {
        let p = ModelParams::new(0.0, 0.0, 0.0, 0.25, 0.25, 1.0, 1.0, 1.0, 1.0).unwrap();
        let w = wave_window(&p, 512, 1e-9).unwrap();
        assert!((w.mu_hi - 0.5).abs() < 1e-12);
        assert!((w.c_star - 2.5).abs() < 1e-9);
    }

    #[test]
    fn tiny_sensitivity_barely_moves_the_window() {
        let p = ModelParams::new(1.0, 0.0, 1e-3, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let w = wave_window(&p, 2048, 1e-8).unwrap();
        assert!(w.mu_lo < 1e-2);
        assert!((w.mu_hi - 1.0).abs() < 1e-2);
    }

    #[test]
    fn window_interior_is_feasible_and_exterior_is_not() {
        let p = small_chi();
        let tol = 1e-8;
        let w = wave_window(&p, 1024, tol).unwrap();
        for i in 0..50 {
            let mu = w.mu_lo.max(1e-6) + (w.mu_hi - w.mu_lo.max(1e-6)) * (i as f64 + 0.5) / 50.0;
            if mu < w.mu_hi {
                assert!(f_of_mu(&p, mu).unwrap() < p.b, "interior probe mu = {mu}");
            }
        }
        if w.mu_lo > 0.0 {
            let outside = w.mu_lo - 2.0 * tol;
            if outside > 0.0 {
                assert!(f_of_mu(&p, outside).unwrap() >= p.b - 1e-9);
            }
        }
        if w.mu_hi < w.mu_cap {
            let outside = (w.mu_hi + 2.0 * tol).min(w.mu_cap * (1.0 - 1e-12));
            assert!(f_of_mu(&p, outside).unwrap() >= p.b - 1e-9);
        }
    }

    #[test]
    fn limit_study_approaches_the_chemotaxis_free_speeds() {
        let p = ModelParams::new(1.0, 0.2, 0.3, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let rows = chi_limit_study(&p, &[1e-1, 1e-2, 1e-3], 1024, 1e-8);
        let mut last_c_star = f64::INFINITY;
        for (scale, w) in &rows {
            let w = w.as_ref().expect("feasible at every scale");
            assert!(w.c_star <= last_c_star + 1e-6, "c* not decreasing at {scale}");
            last_c_star = w.c_star;
        }
        let (_, final_w) = rows.last().unwrap();
        let final_w = final_w.as_ref().unwrap();
        assert!(final_w.c_star - 2.0 <= 1e-2 * 2.0);
        assert!(final_w.c_double_star.exceeds(100.0));
        // The chi = 0 row reproduces the free window exactly.
        let zero = wave_window(&p.with_chi_scaled(0.0), 512, 1e-9).unwrap();
        assert!((zero.c_star - 2.0).abs() < 1e-9);
        assert_eq!(zero.c_double_star, UpperSpeed::Unbounded);
    }
}
