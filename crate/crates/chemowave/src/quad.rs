//! Deterministic quadrature for exponentially decaying integrands on (0, inf).
//!
//! Integrands may carry an integrable 1/sqrt(s) singularity at the origin;
//! the substitution s = t^2 removes it before any sampling happens. Composite
//! Simpson sums with interval doubling provide the error control, and the
//! truncation point comes from an analytic envelope bound, so results are
//! reproducible bit for bit.

use thiserror::Error;

/// Hard floor below which the doubling scheme cannot certify agreement.
pub const MIN_TOL: f64 = 1e-14;

const MAX_INTERVALS: usize = 1 << 22;

#[derive(Debug, Error, PartialEq)]
pub enum QuadError {
    #[error("requested tolerance {0:e} below the attainable floor {MIN_TOL:e}")]
    ToleranceTooTight(f64),
    #[error("Simpson refinement did not converge to tolerance {tol:e} on [{a}, {b}]")]
    NoConvergence { a: f64, b: f64, tol: f64 },
    #[error("invalid quadrature input: {0}")]
    BadInput(String),
}

/// Composite Simpson on [a, b] with interval doubling until two successive
/// refinements agree within `tol`. The final value carries the Richardson
/// correction of the last pair.
pub fn simpson_doubling<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64, QuadError> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(QuadError::BadInput(format!("bad interval [{a}, {b}]")));
    }
    if tol < MIN_TOL {
        return Err(QuadError::ToleranceTooTight(tol));
    }
    if a == b {
        return Ok(0.0);
    }

    let mut n = 8usize;
    let mut prev = simpson_fixed(f, a, b, n);
    loop {
        n *= 2;
        let cur = simpson_fixed(f, a, b, n);
        if (cur - prev).abs() <= tol {
            return Ok(cur + (cur - prev) / 15.0);
        }
        if n >= MAX_INTERVALS {
            return Err(QuadError::NoConvergence { a, b, tol });
        }
        prev = cur;
    }
}

fn simpson_fixed<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..n {
        let x = a + i as f64 * h;
        if i % 2 == 1 {
            odd += f(x);
        } else {
            even += f(x);
        }
    }
    (f(a) + f(b) + 4.0 * odd + 2.0 * even) * h / 3.0
}

/// Integrates `f` over (0, inf) where `|f(s)| <= scale * e^{-decay s} *
/// max(1, 1/sqrt(s))`. `kinks` lists interior points (in `s`) where `f` has a
/// derivative jump; each smooth piece is integrated separately.
///
/// The substitution s = t^2 turns the integral into `int 2 t f(t^2) dt`, which
/// is smooth at the origin even for 1/sqrt(s) integrands, and the truncation
/// point T is chosen so the analytic tail bound drops below `tol / 2`.
pub fn integrate_decaying<F: Fn(f64) -> f64>(
    f: &F,
    scale: f64,
    decay: f64,
    kinks: &[f64],
    tol: f64,
) -> Result<f64, QuadError> {
    if tol < MIN_TOL {
        return Err(QuadError::ToleranceTooTight(tol));
    }
    if scale < 0.0 || !scale.is_finite() {
        return Err(QuadError::BadInput(format!("bad envelope scale {scale}")));
    }
    if scale == 0.0 {
        return Ok(0.0);
    }
    if decay <= 0.0 {
        return Err(QuadError::BadInput(format!(
            "envelope decay rate must be positive, got {decay}"
        )));
    }

    // In t-space the envelope is <= 2 scale max(1, t) e^{-decay t^2}; for
    // T >= 1 the tail integral is bounded by (2 scale / decay) e^{-decay T^2}.
    let t_end = ((2.0 * scale / (decay * (tol / 2.0))).ln().max(1.0) / decay)
        .sqrt()
        .max(2.0);

    // At t = 0 the product 2 t f(t^2) is a 0 * inf form for s^{-1/2} kernels;
    // evaluating at a subnormal-safe tiny t recovers the finite limit.
    let g = |t: f64| {
        let t = t.max(1e-150);
        2.0 * t * f(t * t)
    };

    let mut cuts: Vec<f64> = vec![0.0];
    for &k in kinks {
        if k > 0.0 && k.sqrt() < t_end {
            cuts.push(k.sqrt());
        }
    }
    cuts.push(t_end);
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();

    let piece_tol = (tol / 2.0) / (cuts.len() - 1) as f64;
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += simpson_doubling(&g, w[0], w[1], piece_tol.max(MIN_TOL))?;
    }
    Ok(total)
}

/// Locates a sign change of `f` on (lo, hi) by coarse scanning followed by
/// bisection. Returns the root when exactly the scan finds one; the kernels
/// this serves cross at most once.
pub fn find_sign_change<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Option<f64> {
    const SCAN: usize = 512;
    let step = (hi - lo) / SCAN as f64;
    let mut a = lo;
    let mut fa = f(a);
    for i in 1..=SCAN {
        let b = lo + i as f64 * step;
        let fb = f(b);
        if fa == 0.0 {
            return Some(a);
        }
        if fa * fb < 0.0 {
            let (mut x0, mut x1) = (a, b);
            let mut f0 = fa;
            for _ in 0..100 {
                let m = 0.5 * (x0 + x1);
                let fm = f(m);
                if fm == 0.0 {
                    return Some(m);
                }
                if f0 * fm < 0.0 {
                    x1 = m;
                } else {
                    x0 = m;
                    f0 = fm;
                }
            }
            return Some(0.5 * (x0 + x1));
        }
        a = b;
        fa = fb;
    }
    None
}
