//! Physical parameters of the attraction-repulsion chemotaxis model.
//!
//! The model couples a cell density `u` to an attracting chemical `v1` and a
//! repelling chemical `v2`:
//!
//! ```text
//!   u_t      = u_xx + (u (chi2 v2 - chi1 v1)_x)_x + u (a - b u)
//!   tau v1_t = v1_xx - lambda1 v1 + mu1 u
//!   tau v2_t = v2_xx - lambda2 v2 + mu2 u
//! ```

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("parameter `{0}` must be finite")]
    NotFinite(&'static str),
    #[error("parameter `{0}` must be strictly positive, got {1}")]
    NotPositive(&'static str, f64),
    #[error("parameter `{0}` must be nonnegative, got {1}")]
    Negative(&'static str, f64),
}

/// Which chemical a solve refers to: `v1` attracts cells, `v2` repels them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Species {
    Attractant,
    Repellent,
}

/// The nine constants of the model. `tau` scales the chemical relaxation
/// time, `chi_i` are chemotactic sensitivities, `lambda_i` chemical decay
/// rates, `mu_i` chemical production rates, and `a`, `b` the logistic growth
/// and self-limitation rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub tau: f64,
    pub chi1: f64,
    pub chi2: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub a: f64,
    pub b: f64,
}

impl ModelParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        tau: f64,
        chi1: f64,
        chi2: f64,
        lambda1: f64,
        lambda2: f64,
        mu1: f64,
        mu2: f64,
        a: f64,
        b: f64,
    ) -> Result<Self, ParamError> {
        let nonneg = [("tau", tau), ("chi1", chi1), ("chi2", chi2)];
        let positive = [
            ("lambda1", lambda1),
            ("lambda2", lambda2),
            ("mu1", mu1),
            ("mu2", mu2),
            ("a", a),
            ("b", b),
        ];
        for (name, v) in nonneg.iter().chain(positive.iter()) {
            if !v.is_finite() {
                return Err(ParamError::NotFinite(name));
            }
        }
        for (name, v) in nonneg {
            if v < 0.0 {
                return Err(ParamError::Negative(name, v));
            }
        }
        for (name, v) in positive {
            if v <= 0.0 {
                return Err(ParamError::NotPositive(name, v));
            }
        }
        Ok(Self {
            tau,
            chi1,
            chi2,
            lambda1,
            lambda2,
            mu1,
            mu2,
            a,
            b,
        })
    }

    /// Plain logistic model without chemotaxis (`chi1 = chi2 = 0`).
    pub fn fisher_kpp(a: f64, b: f64) -> Result<Self, ParamError> {
        Self::new(1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, a, b)
    }

    /// Effective quadratic damping `b + chi2 mu2 - chi1 mu1` of the expanded
    /// cell equation. Positivity is required by the wave construction but is
    /// deliberately not enforced at construction, so the kernel constants stay
    /// computable for any admissible parameters.
    pub fn quad_damping(&self) -> f64 {
        self.b + self.chi2 * self.mu2 - self.chi1 * self.mu1
    }

    pub fn quad_damping_positive(&self) -> bool {
        self.quad_damping() > 0.0
    }

    /// `chi2 mu2 - chi1 mu1`, the net signed mass of the kernel difference.
    pub fn signal_imbalance(&self) -> f64 {
        self.chi2 * self.mu2 - self.chi1 * self.mu1
    }

    /// Same parameters with both sensitivities scaled by `s`.
    pub fn with_chi_scaled(&self, s: f64) -> Self {
        Self {
            chi1: self.chi1 * s,
            chi2: self.chi2 * s,
            ..*self
        }
    }

    pub fn lambda(&self, sp: Species) -> f64 {
        match sp {
            Species::Attractant => self.lambda1,
            Species::Repellent => self.lambda2,
        }
    }

    pub fn production(&self, sp: Species) -> f64 {
        match sp {
            Species::Attractant => self.mu1,
            Species::Repellent => self.mu2,
        }
    }

    /// Equilibrium `(a/b, a mu1/(b lambda1), a mu2/(b lambda2))`.
    pub fn positive_equilibrium(&self) -> (f64, f64, f64) {
        let u = self.a / self.b;
        (
            u,
            u * self.mu1 / self.lambda1,
            u * self.mu2 / self.lambda2,
        )
    }
}
