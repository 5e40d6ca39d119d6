//! Gibbs-type weight sequences V_{n,k} in log space.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::special::log_poch;

/// A source of Gibbs-type weights.
///
/// Implementations must satisfy V_{n,k} = (n − σk) V_{n+1,k} + V_{n+1,k+1}
/// with V_{1,1} = 1.
pub trait GibbsWeights {
    /// log V_{n,k}; defined for 1 ≤ k ≤ n and for (0, 0).
    fn log_v(&self, n: usize, k: usize) -> Result<f64>;

    /// The discount σ.
    fn discount(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GibbsFamily {
    PitmanYor { sigma: f64, theta: f64 },
    Dirichlet { theta: f64 },
}

impl GibbsFamily {
    pub fn pitman_yor(sigma: f64, theta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&sigma) {
            return invalid(format!("discount must lie in [0, 1), got {sigma}"));
        }
        if !(theta > -sigma) || !theta.is_finite() {
            return invalid(format!("strength must exceed -discount, got theta={theta}, sigma={sigma}"));
        }
        if sigma == 0.0 && !(theta > 0.0) {
            return invalid("a zero discount needs a positive strength");
        }
        Ok(GibbsFamily::PitmanYor { sigma, theta })
    }

    pub fn dirichlet(theta: f64) -> Result<Self> {
        if !(theta > 0.0) || !theta.is_finite() {
            return invalid(format!("Dirichlet strength must be positive, got {theta}"));
        }
        Ok(GibbsFamily::Dirichlet { theta })
    }

    /// Discount σ (0 for the Dirichlet case).
    pub fn sigma(&self) -> f64 {
        match *self {
            GibbsFamily::PitmanYor { sigma, .. } => sigma,
            GibbsFamily::Dirichlet { .. } => 0.0,
        }
    }

    /// Strength θ.
    pub fn theta(&self) -> f64 {
        match *self {
            GibbsFamily::PitmanYor { theta, .. } | GibbsFamily::Dirichlet { theta } => theta,
        }
    }

    /// log V_{n,k}.
    pub fn log_v(&self, n: usize, k: usize) -> Result<f64> {
        if (n, k) == (0, 0) {
            return Ok(0.0);
        }
        if k == 0 || k > n {
            return Err(Error::InvalidParameter(format!("log_v needs 1 <= k <= n, got n={n}, k={k}")));
        }
        Ok(log_v_unchecked(self.sigma(), self.theta(), n, k))
    }
}

impl GibbsWeights for GibbsFamily {
    fn log_v(&self, n: usize, k: usize) -> Result<f64> {
        GibbsFamily::log_v(self, n, k)
    }

    fn discount(&self) -> f64 {
        self.sigma()
    }
}

/// log V_{n,k} for the Pitman-Yor family without range checks.
///
/// Product form: Π_{i=1}^{k-1}(θ + iσ) / (θ+1)_{n-1}.
pub(crate) fn log_v_unchecked(sigma: f64, theta: f64, n: usize, k: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let km1 = (k - 1) as f64;
    let num = if sigma == 0.0 {
        km1 * theta.ln()
    } else {
        km1 * sigma.ln() + log_poch(theta / sigma + 1.0, km1)
    };
    num - log_poch(theta + 1.0, (n - 1) as f64)
}

/// Outcome of a recurrence check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecurrenceCheck {
    pub holds: bool,
    /// Largest relative deviation observed.
    pub worst: f64,
    /// (n, k) at which the largest deviation occurred.
    pub at: (usize, usize),
}

/// Verifies V_{n,k} = (n − σk) V_{n+1,k} + V_{n+1,k+1} for 1 ≤ k ≤ n ≤ n_max.
pub fn check_recurrence<W: GibbsWeights + ?Sized>(w: &W, n_max: usize, tol: f64) -> Result<RecurrenceCheck> {
    let sigma = w.discount();
    let mut worst = 0.0;
    let mut at = (1, 1);
    for n in 1..=n_max {
        for k in 1..=n {
            let lhs = w.log_v(n, k)?;
            let a = w.log_v(n + 1, k)?;
            let b = w.log_v(n + 1, k + 1)?;
            // Compare in ratio form so that tiny weights do not underflow.
            let rhs_over_lhs = (n as f64 - sigma * k as f64) * (a - lhs).exp() + (b - lhs).exp();
            let dev = (rhs_over_lhs - 1.0).abs();
            if !(dev <= worst) {
                worst = dev;
                at = (n, k);
            }
        }
    }
    Ok(RecurrenceCheck { holds: worst <= tol, worst, at })
}
