//! Full conditionals of (σ, θ, β) shared by the species and mixture samplers.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::gibbs::log_v_unchecked;
use crate::numerics::random::{beta, standard_normal, uniform};
use crate::numerics::special::log_poch;

/// Beta(a, b) prior; Beta(1, 1) is the uniform prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaPrior {
    pub a: f64,
    pub b: f64,
}

impl BetaPrior {
    pub const UNIFORM: BetaPrior = BetaPrior { a: 1.0, b: 1.0 };

    pub fn validate(&self, what: &str) -> Result<()> {
        if !(self.a > 0.0 && self.b > 0.0) {
            return invalid(format!("{what} prior needs positive Beta parameters"));
        }
        Ok(())
    }

    pub fn log_density(&self, x: f64) -> f64 {
        (self.a - 1.0) * x.ln() + (self.b - 1.0) * (-x).ln_1p()
    }
}

/// Gamma prior with shape–rate parameterization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl GammaPrior {
    pub fn validate(&self) -> Result<()> {
        if !(self.shape > 0.0 && self.rate > 0.0) {
            return invalid("strength prior needs positive Gamma parameters");
        }
        Ok(())
    }

    pub fn log_density(&self, x: f64) -> f64 {
        (self.shape - 1.0) * x.ln() - self.rate * x
    }
}

/// Priors on (σ, θ, β).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperPriors {
    pub sigma: BetaPrior,
    pub theta: GammaPrior,
    pub beta: BetaPrior,
}

impl Default for HyperPriors {
    fn default() -> Self {
        Self {
            sigma: BetaPrior::UNIFORM,
            theta: GammaPrior { shape: 2.0, rate: 0.02 },
            beta: BetaPrior::UNIFORM,
        }
    }
}

impl HyperPriors {
    pub fn validate(&self) -> Result<()> {
        self.sigma.validate("discount")?;
        self.theta.validate()?;
        self.beta.validate("contamination weight")
    }
}

/// Partition of the non-contaminant observations, as seen by the σ and θ conditionals.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseCounts {
    /// Number of non-contaminant observations.
    pub n: usize,
    /// Number of non-contaminant clusters.
    pub k: usize,
    /// (size, multiplicity) for cluster sizes of at least two.
    pub repeated: Vec<(usize, usize)>,
}

impl BaseCounts {
    pub fn from_sizes(n: usize, k: usize, sizes: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = sizes.into_iter().filter(|&s| s >= 2).collect();
        v.sort_unstable();
        let mut repeated: Vec<(usize, usize)> = Vec::new();
        for s in v {
            match repeated.last_mut() {
                Some((size, mult)) if *size == s => *mult += 1,
                _ => repeated.push((s, 1)),
            }
        }
        Self { n, k, repeated }
    }
}

/// Unnormalized log full conditional of σ.
pub fn log_sigma_target(sigma: f64, theta: f64, c: &BaseCounts, prior: &BetaPrior) -> f64 {
    if !(sigma > 0.0 && sigma < 1.0) || !(theta > -sigma) {
        return f64::NEG_INFINITY;
    }
    let blocks: f64 = c
        .repeated
        .iter()
        .map(|&(s, m)| m as f64 * log_poch(1.0 - sigma, (s - 1) as f64))
        .sum();
    prior.log_density(sigma) + log_v_unchecked(sigma, theta, c.n, c.k) + blocks
}

/// Unnormalized log full conditional of θ.
pub fn log_theta_target(theta: f64, sigma: f64, c: &BaseCounts, prior: &GammaPrior) -> f64 {
    if !(theta > 0.0) || !theta.is_finite() {
        return f64::NEG_INFINITY;
    }
    prior.log_density(theta) + log_v_unchecked(sigma, theta, c.n, c.k)
}

/// Random-walk Metropolis–Hastings on logit σ. Returns the new value and whether it moved.
pub fn mh_sigma<R: Rng + ?Sized>(
    sigma: f64,
    theta: f64,
    c: &BaseCounts,
    prior: &BetaPrior,
    sd: f64,
    rng: &mut R,
) -> (f64, bool) {
    let psi = (sigma / (1.0 - sigma)).ln() + sd * standard_normal(rng);
    let prop = 1.0 / (1.0 + (-psi).exp());
    if !(prop > 0.0 && prop < 1.0) {
        return (sigma, false);
    }
    let log_jac = |s: f64| s.ln() + (-s).ln_1p();
    let ratio = log_sigma_target(prop, theta, c, prior) - log_sigma_target(sigma, theta, c, prior)
        + log_jac(prop)
        - log_jac(sigma);
    if accept(ratio, rng) { (prop, true) } else { (sigma, false) }
}

/// Random-walk Metropolis–Hastings on log θ. Returns the new value and whether it moved.
pub fn mh_theta<R: Rng + ?Sized>(
    theta: f64,
    sigma: f64,
    c: &BaseCounts,
    prior: &GammaPrior,
    sd: f64,
    rng: &mut R,
) -> (f64, bool) {
    let prop = theta * (sd * standard_normal(rng)).exp();
    if !(prop > 0.0) || !prop.is_finite() {
        return (theta, false);
    }
    let ratio = log_theta_target(prop, sigma, c, prior) - log_theta_target(theta, sigma, c, prior)
        + prop.ln()
        - theta.ln();
    if accept(ratio, rng) { (prop, true) } else { (theta, false) }
}

fn accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    if log_ratio.is_nan() {
        return false;
    }
    log_ratio >= 0.0 || uniform(rng).ln() < log_ratio
}

/// Conjugate draw of β given n observations of which `contaminants` are structural.
pub fn draw_beta<R: Rng + ?Sized>(n: usize, contaminants: usize, prior: &BetaPrior, rng: &mut R) -> f64 {
    let b = beta(rng, prior.a + (n - contaminants) as f64, prior.b + contaminants as f64);
    // Keep β strictly inside (0, 1) so that log-weights stay finite.
    b.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Proposal scale with Robbins–Monro adaptation toward a target acceptance rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveScale {
    log_sd: f64,
    steps: u64,
}

pub const TARGET_ACCEPTANCE: f64 = 0.44;

impl AdaptiveScale {
    pub fn new(sd: f64) -> Self {
        Self { log_sd: sd.ln(), steps: 0 }
    }

    pub fn sd(&self) -> f64 {
        self.log_sd.exp()
    }

    pub fn adapt(&mut self, accepted: bool) {
        self.steps += 1;
        let gain = (self.steps as f64 + 1.0).powf(-0.6);
        let a = if accepted { 1.0 } else { 0.0 };
        self.log_sd = (self.log_sd + gain * (a - TARGET_ACCEPTANCE)).clamp(-10.0, 5.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::random::stream;

    #[test]
    fn base_counts_group_sizes() {
        let c = BaseCounts::from_sizes(12, 5, [1, 3, 2, 3, 3]);
        assert_eq!(c.repeated, vec![(2, 1), (3, 3)]);
    }

    #[test]
    fn tiny_proposal_always_accepts() {
        let c = BaseCounts::from_sizes(20, 6, [5, 5, 4, 3, 2, 1]);
        let mut rng = stream(4);
        let priors = HyperPriors::default();
        let mut acc = 0;
        let (mut s, mut t) = (0.4, 3.0);
        for _ in 0..1000 {
            let (ns, a) = mh_sigma(s, t, &c, &priors.sigma, 1e-9, &mut rng);
            s = ns;
            acc += a as usize;
            let (nt, b) = mh_theta(t, s, &c, &priors.theta, 1e-9, &mut rng);
            t = nt;
            acc += b as usize;
        }
        assert!(acc >= 1990, "{acc}");
    }

    #[test]
    fn giant_cluster_sigma_target() {
        // One cluster holding every observation: V_{n,1} (1-σ)_{n-1} with no σ^{k-1} factor.
        let n = 15;
        let c = BaseCounts::from_sizes(n, 1, [n]);
        let (t, prior) = (2.0, BetaPrior::UNIFORM);
        let f = |s: f64| log_sigma_target(s, t, &c, &prior);
        let direct = |s: f64| log_poch(1.0 - s, (n - 1) as f64) - log_poch(t + 1.0, (n - 1) as f64);
        for s in [0.1, 0.3, 0.7] {
            assert!((f(s) - f(0.5) - (direct(s) - direct(0.5))).abs() < 1e-12);
        }
    }

    #[test]
    fn adaptation_moves_toward_target() {
        let mut a = AdaptiveScale::new(1.0);
        for _ in 0..100 {
            a.adapt(false);
        }
        assert!(a.sd() < 1.0);
        let mut b = AdaptiveScale::new(1.0);
        for _ in 0..100 {
            b.adapt(true);
        }
        assert!(b.sd() > 1.0);
    }

    #[test]
    fn beta_draw_mean() {
        let mut rng = stream(5);
        let n = 50;
        let mean: f64 = (0..20_000).map(|_| draw_beta(n, 0, &BetaPrior::UNIFORM, &mut rng)).sum::<f64>() / 20_000.0;
        assert!((mean - (1.0 - 1.0 / (n as f64 + 2.0))).abs() < 1e-3);
    }
}
