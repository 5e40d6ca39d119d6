//! Synthetic data for the discrete and mixture simulation designs.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_lr;

use crate::cgp::{sample_sequence, CgpParams, LabeledSequence};
use crate::error::{invalid, Result};
use crate::numerics::linalg::DataMatrix;
use crate::numerics::random::{standard_normal, stream, uniform};

/// Contaminated Pitman-Yor sample of size n.
pub fn gen_discrete_scenario(theta: f64, sigma: f64, beta: f64, n: usize, seed: u64) -> Result<LabeledSequence> {
    let p = CgpParams::pitman_yor(sigma, theta, beta)?;
    Ok(sample_sequence(&p, n, &mut stream(seed)))
}

/// Quantile of the chi-square distribution with `d` degrees of freedom.
pub fn chi2_quantile(d: usize, q: f64) -> Result<f64> {
    if d == 0 {
        return invalid("chi-square degrees of freedom must be at least 1");
    }
    if !(q > 0.0 && q < 1.0) {
        return invalid(format!("quantile level must lie in (0, 1), got {q}"));
    }
    let cdf = |x: f64| gamma_lr(0.5 * d as f64, 0.5 * x);
    let mut hi = d as f64 + 10.0;
    while cdf(hi) < q {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticMixtureConfig {
    pub d: usize,
    /// Number of inliers.
    pub m: usize,
    /// Number of outliers.
    pub s: usize,
    /// Outlier scaling constant.
    pub c: f64,
    pub seed: u64,
}

impl SyntheticMixtureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.m == 0 {
            return invalid("synthetic mixture needs d ≥ 1 and m ≥ 1");
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return invalid(format!("outlier scale must be positive, got {}", self.c));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSample {
    pub data: DataMatrix,
    /// True for outlier rows.
    pub outlier: Vec<bool>,
}

/// Radius outside of which N(0, 9I) proposals are kept as outliers.
pub fn outlier_radius(d: usize) -> Result<f64> {
    Ok(3.0 * chi2_quantile(d, 0.9)?.sqrt())
}

/// One draw from N(0, 9I) restricted to ‖y‖ > `radius`, by rejection.
/// Returns the point and the number of proposals used.
pub fn sample_outlier<R: Rng + ?Sized>(d: usize, radius: f64, rng: &mut R) -> (Vec<f64>, usize) {
    let mut tries = 0;
    loop {
        tries += 1;
        let y: Vec<f64> = (0..d).map(|_| 3.0 * standard_normal(rng)).collect();
        if y.iter().map(|v| v * v).sum::<f64>().sqrt() > radius {
            return (y, tries);
        }
    }
}

/// Inliers from an equal mixture of N(−3·1, I) and N(3·1, I) followed by
/// `s` scaled outliers.
pub fn gen_mixture_with_outliers(cfg: &SyntheticMixtureConfig) -> Result<MixtureSample> {
    cfg.validate()?;
    let mut rng = stream(cfg.seed);
    let radius = outlier_radius(cfg.d)?;
    let n = cfg.m + cfg.s;
    let mut data = Vec::with_capacity(n * cfg.d);
    for _ in 0..cfg.m {
        let center = if uniform(&mut rng) < 0.5 { -3.0 } else { 3.0 };
        data.extend((0..cfg.d).map(|_| center + standard_normal(&mut rng)));
    }
    for _ in 0..cfg.s {
        let (y, _) = sample_outlier(cfg.d, radius, &mut rng);
        data.extend(y.into_iter().map(|v| cfg.c * v));
    }
    let outlier = (0..n).map(|i| i >= cfg.m).collect();
    Ok(MixtureSample { data: DataMatrix::new(n, cfg.d, data)?, outlier })
}
