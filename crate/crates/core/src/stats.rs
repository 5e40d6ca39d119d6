//! Prior and posterior expectations of cluster-count statistics.
//!
//! Posterior quantities depend on the observed sample only through
//! [`SampleSummary`]. Double sums run an outer loop over the latent
//! structural-singleton count and an inner loop over the number of
//! contaminant draws in the new sample; terms more than e^40 below the
//! largest weight are skipped and the rest accumulate with compensated
//! summation in a fixed (ascending) order.

use serde::{Deserialize, Serialize};

use crate::cgp::{mbar_log_weights, CgpParams, SampleSummary};
use crate::error::{invalid, Result};
use crate::numerics::special::{ln_binomial, ln_binomial_pmf, log_poch, KahanSum};

const TAIL_CUTOFF: f64 = 40.0;

/// (index, probability) pairs whose log weight is within the cutoff of the maximum.
fn significant(log_w: &[f64]) -> Vec<(usize, f64)> {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total = {
        let s: f64 = log_w.iter().map(|w| (w - max).exp()).sum();
        max + s.ln()
    };
    log_w
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > max - TAIL_CUTOFF)
        .map(|(i, w)| (i, (w - total).exp()))
        .collect()
}

/// Binomial(m, 1-β) masses for the number of contaminant draws.
fn contaminant_pmf(m: usize, beta: f64) -> Vec<(usize, f64)> {
    let lw: Vec<f64> = (0..=m).map(|l| ln_binomial_pmf(m as u64, l as u64, 1.0 - beta)).collect();
    significant(&lw)
}

fn mbar_weights(p: &CgpParams, s: SampleSummary) -> Vec<(usize, f64)> {
    significant(&mbar_log_weights(p.sigma(), p.theta(), p.beta, s))
}

/// Expected number of new clusters of size r among j base draws, given a base
/// sub-sample of size nb with kb clusters.
fn new_of_size(sigma: f64, theta: f64, nb: usize, kb: usize, j: usize, r: usize) -> f64 {
    if j < r {
        return 0.0;
    }
    let a = theta + nb as f64;
    let lead = if nb == 0 { 0.0 } else { ((theta + kb as f64 * sigma) / a).ln() };
    (ln_binomial(j as u64, r as u64) + log_poch(1.0 - sigma, (r - 1) as f64) + lead
        + log_poch(a + sigma, (j - r) as f64)
        - log_poch(a + 1.0, (j - 1) as f64))
        .exp()
}

/// [`new_of_size`] for j = lo..=hi, advancing in j by the ratio
/// (j+1)/(j+1−r) · (a+σ+j−r)/(a+j) instead of fresh log-gamma calls.
fn new_of_size_range(sigma: f64, theta: f64, nb: usize, kb: usize, lo: usize, hi: usize, r: usize) -> Vec<f64> {
    let a = theta + nb as f64;
    let mut out = vec![0.0; hi + 1 - lo];
    let start = lo.max(r);
    if start > hi {
        return out;
    }
    let mut log_f = new_of_size(sigma, theta, nb, kb, start, r).ln();
    for j in start..=hi {
        out[j - lo] = log_f.exp();
        let jf = j as f64;
        log_f += ((jf + 1.0) / (jf + 1.0 - r as f64)).ln() + ((a + sigma + jf - r as f64) / (a + jf)).ln();
    }
    out
}

/// Expected number of new clusters of size r among m − l base draws, averaged
/// over the contaminant-count masses `pmf`.
fn averaged_new_of_size(sigma: f64, theta: f64, nb: usize, kb: usize, m: usize, r: usize, pmf: &[(usize, f64)]) -> f64 {
    let lmin = pmf.iter().map(|x| x.0).min().unwrap_or(0);
    let lmax = pmf.iter().map(|x| x.0).max().unwrap_or(0);
    let table = new_of_size_range(sigma, theta, nb, kb, m - lmax, m - lmin, r);
    let mut acc = KahanSum::new();
    for &(l, wl) in pmf {
        acc.add(wl * table[m - l - (m - lmax)]);
    }
    acc.value()
}

/// Expected number of new clusters among j further base draws, given a base
/// sub-sample of size nb with kb clusters.
enum NewClusters {
    Table(Vec<f64>),
    /// (kb + θ/σ)((a+σ)_j/(a)_j − 1) with the ratio taken as
    /// ln (a+j)_σ − ln (a)_σ, which stays accurate for small σ.
    Closed { lead: f64, a: f64, sigma: f64, offset: f64 },
}

impl NewClusters {
    fn new(sigma: f64, theta: f64, nb: usize, kb: usize, m: usize) -> Self {
        let a = theta + nb as f64;
        if sigma > 0.0 && a > 0.0 {
            return NewClusters::Closed { lead: kb as f64 + theta / sigma, a, sigma, offset: log_poch(a, sigma) };
        }
        let mut out = Vec::with_capacity(m + 1);
        out.push(0.0);
        if sigma == 0.0 {
            let mut acc = KahanSum::new();
            for i in 0..m {
                acc.add(theta / (a + i as f64));
                out.push(acc.value());
            }
        } else {
            // Empty base sample with θ ≤ 0: (θ)_j has a non-positive first factor.
            for j in 1..=m {
                let ratio = (log_poch(theta + sigma, j as f64) - log_poch(theta + 1.0, (j - 1) as f64)).exp();
                out.push((ratio - theta) / sigma);
            }
        }
        NewClusters::Table(out)
    }

    fn at(&self, j: usize) -> f64 {
        match self {
            NewClusters::Table(t) => t[j],
            NewClusters::Closed { .. } if j == 0 => 0.0,
            NewClusters::Closed { lead, a, sigma, offset } => {
                let gap = if j <= 32 {
                    (0..j).map(|i| (sigma / (a + i as f64)).ln_1p()).sum()
                } else {
                    log_poch(a + j as f64, *sigma) - offset
                };
                lead * gap.exp_m1()
            }
        }
    }
}

/// E[K_n] under the prior.
pub fn expected_kn(p: &CgpParams, n: usize) -> Result<f64> {
    if n == 0 {
        return invalid("expected_kn needs n >= 1");
    }
    let table = NewClusters::new(p.sigma(), p.theta(), 0, 0, n);
    let mut acc = KahanSum::new();
    for (l, w) in contaminant_pmf(n, p.beta) {
        acc.add(w * (table.at(n - l) + l as f64));
    }
    Ok(acc.value())
}

/// E[K_n] through the Beta-moment representation (needs σ > 0).
pub fn expected_kn_beta(p: &CgpParams, n: usize) -> Result<f64> {
    let (sigma, theta, beta) = (p.sigma(), p.theta(), p.beta);
    if sigma == 0.0 {
        return invalid("the Beta representation of E[K_n] needs a positive discount");
    }
    if n == 0 {
        return invalid("expected_kn needs n >= 1");
    }
    // E[B^j] for B ~ Beta(θ+σ, 1−σ).
    let moment = |j: usize| (log_poch(theta + sigma, j as f64) - log_poch(theta + 1.0, j as f64)).exp();
    let e1: KahanSum = (0..=n)
        .map(|j| ln_binomial_pmf(n as u64, j as u64, beta).exp() * moment(j))
        .collect();
    let e2: KahanSum = (0..n)
        .map(|i| ln_binomial_pmf((n - 1) as u64, i as u64, beta).exp() * moment(i + 1))
        .collect();
    let nf = n as f64;
    Ok(theta / sigma * (e1.value() - 1.0) + nf * beta / sigma * e2.value() + nf * (1.0 - beta))
}

/// E[M_{n,r}], the expected number of clusters of size r among n prior draws.
pub fn expected_mnr(p: &CgpParams, n: usize, r: usize) -> Result<f64> {
    if r == 0 || r > n {
        return invalid(format!("cluster size must lie in 1..={n}, got {r}"));
    }
    let (sigma, theta) = (p.sigma(), p.theta());
    let mut acc = KahanSum::new();
    if r == 1 {
        acc.add(n as f64 * (1.0 - p.beta));
    }
    for (l, w) in contaminant_pmf(n, p.beta) {
        acc.add(w * new_of_size(sigma, theta, 0, 0, n - l, r));
    }
    Ok(acc.value())
}

/// E[M_{n,r}] through the Beta-moment representation.
pub fn expected_mnr_beta(p: &CgpParams, n: usize, r: usize) -> Result<f64> {
    if r == 0 || r > n {
        return invalid(format!("cluster size must lie in 1..={n}, got {r}"));
    }
    let (sigma, theta, beta) = (p.sigma(), p.theta(), p.beta);
    let rf = r as f64;
    // E[(B β + 1 − β)^{n−r}] for B ~ Beta(θ+σ, r−σ).
    let e: KahanSum = (0..=n - r)
        .map(|j| {
            ln_binomial_pmf((n - r) as u64, j as u64, beta).exp()
                * (log_poch(theta + sigma, j as f64) - log_poch(theta + rf, j as f64)).exp()
        })
        .collect();
    let lead = (log_poch(1.0 - sigma, rf - 1.0) - log_poch(theta + 1.0, rf - 1.0)
        + ln_binomial(n as u64, r as u64)
        + rf * beta.ln())
    .exp();
    let extra = if r == 1 { n as f64 * (1.0 - beta) } else { 0.0 };
    Ok(extra + lead * e.value())
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 {
        return invalid("the additional sample size must be at least 1");
    }
    Ok(())
}

/// Posterior expected number of new values seen exactly once in m further draws.
pub fn posterior_expected_nm1(s: &SampleSummary, p: &CgpParams, m: usize) -> Result<f64> {
    check_m(m)?;
    s.validate()?;
    let (sigma, theta) = (p.sigma(), p.theta());
    let pmf = contaminant_pmf(m, p.beta);
    let contaminants: f64 = pmf.iter().map(|&(l, w)| w * l as f64).sum();
    let mut acc = KahanSum::new();
    for (mb, wm) in mbar_weights(p, *s) {
        acc.add(wm * (averaged_new_of_size(sigma, theta, s.n - mb, s.k - mb, m, 1, &pmf) + contaminants));
    }
    Ok(acc.value())
}

/// Posterior expected number of new values seen exactly r ≥ 2 times in m further draws.
pub fn posterior_expected_nmr(s: &SampleSummary, p: &CgpParams, m: usize, r: usize) -> Result<f64> {
    check_m(m)?;
    if r < 2 {
        return invalid(format!("this statistic needs r >= 2, got {r}"));
    }
    s.validate()?;
    if m < r {
        return Ok(0.0);
    }
    let (sigma, theta) = (p.sigma(), p.theta());
    let pmf = contaminant_pmf(m, p.beta);
    let mut acc = KahanSum::new();
    for (mb, wm) in mbar_weights(p, *s) {
        acc.add(wm * averaged_new_of_size(sigma, theta, s.n - mb, s.k - mb, m, r, &pmf));
    }
    Ok(acc.value())
}

/// Posterior expected number of new distinct values in m further draws.
pub fn posterior_expected_km(s: &SampleSummary, p: &CgpParams, m: usize) -> Result<f64> {
    check_m(m)?;
    s.validate()?;
    let (sigma, theta) = (p.sigma(), p.theta());
    let pmf = contaminant_pmf(m, p.beta);
    let mut acc = KahanSum::new();
    for (mb, wm) in mbar_weights(p, *s) {
        let table = NewClusters::new(sigma, theta, s.n - mb, s.k - mb, m);
        for &(l, wl) in &pmf {
            acc.add(wm * wl * (table.at(m - l) + l as f64));
        }
    }
    Ok(acc.value())
}

/// Prior and posterior cluster-count expectations gathered in one place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesStatistics {
    pub expected_kn: f64,
    pub expected_mn1: f64,
    pub expected_mnr: Vec<(usize, f64)>,
    pub posterior_expected_km: f64,
    pub posterior_expected_nm1: f64,
    pub posterior_expected_nmr: Vec<(usize, f64)>,
}

/// Prior statistics for a sample of size `s.n` and posterior statistics for
/// `m` further draws, for every cluster size in `sizes` (sizes below 2 are ignored
/// for the posterior part).
pub fn species_statistics(p: &CgpParams, s: &SampleSummary, m: usize, sizes: &[usize]) -> Result<SpeciesStatistics> {
    if s.n == 0 {
        return invalid("prior statistics need a non-empty sample size");
    }
    let mut prior_sizes = Vec::new();
    let mut posterior_sizes = Vec::new();
    for &r in sizes {
        if r >= 1 && r <= s.n {
            prior_sizes.push((r, expected_mnr(p, s.n, r)?));
        }
        if r >= 2 {
            posterior_sizes.push((r, posterior_expected_nmr(s, p, m, r)?));
        }
    }
    Ok(SpeciesStatistics {
        expected_kn: expected_kn(p, s.n)?,
        expected_mn1: expected_mnr(p, s.n, 1)?,
        expected_mnr: prior_sizes,
        posterior_expected_km: posterior_expected_km(s, p, m)?,
        posterior_expected_nm1: posterior_expected_nm1(s, p, m)?,
        posterior_expected_nmr: posterior_sizes,
    })
}
