//! Partition probabilities, predictive rules and samplers of the contaminated process.

use std::collections::HashMap;
use std::hash::Hash;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gibbs::{log_v_unchecked, GibbsFamily, GibbsWeights};
use crate::numerics::random::uniform;
use crate::numerics::special::{ln_binomial, ln_gamma, log_poch, lse, xlny};

/// Whether contaminant and base draws come from the same diffuse law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SourceRelation {
    #[default]
    Shared,
    Distinct,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CgpParams {
    pub family: GibbsFamily,
    /// Weight of the discrete component; 1 switches contamination off.
    pub beta: f64,
    pub sources: SourceRelation,
}

impl CgpParams {
    pub fn new(family: GibbsFamily, beta: f64) -> Result<Self> {
        Self::with_sources(family, beta, SourceRelation::Shared)
    }

    pub fn with_sources(family: GibbsFamily, beta: f64, sources: SourceRelation) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return invalid(format!("contamination weight must lie in (0, 1], got {beta}"));
        }
        Ok(Self { family, beta, sources })
    }

    /// Contaminated Pitman-Yor shorthand.
    pub fn pitman_yor(sigma: f64, theta: f64, beta: f64) -> Result<Self> {
        Self::new(GibbsFamily::pitman_yor(sigma, theta)?, beta)
    }

    pub fn sigma(&self) -> f64 {
        self.family.sigma()
    }

    pub fn theta(&self) -> f64 {
        self.family.theta()
    }

    /// Same family with contamination switched off.
    pub fn without_contamination(&self) -> Self {
        Self { beta: 1.0, ..*self }
    }
}

/// Cluster sizes (n_1, …, n_k), stored with singletons first and sizes ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrequencyVector {
    freqs: Vec<usize>,
    n: usize,
    m1: usize,
}

impl FrequencyVector {
    pub fn new(mut freqs: Vec<usize>) -> Result<Self> {
        if freqs.is_empty() {
            return Err(Error::Empty("a frequency vector needs at least one cluster"));
        }
        if freqs.contains(&0) {
            return invalid("cluster sizes must be positive");
        }
        freqs.sort_unstable();
        let n = freqs.iter().sum();
        let m1 = freqs.iter().take_while(|&&f| f == 1).count();
        Ok(Self { freqs, n, m1 })
    }

    /// Counts how often each distinct label occurs.
    pub fn from_labels<T: Hash + Eq>(labels: &[T]) -> Result<Self> {
        let mut counts: HashMap<&T, usize> = HashMap::new();
        for l in labels {
            *counts.entry(l).or_insert(0) += 1;
        }
        Self::new(counts.into_values().collect())
    }

    pub fn freqs(&self) -> &[usize] {
        &self.freqs
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.freqs.len()
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn summary(&self) -> SampleSummary {
        SampleSummary { n: self.n, k: self.k(), m1: self.m1 }
    }

    /// Number of clusters of size `r`.
    pub fn count_of_size(&self, r: usize) -> usize {
        self.freqs.iter().filter(|&&f| f == r).count()
    }
}

/// The (n, k, m1) triple that all posterior quantities depend on.
///
/// Unlike [`FrequencyVector`] this admits the empty sample n = k = m1 = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub n: usize,
    pub k: usize,
    pub m1: usize,
}

impl SampleSummary {
    pub fn new(n: usize, k: usize, m1: usize) -> Result<Self> {
        let s = Self { n, k, m1 };
        s.validate()?;
        Ok(s)
    }

    pub fn empty() -> Self {
        Self { n: 0, k: 0, m1: 0 }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let Self { n, k, m1 } = *self;
        if n == 0 {
            if k != 0 || m1 != 0 {
                return invalid("an empty sample has no clusters");
            }
            return Ok(());
        }
        if k == 0 || k > n || m1 > k {
            return invalid(format!("inconsistent counts n={n}, k={k}, m1={m1}"));
        }
        // Non-singleton clusters hold at least two observations each.
        if n - m1 < 2 * (k - m1) {
            return invalid(format!("inconsistent counts n={n}, k={k}, m1={m1}"));
        }
        if k == m1 && n != k {
            return invalid(format!("inconsistent counts n={n}, k={k}, m1={m1}"));
        }
        Ok(())
    }
}

/// Latent flags for the m1 singletons; `false` marks a structural (contaminant) singleton.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatentSingletonState {
    pub flags: Vec<bool>,
}

impl LatentSingletonState {
    pub fn new(flags: Vec<bool>) -> Self {
        Self { flags }
    }

    /// No structural singletons among `m1`.
    pub fn all_base(m1: usize) -> Self {
        Self { flags: vec![true; m1] }
    }

    pub fn mbar(&self) -> usize {
        self.flags.iter().filter(|f| !**f).count()
    }
}

/// Cluster labels per observation with contaminant flags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSequence {
    pub labels: Vec<usize>,
    pub contaminant: Vec<bool>,
}

impl LabeledSequence {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn contaminant_count(&self) -> usize {
        self.contaminant.iter().filter(|c| **c).count()
    }

    pub fn frequency_vector(&self) -> Result<FrequencyVector> {
        FrequencyVector::from_labels(&self.labels)
    }

    /// Checks that every contaminant label occurs exactly once.
    pub fn validate(&self) -> Result<()> {
        if self.labels.len() != self.contaminant.len() {
            return Err(Error::DimensionMismatch { expected: self.labels.len(), got: self.contaminant.len() });
        }
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for l in &self.labels {
            *counts.entry(*l).or_insert(0) += 1;
        }
        for (l, c) in self.labels.iter().zip(&self.contaminant) {
            if *c && counts[l] != 1 {
                return invalid(format!("contaminant label {l} is repeated"));
            }
        }
        Ok(())
    }
}

/// Unnormalized log posterior weights of the latent structural-singleton count.
pub(crate) fn mbar_log_weights(sigma: f64, theta: f64, beta: f64, s: SampleSummary) -> Vec<f64> {
    let SampleSummary { n, k, m1 } = s;
    if beta >= 1.0 || m1 == 0 {
        let mut w = vec![f64::NEG_INFINITY; m1 + 1];
        w[0] = 0.0;
        return w;
    }
    let (lb, l1b) = (beta.ln(), (1.0 - beta).ln());
    (0..=m1)
        .map(|mb| {
            ln_binomial(m1 as u64, mb as u64)
                + (n - mb) as f64 * lb
                + mb as f64 * l1b
                + log_v_unchecked(sigma, theta, n - mb, k - mb)
        })
        .collect()
}

fn normalized(mut w: Vec<f64>) -> Vec<f64> {
    let total = lse(&w);
    for x in w.iter_mut() {
        *x -= total;
    }
    w
}

fn log_block_product(fv: &FrequencyVector, sigma: f64) -> f64 {
    fv.freqs().iter().map(|&f| log_poch(1.0 - sigma, (f - 1) as f64)).sum()
}

/// log EPPF of the contaminated process.
pub fn eppf_log(fv: &FrequencyVector, p: &CgpParams) -> Result<f64> {
    eppf_log_with(fv, &p.family, p.beta)
}

/// log EPPF for an arbitrary weight sequence, mixing over the latent count.
pub fn eppf_log_with<W: GibbsWeights + ?Sized>(fv: &FrequencyVector, w: &W, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return invalid(format!("contamination weight must lie in (0, 1], got {beta}"));
    }
    let (n, k, m1) = (fv.n(), fv.k(), fv.m1());
    let tail = log_block_product(fv, w.discount());
    if beta == 1.0 || m1 == 0 {
        return Ok(xlny(n as f64, beta) + w.log_v(n, k)? + tail);
    }
    let (lb, l1b) = (beta.ln(), (1.0 - beta).ln());
    let mut terms = Vec::with_capacity(m1 + 1);
    for mb in 0..=m1 {
        terms.push(
            ln_binomial(m1 as u64, mb as u64)
                + (n - mb) as f64 * lb
                + mb as f64 * l1b
                + w.log_v(n - mb, k - mb)?,
        );
    }
    Ok(lse(&terms) + tail)
}

/// log EPPF through the Gamma-function closed form of the Pitman-Yor weights.
///
/// Requires θ > 0; agrees with [`eppf_log`] wherever both are defined.
pub fn eppf_log_py(fv: &FrequencyVector, p: &CgpParams) -> Result<f64> {
    let (sigma, theta, beta) = (p.sigma(), p.theta(), p.beta);
    if !(theta > 0.0) {
        return invalid("the closed form needs a positive strength");
    }
    let (n, k, m1) = (fv.n(), fv.k(), fv.m1());
    let hi = if beta == 1.0 { 0 } else { m1 };
    let terms: Vec<f64> = (0..=hi)
        .map(|mb| {
            let kk = (k - mb) as f64;
            let v = if sigma == 0.0 {
                kk * theta.ln()
            } else {
                kk * sigma.ln() + ln_gamma(theta / sigma + kk) - ln_gamma(theta / sigma)
            };
            ln_binomial(m1 as u64, mb as u64)
                + xlny((n - mb) as f64, beta)
                + xlny(mb as f64, 1.0 - beta)
                + v
                - (ln_gamma(theta + (n - mb) as f64) - ln_gamma(theta))
        })
        .collect();
    Ok(lse(&terms) + log_block_product(fv, sigma))
}

/// Normalized log posterior of the structural-singleton count over {0..m1}.
pub fn mbar_log_posterior(fv: &FrequencyVector, p: &CgpParams) -> Vec<f64> {
    normalized(mbar_log_weights(p.sigma(), p.theta(), p.beta, fv.summary()))
}

/// Posterior probabilities of the structural-singleton count over {0..m1}.
pub fn mbar_posterior(fv: &FrequencyVector, p: &CgpParams) -> Vec<f64> {
    mbar_log_posterior(fv, p).into_iter().map(f64::exp).collect()
}

pub(crate) fn mbar_posterior_summary(p: &CgpParams, s: SampleSummary) -> Vec<f64> {
    normalized(mbar_log_weights(p.sigma(), p.theta(), p.beta, s))
        .into_iter()
        .map(f64::exp)
        .collect()
}

/// Predictive weights given the latent singleton flags.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalPredictive {
    pub contaminant_new: f64,
    pub base_new: f64,
    /// One weight per cluster, in the canonical order of the frequency vector.
    pub clusters: Vec<f64>,
}

impl ConditionalPredictive {
    pub fn total(&self) -> f64 {
        self.contaminant_new + self.base_new + self.clusters.iter().sum::<f64>()
    }
}

// V_{n'+1,k'+1}/V_{n',k'} and V_{n'+1,k'}/V_{n',k'} on the base sub-sample.
fn v_ratios(family: &GibbsFamily, n: usize, k: usize) -> Result<(f64, f64)> {
    let base = family.log_v(n, k)?;
    let new = (family.log_v(n + 1, k + 1)? - base).exp();
    let old = if k >= 1 { (family.log_v(n + 1, k)? - base).exp() } else { 0.0 };
    Ok((new, old))
}

/// Predictive distribution of the next observation given which singletons are structural.
pub fn predictive_conditional(
    fv: &FrequencyVector,
    latent: &LatentSingletonState,
    p: &CgpParams,
) -> Result<ConditionalPredictive> {
    if latent.flags.len() != fv.m1() {
        return Err(Error::DimensionMismatch { expected: fv.m1(), got: latent.flags.len() });
    }
    let mb = latent.mbar();
    let (beta, sigma) = (p.beta, p.sigma());
    let (r_new, r_old) = v_ratios(&p.family, fv.n() - mb, fv.k() - mb)?;
    let clusters = fv
        .freqs()
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            if i < fv.m1() && !latent.flags[i] {
                0.0
            } else {
                beta * (f as f64 - sigma) * r_old
            }
        })
        .collect();
    Ok(ConditionalPredictive { contaminant_new: 1.0 - beta, base_new: beta * r_new, clusters })
}

/// Predictive distribution with the latent flags integrated out.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalPredictive {
    /// Probability that the next observation is a new value from either source.
    pub new: f64,
    /// One weight per cluster, in the canonical order of the frequency vector.
    pub clusters: Vec<f64>,
}

impl MarginalPredictive {
    pub fn total(&self) -> f64 {
        self.new + self.clusters.iter().sum::<f64>()
    }
}

struct MarginalRatios {
    new: f64,
    singleton: f64,
    repeated: f64,
}

fn marginal_ratios(p: &CgpParams, s: SampleSummary) -> Result<MarginalRatios> {
    let w = mbar_posterior_summary(p, s);
    let (mut new, mut singleton, mut repeated) = (0.0, 0.0, 0.0);
    for (mb, wm) in w.iter().enumerate() {
        if *wm == 0.0 {
            continue;
        }
        let (r_new, r_old) = v_ratios(&p.family, s.n - mb, s.k - mb)?;
        new += wm * r_new;
        repeated += wm * r_old;
        if s.m1 > 0 {
            singleton += wm * (s.m1 - mb) as f64 / s.m1 as f64 * r_old;
        }
    }
    Ok(MarginalRatios { new, singleton, repeated })
}

/// Predictive distribution of the next observation given the observed partition.
pub fn predictive_marginal(fv: &FrequencyVector, p: &CgpParams) -> Result<MarginalPredictive> {
    if p.sources != SourceRelation::Shared {
        return invalid("the marginal predictive needs contaminant and base sources to coincide");
    }
    let (beta, sigma) = (p.beta, p.sigma());
    let r = marginal_ratios(p, fv.summary())?;
    let clusters = fv
        .freqs()
        .iter()
        .map(|&f| {
            if f == 1 {
                beta * (1.0 - sigma) * r.singleton
            } else {
                beta * (f as f64 - sigma) * r.repeated
            }
        })
        .collect();
    Ok(MarginalPredictive { new: (1.0 - beta) + beta * r.new, clusters })
}

/// Probability that observation n+1 is new, given n, k and m1.
pub fn probability_of_new(n: usize, k: usize, m1: usize, p: &CgpParams) -> Result<f64> {
    let s = SampleSummary::new(n, k, m1)?;
    if n == 0 {
        return Ok(1.0);
    }
    let r = marginal_ratios(p, s)?;
    Ok((1.0 - p.beta) + p.beta * r.new)
}

/// Sequential simulator of the contaminated process.
///
/// Labels are assigned in order of first appearance starting at 1.
#[derive(Debug, Clone)]
pub struct SequenceSampler {
    sigma: f64,
    theta: f64,
    beta: f64,
    labels: Vec<usize>,
    contaminant: Vec<bool>,
    sizes: Vec<usize>,
    base_obs: Vec<usize>,
    base_clusters: usize,
    spectrum: Vec<usize>,
}

impl SequenceSampler {
    pub fn new(p: &CgpParams) -> Self {
        Self {
            sigma: p.sigma(),
            theta: p.theta(),
            beta: p.beta,
            labels: Vec::new(),
            contaminant: Vec::new(),
            sizes: Vec::new(),
            base_obs: Vec::new(),
            base_clusters: 0,
            spectrum: vec![0; 2],
        }
    }

    fn open(&mut self, contaminant: bool) -> usize {
        self.sizes.push(1);
        self.spectrum[1] += 1;
        let label = self.sizes.len();
        self.labels.push(label);
        self.contaminant.push(contaminant);
        label
    }

    fn grow(&mut self, label: usize) {
        let s = self.sizes[label - 1];
        self.sizes[label - 1] = s + 1;
        self.spectrum[s] -= 1;
        if self.spectrum.len() <= s + 1 {
            self.spectrum.resize(s + 2, 0);
        }
        self.spectrum[s + 1] += 1;
        self.labels.push(label);
        self.contaminant.push(false);
    }

    /// Draws the next observation and returns its label.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        if self.beta < 1.0 && uniform(rng) >= self.beta {
            return self.open(true);
        }
        let nb = self.base_obs.len() as f64;
        let p_new = if nb == 0.0 {
            1.0
        } else {
            (self.theta + self.base_clusters as f64 * self.sigma) / (self.theta + nb)
        };
        let label = if uniform(rng) < p_new {
            self.base_clusters += 1;
            self.open(false)
        } else {
            // Size-biased pick of a previous base observation, thinned by (n_j - σ)/n_j.
            loop {
                let j = self.base_obs[rng.random_range(0..self.base_obs.len())];
                let s = self.sizes[j - 1] as f64;
                if self.sigma == 0.0 || uniform(rng) * s < s - self.sigma {
                    self.grow(j);
                    break j;
                }
            }
        };
        self.base_obs.push(label);
        label
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Number of distinct values so far.
    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    /// Number of distinct values seen exactly `r` times.
    pub fn count_of_size(&self, r: usize) -> usize {
        self.spectrum.get(r).copied().unwrap_or(0)
    }

    pub fn contaminant_count(&self) -> usize {
        self.labels.len() - self.base_obs.len()
    }

    pub fn into_sequence(self) -> LabeledSequence {
        LabeledSequence { labels: self.labels, contaminant: self.contaminant }
    }
}

/// Simulates `n` observations from the contaminated process.
pub fn sample_sequence<R: Rng + ?Sized>(p: &CgpParams, n: usize, rng: &mut R) -> LabeledSequence {
    let mut s = SequenceSampler::new(p);
    for _ in 0..n {
        s.step(rng);
    }
    s.into_sequence()
}

/// Simulates the urn scheme obtained by integrating β out under Beta(θ, α).
///
/// Contaminant ("strip") draws are flagged and always carry a fresh label.
pub fn urn_sample_sequence<R: Rng + ?Sized>(
    alpha: f64,
    theta: f64,
    sigma: f64,
    n: usize,
    rng: &mut R,
) -> Result<LabeledSequence> {
    if !(alpha > 0.0) || !(theta > 0.0) || !(0.0..1.0).contains(&sigma) {
        return invalid(format!("invalid urn parameters alpha={alpha}, theta={theta}, sigma={sigma}"));
    }
    let mut labels = Vec::with_capacity(n);
    let mut contaminant = Vec::with_capacity(n);
    let mut sizes: Vec<usize> = Vec::new();
    let mut solid_obs: Vec<usize> = Vec::new();
    let mut solid_clusters = 0usize;
    let mut strips = 0usize;
    for t in 0..n {
        let total = alpha + theta + t as f64;
        let u = uniform(rng) * total;
        let strip_w = strips as f64 + alpha;
        let solid_new_w = theta + solid_clusters as f64 * sigma;
        if u < strip_w {
            strips += 1;
            sizes.push(1);
            labels.push(sizes.len());
            contaminant.push(true);
        } else if u < strip_w + solid_new_w || solid_obs.is_empty() {
            solid_clusters += 1;
            sizes.push(1);
            labels.push(sizes.len());
            contaminant.push(false);
            solid_obs.push(sizes.len());
        } else {
            let j = loop {
                let j = solid_obs[rng.random_range(0..solid_obs.len())];
                let s = sizes[j - 1] as f64;
                if sigma == 0.0 || uniform(rng) * s < s - sigma {
                    break j;
                }
            };
            sizes[j - 1] += 1;
            labels.push(j);
            contaminant.push(false);
            solid_obs.push(j);
        }
    }
    Ok(LabeledSequence { labels, contaminant })
}

/// EPPF ratios Π(a)/Π(b) under the contaminated and the pure Gibbs model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EppfRatio {
    pub contaminated: f64,
    pub gibbs: f64,
}

pub fn eppf_ratio(a: &FrequencyVector, b: &FrequencyVector, p: &CgpParams) -> Result<EppfRatio> {
    if a.n() != b.n() || a.k() != b.k() {
        return invalid(format!(
            "compositions must share n and k, got ({}, {}) and ({}, {})",
            a.n(),
            a.k(),
            b.n(),
            b.k()
        ));
    }
    let pure = p.without_contamination();
    Ok(EppfRatio {
        contaminated: (eppf_log(a, p)? - eppf_log(b, p)?).exp(),
        gibbs: (eppf_log(a, &pure)? - eppf_log(b, &pure)?).exp(),
    })
}

/// Prior means of p̃(A), p̃(B) and their covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorMoments {
    pub mean_a: f64,
    pub mean_b: f64,
    pub covariance: f64,
}

/// Prior moments of the random measure evaluated at two sets, given the
/// base-measure masses of A, B and A∩B (shared contaminant and base law).
pub fn prior_covariance(q_a: f64, q_b: f64, q_ab: f64, p: &CgpParams) -> Result<PriorMoments> {
    let ok = (0.0..=1.0).contains(&q_a)
        && (0.0..=1.0).contains(&q_b)
        && q_ab >= 0.0
        && q_ab <= q_a.min(q_b)
        && q_a + q_b - q_ab <= 1.0 + 1e-15;
    if !ok {
        return invalid(format!("inconsistent set masses qA={q_a}, qB={q_b}, qAB={q_ab}"));
    }
    let ratio = (p.family.log_v(2, 1)? - p.family.log_v(1, 1)?).exp();
    let covariance = p.beta * p.beta * (1.0 - p.sigma()) * ratio * (q_ab - q_a * q_b);
    Ok(PriorMoments { mean_a: q_a, mean_b: q_b, covariance })
}
