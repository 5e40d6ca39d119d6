//! Marginal Gibbs sampler for the contaminated Pitman-Yor mixture of Gaussians
//! with Normal-Inverse-Wishart base and contaminant measures.
//!
//! Label 0 marks an observation allocated to the contaminant measure. Such
//! observations carry no kernel parameters; they enter every update through
//! the Student-t marginal of the contaminant measure only.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::conditionals::{draw_beta, mh_sigma, mh_theta, AdaptiveScale, BaseCounts, HyperPriors};
use crate::error::{invalid, Error, Result};
use crate::numerics::linalg::{mvn_log_density, CholeskyFactor, DataMatrix, SpdMatrix, StudentT};
use crate::numerics::random::{categorical_from_log_weights, inverse_wishart, mvn, stream};

/// Normal-Inverse-Wishart(μ, κ, ν, S) with E[Σ] = S/(ν − d − 1).
#[derive(Debug, Clone, PartialEq)]
pub struct NiwParams {
    pub mu: Vec<f64>,
    pub kappa: f64,
    pub nu: f64,
    pub scale: SpdMatrix,
}

impl NiwParams {
    pub fn new(mu: Vec<f64>, kappa: f64, nu: f64, scale: SpdMatrix) -> Result<Self> {
        let d = scale.dim();
        if mu.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: mu.len() });
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return invalid(format!("kappa must be positive, got {kappa}"));
        }
        if !(nu > d as f64 - 1.0 && nu.is_finite()) {
            return invalid(format!("nu must exceed d − 1 = {}, got {nu}", d as f64 - 1.0));
        }
        Ok(Self { mu, kappa, nu, scale })
    }

    /// Empirical specification: ν = d + 3, S the diagonal of the sample
    /// variances, μ the sample mean when `center` is set and zero otherwise.
    pub fn empirical(data: &DataMatrix, kappa: f64, center: bool) -> Result<Self> {
        let d = data.ncols();
        if data.nrows() < 2 || d == 0 {
            return invalid("empirical prior needs at least two rows and one column");
        }
        let mu = if center { data.column_means() } else { vec![0.0; d] };
        Self::new(mu, kappa, d as f64 + 3.0, SpdMatrix::diagonal(&data.column_variances())?)
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// The kernel marginal ∫ K(y; ξ) dNIW(ξ), a multivariate Student-t.
    pub fn predictive(&self) -> StudentT {
        let d = self.dim() as f64;
        let df = self.nu - d + 1.0;
        let c = (self.kappa + 1.0) / (self.kappa * df);
        StudentT::from_factor(df, self.mu.clone(), self.scale.cholesky().scaled(c.sqrt()))
    }
}

/// log ∫ K(y; ξ) dNIW(ξ).
pub fn niw_marginal_log(y: &[f64], niw: &NiwParams) -> Result<f64> {
    if y.len() != niw.dim() {
        return Err(Error::DimensionMismatch { expected: niw.dim(), got: y.len() });
    }
    Ok(niw.predictive().log_density(y))
}

/// Conjugate update of the NIW parameters given observations `ys`.
pub fn niw_posterior(niw: &NiwParams, ys: &[&[f64]]) -> Result<NiwParams> {
    let d = niw.dim();
    if let Some(bad) = ys.iter().find(|y| y.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: bad.len() });
    }
    if ys.is_empty() {
        return Ok(niw.clone());
    }
    let m = ys.len() as f64;
    let mut ybar = vec![0.0; d];
    for y in ys {
        for (a, b) in ybar.iter_mut().zip(y.iter()) {
            *a += b;
        }
    }
    ybar.iter_mut().for_each(|v| *v /= m);
    let kappa = niw.kappa + m;
    let shrink = niw.kappa * m / kappa;
    let mut s = niw.scale.as_slice().to_vec();
    for i in 0..d {
        for j in 0..=i {
            let scatter: f64 = ys.iter().map(|y| (y[i] - ybar[i]) * (y[j] - ybar[j])).sum();
            let shift = shrink * (ybar[i] - niw.mu[i]) * (ybar[j] - niw.mu[j]);
            let v = niw.scale.get(i, j) + scatter + shift;
            s[i * d + j] = v;
            s[j * d + i] = v;
        }
    }
    let mu = niw.mu.iter().zip(&ybar).map(|(a, b)| (niw.kappa * a + m * b) / kappa).collect();
    Ok(NiwParams { mu, kappa, nu: niw.nu + m, scale: SpdMatrix::new(d, s)? })
}

/// Gaussian kernel parameters of one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterParams {
    pub mean: Vec<f64>,
    /// Cholesky factor of the covariance.
    pub chol: CholeskyFactor,
}

impl ClusterParams {
    pub fn log_kernel(&self, y: &[f64]) -> f64 {
        mvn_log_density(y, &self.mean, &self.chol)
    }
}

/// (μ, Σ) ~ NIW: Σ ~ IW(ν, S), μ | Σ ~ N(μ₀, Σ/κ).
pub fn draw_niw<R: Rng + ?Sized>(niw: &NiwParams, rng: &mut R) -> ClusterParams {
    let chol = inverse_wishart(rng, niw.nu, &niw.scale.cholesky());
    let mean = mvn(rng, &niw.mu, &chol.scaled(1.0 / niw.kappa.sqrt()));
    ClusterParams { mean, chol }
}

/// Data together with the base and contaminant NIW measures.
#[derive(Debug, Clone)]
pub struct MixtureModel {
    data: DataMatrix,
    base: NiwParams,
    contaminant: NiwParams,
    log_contaminant: Vec<f64>,
    log_base_new: Vec<f64>,
}

impl MixtureModel {
    pub fn new(data: DataMatrix, base: NiwParams, contaminant: NiwParams) -> Result<Self> {
        let d = data.ncols();
        if data.nrows() < 2 || d == 0 {
            return invalid(format!("mixture needs n ≥ 2 and d ≥ 1, got n = {}, d = {d}", data.nrows()));
        }
        for niw in [&base, &contaminant] {
            if niw.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: niw.dim() });
            }
        }
        if data.rows().flatten().any(|v| !v.is_finite()) {
            return invalid("data contain non-finite values");
        }
        let (tb, tc) = (base.predictive(), contaminant.predictive());
        let log_base_new = data.rows().map(|y| tb.log_density(y)).collect();
        let log_contaminant = data.rows().map(|y| tc.log_density(y)).collect();
        Ok(Self { data, base, contaminant, log_contaminant, log_base_new })
    }

    pub fn data(&self) -> &DataMatrix {
        &self.data
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn base(&self) -> &NiwParams {
        &self.base
    }

    pub fn contaminant(&self) -> &NiwParams {
        &self.contaminant
    }

    fn cluster_posterior(&self, members: &[usize]) -> NiwParams {
        let ys: Vec<&[f64]> = members.iter().map(|&i| self.data.row(i)).collect();
        niw_posterior(&self.base, &ys).expect("dimensions checked at construction")
    }
}

const DETACHED: usize = usize::MAX;

/// Allocations, cluster parameters and (σ, θ, β).
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureState {
    labels: Vec<usize>,
    clusters: Vec<ClusterParams>,
    sizes: Vec<usize>,
    contaminants: usize,
    pub sigma: f64,
    pub theta: f64,
    pub beta: f64,
}

impl MixtureState {
    /// State with the given allocations; cluster parameters are drawn from
    /// their conditional posteriors.
    pub fn new<R: Rng + ?Sized>(
        model: &MixtureModel,
        labels: &[usize],
        sigma: f64,
        theta: f64,
        beta: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if labels.len() != model.n() {
            return Err(Error::DimensionMismatch { expected: model.n(), got: labels.len() });
        }
        let canon = crate::partition::Partition::new(labels);
        let labels = canon.labels().to_vec();
        let k = labels.iter().copied().max().unwrap_or(0);
        let mut sizes = vec![0; k];
        for &l in &labels {
            if l > 0 {
                sizes[l - 1] += 1;
            }
        }
        let contaminants = labels.iter().filter(|&&l| l == 0).count();
        let mut s = Self { labels, clusters: Vec::new(), sizes, contaminants, sigma, theta, beta };
        update_cluster_params(&mut s, model, rng);
        Ok(s)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Number of non-contaminant clusters.
    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn clusters(&self) -> &[ClusterParams] {
        &self.clusters
    }

    /// Number of observations allocated to the contaminant measure.
    pub fn contaminants(&self) -> usize {
        self.contaminants
    }

    /// Checks that labels are contiguous and consistent with the stored counts.
    pub fn validate(&self) -> Result<()> {
        let k = self.sizes.len();
        if self.clusters.len() != k {
            return invalid("cluster parameters out of step with cluster sizes");
        }
        let mut sizes = vec![0; k];
        let mut zeros = 0;
        for &l in &self.labels {
            match l {
                0 => zeros += 1,
                l if l <= k => sizes[l - 1] += 1,
                _ => return invalid(format!("label {l} exceeds cluster count {k}")),
            }
        }
        if sizes != self.sizes || zeros != self.contaminants || sizes.contains(&0) {
            return invalid("allocation counts are inconsistent");
        }
        Ok(())
    }

    fn detach(&mut self, i: usize) {
        let l = self.labels[i];
        self.labels[i] = DETACHED;
        if l == 0 {
            self.contaminants -= 1;
            return;
        }
        self.sizes[l - 1] -= 1;
        if self.sizes[l - 1] == 0 {
            self.sizes.remove(l - 1);
            self.clusters.remove(l - 1);
            for x in self.labels.iter_mut() {
                if *x != DETACHED && *x > l {
                    *x -= 1;
                }
            }
        }
    }

    /// Renumbers clusters by first appearance.
    fn canonicalize(&mut self) {
        let k = self.sizes.len();
        let mut map = vec![0usize; k + 1];
        let mut next = 0;
        for &l in &self.labels {
            if l > 0 && map[l] == 0 {
                next += 1;
                map[l] = next;
            }
        }
        if (1..=k).all(|l| map[l] == l) {
            return;
        }
        let mut sizes = vec![0; k];
        let mut clusters: Vec<Option<ClusterParams>> = vec![None; k];
        for (old, c) in self.clusters.drain(..).enumerate() {
            sizes[map[old + 1] - 1] = self.sizes[old];
            clusters[map[old + 1] - 1] = Some(c);
        }
        self.sizes = sizes;
        self.clusters = clusters.into_iter().map(|c| c.expect("every cluster is occupied")).collect();
        for l in self.labels.iter_mut() {
            *l = map[*l];
        }
    }
}

/// Unnormalized log allocation weights for observation `i` given all others:
/// index 0 is the contaminant measure, 1..=k the current clusters and k + 1 a
/// new cluster. If `i` is alone in its cluster that cluster gets weight zero,
/// since it disappears once `i` is removed.
pub fn allocation_log_weights(state: &MixtureState, model: &MixtureModel, i: usize) -> Vec<f64> {
    let own = state.labels[i];
    let n_rest = model.n() - 1;
    let contaminants_rest = state.contaminants - usize::from(own == 0);
    let emptied = own > 0 && state.sizes[own - 1] == 1;
    let k_rest = state.k() - usize::from(emptied);
    let (sigma, theta, beta) = (state.sigma, state.theta, state.beta);
    let log_base = beta.ln() - (theta + (n_rest - contaminants_rest) as f64).ln();
    let y = model.data.row(i);
    let mut w = Vec::with_capacity(state.k() + 2);
    w.push((-beta).ln_1p() + model.log_contaminant[i]);
    for (j, (size, c)) in state.sizes.iter().zip(&state.clusters).enumerate() {
        let size = size - usize::from(own == j + 1);
        if size == 0 {
            w.push(f64::NEG_INFINITY);
        } else {
            w.push(log_base + (size as f64 - sigma).ln() + c.log_kernel(y));
        }
    }
    w.push(log_base + (theta + k_rest as f64 * sigma).ln() + model.log_base_new[i]);
    w
}

/// Reallocates observation `i` and returns its new label (0 for the contaminant measure).
pub fn allocation_step<R: Rng + ?Sized>(state: &mut MixtureState, model: &MixtureModel, i: usize, rng: &mut R) -> usize {
    let w = allocation_log_weights(state, model, i);
    let choice = categorical_from_log_weights(&w, rng).expect("allocation weights have a finite entry");
    let k = state.k();
    let own = state.labels[i];
    let removed = own > 0 && state.sizes[own - 1] == 1;
    state.detach(i);
    let label = if choice == 0 {
        state.contaminants += 1;
        0
    } else if choice <= k {
        // Indices above a removed cluster shift down by one.
        let j = if removed && choice > own { choice - 1 } else { choice };
        state.sizes[j - 1] += 1;
        j
    } else {
        let post = model.cluster_posterior(&[i]);
        state.clusters.push(draw_niw(&post, rng));
        state.sizes.push(1);
        state.sizes.len()
    };
    state.labels[i] = label;
    label
}

/// Draws every cluster's (μ, Σ) from its conjugate posterior.
pub fn update_cluster_params<R: Rng + ?Sized>(state: &mut MixtureState, model: &MixtureModel, rng: &mut R) {
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); state.k()];
    for (i, &l) in state.labels.iter().enumerate() {
        if l > 0 {
            members[l - 1].push(i);
        }
    }
    state.clusters = members.iter().map(|m| draw_niw(&model.cluster_posterior(m), rng)).collect();
}

/// One sweep over all observations followed by relabeling by first appearance.
pub fn allocation_sweep<R: Rng + ?Sized>(state: &mut MixtureState, model: &MixtureModel, rng: &mut R) {
    for i in 0..model.n() {
        allocation_step(state, model, i, rng);
    }
    state.canonicalize();
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureFitConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub priors: HyperPriors,
    pub proposal_sd_sigma: f64,
    pub proposal_sd_theta: f64,
    pub adapt: bool,
    pub seed: u64,
    /// Pin β = 1: a plain Pitman-Yor mixture.
    pub pure_py: bool,
    /// Hold σ at this value instead of sampling it.
    pub fix_sigma: Option<f64>,
    /// Hold θ at this value instead of sampling it.
    pub fix_theta: Option<f64>,
    /// Hold β at this value instead of sampling it.
    pub fix_beta: Option<f64>,
}

impl Default for MixtureFitConfig {
    fn default() -> Self {
        Self {
            iterations: 15_000,
            burn_in: 5_000,
            thin: 10,
            priors: HyperPriors::default(),
            proposal_sd_sigma: 0.5,
            proposal_sd_theta: 0.5,
            adapt: true,
            seed: 0,
            pure_py: false,
            fix_sigma: None,
            fix_theta: None,
            fix_beta: None,
        }
    }
}

impl MixtureFitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::Config(format!(
                "burn-in ({}) must be smaller than the number of iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.kept() == 0 {
            return Err(Error::Config("configuration keeps no draws".into()));
        }
        if !(self.proposal_sd_sigma > 0.0 && self.proposal_sd_theta > 0.0) {
            return Err(Error::Config("proposal sds must be positive".into()));
        }
        if let Some(s) = self.fix_sigma {
            if !(0.0..1.0).contains(&s) {
                return Err(Error::Config(format!("fixed sigma must lie in [0, 1), got {s}")));
            }
        }
        if let Some(t) = self.fix_theta {
            if !(t > -self.fix_sigma.unwrap_or(0.0)) || !t.is_finite() {
                return Err(Error::Config(format!("fixed theta {t} is out of range")));
            }
        }
        if let Some(b) = self.fix_beta {
            if !(b > 0.0 && b <= 1.0) {
                return Err(Error::Config(format!("fixed beta must lie in (0, 1], got {b}")));
            }
        }
        self.priors.validate().map_err(|e| Error::Config(e.to_string()))
    }

    pub fn kept(&self) -> usize {
        self.iterations.saturating_sub(self.burn_in) / self.thin.max(1)
    }

    fn pinned_beta(&self) -> Option<f64> {
        if self.pure_py { Some(1.0) } else { self.fix_beta }
    }
}

/// Hyperparameter moves: σ and θ by Metropolis–Hastings, β by its conjugate Beta draw.
/// Returns whether the σ and θ proposals were accepted.
pub fn update_mixture_hyperparams<R: Rng + ?Sized>(
    state: &mut MixtureState,
    cfg: &MixtureFitConfig,
    sd_sigma: f64,
    sd_theta: f64,
    rng: &mut R,
) -> (bool, bool) {
    let n = state.labels.len();
    let c = BaseCounts::from_sizes(n - state.contaminants, state.k(), state.sizes.iter().copied());
    let mut acc = (false, false);
    if cfg.fix_sigma.is_none() {
        let (s, a) = mh_sigma(state.sigma, state.theta, &c, &cfg.priors.sigma, sd_sigma, rng);
        state.sigma = s;
        acc.0 = a;
    }
    if cfg.fix_theta.is_none() {
        let (t, a) = mh_theta(state.theta, state.sigma, &c, &cfg.priors.theta, sd_theta, rng);
        state.theta = t;
        acc.1 = a;
    }
    if cfg.pinned_beta().is_none() {
        state.beta = draw_beta(n, state.contaminants, &cfg.priors.beta, rng);
    }
    acc
}

/// Kept draws of a mixture chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureTrace {
    pub sigma: Vec<f64>,
    pub theta: Vec<f64>,
    pub beta: Vec<f64>,
    /// Number of non-contaminant clusters.
    pub k: Vec<usize>,
    /// Number of observations allocated to the contaminant measure.
    pub mbar: Vec<usize>,
    /// Kept allocation vectors, label 0 for contaminants.
    #[serde(skip)]
    pub allocations: Vec<Vec<usize>>,
    pub acc_sigma: f64,
    pub acc_theta: f64,
    pub seed: u64,
    pub config: MixtureFitConfig,
}

impl MixtureTrace {
    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }
}

/// Starting point: every observation in one cluster, σ = 0.5, θ = 1 and
/// β = 0.9, unless held fixed by the configuration.
pub fn initial_mixture_state<R: Rng + ?Sized>(
    model: &MixtureModel,
    cfg: &MixtureFitConfig,
    rng: &mut R,
) -> Result<MixtureState> {
    let sigma = cfg.fix_sigma.unwrap_or(0.5);
    let theta = cfg.fix_theta.unwrap_or(1.0);
    let beta = cfg.pinned_beta().unwrap_or(0.9);
    MixtureState::new(model, &vec![1; model.n()], sigma, theta, beta, rng)
}

pub fn run_mixture_chain_seeded(model: &MixtureModel, cfg: &MixtureFitConfig) -> Result<MixtureTrace> {
    run_mixture_chain(model, cfg, &mut stream(cfg.seed))
}

/// Runs the mixture sampler: allocations, cluster parameters, then (σ, θ, β).
pub fn run_mixture_chain<R: Rng + ?Sized>(
    model: &MixtureModel,
    cfg: &MixtureFitConfig,
    rng: &mut R,
) -> Result<MixtureTrace> {
    cfg.validate()?;
    let mut state = initial_mixture_state(model, cfg, rng)?;
    let mut sd_sigma = AdaptiveScale::new(cfg.proposal_sd_sigma);
    let mut sd_theta = AdaptiveScale::new(cfg.proposal_sd_theta);
    let kept = cfg.kept();
    let mut trace = MixtureTrace {
        sigma: Vec::with_capacity(kept),
        theta: Vec::with_capacity(kept),
        beta: Vec::with_capacity(kept),
        k: Vec::with_capacity(kept),
        mbar: Vec::with_capacity(kept),
        allocations: Vec::with_capacity(kept),
        acc_sigma: 0.0,
        acc_theta: 0.0,
        seed: cfg.seed,
        config: cfg.clone(),
    };
    let (mut acc_s, mut acc_t) = (0usize, 0usize);
    for it in 0..cfg.iterations {
        allocation_sweep(&mut state, model, rng);
        update_cluster_params(&mut state, model, rng);
        let (a, b) = update_mixture_hyperparams(&mut state, cfg, sd_sigma.sd(), sd_theta.sd(), rng);
        if it < cfg.burn_in {
            if cfg.adapt {
                if cfg.fix_sigma.is_none() {
                    sd_sigma.adapt(a);
                }
                if cfg.fix_theta.is_none() {
                    sd_theta.adapt(b);
                }
            }
            continue;
        }
        acc_s += a as usize;
        acc_t += b as usize;
        if (it - cfg.burn_in + 1) % cfg.thin == 0 && trace.sigma.len() < kept {
            trace.sigma.push(state.sigma);
            trace.theta.push(state.theta);
            trace.beta.push(state.beta);
            trace.k.push(state.k());
            trace.mbar.push(state.contaminants);
            trace.allocations.push(state.labels.clone());
        }
    }
    let post = (cfg.iterations - cfg.burn_in) as f64;
    trace.acc_sigma = acc_s as f64 / post;
    trace.acc_theta = acc_t as f64 / post;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::special::lse;

    fn niw1d(mu: f64, kappa: f64, nu: f64, s: f64) -> NiwParams {
        NiwParams::new(vec![mu], kappa, nu, SpdMatrix::diagonal(&[s]).unwrap()).unwrap()
    }

    #[test]
    fn marginal_matches_quadrature() {
        // y | v ~ N(0, v(1 + 1/κ)), v ~ InvGamma(ν/2, S/2) in one dimension.
        let (kappa, nu, s) = (1.0, 3.0, 1.0);
        let niw = niw1d(0.0, kappa, nu, s);
        for y in [0.0, 0.7, -2.5] {
            let (a, b) = (nu / 2.0, s / 2.0);
            let log_ig = |v: f64| a * b.ln() - crate::numerics::ln_gamma(a) - (a + 1.0) * v.ln() - b / v;
            let f = |t: f64| {
                let v = t.exp();
                let var = v * (1.0 + 1.0 / kappa);
                log_ig(v) - 0.5 * (2.0 * std::f64::consts::PI * var).ln() - y * y / (2.0 * var) + t
            };
            let h = 1e-3;
            let terms: Vec<f64> = (-20_000..20_000).map(|i| f(i as f64 * h)).collect();
            let quad = lse(&terms) + h.ln();
            let got = niw_marginal_log(&[y], &niw).unwrap();
            assert!((got - quad).abs() < 1e-8, "{got} vs {quad}");
        }
    }

    #[test]
    fn marginal_symmetry_and_limit() {
        let niw = NiwParams::new(vec![1.0, -1.0], 2.0, 6.0, SpdMatrix::new(2, vec![2.0, 0.3, 0.3, 1.0]).unwrap()).unwrap();
        let a = niw_marginal_log(&[1.5, -0.2], &niw).unwrap();
        let b = niw_marginal_log(&[0.5, -1.8], &niw).unwrap();
        assert!((a - b).abs() < 1e-13);
        // Large κ and ν: Gaussian with covariance E[Σ] = S/(ν − d − 1).
        let nu = 1e8;
        let big = niw1d(0.0, 1e10, nu, nu - 2.0);
        let got = niw_marginal_log(&[0.8], &big).unwrap();
        let want = -0.5 * (2.0 * std::f64::consts::PI).ln() - 0.32;
        assert!((got - want).abs() < 1e-6);
        assert!(niw_marginal_log(&[1.0], &niw).is_err());
    }

    #[test]
    fn posterior_updates() {
        let niw = NiwParams::new(vec![0.5, 1.0], 1.5, 5.0, SpdMatrix::new(2, vec![2.0, 0.3, 0.3, 1.0]).unwrap()).unwrap();
        assert_eq!(niw_posterior(&niw, &[]).unwrap(), niw);
        let one = niw_posterior(&niw, &[&[0.5, 1.0]]).unwrap();
        assert_eq!(one.mu, niw.mu);
        assert_eq!(one.scale, niw.scale);
        assert_eq!((one.kappa, one.nu), (2.5, 6.0));
        let ys: Vec<Vec<f64>> = vec![vec![1.0, 2.0], vec![-0.3, 0.4], vec![2.2, -1.0], vec![0.0, 0.1]];
        let refs: Vec<&[f64]> = ys.iter().map(|v| v.as_slice()).collect();
        let batch = niw_posterior(&niw, &refs).unwrap();
        let mut seq = niw.clone();
        for y in &refs {
            seq = niw_posterior(&seq, &[y]).unwrap();
        }
        assert!((batch.kappa - seq.kappa).abs() < 1e-12);
        for (a, b) in batch.mu.iter().zip(&seq.mu) {
            assert!((a - b).abs() < 1e-10);
        }
        for (a, b) in batch.scale.as_slice().iter().zip(seq.scale.as_slice()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    fn toy_model() -> MixtureModel {
        let data = DataMatrix::from_rows(&[vec![0.1], vec![0.3], vec![4.0]]).unwrap();
        MixtureModel::new(data, niw1d(0.0, 1.0, 3.0, 1.0), niw1d(0.0, 0.25, 3.0, 1.0)).unwrap()
    }

    #[test]
    fn allocation_weights_by_hand() {
        let model = toy_model();
        let mut rng = stream(1);
        let st = MixtureState::new(&model, &[1, 1, 0], 0.3, 2.0, 0.8, &mut rng).unwrap();
        // Observation 1 given the others: observation 0 in cluster 1, observation 2 a contaminant.
        let w = allocation_log_weights(&st, &model, 1);
        let y = [0.3];
        let denom = 2.0 + (2 - 1) as f64;
        let expect = [
            0.2f64.ln() + niw_marginal_log(&y, model.contaminant()).unwrap(),
            (0.8 * (1.0 - 0.3) / denom).ln() + st.clusters()[0].log_kernel(&y),
            (0.8 * (2.0 + 0.3) / denom).ln() + niw_marginal_log(&y, model.base()).unwrap(),
        ];
        assert_eq!(w.len(), 3);
        for (a, b) in w.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        // Observation 2 given the others: the contaminant count excludes itself.
        let w = allocation_log_weights(&st, &model, 2);
        let denom: f64 = 2.0 + 2.0;
        let y = [4.0];
        assert!((w[1] - ((0.8 * 1.7 / denom).ln() + st.clusters()[0].log_kernel(&y))).abs() < 1e-12);
        assert!((w[2] - ((0.8 * 2.3 / denom).ln() + niw_marginal_log(&y, model.base()).unwrap())).abs() < 1e-12);
    }

    #[test]
    fn singleton_cluster_is_replaced_by_new() {
        let model = toy_model();
        let mut rng = stream(2);
        let st = MixtureState::new(&model, &[1, 2, 2], 0.3, 2.0, 1.0, &mut rng).unwrap();
        let w = allocation_log_weights(&st, &model, 0);
        assert_eq!(w[0], f64::NEG_INFINITY);
        assert_eq!(w[1], f64::NEG_INFINITY);
        // k' = 1 once observation 0 leaves.
        let want = (1.0f64 * (2.0 + 0.3) / 4.0).ln() + model.log_base_new[0];
        assert!((w[3] - want).abs() < 1e-12);
    }

    #[test]
    fn relabeling_leaves_weights_unchanged() {
        let model = toy_model();
        let mut rng = stream(3);
        let a = MixtureState::new(&model, &[1, 2, 2], 0.3, 2.0, 0.7, &mut rng).unwrap();
        let mut b = a.clone();
        b.labels = vec![2, 1, 1];
        b.sizes.swap(0, 1);
        b.clusters.swap(0, 1);
        b.validate().unwrap();
        for i in 0..3 {
            let mut wa = allocation_log_weights(&a, &model, i);
            let mut wb = allocation_log_weights(&b, &model, i);
            wa.sort_by(f64::total_cmp);
            wb.sort_by(f64::total_cmp);
            assert_eq!(wa, wb);
        }
    }

    #[test]
    fn sweeps_keep_state_valid() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![(i % 3) as f64 * 4.0 + 0.01 * i as f64, -(i as f64) * 0.1]).collect();
        let data = DataMatrix::from_rows(&rows).unwrap();
        let base = NiwParams::empirical(&data, 1.0, true).unwrap();
        let cont = NiwParams::empirical(&data, 0.25, true).unwrap();
        let model = MixtureModel::new(data, base, cont).unwrap();
        let cfg = MixtureFitConfig::default();
        let mut rng = stream(4);
        let mut st = initial_mixture_state(&model, &cfg, &mut rng).unwrap();
        for _ in 0..50 {
            allocation_sweep(&mut st, &model, &mut rng);
            st.validate().unwrap();
            let canon = crate::partition::Partition::new(st.labels());
            assert_eq!(canon.labels(), st.labels());
            update_cluster_params(&mut st, &model, &mut rng);
            update_mixture_hyperparams(&mut st, &cfg, 0.5, 0.5, &mut rng);
        }
    }

    #[test]
    fn hyper_updates_in_degenerate_states() {
        let model = toy_model();
        let mut rng = stream(5);
        let cfg = MixtureFitConfig { fix_sigma: Some(0.3), fix_theta: Some(2.0), ..Default::default() };
        let mut st = MixtureState::new(&model, &[0, 0, 0], 0.3, 2.0, 0.5, &mut rng).unwrap();
        let draws = 40_000;
        let mut sum = 0.0;
        for _ in 0..draws {
            update_mixture_hyperparams(&mut st, &cfg, 0.5, 0.5, &mut rng);
            sum += st.beta;
        }
        // Beta(1, 1 + 3) has mean 1/5.
        assert!((sum / draws as f64 - 0.2).abs() < 0.005);
        assert_eq!((st.sigma, st.theta), (0.3, 2.0));
        let pure = MixtureFitConfig { pure_py: true, ..Default::default() };
        let mut st = MixtureState::new(&model, &[1, 1, 1], 0.3, 2.0, 1.0, &mut rng).unwrap();
        update_mixture_hyperparams(&mut st, &pure, 0.5, 0.5, &mut rng);
        assert_eq!(st.beta, 1.0);
    }

    #[test]
    fn chain_is_reproducible() {
        let model = toy_model();
        let cfg = MixtureFitConfig { iterations: 300, burn_in: 100, thin: 2, seed: 9, ..Default::default() };
        let a = run_mixture_chain_seeded(&model, &cfg).unwrap();
        let b = run_mixture_chain_seeded(&model, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 100);
        for (alloc, k) in a.allocations.iter().zip(&a.k) {
            assert_eq!(alloc.iter().copied().max().unwrap_or(0), *k);
        }
        let bad = MixtureFitConfig { burn_in: 300, ..cfg };
        assert!(run_mixture_chain_seeded(&model, &bad).is_err());
    }
}
