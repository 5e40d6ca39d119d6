//! Posterior sampling of (σ, θ, β, m̄) for species frequency data.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cgp::{mbar_log_weights, FrequencyVector, SampleSummary};
use crate::conditionals::{draw_beta, mh_sigma, mh_theta, AdaptiveScale, BaseCounts, HyperPriors};
use crate::error::{Error, Result};
use crate::numerics::random::{categorical_from_log_weights, stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesFitConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub priors: HyperPriors,
    /// Initial proposal sd on the logit-σ scale.
    pub proposal_sd_sigma: f64,
    /// Initial proposal sd on the log-θ scale.
    pub proposal_sd_theta: f64,
    /// Tune proposal sds during burn-in.
    pub adapt: bool,
    pub seed: u64,
    /// Pin β = 1 and m̄ = 0 (plain Pitman-Yor fit).
    pub pure_py: bool,
}

impl Default for SpeciesFitConfig {
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
        }
    }
}

impl SpeciesFitConfig {
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
        self.priors.validate().map_err(|e| Error::Config(e.to_string()))
    }

    /// Number of draws retained after burn-in and thinning.
    pub fn kept(&self) -> usize {
        self.iterations.saturating_sub(self.burn_in) / self.thin.max(1)
    }
}

/// Current values of the chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeciesState {
    pub sigma: f64,
    pub theta: f64,
    pub beta: f64,
    pub mbar: usize,
}

/// Frequency data in the form the conditionals need.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesData {
    pub summary: SampleSummary,
    repeated: Vec<usize>,
}

impl SpeciesData {
    pub fn new(fv: &FrequencyVector) -> Self {
        Self { summary: fv.summary(), repeated: fv.freqs().iter().copied().filter(|&f| f >= 2).collect() }
    }

    fn base_counts(&self, mbar: usize) -> BaseCounts {
        let s = self.summary;
        BaseCounts::from_sizes(s.n - mbar, s.k - mbar, self.repeated.iter().copied())
    }
}

/// Metropolis–Hastings update of σ. Returns whether the proposal was accepted.
pub fn update_sigma<R: Rng + ?Sized>(
    state: &mut SpeciesState,
    data: &SpeciesData,
    cfg: &SpeciesFitConfig,
    sd: f64,
    rng: &mut R,
) -> bool {
    let c = data.base_counts(state.mbar);
    let (s, acc) = mh_sigma(state.sigma, state.theta, &c, &cfg.priors.sigma, sd, rng);
    state.sigma = s;
    acc
}

/// Metropolis–Hastings update of θ. Returns whether the proposal was accepted.
pub fn update_theta<R: Rng + ?Sized>(
    state: &mut SpeciesState,
    data: &SpeciesData,
    cfg: &SpeciesFitConfig,
    sd: f64,
    rng: &mut R,
) -> bool {
    let c = data.base_counts(state.mbar);
    let (t, acc) = mh_theta(state.theta, state.sigma, &c, &cfg.priors.theta, sd, rng);
    state.theta = t;
    acc
}

/// Conjugate Beta draw of β.
pub fn update_beta<R: Rng + ?Sized>(state: &mut SpeciesState, data: &SpeciesData, cfg: &SpeciesFitConfig, rng: &mut R) {
    state.beta = draw_beta(data.summary.n, state.mbar, &cfg.priors.beta, rng);
}

/// Exact draw of the structural-singleton count.
pub fn update_mbar<R: Rng + ?Sized>(state: &mut SpeciesState, data: &SpeciesData, rng: &mut R) {
    let w = mbar_log_weights(state.sigma, state.theta, state.beta, data.summary);
    state.mbar = categorical_from_log_weights(&w, rng).expect("m̄ weights have a finite entry");
}

/// Kept draws of a species chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesTrace {
    pub sigma: Vec<f64>,
    pub theta: Vec<f64>,
    pub beta: Vec<f64>,
    pub mbar: Vec<usize>,
    /// Post-burn-in acceptance rate of the σ move.
    pub acc_sigma: f64,
    /// Post-burn-in acceptance rate of the θ move.
    pub acc_theta: f64,
    pub seed: u64,
    pub config: SpeciesFitConfig,
}

impl SpeciesTrace {
    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }
}

/// Initial state: σ = 0.5, θ = 1, β = (n − m1/2)/n, m̄ uniform on {0..m1}.
pub fn initial_state<R: Rng + ?Sized>(data: &SpeciesData, pure_py: bool, rng: &mut R) -> SpeciesState {
    let s = data.summary;
    if pure_py {
        return SpeciesState { sigma: 0.5, theta: 1.0, beta: 1.0, mbar: 0 };
    }
    let beta = ((s.n as f64 - s.m1 as f64 / 2.0) / s.n as f64).min(1.0 - 1e-9);
    let mbar = rng.random_range(0..=s.m1);
    SpeciesState { sigma: 0.5, theta: 1.0, beta, mbar }
}

/// Runs the sampler with the stream seeded from `cfg.seed`.
pub fn run_chain_seeded(fv: &FrequencyVector, cfg: &SpeciesFitConfig) -> Result<SpeciesTrace> {
    run_chain(fv, cfg, &mut stream(cfg.seed))
}

/// Runs the sampler, discarding burn-in and thinning the remainder.
pub fn run_chain<R: Rng + ?Sized>(fv: &FrequencyVector, cfg: &SpeciesFitConfig, rng: &mut R) -> Result<SpeciesTrace> {
    cfg.validate()?;
    let data = SpeciesData::new(fv);
    let mut state = initial_state(&data, cfg.pure_py, rng);
    let mut sd_sigma = AdaptiveScale::new(cfg.proposal_sd_sigma);
    let mut sd_theta = AdaptiveScale::new(cfg.proposal_sd_theta);
    let kept = cfg.kept();
    let mut trace = SpeciesTrace {
        sigma: Vec::with_capacity(kept),
        theta: Vec::with_capacity(kept),
        beta: Vec::with_capacity(kept),
        mbar: Vec::with_capacity(kept),
        acc_sigma: 0.0,
        acc_theta: 0.0,
        seed: cfg.seed,
        config: cfg.clone(),
    };
    let (mut acc_s, mut acc_t) = (0usize, 0usize);
    for it in 0..cfg.iterations {
        let burning = it < cfg.burn_in;
        let a = update_sigma(&mut state, &data, cfg, sd_sigma.sd(), rng);
        let b = update_theta(&mut state, &data, cfg, sd_theta.sd(), rng);
        if !cfg.pure_py {
            update_beta(&mut state, &data, cfg, rng);
            update_mbar(&mut state, &data, rng);
        }
        if burning {
            if cfg.adapt {
                sd_sigma.adapt(a);
                sd_theta.adapt(b);
            }
            continue;
        }
        acc_s += a as usize;
        acc_t += b as usize;
        if (it - cfg.burn_in + 1) % cfg.thin == 0 && trace.sigma.len() < kept {
            trace.sigma.push(state.sigma);
            trace.theta.push(state.theta);
            trace.beta.push(state.beta);
            trace.mbar.push(state.mbar);
        }
    }
    let post = (cfg.iterations - cfg.burn_in) as f64;
    trace.acc_sigma = acc_s as f64 / post;
    trace.acc_theta = acc_t as f64 / post;
    Ok(trace)
}
