//! Flat `key = value` run configuration with dotted keys for nested blocks.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use cgp::conditionals::HyperPriors;
use cgp::mixture::NiwParams;
use cgp::numerics::{DataMatrix, SpdMatrix};

use crate::error::{invalid, CliResult};

#[derive(Debug, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| invalid(format!("config line {}: expected key = value", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(invalid(format!("config line {}: empty key", i + 1)));
            }
            if entries.insert(k.to_string(), (i + 1, v.to_string())).is_some() {
                return Err(invalid(format!("config line {}: duplicate key {k}", i + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Removes and parses `key` if present.
    pub fn take<T: FromStr>(&mut self, key: &str) -> CliResult<Option<T>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| invalid(format!("config line {line}: cannot parse {key} = {v:?}"))),
        }
    }

    pub fn require<T: FromStr>(&mut self, key: &str) -> CliResult<T> {
        self.take(key)?.ok_or_else(|| invalid(format!("config is missing mandatory key {key}")))
    }

    pub fn take_list(&mut self, key: &str) -> CliResult<Option<Vec<f64>>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map(Some)
                .map_err(|_| invalid(format!("config line {line}: {key} must be a comma-separated list of numbers"))),
        }
    }

    /// Fails on any key nobody consumed.
    pub fn finish(self) -> CliResult<()> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((k, (line, _))) => Err(invalid(format!("config line {line}: unknown key {k}"))),
        }
    }
}

/// MCMC settings common to both samplers.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSettings {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub adapt: bool,
    pub pure_py: bool,
    pub proposal_sd_sigma: f64,
    pub proposal_sd_theta: f64,
    pub priors: HyperPriors,
}

impl Default for ChainSettings {
    fn default() -> Self {
        Self {
            iterations: 15_000,
            burn_in: 5_000,
            thin: 10,
            seed: 0,
            adapt: true,
            pure_py: false,
            proposal_sd_sigma: 0.5,
            proposal_sd_theta: 0.5,
            priors: HyperPriors::default(),
        }
    }
}

impl ChainSettings {
    pub fn apply(&mut self, kv: &mut KeyValues) -> CliResult<()> {
        macro_rules! set {
            ($field:expr, $key:literal) => {
                if let Some(v) = kv.take($key)? {
                    $field = v;
                }
            };
        }
        set!(self.iterations, "iterations");
        set!(self.burn_in, "burn_in");
        set!(self.thin, "thin");
        set!(self.seed, "seed");
        set!(self.adapt, "adapt");
        set!(self.pure_py, "pure_py");
        set!(self.proposal_sd_sigma, "proposal_sd_sigma");
        set!(self.proposal_sd_theta, "proposal_sd_theta");
        set!(self.priors.sigma.a, "prior.sigma.a");
        set!(self.priors.sigma.b, "prior.sigma.b");
        set!(self.priors.theta.shape, "prior.theta.shape");
        set!(self.priors.theta.rate, "prior.theta.rate");
        set!(self.priors.beta.a, "prior.beta.a");
        set!(self.priors.beta.b, "prior.beta.b");
        Ok(())
    }
}

/// Normal-inverse-Wishart block, e.g. `base.kappa`. Unset entries fall back to
/// the empirical choice: ν = d + 3, diagonal sample variances, centred mean.
pub fn niw_block(kv: &mut KeyValues, prefix: &str, data: &DataMatrix) -> CliResult<NiwParams> {
    let kappa: f64 = kv.require(&format!("{prefix}.kappa"))?;
    let center: bool = kv.take(&format!("{prefix}.center"))?.unwrap_or(true);
    let mut niw = NiwParams::empirical(data, kappa, center)?;
    let d = data.ncols();
    let nu: Option<f64> = kv.take(&format!("{prefix}.nu"))?;
    let mu = kv.take_list(&format!("{prefix}.mu"))?;
    let diag = kv.take_list(&format!("{prefix}.scale"))?;
    if let Some(mu) = mu {
        if mu.len() != d {
            return Err(invalid(format!("{prefix}.mu has {} entries, data have {d} columns", mu.len())));
        }
        niw.mu = mu;
    }
    if let Some(diag) = diag {
        if diag.len() != d {
            return Err(invalid(format!("{prefix}.scale has {} entries, data have {d} columns", diag.len())));
        }
        niw.scale = SpdMatrix::diagonal(&diag)?;
    }
    Ok(NiwParams::new(niw.mu, niw.kappa, nu.unwrap_or(niw.nu), niw.scale)?)
}
