//! Convergence diagnostics for scalar chains.

use std::collections::BTreeMap;

use serde::{Serialize, Serializer};

use crate::error::{invalid, Error, Result};

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn centered(x: &[f64]) -> Vec<f64> {
    let m = mean(x);
    x.iter().map(|v| v - m).collect()
}

fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|v| *v == x[0])
}

/// Effective sample size by Geyer's initial positive sequence.
///
/// The integrated autocorrelation time is floored at 1/log10(N), so
/// antithetic chains may report more than N effective draws.
pub fn ess(chain: &[f64]) -> Result<f64> {
    let n = chain.len();
    if n < 10 {
        return Err(Error::TooShort(format!("ESS needs at least 10 draws, got {n}")));
    }
    if chain.iter().any(|v| !v.is_finite()) {
        return invalid("chain contains non-finite values");
    }
    if is_constant(chain) {
        return Err(Error::ConstantChain);
    }
    let z = centered(chain);
    let gamma0 = z.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let rho = |t: usize| z[..n - t].iter().zip(&z[t..]).map(|(a, b)| a * b).sum::<f64>() / n as f64 / gamma0;
    let mut sum = 0.0;
    let mut m = 0;
    while 2 * m + 1 < n {
        let pair = if m == 0 { 1.0 } else { rho(2 * m) } + rho(2 * m + 1);
        if pair <= 0.0 {
            break;
        }
        sum += pair;
        m += 1;
    }
    let tau = (2.0 * sum - 1.0).max(1.0 / (n as f64).log10());
    Ok(n as f64 / tau)
}

/// Spectral density at frequency zero: a modified-Daniell average of the
/// lowest periodogram ordinates, scaled so that Var(mean) ≈ S(0)/n.
fn spectrum_at_zero(x: &[f64]) -> f64 {
    let n = x.len();
    let z = centered(x);
    let bins = ((0.04 * n as f64).ceil() as usize).max(2);
    let ordinate = |j: usize| {
        let w = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for (t, v) in z.iter().enumerate() {
            let (s, c) = (w * t as f64).sin_cos();
            re += v * c;
            im -= v * s;
        }
        (re * re + im * im) / n as f64
    };
    let mut acc = 0.0;
    for j in 1..bins {
        acc += ordinate(j);
    }
    acc += 0.5 * ordinate(bins);
    acc / (bins as f64 - 0.5)
}

/// Geweke z-score comparing the first `first` and last `last` fractions of the chain.
pub fn geweke_z(chain: &[f64], first: f64, last: f64) -> Result<f64> {
    if !(first > 0.0 && last > 0.0 && first + last <= 1.0) {
        return invalid(format!("window fractions {first} and {last} must be positive and sum to at most 1"));
    }
    let n = chain.len();
    let na = (first * n as f64).floor() as usize;
    let nb = (last * n as f64).floor() as usize;
    if na < 50 || nb < 50 {
        return Err(Error::TooShort(format!("Geweke windows need 50 draws each, got {na} and {nb}")));
    }
    if chain.iter().any(|v| !v.is_finite()) {
        return invalid("chain contains non-finite values");
    }
    if is_constant(chain) {
        return Err(Error::ConstantChain);
    }
    let a = &chain[..na];
    let b = &chain[n - nb..];
    let var = |w: &[f64]| if is_constant(w) { 0.0 } else { spectrum_at_zero(w) / w.len() as f64 };
    let diff = mean(a) - mean(b);
    let se = (var(a) + var(b)).sqrt();
    if se == 0.0 {
        return Ok(if diff == 0.0 { 0.0 } else { diff.signum() * f64::INFINITY });
    }
    Ok(diff / se)
}

/// A statistic that may be undefined for the chain at hand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Value(f64),
    /// The chain is constant.
    Degenerate,
    /// The chain is too short for the statistic.
    TooShort,
}

impl Metric {
    pub fn value(&self) -> Option<f64> {
        match self {
            Metric::Value(v) => Some(*v),
            _ => None,
        }
    }

    fn from_result(r: Result<f64>) -> Self {
        match r {
            Ok(v) => Metric::Value(v),
            Err(Error::ConstantChain) => Metric::Degenerate,
            Err(_) => Metric::TooShort,
        }
    }
}

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Metric::Value(v) if v.is_finite() => s.serialize_f64(*v),
            Metric::Value(_) => s.serialize_str("infinite"),
            Metric::Degenerate => s.serialize_str("degenerate"),
            Metric::TooShort => s.serialize_str("too_short"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainSummary {
    #[serde(skip_serializing)]
    pub draws: usize,
    pub mean: f64,
    pub sd: f64,
    /// Capped at the number of draws.
    pub ess: Metric,
    pub geweke_z: Metric,
}

pub fn summarize(chain: &[f64]) -> Result<ChainSummary> {
    if chain.is_empty() {
        return Err(Error::Empty("cannot summarize an empty chain"));
    }
    let n = chain.len();
    let m = mean(chain);
    let sd = if n > 1 {
        (chain.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let ess = match Metric::from_result(ess(chain)) {
        Metric::Value(v) => Metric::Value(v.min(n as f64)),
        other => other,
    };
    Ok(ChainSummary { draws: n, mean: m, sd, ess, geweke_z: Metric::from_result(geweke_z(chain, 0.1, 0.5)) })
}

/// Summaries keyed by parameter name.
pub fn summarize_all<'a>(chains: impl IntoIterator<Item = (&'a str, &'a [f64])>) -> Result<BTreeMap<String, ChainSummary>> {
    chains.into_iter().map(|(k, c)| Ok((k.to_string(), summarize(c)?))).collect()
}
