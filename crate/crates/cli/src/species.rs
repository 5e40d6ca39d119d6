//! Species subcommands: simulation, fitting, prediction and cross-validation.

use std::path::{Path, PathBuf};

use cgp::cgp::SampleSummary;
use cgp::numerics::substream;
use cgp::species::{run_chain_seeded, SpeciesFitConfig, SpeciesTrace};
use cgp::stats::{posterior_expected_km, posterior_expected_nm1, posterior_expected_nmr};
use cgp::synthetic::gen_discrete_scenario;
use cgp::CgpParams;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ChainSettings, KeyValues};
use crate::error::{invalid, CliError, CliResult};
use crate::io::{ensure_dir, read_species, write_csv, write_json, SpeciesCounts};

pub fn simulate(theta: f64, sigma: f64, beta: f64, n: usize, seed: u64, out: &Path) -> CliResult<()> {
    if n == 0 {
        return Err(invalid("--n must be at least 1"));
    }
    let seq = gen_discrete_scenario(theta, sigma, beta, n, seed)?;
    let rows = seq.labels.iter().zip(&seq.contaminant).map(|(l, c)| vec![l.to_string(), (*c as u8).to_string()]);
    write_csv(out, &["species".into(), "contaminant".into()], rows)
}

pub fn fit_config(settings: &ChainSettings) -> SpeciesFitConfig {
    SpeciesFitConfig {
        iterations: settings.iterations,
        burn_in: settings.burn_in,
        thin: settings.thin,
        priors: settings.priors,
        proposal_sd_sigma: settings.proposal_sd_sigma,
        proposal_sd_theta: settings.proposal_sd_theta,
        adapt: settings.adapt,
        seed: settings.seed,
        pure_py: settings.pure_py,
    }
}

/// Settings from an optional config file, then command-line overrides.
pub struct FitFlags {
    pub config: Option<PathBuf>,
    pub iters: Option<usize>,
    pub burnin: Option<usize>,
    pub thin: Option<usize>,
    pub seed: Option<u64>,
    pub pure_py: bool,
}

pub fn settings(flags: &FitFlags) -> CliResult<ChainSettings> {
    let mut s = ChainSettings::default();
    if let Some(path) = &flags.config {
        let mut kv = KeyValues::load(path)?;
        s.apply(&mut kv)?;
        kv.finish()?;
    }
    if let Some(v) = flags.iters {
        s.iterations = v;
    }
    if let Some(v) = flags.burnin {
        s.burn_in = v;
    }
    if let Some(v) = flags.thin {
        s.thin = v;
    }
    if let Some(v) = flags.seed {
        s.seed = v;
    }
    s.pure_py |= flags.pure_py;
    Ok(s)
}

pub fn fit(data: &Path, flags: &FitFlags, out: &Path) -> CliResult<()> {
    let counts = read_species(data)?;
    let cfg = fit_config(&settings(flags)?);
    cfg.validate()?;
    let trace = run_chain_seeded(&counts.frequency_vector()?, &cfg)?;
    let summary = crate::diagnose::summarize_species(&trace)?;
    ensure_dir(out)?;
    write_json(&out.join("trace.json"), &trace)?;
    write_json(&out.join("summary.json"), &summary)?;
    for (name, s) in &summary {
        say!("{name}: mean {:.4}, sd {:.4}", s.mean, s.sd);
    }
    Ok(())
}

pub fn read_trace(path: &Path) -> CliResult<SpeciesTrace> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read trace {}: {e}", path.display())))?;
    let t: SpeciesTrace =
        serde_json::from_str(&text).map_err(|e| invalid(format!("corrupt trace {}: {e}", path.display())))?;
    let n = t.sigma.len();
    if n == 0 || t.theta.len() != n || t.beta.len() != n || t.mbar.len() != n {
        return Err(invalid(format!("corrupt trace {}: parameter arrays are empty or unequal", path.display())));
    }
    Ok(t)
}

#[derive(Debug, Clone, Serialize)]
pub struct Estimate {
    pub mean: f64,
    /// Spread of the per-draw expectations across the posterior.
    pub sd: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SizeEstimate {
    pub r: usize,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Prediction {
    pub m: usize,
    pub draws: usize,
    /// New distinct species among the m further draws.
    pub new_species: Estimate,
    /// New species seen exactly once.
    pub new_singletons: Estimate,
    /// New species seen exactly r times.
    pub new_of_size: Vec<SizeEstimate>,
}

fn estimate(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 { (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    (m, sd)
}

/// Averages the closed-form posterior expectations over the kept draws.
pub fn predict_from_trace(trace: &SpeciesTrace, s: &SampleSummary, m: usize, sizes: &[usize]) -> CliResult<Prediction> {
    if m == 0 {
        return Err(invalid("--m must be at least 1"));
    }
    if let Some(r) = sizes.iter().find(|&&r| r < 2) {
        return Err(invalid(format!("--r entries must be at least 2, got {r}")));
    }
    let per_draw: Vec<Vec<f64>> = (0..trace.len())
        .into_par_iter()
        .map(|i| {
            let p = CgpParams::pitman_yor(trace.sigma[i], trace.theta[i], trace.beta[i])?;
            let mut v = vec![posterior_expected_km(s, &p, m)?, posterior_expected_nm1(s, &p, m)?];
            for &r in sizes {
                v.push(posterior_expected_nmr(s, &p, m, r)?);
            }
            Ok(v)
        })
        .collect::<CliResult<_>>()?;
    let column = |j: usize| estimate(&per_draw.iter().map(|v| v[j]).collect::<Vec<_>>());
    let est = |j: usize| {
        let (mean, sd) = column(j);
        Estimate { mean, sd }
    };
    Ok(Prediction {
        m,
        draws: trace.len(),
        new_species: est(0),
        new_singletons: est(1),
        new_of_size: sizes
            .iter()
            .enumerate()
            .map(|(j, &r)| {
                let (mean, sd) = column(2 + j);
                SizeEstimate { r, mean, sd }
            })
            .collect(),
    })
}

pub fn predict(trace: &Path, data: &Path, m: usize, sizes: &[usize], out: Option<&Path>) -> CliResult<()> {
    let trace = read_trace(trace)?;
    let counts = read_species(data)?;
    let pred = predict_from_trace(&trace, &counts.frequency_vector()?.summary(), m, sizes)?;
    match out {
        Some(p) => write_json(p, &pred),
        None => {
            say!("{}", serde_json::to_string_pretty(&pred).map_err(|e| CliError::Runtime(e.to_string()))?);
            Ok(())
        }
    }
}

/// Held-out counts of species absent from the training part.
fn held_out_truth(train: &[usize], test: &[usize], species: usize) -> [f64; 3] {
    let mut seen = vec![false; species];
    train.iter().for_each(|&s| seen[s] = true);
    let mut tally = vec![0usize; species];
    test.iter().filter(|&&s| !seen[s]).for_each(|&s| tally[s] += 1);
    let count = |f: &dyn Fn(usize) -> bool| tally.iter().filter(|&&c| f(c)).count() as f64;
    [count(&|c| c > 0), count(&|c| c == 1), count(&|c| c == 2)]
}

#[derive(Debug, Clone, Serialize)]
struct ModelMse {
    new_species: f64,
    new_singletons: f64,
    new_doubletons: f64,
}

#[derive(Debug, Clone, Serialize)]
struct CrossvalSummary {
    reps: usize,
    train_size: usize,
    test_size: usize,
    cpy: ModelMse,
    py: ModelMse,
}

const STATS: [&str; 3] = ["new_species", "new_singletons", "new_doubletons"];

pub struct CrossvalFlags {
    pub frac: f64,
    pub reps: usize,
    pub seed: u64,
    pub fit: FitFlags,
}

pub fn crossval(data: &Path, flags: &CrossvalFlags, out: &Path) -> CliResult<()> {
    if !(flags.frac > 0.0 && flags.frac < 1.0) {
        return Err(invalid(format!("--frac must lie strictly between 0 and 1, got {}", flags.frac)));
    }
    if flags.reps == 0 {
        return Err(invalid("--reps must be at least 1"));
    }
    let counts: SpeciesCounts = read_species(data)?;
    let obs = counts.expand();
    let n = obs.len();
    if n < 2 {
        return Err(invalid("cross-validation needs at least two observations"));
    }
    let n_train = ((flags.frac * n as f64).round() as usize).clamp(1, n - 1);
    let m = n - n_train;
    let base = settings(&flags.fit)?;
    fit_config(&base).validate()?;
    let species = counts.labels.len();
    // Per replicate: [truth; cpy prediction; py prediction], three statistics each.
    let results: Vec<[[f64; 3]; 3]> = (0..flags.reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = substream(flags.seed, rep as u64);
            let mut shuffled = obs.clone();
            shuffled.shuffle(&mut rng);
            let (train, test) = shuffled.split_at(n_train);
            let fv = cgp::FrequencyVector::from_labels(train)?;
            let truth = held_out_truth(train, test, species);
            let mut row = [truth, [0.0; 3], [0.0; 3]];
            for (slot, pure) in [(1, false), (2, true)] {
                let mut cfg = fit_config(&base);
                cfg.pure_py = pure;
                cfg.seed = rng.random();
                let trace = run_chain_seeded(&fv, &cfg)?;
                let p = predict_from_trace(&trace, &fv.summary(), m, &[2])?;
                row[slot] = [p.new_species.mean, p.new_singletons.mean, p.new_of_size[0].mean];
            }
            Ok(row)
        })
        .collect::<CliResult<_>>()?;
    let mut rows = Vec::new();
    for (rep, r) in results.iter().enumerate() {
        for (slot, model) in [(1, "cpy"), (2, "py")] {
            for (j, stat) in STATS.iter().enumerate() {
                rows.push(vec![
                    rep.to_string(),
                    model.to_string(),
                    stat.to_string(),
                    r[slot][j].to_string(),
                    r[0][j].to_string(),
                ]);
            }
        }
    }
    let mse = |slot: usize, j: usize| {
        results.iter().map(|r| (r[slot][j] - r[0][j]).powi(2)).sum::<f64>() / results.len() as f64
    };
    let model = |slot| ModelMse { new_species: mse(slot, 0), new_singletons: mse(slot, 1), new_doubletons: mse(slot, 2) };
    let summary = CrossvalSummary { reps: flags.reps, train_size: n_train, test_size: m, cpy: model(1), py: model(2) };
    ensure_dir(out)?;
    let header = ["rep", "model", "statistic", "predicted", "observed"].map(String::from);
    write_csv(&out.join("crossval.csv"), &header, rows)?;
    write_json(&out.join("mse.json"), &summary)?;
    say!(
        "MSE new singletons: CPY {:.3}, PY {:.3}",
        summary.cpy.new_singletons, summary.py.new_singletons
    );
    Ok(())
}
