//! Mixture subcommands: synthetic data and fitting with outlier detection.

use std::path::Path;

use cgp::mixture::{run_mixture_chain_seeded, MixtureFitConfig, MixtureModel};
use cgp::partition::{count_singletons, vi_point_estimate, Partition};
use cgp::synthetic::{gen_mixture_with_outliers, SyntheticMixtureConfig};
use serde::Serialize;

use crate::config::{niw_block, ChainSettings, KeyValues};
use crate::diagnose::summarize_value;
use crate::error::{CliError, CliResult};
use crate::io::{ensure_dir, read_matrix, write_csv, write_json};

pub fn simulate(cfg: &SyntheticMixtureConfig, out: &Path) -> CliResult<()> {
    let s = gen_mixture_with_outliers(cfg)?;
    let mut header: Vec<String> = (1..=cfg.d).map(|j| format!("x{j}")).collect();
    header.push("truth".into());
    let rows = (0..s.data.nrows()).map(|i| {
        let mut r: Vec<String> = s.data.row(i).iter().map(|v| v.to_string()).collect();
        r.push((s.outlier[i] as u8).to_string());
        r
    });
    write_csv(out, &header, rows)
}

#[derive(Debug, Serialize)]
struct ClusterRow {
    label: usize,
    size: usize,
}

#[derive(Debug, Serialize)]
struct PointSummary {
    /// Singleton blocks, flagged contaminants included.
    singletons: usize,
    contaminants: usize,
    expected_vi: f64,
    /// Index of the chosen draw among the kept draws.
    draw: usize,
    clusters: Vec<ClusterRow>,
}

pub fn fit(data: &Path, config: &Path, seed: Option<u64>, pure_py: bool, out: &Path) -> CliResult<()> {
    let (matrix, _) = read_matrix(data)?;
    let mut kv = KeyValues::load(config)?;
    let mut s = ChainSettings::default();
    s.apply(&mut kv)?;
    let fix_sigma: Option<f64> = kv.take("fix_sigma")?;
    let fix_theta: Option<f64> = kv.take("fix_theta")?;
    let fix_beta: Option<f64> = kv.take("fix_beta")?;
    let base = niw_block(&mut kv, "base", &matrix)?;
    let contaminant = niw_block(&mut kv, "contaminant", &matrix)?;
    kv.finish()?;
    if let Some(v) = seed {
        s.seed = v;
    }
    s.pure_py |= pure_py;
    let cfg = MixtureFitConfig {
        iterations: s.iterations,
        burn_in: s.burn_in,
        thin: s.thin,
        priors: s.priors,
        proposal_sd_sigma: s.proposal_sd_sigma,
        proposal_sd_theta: s.proposal_sd_theta,
        adapt: s.adapt,
        seed: s.seed,
        pure_py: s.pure_py,
        fix_sigma,
        fix_theta,
        fix_beta,
    };
    cfg.validate()?;
    let n = matrix.nrows();
    let model = MixtureModel::new(matrix, base, contaminant)?;
    let trace = run_mixture_chain_seeded(&model, &cfg)?;
    let parts: Vec<Partition> = trace.allocations.iter().map(|a| Partition::new(a)).collect();
    let est = vi_point_estimate(&parts)?;
    let labels = est.partition.labels();
    let k = labels.iter().copied().max().unwrap_or(0);
    let clusters = (1..=k).map(|j| ClusterRow { label: j, size: labels.iter().filter(|&&l| l == j).count() }).collect();
    let point = PointSummary {
        singletons: count_singletons(&est.partition),
        contaminants: labels.iter().filter(|&&l| l == 0).count(),
        expected_vi: est.expected_vi,
        draw: est.index,
        clusters,
    };

    ensure_dir(out)?;
    let trace_value = serde_json::to_value(&trace).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_json(&out.join("trace.json"), &trace_value)?;
    write_json(&out.join("summary.json"), &summarize_value(&trace_value)?)?;
    let header: Vec<String> = (1..=n).map(|i| format!("obs{i}")).collect();
    let rows = trace.allocations.iter().map(|a| a.iter().map(|l| l.to_string()).collect());
    write_csv(&out.join("allocations.csv"), &header, rows)?;
    let rows = labels.iter().enumerate().map(|(i, l)| vec![(i + 1).to_string(), l.to_string()]);
    write_csv(&out.join("point.csv"), &["row".into(), "label".into()], rows)?;
    write_json(&out.join("point_summary.json"), &point)?;

    say!("singletons: {} (flagged contaminants: {})", point.singletons, point.contaminants);
    say!("cluster  size");
    for c in &point.clusters {
        say!("{:>7}  {}", c.label, c.size);
    }
    Ok(())
}
