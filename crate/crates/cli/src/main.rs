//! `cgp`: command-line front end for contaminated Gibbs-type prior inference.

/// `println!` that ignores a closed stdout (e.g. when piped into `head`).
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout().lock(), $($t)*);
    }};
}

mod config;
mod diagnose;
mod error;
mod io;
mod mixture;
mod species;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliResult;

#[derive(Parser)]
#[command(name = "cgp", version, about = "Contaminated Pitman-Yor and Dirichlet process inference")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct FitArgs {
    /// Flat key = value file with MCMC settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    burnin: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fit the plain Pitman-Yor model (β = 1).
    #[arg(long)]
    pure_py: bool,
}

impl FitArgs {
    fn flags(&self) -> species::FitFlags {
        species::FitFlags {
            config: self.config.clone(),
            iters: self.iters,
            burnin: self.burnin,
            thin: self.thin,
            seed: self.seed,
            pure_py: self.pure_py,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample species labels from a contaminated Pitman-Yor process.
    SimulateSpecies {
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Posterior sampling of (σ, θ, β, m̄) from species counts.
    FitSpecies {
        /// CSV with one label per row, or label,count rows.
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        fit: FitArgs,
        /// Output directory for trace.json and summary.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Posterior expected numbers of new species in m further draws.
    PredictSpecies {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        m: usize,
        /// Cluster sizes r ≥ 2 to report, comma separated.
        #[arg(long, value_delimiter = ',')]
        r: Vec<usize>,
        /// Write the prediction here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeated train/test splits comparing contaminated and plain fits.
    CrossvalSpecies {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0.8)]
        frac: f64,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        #[command(flatten)]
        fit: FitArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Two-component Gaussian data with scattered outliers.
    SimulateMixture {
        #[arg(long, default_value_t = 2)]
        d: usize,
        /// Number of inliers.
        #[arg(long, default_value_t = 90)]
        m: usize,
        /// Number of outliers.
        #[arg(long, default_value_t = 10)]
        s: usize,
        /// Outlier scale.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Gaussian mixture fit with outlier detection and a point partition.
    FitMixture {
        /// Numeric CSV with a header; a "truth" column is ignored.
        #[arg(long)]
        data: PathBuf,
        /// Flat key = value file with NIW and MCMC settings.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        pure_py: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mean, sd, ESS and Geweke z-score per parameter of a trace.
    Diagnose {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::SimulateSpecies { theta, sigma, beta, n, seed, out } => {
            species::simulate(theta, sigma, beta, n, seed, &out)
        }
        Command::FitSpecies { data, fit, out } => species::fit(&data, &fit.flags(), &out),
        Command::PredictSpecies { trace, data, m, r, out } => species::predict(&trace, &data, m, &r, out.as_deref()),
        Command::CrossvalSpecies { data, frac, reps, fit, out } => {
            let seed = fit.seed.unwrap_or(0);
            species::crossval(&data, &species::CrossvalFlags { frac, reps, seed, fit: fit.flags() }, &out)
        }
        Command::SimulateMixture { d, m, s, c, seed, out } => {
            mixture::simulate(&cgp::synthetic::SyntheticMixtureConfig { d, m, s, c, seed }, &out)
        }
        Command::FitMixture { data, config, seed, pure_py, out } => mixture::fit(&data, &config, seed, pure_py, &out),
        Command::Diagnose { trace, out } => diagnose::diagnose(&trace, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("ERROR: {}", first.trim_start_matches("error: "));
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ERROR: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
