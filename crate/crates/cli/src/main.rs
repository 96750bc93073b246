//! `enet-rank`: elastic-net frequency ranking and incremental SVM selection
//! from the command line.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use enet_rank::dataset::SynthSpec;

use crate::config::{RunArgs, Settings};

#[derive(Parser)]
#[command(name = "enet-rank", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rank features by how often cross-validated elastic nets select them.
    Rank(RunArgs),
    /// Evaluate a linear SVM on growing prefixes of a ranking.
    Select {
        #[command(flatten)]
        args: RunArgs,
        /// Ranking JSON to use instead of `<out>/ranking_<alpha>.json`.
        #[arg(long)]
        ranking: Option<PathBuf>,
    },
    /// Feature counts and test metrics of the elastic net models themselves.
    Baseline(RunArgs),
    /// rank, baseline, select and report in one pass.
    Run(RunArgs),
    /// Write a synthetic dataset with a planted support.
    Synth(SynthArgs),
    /// Merge the fragments in a run directory into report.json and report.txt.
    Report {
        /// Run directory holding the fragments.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 50)]
    p: usize,
    /// Informative feature indices, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    support: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    magnitude: f64,
    /// Standard deviation of the latent-score noise.
    #[arg(long, default_value_t = 0.5)]
    noise: f64,
    /// Fraction of cases labelled 1.
    #[arg(long, default_value_t = 0.5)]
    balance: f64,
    #[arg(long)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// File stem of the CSV and manifest.
    #[arg(long, default_value = "synthetic")]
    name: String,
}

fn with_pool<T: Send>(args: &RunArgs, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = config::requested_jobs(args)? {
        builder = builder.num_threads(jobs);
    }
    builder.build().context("starting worker pool")?.install(f)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Rank(args) => with_pool(&args, || commands::rank(&Settings::resolve(&args)?)),
        Command::Baseline(args) => {
            with_pool(&args, || commands::baseline(&Settings::resolve(&args)?))
        }
        Command::Select { args, ranking } => with_pool(&args, || {
            commands::select(&Settings::resolve(&args)?, ranking.as_deref())
        }),
        Command::Run(args) => with_pool(&args, || commands::run_all(&Settings::resolve(&args)?)),
        Command::Report { out } => commands::report(&out),
        Command::Synth(s) => {
            let spec = SynthSpec {
                n: s.n,
                p: s.p,
                support: s.support,
                coefficient_magnitude: s.magnitude,
                noise_stddev: s.noise,
                class_balance: s.balance,
                seed: s.seed,
            };
            let path = commands::synth(&spec, &s.out, &s.name)?;
            println!("{}", path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
