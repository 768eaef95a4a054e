//! Command-line front end for the knowledge dynamics experiments.
//!
//! Exit codes: 0 on success, 2 for invalid input, 3 for runtime failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use epidyn::experiments::{run_experiment, Overrides, ProfessorLikelihood};
use epidyn::MetricVariant;

#[derive(Parser)]
#[command(name = "epidyn", version, about = "Simulate knowledge propagation in agent populations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Consensus,
    Nearest,
}

#[derive(Clone, Copy, ValueEnum)]
enum Likelihood {
    Concave,
    Constant,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset (test1..test4) or a JSON experiment file.
    Run {
        /// Preset name or path to a configuration file.
        source: String,
        /// Self-weight of the two agents (test1 only).
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        sample_size: Option<usize>,
        /// Likelihood landscape of the professor experiment (test2 only).
        #[arg(long, value_enum)]
        likelihood: Option<Likelihood>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Distance used for the summary and the decay fit.
        #[arg(long, value_enum)]
        metric: Option<Metric>,
    },
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("EPIDYN_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("EPIDYN_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let Command::Run {
        source,
        alpha,
        tau,
        replicates,
        horizon,
        seed,
        sample_size,
        likelihood,
        out,
        metric,
    } = cli.command;
    let overrides = Overrides {
        alpha,
        tau,
        replicates,
        horizon,
        seed,
        sample_size,
        metric: metric.map(|m| match m {
            Metric::Consensus => MetricVariant::ConsensusProjection,
            Metric::Nearest => MetricVariant::NearestIndividual,
        }),
        likelihood: likelihood.map(|l| match l {
            Likelihood::Concave => ProfessorLikelihood::Concave,
            Likelihood::Constant => ProfessorLikelihood::Constant,
        }),
    };
    match run_experiment(&source, &overrides, &out) {
        Ok((_, files)) => {
            match std::fs::read_to_string(&files.summary) {
                Ok(text) => print!("{text}"),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(3);
                }
            }
            println!("outputs written to {}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
