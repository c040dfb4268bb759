//! `medusa` command-line entry point.

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

mod args;
mod chains;
mod detect;
mod eval;
mod fit;
mod plot;
mod resolve;
mod run;
mod synth;

use args::{ChainsArgs, DetectArgs, EvalArgs, FitArgs, SynthArgs};

const THREADS_ENV: &str = "MEDUSA_THREADS";

#[derive(Debug, Parser)]
#[command(name = "medusa", version)]
#[command(about = "Fuse relation matrices, enumerate chains and detect significant modules")]
struct Cli {
    /// Worker threads (default: machine parallelism). MEDUSA_THREADS overrides this flag.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Log filter in tracing env-filter syntax.
    #[arg(long, global = true, default_value = "warn")]
    log: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Factorize a fusion graph and persist the latent model
    Fit(FitArgs),
    /// List the chains connecting two object types
    Chains(ChainsArgs),
    /// Detect a module of candidates around a pivot set
    Detect(DetectArgs),
    /// Run the association (loocv) or module recovery protocol
    Eval(EvalArgs),
    /// Generate a synthetic fusion graph with a planted module
    Synth(SynthArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(&cli.log));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    configure_threads(cli.threads)?;
    match cli.command {
        Command::Fit(a) => fit::run(a),
        Command::Chains(a) => chains::run(a),
        Command::Detect(a) => detect::run(a),
        Command::Eval(a) => eval::run(a),
        Command::Synth(a) => synth::run(a),
    }
}

/// 2 for numerical breakdown anywhere in the error chain, 1 otherwise.
fn exit_code(e: &anyhow::Error) -> u8 {
    let numerical = e
        .chain()
        .filter_map(|c| c.downcast_ref::<medusa_core::Error>())
        .any(medusa_core::Error::is_numerical);
    if numerical {
        2
    } else {
        1
    }
}

fn configure_threads(flag: Option<usize>) -> anyhow::Result<()> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| anyhow::anyhow!("{THREADS_ENV}=`{v}` is not a thread count"))?,
        ),
        Err(_) => flag,
    };
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        anyhow::bail!("thread count must be >= 1");
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| anyhow::anyhow!("cannot size the worker pool: {e}"))?;
    #[cfg(not(feature = "parallel"))]
    tracing::info!(
        threads = n,
        "built without the parallel feature; running sequentially"
    );
    Ok(())
}
