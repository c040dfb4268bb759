use std::path::PathBuf;

use clap::{ArgGroup, Args, ValueEnum};
use medusa_core::detection::Regime;
use medusa_core::factorization::InitScheme;
use serde::Serialize;

fn parse_fraction(s: &str) -> Result<f64, String> {
    let p: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if p > 0.0 && p <= 1.0 {
        Ok(p)
    } else {
        Err(format!("{p} outside (0, 1]"))
    }
}

fn parse_open_fraction(s: &str) -> Result<f64, String> {
    let p: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if p > 0.0 && p < 1.0 {
        Ok(p)
    } else {
        Err(format!("{p} outside (0, 1)"))
    }
}

fn parse_unit(s: &str) -> Result<f64, String> {
    let p: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..1.0).contains(&p) {
        Ok(p)
    } else {
        Err(format!("{p} outside [0, 1)"))
    }
}

fn parse_rank(s: &str) -> Result<(String, usize), String> {
    let (t, k) = s
        .split_once('=')
        .ok_or_else(|| format!("`{s}` is not of the form type=rank"))?;
    let k = k
        .parse()
        .map_err(|_| format!("rank `{k}` is not an integer"))?;
    Ok((t.to_string(), k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Init {
    RandomAcol,
    RandomUniform,
}

impl From<Init> for InitScheme {
    fn from(i: Init) -> Self {
        match i {
            Init::RandomAcol => InitScheme::RandomAcol,
            Init::RandomUniform => InitScheme::RandomUniform,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeArg {
    Cpe,
    Cpi,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Cpe => Regime::Cpe,
            RegimeArg::Cpi => Regime::Cpi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Loocv,
    Recovery,
}

/// Factorization settings shared by `fit` and `eval --graph`.
#[derive(Debug, Clone, Args, Serialize)]
pub struct FitOptions {
    /// Rank fraction in (0, 1]: each type gets max(1, round(p * n)) latent dimensions
    #[arg(long, value_parser = parse_fraction, conflicts_with = "ranks")]
    pub p: Option<f64>,

    /// Explicit ranks as type=rank pairs, comma separated (e.g. gene=8,term=4)
    #[arg(long, value_delimiter = ',', value_parser = parse_rank)]
    pub ranks: Vec<(String, usize)>,

    /// Maximum number of sweeps
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,

    /// Relative objective change that stops the iteration
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,

    /// Factor initialization
    #[arg(long, value_enum, default_value_t = Init::RandomAcol)]
    pub init: Init,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    /// Graph manifest (JSON)
    #[arg(long)]
    pub graph: PathBuf,

    #[command(flatten)]
    #[serde(flatten)]
    pub fit: FitOptions,

    /// RNG seed; drawn and recorded when absent
    #[arg(long)]
    pub seed: Option<u64>,

    /// Model output directory
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("source").required(true).args(["model", "graph"])))]
pub struct ChainsArgs {
    /// Model directory written by `fit`
    pub model: Option<PathBuf>,

    /// Graph manifest, as an alternative to a model directory
    #[arg(long)]
    pub graph: Option<PathBuf>,

    /// Source object type
    #[arg(long)]
    pub from: String,

    /// Target object type
    #[arg(long)]
    pub to: String,

    /// Maximum chain length in edges
    #[arg(long, default_value_t = 5)]
    pub max_len: usize,

    /// Also write chains.json and a run manifest into this directory
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

/// Semantics and detection parameters shared by `detect` and `eval`.
#[derive(Debug, Clone, Args, Serialize)]
pub struct DetectOptions {
    /// Chain spec `edge[!] > edge[!] ...` (`!` = reverse); repeat for several semantics
    #[arg(long = "chain", required = true)]
    pub chains: Vec<String>,

    /// Combine all listed chains into one weighted score
    #[arg(long)]
    pub combine: bool,

    /// Detection regime: cpe (pivots are candidates) or cpi (pivots are context objects)
    #[arg(long, value_enum, default_value_t = RegimeArg::Cpe)]
    pub regime: RegimeArg,

    /// Pivot down-weighting for accreted members, in [0, 1) (cpe)
    #[arg(long, default_value_t = 0.5, value_parser = parse_unit)]
    pub alpha: f64,

    /// Visibility decay base, in [0, 1) (cpi)
    #[arg(long, default_value_t = 0.05, value_parser = parse_unit)]
    pub beta: f64,

    /// Number of strongest context columns per candidate (cpe)
    #[arg(long, default_value_t = 5)]
    pub q: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct DetectArgs {
    /// Model directory written by `fit`
    pub model: PathBuf,

    /// Pivot labels, one per line (`#` starts a comment)
    #[arg(long)]
    pub pivots: PathBuf,

    /// Module size
    #[arg(long)]
    pub k: usize,

    #[command(flatten)]
    #[serde(flatten)]
    pub detect: DetectOptions,

    /// Output directory for module.json, module.tsv and the run manifest
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("source").required(true).args(["model", "graph"])))]
pub struct EvalArgs {
    /// Model directory written by `fit`
    #[arg(long)]
    pub model: Option<PathBuf>,

    /// Graph manifest; the model is fitted first (needs --p or --ranks)
    #[arg(long)]
    pub graph: Option<PathBuf>,

    #[command(flatten)]
    #[serde(flatten)]
    pub fit: FitOptions,

    /// Cases file: JSON list of {name, positives, context_pivots} with labels
    #[arg(long)]
    pub cases: PathBuf,

    /// Evaluation protocol
    #[arg(long, value_enum)]
    pub protocol: Protocol,

    /// Fraction of each case removed before recovery, in (0, 1)
    #[arg(long, default_value_t = 0.5, value_parser = parse_open_fraction)]
    pub fraction: f64,

    #[command(flatten)]
    #[serde(flatten)]
    pub detect: DetectOptions,

    /// RNG seed for recovery removal and for fitting; drawn and recorded when absent
    #[arg(long)]
    pub seed: Option<u64>,

    /// Also write roc.svg and pr.svg
    #[arg(long)]
    pub plot: bool,

    /// Output directory for report.json, metrics.tsv and the run manifest
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// RNG seed; drawn and recorded when absent
    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long, default_value_t = 80)]
    pub genes: usize,
    #[arg(long, default_value_t = 30)]
    pub terms: usize,
    #[arg(long, default_value_t = 25)]
    pub chemicals: usize,
    #[arg(long, default_value_t = 12)]
    pub diseases: usize,
    #[arg(long, default_value_t = 15)]
    pub tissues: usize,

    /// Fraction of relation entries observed, in (0, 1]
    #[arg(long, default_value_t = 1.0)]
    pub density: f64,

    /// Rank of the shared background profiles
    #[arg(long, default_value_t = 4)]
    pub background_rank: usize,

    /// Number of planted module genes
    #[arg(long, default_value_t = 12)]
    pub module_size: usize,

    /// Planted terms, chemicals and diseases
    #[arg(long, default_value_t = 4)]
    pub planted_contexts: usize,

    /// Loading of the planted component (0 = pure noise)
    #[arg(long, default_value_t = 4.0)]
    pub signal: f64,

    /// Output directory for the graph, truth.json, cases.json and the run manifest
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}
