use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "betaop", version, about = "Exact and numerical study of the quadratic beta-transformation transfer operator")]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "BETAOP_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact eigenfunction, restriction-matrix and projection checks.
    EigenCheck(EigenCheckArgs),
    /// `P^k F`, exact or by preimage-tree evaluation.
    Iterate(IterateArgs),
    /// Residuals of the one- or two-term expansion of `P^k F`.
    Asymptotics(AsymptoticsArgs),
    /// Points of the level-M partition.
    PartitionDump(PartitionDumpArgs),
    /// Coefficient rows of the Bernoulli polynomials.
    BernoulliTable(BernoulliTableArgs),
    /// Eigenrelation and expansion residuals of the integer-base operator.
    IntegerBase(IntegerBaseArgs),
    /// Building-block identities on every gap of a level-M partition.
    BlockCheck(BlockCheckArgs),
    /// Integral conservation and the sup-norm bound on random piecewise functions.
    MarkovCheck(MarkovCheckArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::EigenCheck(_) => "eigen-check",
            Command::Iterate(_) => "iterate",
            Command::Asymptotics(_) => "asymptotics",
            Command::PartitionDump(_) => "partition-dump",
            Command::BernoulliTable(_) => "bernoulli-table",
            Command::IntegerBase(_) => "integer-base",
            Command::BlockCheck(_) => "block-check",
            Command::MarkovCheck(_) => "markov-check",
        }
    }

    pub fn params(&self) -> Option<&ParamArgs> {
        match self {
            Command::EigenCheck(a) => Some(&a.params),
            Command::Iterate(a) => Some(&a.params),
            Command::Asymptotics(a) => Some(&a.params),
            Command::PartitionDump(a) => Some(&a.params),
            Command::BlockCheck(a) => Some(&a.params),
            Command::BernoulliTable(_) | Command::IntegerBase(_) | Command::MarkovCheck(_) => None,
        }
    }

    pub fn output(&self) -> &OutputArgs {
        match self {
            Command::EigenCheck(a) => &a.output,
            Command::Iterate(a) => &a.output,
            Command::Asymptotics(a) => &a.output,
            Command::PartitionDump(a) => &a.output,
            Command::BernoulliTable(a) => &a.output,
            Command::IntegerBase(a) => &a.output,
            Command::BlockCheck(a) => &a.output,
            Command::MarkovCheck(a) => &a.output,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let v = match self {
            Command::EigenCheck(a) => serde_json::to_value(a),
            Command::Iterate(a) => serde_json::to_value(a),
            Command::Asymptotics(a) => serde_json::to_value(a),
            Command::PartitionDump(a) => serde_json::to_value(a),
            Command::BernoulliTable(a) => serde_json::to_value(a),
            Command::IntegerBase(a) => serde_json::to_value(a),
            Command::BlockCheck(a) => serde_json::to_value(a),
            Command::MarkovCheck(a) => serde_json::to_value(a),
        };
        v.expect("arguments serialize")
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ParamArgs {
    /// First coefficient of `beta^2 = a0 beta + a1`.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(i64).range(1..=64))]
    pub a0: i64,
    /// Second coefficient; must satisfy `1 <= a1 <= a0`.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(i64).range(1..=64))]
    pub a1: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args, Serialize)]
pub struct OutputArgs {
    /// Write the result here instead of stdout; the run manifest goes to `<out>.manifest.json`.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    /// Exact piecewise arithmetic over Q(beta).
    Exact,
    /// Floating preimage-tree evaluation on a grid.
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpansionArg {
    OneTerm,
    TwoTerm,
}

#[derive(Debug, Args, Serialize)]
pub struct EigenCheckArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub params: ParamArgs,
    /// Number of 2x2 diagonal blocks to check.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..=8))]
    pub nu: u32,
    /// Emit a JSON report instead of text.
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct IterateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub params: ParamArgs,
    /// Built-in function name or a piecewise JSON file.
    #[arg(long, short = 'f', default_value = "psi1")]
    pub f: String,
    #[arg(long, short = 'k', default_value_t = 1)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = Engine::Exact)]
    pub engine: Engine,
    /// Sample rows in CSV output (equispaced on [0, 1]).
    #[arg(long, default_value_t = 1001, value_parser = clap::value_parser!(u64).range(2..=1_000_000))]
    pub samples: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Piece budget of the exact engine.
    #[arg(long, default_value_t = 1_000_000)]
    pub max_pieces: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct AsymptoticsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub params: ParamArgs,
    #[arg(long, short = 'f', default_value = "linear")]
    pub f: String,
    #[arg(long, default_value_t = 18, value_parser = clap::value_parser!(u64).range(1..=200))]
    pub k_max: u64,
    /// Order `N` of the rate theorem; fixes `epsilon`.
    #[arg(long, short = 'n', default_value_t = 7)]
    pub n: u32,
    /// Grid points of the numeric engine.
    #[arg(long, default_value_t = 1001, value_parser = clap::value_parser!(u64).range(101..=1_000_000))]
    pub grid: u64,
    #[arg(long, value_enum, default_value_t = Engine::Exact)]
    pub engine: Engine,
    #[arg(long, value_enum, default_value_t = ExpansionArg::TwoTerm)]
    pub expansion: ExpansionArg,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_pieces: usize,
    /// Exit 1 unless the fitted slope is at most `-(1 + epsilon) ln beta + 0.05`
    /// (two-term) or within 0.05 of `-ln beta` (one-term).
    #[arg(long)]
    pub check: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct PartitionDumpArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub params: ParamArgs,
    /// Partition level.
    #[arg(long, short = 'm', default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..=16))]
    pub m: u32,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct BernoulliTableArgs {
    /// Largest degree.
    #[arg(long, short = 'n', default_value_t = 6, value_parser = clap::value_parser!(u64).range(0..=64))]
    pub n: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Precision {
    /// `f64` preimage sums.
    Double,
    /// Multiprecision preimage sums.
    Multi,
}

#[derive(Debug, Args, Serialize)]
pub struct IntegerBaseArgs {
    /// Built-in smooth function.
    #[arg(long, short = 'f', default_value = "sin")]
    pub f: String,
    #[arg(long, short = 'q', default_value_t = 2, value_parser = clap::value_parser!(u32).range(2..=16))]
    pub q: u32,
    /// Expansion order.
    #[arg(long, short = 'n', default_value_t = 3, value_parser = clap::value_parser!(u64).range(0..=12))]
    pub n: u64,
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u64).range(1..=40))]
    pub k_min: u64,
    #[arg(long, default_value_t = 14, value_parser = clap::value_parser!(u64).range(1..=40))]
    pub k_max: u64,
    #[arg(long, default_value_t = 21, value_parser = clap::value_parser!(u64).range(2..=100_000))]
    pub grid: u64,
    #[arg(long, value_enum, default_value_t = Precision::Multi)]
    pub precision: Precision,
    /// Working precision in bits for `--precision multi`.
    #[arg(long, default_value_t = 160, value_parser = clap::value_parser!(u64).range(64..=4096))]
    pub bits: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct BlockCheckArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub params: ParamArgs,
    #[arg(long, short = 'm', default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..=6))]
    pub m: u32,
    /// Largest Bernoulli degree `s`.
    #[arg(long, short = 's', default_value_t = 3, value_parser = clap::value_parser!(u64).range(0..=4))]
    pub s: u64,
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct MarkovCheckArgs {
    /// Number of random piecewise functions.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 8)]
    pub seed: u64,
    /// Parameters are drawn from all pairs with `a0` up to this value.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..=12))]
    pub max_a0: u32,
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}
