use std::ops::RangeInclusive;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "lowrank", version, about = "Deterministic low-rank selection: columns, CUR, cross and Tucker fibers")]
pub struct Cli {
    /// Cap on worker threads (1 disables parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a test matrix or tensor.
    Gen(GenArgs),
    /// Column subset selection.
    Css(RunArgs),
    /// CUR approximation.
    Cur(RunArgs),
    /// Cross (skeleton) approximation.
    Cross(RunArgs),
    /// Fiber-based Tucker approximation.
    Tucker(TuckerArgs),
    /// Both variants of one algorithm over a k range.
    Bench(BenchArgs),
    /// Exact-to-early-stop wall time ratio per k.
    Speedup(SpeedupArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MatrixName {
    Hilbert,
    /// exp(-0.3|i-j|/200)
    Exp,
    /// ((i/200)^20 + (j/200)^20)^(1/20)
    Power,
    /// ((i/100)^10 + (j/100)^10)^(1/10)
    PowerCross,
    Deim,
    Ldlt,
    Cancellation,
    TwoEps,
    Symmetric,
    Greedy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TensorName {
    Hilbert3,
    Power3,
}

#[derive(Args, Debug, Clone)]
pub struct MatrixSource {
    /// Built-in generator.
    #[arg(long, value_enum, conflicts_with = "input", required_unless_present = "input")]
    pub matrix: Option<MatrixName>,
    /// CSV file with one matrix row per line.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub params: GenParams,
}

#[derive(Args, Debug, Clone)]
pub struct GenParams {
    /// Row count (defaults to --n).
    #[arg(long)]
    pub m: Option<usize>,
    /// Column count, or the size of square generators.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.01)]
    pub eps: f64,
    /// Exponent of the greedy-failure matrix.
    #[arg(long, default_value_t = 16)]
    pub b: i32,
    /// Tensor order for tensor generators.
    #[arg(long, default_value_t = 3)]
    pub order: usize,
}

#[derive(Args, Debug, Clone)]
pub struct RankArgs {
    #[arg(long, conflicts_with = "k_sweep", required_unless_present = "k_sweep")]
    pub k: Option<usize>,
    /// Inclusive range `a:b`.
    #[arg(long, value_parser = parse_sweep)]
    pub k_sweep: Option<RangeInclusive<usize>>,
}

impl RankArgs {
    pub fn ks(&self) -> Vec<usize> {
        match (&self.k, &self.k_sweep) {
            (Some(k), _) => vec![*k],
            (None, Some(r)) => r.clone().collect(),
            (None, None) => Vec::new(),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Also write the CSV report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the full JSON result instead of the CSV report.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: MatrixSource,
    #[command(flatten)]
    pub rank: RankArgs,
    #[arg(long)]
    pub early_stop: bool,
    /// Fail instead of reducing k to the numerical rank.
    #[arg(long)]
    pub no_rank_guard: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long, value_enum, conflicts_with = "tensor", required_unless_present = "tensor")]
    pub matrix: Option<MatrixName>,
    #[arg(long, value_enum)]
    pub tensor: Option<TensorName>,
    #[command(flatten)]
    pub params: GenParams,
    /// Destination file (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TuckerArgs {
    #[arg(long, value_enum, conflicts_with = "input", required_unless_present = "input")]
    pub tensor: Option<TensorName>,
    /// Tensor file: `shape: n1 n2 ...` header, then entries.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub params: GenParams,
    /// Comma-separated rank per mode.
    #[arg(long, value_delimiter = ',', conflicts_with = "k_sweep", required_unless_present = "k_sweep")]
    pub ranks: Option<Vec<usize>>,
    /// Equal rank in every mode over an inclusive range `a:b`.
    #[arg(long, value_parser = parse_sweep)]
    pub k_sweep: Option<RangeInclusive<usize>>,
    #[arg(long)]
    pub early_stop: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Algorithm {
    Css,
    Cur,
    Cross,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub algo: Algorithm,
    #[command(flatten)]
    pub source: MatrixSource,
    #[command(flatten)]
    pub rank: RankArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct SpeedupArgs {
    #[arg(long, value_enum, default_value = "css")]
    pub algo: Algorithm,
    #[command(flatten)]
    pub source: MatrixSource,
    #[command(flatten)]
    pub rank: RankArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn parse_sweep(s: &str) -> Result<RangeInclusive<usize>, String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected a:b, got {s:?}"))?;
    let a: usize = a.trim().parse().map_err(|e| format!("bad start {a:?}: {e}"))?;
    let b: usize = b.trim().parse().map_err(|e| format!("bad end {b:?}: {e}"))?;
    if a == 0 || a > b {
        return Err(format!("need 1 <= a <= b, got {a}:{b}"));
    }
    Ok(a..=b)
}
