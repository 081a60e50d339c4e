mod args;
mod report;
mod source;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use lowrank_core::cross::select_cross;
use lowrank_core::cur::cur_approximate;
use lowrank_core::matcore::{to_csv_string, write_csv};
use lowrank_core::tensor::{tensor_to_string, tucker_select, write_tensor};
use lowrank_core::{select_columns, CssConfig, DenseMatrix, LowRankError};
use serde_json::{json, Value};

use args::{Algorithm, BenchArgs, Cli, Command, GenArgs, RunArgs, SpeedupArgs, TuckerArgs};
use report::{emit, ReportRow, Variant};

/// Failure with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<LowRankError> for Failure {
    fn from(e: LowRankError) -> Self {
        let code = match e {
            LowRankError::InvalidInput(_)
            | LowRankError::DimensionMismatch(_)
            | LowRankError::NonFinite(_)
            | LowRankError::IndexOutOfRange { .. }
            | LowRankError::NotUnitVector { .. }
            | LowRankError::NegativeEigenvalue { .. }
            | LowRankError::EnumerationCap { .. }
            | LowRankError::Parse(_)
            | LowRankError::Io(_) => 2,
            _ => 3,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Css(a) => run(Algorithm::Css, a),
        Command::Cur(a) => run(Algorithm::Cur, a),
        Command::Cross(a) => run(Algorithm::Cross, a),
        Command::Tucker(a) => tucker(a),
        Command::Bench(a) => bench(a),
        Command::Speedup(a) => speedup(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn gen(a: GenArgs) -> CliResult<()> {
    if let Some(name) = a.matrix {
        let m = source::generate_matrix(name, &a.params)?;
        match &a.out {
            Some(p) => write_csv(p, &m)?,
            None => print!("{}", to_csv_string(&m)),
        }
    } else if let Some(name) = a.tensor {
        let t = source::generate_tensor(name, &a.params)?;
        match &a.out {
            Some(p) => write_tensor(p, &t)?,
            None => print!("{}", tensor_to_string(&t)),
        }
    }
    Ok(())
}

fn config(variant: Variant, rank_guard: bool) -> CssConfig {
    CssConfig {
        early_stop: variant == Variant::EarlyStop,
        rank_guard,
        ..CssConfig::default()
    }
}

/// Runs one algorithm for one `k`, returning its report row and full result.
fn run_once(algo: Algorithm, a: &DenseMatrix, k: usize, cfg: CssConfig) -> CliResult<(ReportRow, Value)> {
    let variant = if cfg.early_stop { Variant::EarlyStop } else { Variant::Exact };
    let start = Instant::now();
    let (k_eff, residual, bound, best, tested, value) = match algo {
        Algorithm::Css => {
            let r = select_columns(a, k, cfg)?;
            let v = json!(r);
            (r.k, r.residual_fro, r.bound_fro, r.quasi_best_fro, r.candidates_tested, v)
        }
        Algorithm::Cur => {
            let r = cur_approximate(a, k, cfg)?;
            let tested = r.column_selection.candidates_tested + r.row_selection.candidates_tested;
            let v = json!(r);
            (r.k, r.residual_fro, r.bound_fro, r.quasi_best_fro, tested, v)
        }
        Algorithm::Cross => {
            let r = select_cross(a, k, cfg)?;
            let v = json!(r);
            (r.k, r.residual_fro, r.bound_fro, r.quasi_best_fro, r.pivots_tested, v)
        }
    };
    let wall = start.elapsed().as_secs_f64();
    if k_eff < k {
        eprintln!("note: k = {k} reduced to the numerical rank {k_eff}");
    }
    Ok((
        ReportRow {
            k: k_eff,
            residual_fro: residual,
            bound_fro: bound,
            quasi_best_fro: best,
            candidates_or_pivots_tested: tested,
            wall_time_seconds: wall,
            variant,
        },
        value,
    ))
}

fn command_name(algo: Algorithm) -> &'static str {
    match algo {
        Algorithm::Css => "css",
        Algorithm::Cur => "cur",
        Algorithm::Cross => "cross",
    }
}

fn run(algo: Algorithm, args: RunArgs) -> CliResult<()> {
    let a = source::load_matrix(&args.source)?;
    let variant = if args.early_stop { Variant::EarlyStop } else { Variant::Exact };
    let cfg = config(variant, !args.no_rank_guard);
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for k in args.rank.ks() {
        let (row, v) = run_once(algo, &a, k, cfg)?;
        rows.push(row);
        results.push(v);
    }
    emit(command_name(algo), &a.frobenius_norm(), &rows, results, &args.output)
}

fn bench(args: BenchArgs) -> CliResult<()> {
    let a = source::load_matrix(&args.source)?;
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for variant in [Variant::Exact, Variant::EarlyStop] {
        for k in args.rank.ks() {
            let (row, v) = run_once(args.algo, &a, k, config(variant, true))?;
            rows.push(row);
            results.push(v);
        }
    }
    emit(command_name(args.algo), &a.frobenius_norm(), &rows, results, &args.output)
}

fn speedup(args: SpeedupArgs) -> CliResult<()> {
    let a = source::load_matrix(&args.source)?;
    let mut out = report::SpeedupWriter::new();
    for k in args.rank.ks() {
        let (exact, _) = run_once(args.algo, &a, k, config(Variant::Exact, true))?;
        let (early, _) = run_once(args.algo, &a, k, config(Variant::EarlyStop, true))?;
        out.push(report::SpeedupRow {
            k: early.k,
            time_ratio: exact.wall_time_seconds / early.wall_time_seconds.max(1e-9),
            candidates_tested: early.candidates_or_pivots_tested,
        });
    }
    out.finish(args.out.as_deref())
}

fn tucker(args: TuckerArgs) -> CliResult<()> {
    let t = source::load_tensor(&args)?;
    let d = t.order();
    let rank_list: Vec<Vec<usize>> = match (&args.ranks, &args.k_sweep) {
        (Some(r), _) => vec![r.clone()],
        (None, Some(s)) => s.clone().map(|k| vec![k; d]).collect(),
        (None, None) => Vec::new(),
    };
    let variant = if args.early_stop { Variant::EarlyStop } else { Variant::Exact };
    let cfg = config(variant, true);
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for ranks in rank_list {
        if ranks.len() != d {
            return Err(Failure::input(format!(
                "{} ranks given for a tensor of order {d}",
                ranks.len()
            )));
        }
        let start = Instant::now();
        let f = tucker_select(&t, &ranks, cfg)?;
        let wall = start.elapsed().as_secs_f64();
        rows.push(ReportRow {
            k: *f.ranks.iter().max().expect("order >= 1"),
            residual_fro: f.residual_fro,
            bound_fro: f.bound_fro,
            quasi_best_fro: f.quasi_best_fro,
            candidates_or_pivots_tested: f.selections.iter().map(|s| s.candidates_tested).sum(),
            wall_time_seconds: wall,
            variant,
        });
        results.push(json!(f));
    }
    emit("tucker", &t.frobenius_norm(), &rows, results, &args.output)
}
