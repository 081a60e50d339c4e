use std::io::Write;
use std::path::Path;

use lowrank_core::matcore::EPS;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::OutputArgs;
use crate::{CliResult, Failure};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Variant {
    #[serde(rename = "exact")]
    Exact,
    #[serde(rename = "early-stop")]
    EarlyStop,
}

/// One line of the CSV report.
#[derive(Clone, Debug, Serialize)]
pub struct ReportRow {
    pub k: usize,
    pub residual_fro: f64,
    pub bound_fro: f64,
    pub quasi_best_fro: f64,
    pub candidates_or_pivots_tested: usize,
    pub wall_time_seconds: f64,
    pub variant: Variant,
}

/// Rows whose best approximation error is at the level of roundoff.
pub fn roundoff_floor(row: &ReportRow, norm_fro: f64) -> bool {
    row.quasi_best_fro <= 1e3 * EPS * norm_fro
}

fn csv_error(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: 2,
        message: format!("cannot write report: {e}"),
    }
}

pub fn rows_to_csv(rows: &[ReportRow]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(csv_error)?;
    String::from_utf8(bytes).map_err(csv_error)
}

/// Writes the CSV report to `--out` and prints CSV or JSON to stdout.
pub fn emit(
    command: &str,
    norm_fro: &f64,
    rows: &[ReportRow],
    results: Vec<Value>,
    out: &OutputArgs,
) -> CliResult<()> {
    for r in rows {
        if !roundoff_floor(r, *norm_fro) && r.residual_fro > r.bound_fro + 1e-10 * norm_fro {
            eprintln!(
                "warning: k = {} ({:?}) residual {:e} exceeds bound {:e}",
                r.k, r.variant, r.residual_fro, r.bound_fro
            );
        }
    }
    let csv = rows_to_csv(rows)?;
    if let Some(path) = &out.out {
        std::fs::write(path, &csv).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    }
    let mut stdout = std::io::stdout().lock();
    if out.json {
        let rows_json: Vec<Value> = rows
            .iter()
            .map(|r| {
                let mut v = json!(r);
                v["roundoff_floor"] = json!(roundoff_floor(r, *norm_fro));
                v
            })
            .collect();
        let doc = json!({
            "command": command,
            "frobenius_norm": norm_fro,
            "rows": rows_json,
            "results": results,
        });
        writeln!(stdout, "{}", serde_json::to_string_pretty(&doc).map_err(csv_error)?)
            .map_err(csv_error)?;
    } else {
        write!(stdout, "{csv}").map_err(csv_error)?;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct SpeedupRow {
    pub k: usize,
    /// Exact-mode wall time divided by early-stop wall time.
    pub time_ratio: f64,
    /// Candidates (or pivots) examined by the early-stop run.
    pub candidates_tested: usize,
}

pub struct SpeedupWriter {
    rows: Vec<SpeedupRow>,
}

impl SpeedupWriter {
    pub fn new() -> Self {
        Self { rows: Vec::new() }
    }

    pub fn push(&mut self, row: SpeedupRow) {
        self.rows.push(row);
    }

    pub fn finish(self, out: Option<&Path>) -> CliResult<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).map_err(csv_error)?;
        }
        let text = String::from_utf8(w.into_inner().map_err(csv_error)?).map_err(csv_error)?;
        if let Some(p) = out {
            std::fs::write(p, &text).map_err(|e| Failure::input(format!("{}: {e}", p.display())))?;
        }
        print!("{text}");
        Ok(())
    }
}
