//! Run artifacts: `curve.csv`, `report.json`, `config.resolved.json`.

use std::path::Path;

use diga::report::{IterationLog, Report, RunRecord};
use serde::Serialize;

use crate::error::CliError;

pub const CURVE_HEADER: [&str; 6] = [
    "iteration",
    "best_cost",
    "leader_best",
    "follower_best",
    "mutation_rate",
    "swapped",
];

/// 17 significant digits, enough to round-trip any f64.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn curve_row(r: &IterationLog) -> [String; 6] {
    [
        r.iteration.to_string(),
        num(r.best_cost),
        num(r.leader_best),
        opt(r.follower_best),
        opt(r.mutation_rate),
        r.swapped.map(|s| u8::from(s).to_string()).unwrap_or_default(),
    ]
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_curve(path: &Path, log: &[IterationLog]) -> Result<(), CliError> {
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(CURVE_HEADER).map_err(csv_err)?;
    for r in log {
        w.write_record(curve_row(r)).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))
}

pub fn write_run<C: Serialize>(
    dir: &Path,
    record: &RunRecord,
    report: &Report,
    resolved: &C,
) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_curve(&dir.join("curve.csv"), &record.log)?;
    write_json(&dir.join("report.json"), report)?;
    write_json(&dir.join("config.resolved.json"), resolved)
}
