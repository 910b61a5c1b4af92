use std::collections::BTreeMap;
use std::path::Path;

use super::experiment::{sort_records, ResultRecord};
use crate::error::{OpeError, Result};

pub const RECORD_HEADER: [&str; 10] = [
    "environment",
    "method",
    "num_trajectories",
    "horizon",
    "seed",
    "estimate",
    "true_value",
    "squared_error",
    "tv_distance",
    "wall_time_ms",
];

pub const SUMMARY_HEADER: [&str; 8] =
    ["environment", "method", "num_trajectories", "horizon", "count", "mean", "standard_error", "log10_mean"];

/// Mean, standard error and log10 mean of one metric over a sweep group.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub environment: String,
    pub method: String,
    pub num_trajectories: usize,
    pub horizon: usize,
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation over `√count`; zero for a single record.
    pub standard_error: f64,
    pub log10_mean: f64,
}

/// 17 significant digits: enough to round-trip any `f64`.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn summarize_by(records: &[ResultRecord], metric: impl Fn(&ResultRecord) -> Option<f64>) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(&str, &str, usize, usize), Vec<f64>> = BTreeMap::new();
    for r in records {
        if let Some(v) = metric(r) {
            groups.entry((&r.environment, &r.method, r.num_trajectories, r.horizon)).or_default().push(v);
        }
    }
    groups
        .into_iter()
        .map(|((env, method, n, h), values)| {
            let count = values.len();
            let mean = values.iter().sum::<f64>() / count as f64;
            let standard_error = if count > 1 {
                let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
                (var / count as f64).sqrt()
            } else {
                0.0
            };
            SummaryRow {
                environment: env.to_string(),
                method: method.to_string(),
                num_trajectories: n,
                horizon: h,
                count,
                mean,
                standard_error,
                log10_mean: mean.log10(),
            }
        })
        .collect()
}

/// Mean squared error per (environment, method, num_trajectories, horizon).
pub fn summarize_mse(records: &[ResultRecord]) -> Vec<SummaryRow> {
    summarize_by(records, |r| Some(r.squared_error))
}

/// Mean TV distance per group, over records that carry one.
pub fn summarize_tv(records: &[ResultRecord]) -> Vec<SummaryRow> {
    summarize_by(records, |r| r.tv_distance)
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    csv::Writer::from_path(path).map_err(csv_error)
}

fn csv_error(e: csv::Error) -> OpeError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => OpeError::Io(io),
        other => OpeError::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Writes records sorted by (environment, method, num_trajectories, horizon, seed).
pub fn emit_records_csv(records: &[ResultRecord], path: &Path) -> Result<()> {
    let mut sorted = records.to_vec();
    sort_records(&mut sorted);
    let mut w = writer(path)?;
    w.write_record(RECORD_HEADER).map_err(csv_error)?;
    for r in &sorted {
        w.write_record([
            r.environment.clone(),
            r.method.clone(),
            r.num_trajectories.to_string(),
            r.horizon.to_string(),
            r.seed.to_string(),
            format_real(r.estimate),
            format_real(r.true_value),
            format_real(r.squared_error),
            r.tv_distance.map(format_real).unwrap_or_default(),
            r.wall_time_ms.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_summary_csv(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| {
        (&a.environment, &a.method, a.num_trajectories, a.horizon)
            .cmp(&(&b.environment, &b.method, b.num_trajectories, b.horizon))
    });
    let mut w = writer(path)?;
    w.write_record(SUMMARY_HEADER).map_err(csv_error)?;
    for r in &sorted {
        w.write_record([
            r.environment.clone(),
            r.method.clone(),
            r.num_trajectories.to_string(),
            r.horizon.to_string(),
            r.count.to_string(),
            format_real(r.mean),
            format_real(r.standard_error),
            format_real(r.log10_mean),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads back a file written by [`emit_records_csv`].
pub fn read_records_csv(path: &Path) -> Result<Vec<ResultRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_error)?;
    let header = reader.headers().map_err(csv_error)?.clone();
    if header.iter().ne(RECORD_HEADER) {
        return Err(OpeError::InvalidInput(format!("unexpected header {header:?}")));
    }
    let bad = |field: &str, row: usize| OpeError::InvalidInput(format!("row {row}: bad `{field}`"));
    let mut out = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let field = |i: usize| rec.get(i).ok_or_else(|| bad(RECORD_HEADER[i], row));
        let num = |i: usize| field(i)?.parse::<usize>().map_err(|_| bad(RECORD_HEADER[i], row));
        let real = |i: usize| field(i)?.parse::<f64>().map_err(|_| bad(RECORD_HEADER[i], row));
        out.push(ResultRecord {
            environment: field(0)?.to_string(),
            method: field(1)?.to_string(),
            num_trajectories: num(2)?,
            horizon: num(3)?,
            seed: num(4)?,
            estimate: real(5)?,
            true_value: real(6)?,
            squared_error: real(7)?,
            tv_distance: if field(8)?.is_empty() { None } else { Some(real(8)?) },
            wall_time_ms: field(9)?.parse().map_err(|_| bad(RECORD_HEADER[9], row))?,
        });
    }
    Ok(out)
}
