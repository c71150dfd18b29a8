//! Report files for a sweep.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::HarnessError;
use crate::sweep::SweepResult;

pub const RECORDS: &str = "records.csv";
pub const CDF: &str = "cdf.csv";
pub const SCORES: &str = "scores.csv";
pub const FILTER: &str = "filter.csv";
pub const SUMMARY: &str = "summary.json";
/// Wall-clock numbers; not reproducible between runs.
pub const TIMING: &str = "timing.csv";
pub const TIMING_SUMMARY: &str = "timing.json";

#[derive(Serialize)]
struct TimingSummary {
    precompute_seconds: f64,
    median_filtered_seconds: f64,
    median_unfiltered_seconds: f64,
    speedup: f64,
}

#[derive(Serialize)]
struct CdfRow {
    rank: usize,
    fraction: f64,
}

#[derive(Serialize)]
struct FilterRow<'a> {
    event_id: usize,
    event: &'a str,
    filtered_top: &'a str,
    unfiltered_top: &'a str,
    agree: bool,
    t_computed: usize,
    candidates: usize,
    skipped_fraction: f64,
}

fn write_csv<T: Serialize>(path: PathBuf, rows: impl IntoIterator<Item = T>) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(&path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|source| HarnessError::Write { path, source })
}

/// Writes every report file into `dir`, creating it if needed.
pub fn emit_outputs(result: &SweepResult, dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|source| HarnessError::Write {
        path: dir.to_path_buf(),
        source,
    })?;
    write_csv(dir.join(RECORDS), &result.records)?;
    write_csv(
        dir.join(CDF),
        result
            .cdf(10)
            .into_iter()
            .map(|(rank, fraction)| CdfRow { rank, fraction }),
    )?;
    write_csv(dir.join(SCORES), &result.scores)?;
    write_csv(
        dir.join(FILTER),
        result.records.iter().map(|r| FilterRow {
            event_id: r.event_id,
            event: &r.event,
            filtered_top: &r.top,
            unfiltered_top: &r.unfiltered_top,
            agree: r.filters_agree,
            t_computed: r.t_computed,
            candidates: r.candidates,
            skipped_fraction: r.skipped_fraction,
        }),
    )?;
    write_csv(dir.join(TIMING), &result.timings)?;
    let filtered = result.median_time(|t| t.filtered_seconds);
    let unfiltered = result.median_time(|t| t.unfiltered_seconds);
    write_json(
        dir.join(TIMING_SUMMARY),
        &TimingSummary {
            precompute_seconds: result.precompute_seconds,
            median_filtered_seconds: filtered,
            median_unfiltered_seconds: unfiltered,
            speedup: unfiltered / filtered,
        },
    )?;
    write_json(dir.join(SUMMARY), &result.summary())
}

fn write_json<T: Serialize>(path: PathBuf, value: &T) -> Result<(), HarnessError> {
    let json = serde_json::to_string_pretty(value)?;
    fs::write(&path, json + "\n").map_err(|source| HarnessError::Write { path, source })
}
