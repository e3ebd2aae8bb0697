use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::recovery::csv_error;
use super::RunRecord;
use crate::error::{input, Result};

/// Median and interquartile range of one method's regrets at round `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub method: String,
    pub t: usize,
    pub runs: usize,
    pub median_simple: f64,
    pub iqr_simple: f64,
    pub median_avg_cumulative: f64,
    pub iqr_avg_cumulative: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn median_iqr(mut v: Vec<f64>) -> (f64, f64) {
    v.sort_by(f64::total_cmp);
    (quantile(&v, 0.5), quantile(&v, 0.75) - quantile(&v, 0.25))
}

/// Per-method regret medians and IQRs at every round. Traces of different
/// lengths are cut to the shortest one.
pub fn compare_runs(records: &[RunRecord]) -> Result<Vec<ComparisonRow>> {
    if records.is_empty() {
        return input("nothing to compare");
    }
    let horizon = records.iter().map(|r| r.trace.len()).min().unwrap_or(0);
    if records.iter().any(|r| r.trace.len() != horizon) {
        log::warn!("runs have different lengths; comparing the first {horizon} rounds");
    }
    let mut by_method: BTreeMap<&str, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        by_method.entry(r.method.as_str()).or_default().push(r);
    }
    let mut rows = Vec::new();
    for (method, runs) in by_method {
        for i in 0..horizon {
            let (median_simple, iqr_simple) = median_iqr(runs.iter().map(|r| r.trace.simple[i]).collect());
            let (median_avg_cumulative, iqr_avg_cumulative) =
                median_iqr(runs.iter().map(|r| r.trace.averaged_cumulative[i]).collect());
            rows.push(ComparisonRow {
                method: method.to_string(),
                t: i + 1,
                runs: runs.len(),
                median_simple,
                iqr_simple,
                median_avg_cumulative,
                iqr_avg_cumulative,
            });
        }
    }
    Ok(rows)
}

pub fn write_comparison_csv(rows: &[ComparisonRow], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}
