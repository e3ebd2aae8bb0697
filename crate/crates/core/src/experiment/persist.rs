use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use super::recovery::csv_error;
use super::RunRecord;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let tmp = with_suffix(path, ".tmp");
    let mut file = fs::File::create(&tmp)?;
    file.write_all(bytes)?;
    file.sync_all()?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Write `record` as JSON. The file is replaced atomically, so readers never
/// see a partial run. The wall-clock time goes to `<path>.meta.json` so the
/// run file itself depends only on the run.
pub fn persist_run(record: &RunRecord, path: &Path) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(record)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)?;
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let meta = serde_json::json!({ "written_at_unix": secs, "schema_version": SCHEMA_VERSION });
    write_atomic(&with_suffix(path, ".meta.json"), serde_json::to_string_pretty(&meta)?.as_bytes())
}

pub fn load_run(path: &Path) -> Result<RunRecord> {
    let value: serde_json::Value = serde_json::from_slice(&fs::read(path)?)?;
    let found = value.get("schema_version").and_then(serde_json::Value::as_u64).unwrap_or(0);
    if found != u64::from(SCHEMA_VERSION) {
        return Err(Error::Schema { found: found as u32, expected: SCHEMA_VERSION });
    }
    Ok(serde_json::from_value(value)?)
}

/// Columns `t, immediate_regret, simple_regret, avg_cumulative_regret`.
pub fn write_trace_csv(record: &RunRecord, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "immediate_regret", "simple_regret", "avg_cumulative_regret"]).map_err(csv_error)?;
    let tr = &record.trace;
    for i in 0..tr.len() {
        w.write_record([
            (i + 1).to_string(),
            tr.immediate[i].to_string(),
            tr.simple[i].to_string(),
            tr.averaged_cumulative[i].to_string(),
        ])
        .map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    write_atomic(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{RegretTrace, RunKind};
    use crate::gp::ObservationSet;

    fn record(truncated: bool) -> RunRecord {
        RunRecord {
            schema_version: SCHEMA_VERSION,
            kind: RunKind::Sequential,
            method: "fp".into(),
            config: serde_json::json!({ "seed": 3 }),
            known_max: 1.25,
            decompositions: vec![],
            observations: ObservationSet::new(2, vec![vec![0.1, 0.2]], vec![0.3]).unwrap(),
            objective_values: vec![0.1 + 0.2],
            rounds: vec![1],
            trace: RegretTrace::from_immediate(&[1.25 - (0.1 + 0.2)]),
            learn_calls: 0,
            truncated,
            error: truncated.then(|| "boom".to_string()),
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        for truncated in [false, true] {
            let r = record(truncated);
            persist_run(&r, &path).unwrap();
            assert_eq!(load_run(&path).unwrap(), r);
        }
        assert!(dir.path().join("run.json.meta.json").exists());
        assert!(!dir.path().join("run.json.tmp").exists());
    }

    #[test]
    fn schema_mismatch_names_versions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        let mut r = record(false);
        r.schema_version = 7;
        persist_run(&r, &path).unwrap();
        match load_run(&path) {
            Err(Error::Schema { found: 7, expected: SCHEMA_VERSION }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn trace_csv_has_four_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        write_trace_csv(&record(false), &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        for line in text.lines() {
            assert_eq!(line.split(',').count(), 4);
        }
        assert_eq!(text.lines().next().unwrap(), "t,immediate_regret,simple_regret,avg_cumulative_regret");
    }
}
