//! Persistence: JSONL records, CSV summary, JSON metadata.
//!
//! `records.jsonl` starts with a `{"header": …}` line carrying all constants,
//! followed by one line per replica and checkpoint (or per replica and `t`
//! for ball counts), in replica order. `summary.csv` begins with `#` comment
//! lines holding the same header.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::config::write_config;
use super::experiments::ExperimentOutcome;
use crate::error::{Error, Result};

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn json_line(w: &mut impl Write, path: &Path, v: &Value) -> Result<()> {
    serde_json::to_writer(&mut *w, v).map_err(|e| Error::Serialize(e.to_string()))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))
}

/// JSONL body without touching the file system.
pub fn records_jsonl(outcome: &ExperimentOutcome) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    let p = Path::new("records.jsonl");
    json_line(&mut buf, p, &json!({ "header": outcome.header }))?;
    for r in &outcome.records {
        match &r.discard {
            Some(reason) => json_line(&mut buf, p, &json!({ "replica": r.replica, "discarded": true, "reason": reason }))?,
            None => {
                for c in &r.checkpoints {
                    let mut v = serde_json::to_value(c).map_err(|e| Error::Serialize(e.to_string()))?;
                    v["replica"] = json!(r.replica);
                    json_line(&mut buf, p, &v)?;
                }
            }
        }
    }
    for r in &outcome.poisson {
        match &r.discard {
            Some(reason) => json_line(&mut buf, p, &json!({ "replica": r.replica, "discarded": true, "reason": reason }))?,
            None => {
                for (i, &t) in outcome.config.poisson.times.iter().enumerate() {
                    let hat: Vec<u64> = r.hat_counts.iter().map(|h| h[i]).collect();
                    json_line(
                        &mut buf,
                        p,
                        &json!({
                            "replica": r.replica, "n": r.n, "t": t, "radius": r.radii[i],
                            "count": r.counts[i], "trim": outcome.config.poisson.trim, "hat_counts": hat,
                        }),
                    )?;
                }
            }
        }
    }
    Ok(buf)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Serialize(format!("{other:?}")),
    }
}

/// Writes every output file of `outcome` into `dir` and returns their paths.
pub fn write_results(outcome: &ExperimentOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();

    let path = dir.join("config.toml");
    write_bytes(&path, write_config(&outcome.config)?.as_bytes())?;
    files.push(path);

    if !outcome.records.is_empty() || !outcome.poisson.is_empty() {
        let path = dir.join("records.jsonl");
        write_bytes(&path, &records_jsonl(outcome)?)?;
        files.push(path);
    }

    let path = dir.join("summary.csv");
    {
        let mut w = create(&path)?;
        writeln!(w, "# header: {}", outcome.header).map_err(|e| Error::io(&path, e))?;
        let mut csv = csv::Writer::from_writer(w);
        for row in &outcome.summary {
            csv.serialize(row).map_err(|e| csv_error(&path, e))?;
        }
        csv.flush().map_err(|e| Error::io(&path, e))?;
    }
    files.push(path);

    if !outcome.pmf_rows.is_empty() {
        let path = dir.join("pmf.csv");
        let mut csv = csv::Writer::from_writer(create(&path)?);
        csv.write_record(["t", "j", "empirical", "reference"])
            .map_err(|e| csv_error(&path, e))?;
        for (j, t, emp, reference) in &outcome.pmf_rows {
            csv.write_record([t.to_string(), j.to_string(), emp.to_string(), reference.to_string()])
                .map_err(|e| csv_error(&path, e))?;
        }
        csv.flush().map_err(|e| Error::io(&path, e))?;
        files.push(path);
    }

    if !outcome.reference.is_empty() {
        let path = dir.join("reference.csv");
        let mut w = create(&path)?;
        writeln!(w, "sample").map_err(|e| Error::io(&path, e))?;
        for x in &outcome.reference {
            writeln!(w, "{x}").map_err(|e| Error::io(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        files.push(path);
    }

    let path = dir.join("metadata.json");
    let discards: Vec<Value> = outcome
        .records
        .iter()
        .filter_map(|r| r.discard.as_ref().map(|d| json!({ "replica": r.replica, "reason": d })))
        .chain(
            outcome
                .poisson
                .iter()
                .filter_map(|r| r.discard.as_ref().map(|d| json!({ "replica": r.replica, "reason": d }))),
        )
        .collect();
    let meta = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "header": outcome.header,
        "config": outcome.config,
        "replicas_in": outcome.config.replicas,
        "replicas_out": outcome.config.replicas - discards.len(),
        "discards": discards,
        "rules": outcome.rules,
        "all_passed": outcome.all_passed(),
    });
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::Serialize(e.to_string()))?;
    write_bytes(&path, text.as_bytes())?;
    files.push(path);
    Ok(files)
}
