//! Record streams, summaries and plot tables.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde_json::Value;

use super::job::SweepRecord;
use crate::entanglement::ModeFunction;
use crate::error::{Error, Result};

pub fn write_records(path: &Path, records: &[SweepRecord]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for r in records {
        let line = serde_json::to_string(r)?;
        writeln!(f, "{line}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Successful records of a previous run, keyed by config hash.
pub fn read_records(path: &Path) -> Result<HashMap<String, SweepRecord>> {
    let mut out = HashMap::new();
    let f = match std::fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
        Err(e) => return Err(Error::io(path, e)),
    };
    for line in BufReader::new(f).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<SweepRecord>(&line) {
            Ok(r) if r.ok() && !r.config_hash.is_empty() => {
                out.insert(r.config_hash.clone(), r);
            }
            Ok(_) => {}
            Err(e) => log::warn!("skipping malformed record in {}: {e}", path.display()),
        }
    }
    Ok(out)
}

/// Rounds every float to 10 significant digits so summaries are stable
/// under last-bit noise.
pub fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap();
            if let Some(r) = format!("{x:.9e}").parse::<f64>().ok().and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_floats),
        Value::Object(o) => o.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// Writes pretty JSON with rounded floats and without timing fields.
pub fn write_summary(path: &Path, mut summary: Value) -> Result<()> {
    strip_timing(&mut summary);
    round_floats(&mut summary);
    let text = serde_json::to_string_pretty(&summary)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(o) => {
            o.remove("timing_s");
            o.values_mut().for_each(strip_timing);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

fn fmt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.9e}")).unwrap_or_default()
}

fn row(r: &SweepRecord) -> Vec<String> {
    let mut cols: Vec<String> = r.axes.iter().map(|a| format!("{:.9e}", a.value)).collect();
    cols.extend([
        fmt(r.lambda_b),
        fmt(r.lambda_n),
        fmt(r.nu_min),
        fmt(r.log_negativity),
        r.verdict.map(|v| v.label().to_string()).unwrap_or_else(|| "failed".into()),
        (r.undecidable() as u8).to_string(),
    ]);
    cols
}

fn header(r: &SweepRecord) -> Vec<String> {
    let mut h: Vec<String> = r.axes.iter().map(|a| a.name.clone()).collect();
    h.extend(
        ["lambda_b", "lambda_n", "nu_min", "log_negativity", "verdict", "undecidable"]
            .iter()
            .map(|s| s.to_string()),
    );
    h
}

/// Line table: records sorted by leading axes, abscissa (last axis) fastest.
pub fn write_line_table(path: &Path, records: &[SweepRecord]) -> Result<()> {
    let mut sorted: Vec<&SweepRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        let ka: Vec<f64> = a.axes.iter().map(|x| x.value).collect();
        let kb: Vec<f64> = b.axes.iter().map(|x| x.value).collect();
        ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal)
    });
    write_table(path, &sorted)
}

/// Contour table: one row per axis pair in row-major order.
pub fn write_contour_table(path: &Path, records: &[SweepRecord]) -> Result<()> {
    let mut sorted: Vec<&SweepRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.index);
    write_table(path, &sorted)
}

fn write_table(path: &Path, rows: &[&SweepRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if let Some(first) = rows.first() {
        w.write_record(header(first))?;
    }
    for r in rows {
        w.write_record(row(r))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_mode_table(path: &Path, mode: &ModeFunction) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "e1_re", "e1_im", "e2_re", "e2_im"])?;
    for k in 0..mode.times.len() {
        w.write_record([
            format!("{:.9e}", mode.times[k]),
            format!("{:.9e}", mode.e1[k].0),
            format!("{:.9e}", mode.e1[k].1),
            format!("{:.9e}", mode.e2[k].0),
            format!("{:.9e}", mode.e2[k].1),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
