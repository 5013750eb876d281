//! Report documents and CSV tables.
//!
//! Reports are pretty-printed JSON. Floats are rounded to nine significant
//! digits before writing, which makes parse-then-write a fixed point.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::Value;

use super::write_atomic;
use crate::error::{Error, Result};
use crate::harness::{EvaluationReport, MetricResult, RankingTable, SweepResult};
use crate::metrics::SampleOutcome;

const SIGNIFICANT_DIGITS: usize = 9;

/// Round to nine significant digits.
pub fn round_significant(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .unwrap_or(x)
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_significant(n.as_f64().unwrap_or(0.0));
            if let Some(r) = serde_json::Number::from_f64(x) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

fn to_canonical<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value).map_err(|e| Error::parse("report", e.to_string()))?;
    round_floats(&mut v);
    let mut text = serde_json::to_string_pretty(&v).map_err(|e| Error::parse("report", e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn report_to_string(report: &EvaluationReport) -> Result<String> {
    to_canonical(report)
}

/// Canonical text of the report with timestamp and timings cleared.
pub fn report_body_string(report: &EvaluationReport) -> Result<String> {
    to_canonical(&report.body())
}

pub fn report_from_str(text: &str) -> Result<EvaluationReport> {
    serde_json::from_str(text).map_err(|e| Error::parse("report", e.to_string()))
}

pub fn write_report(report: &EvaluationReport, path: &Path) -> Result<()> {
    write_atomic(path, report_to_string(report)?.as_bytes())
}

pub fn read_report(path: &Path) -> Result<EvaluationReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    report_from_str(&text).map_err(|e| match e {
        Error::Parse { message, .. } => Error::parse(path.display().to_string(), message),
        other => other,
    })
}

pub fn sweep_to_string(sweep: &SweepResult) -> Result<String> {
    to_canonical(sweep)
}

/// Radar-chart data: `category,explainer,score` sorted by category then
/// explainer.
pub fn plot_data_csv(ranking: &RankingTable) -> String {
    let mut rows: Vec<_> = ranking
        .categories
        .iter()
        .map(|c| (c.category.name(), c.explainer.as_str(), c.score))
        .collect();
    rows.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    let mut out = String::from("category,explainer,score\n");
    for (cat, expl, score) in rows {
        let _ = writeln!(out, "{cat},{},{score:.6}", csv_field(expl));
    }
    out
}

pub fn emit_plot_data(ranking: &RankingTable, path: &Path) -> Result<()> {
    write_atomic(path, plot_data_csv(ranking).as_bytes())
}

/// Per-sample scores of one metric: `sample_index` then one column per
/// explainer. Failed samples leave the cell empty.
pub fn metric_csv(results: &[&MetricResult]) -> String {
    let mut out = String::from("sample_index");
    for r in results {
        out.push(',');
        out.push_str(&csv_field(&r.explainer));
    }
    out.push('\n');
    let n = results.iter().map(|r| r.per_sample.len()).max().unwrap_or(0);
    for i in 0..n {
        let _ = write!(out, "{i}");
        for r in results {
            out.push(',');
            if let Some(v) = r.per_sample.get(i).and_then(SampleOutcome::value) {
                out.push_str(&format_float(v));
            }
        }
        out.push('\n');
    }
    out
}

/// Square matrix with value labels on both axes.
pub fn tau_csv(values: &[String], tau: &[Vec<f64>]) -> String {
    let mut out = String::from("value");
    for v in values {
        out.push(',');
        out.push_str(&csv_field(v));
    }
    out.push('\n');
    for (v, row) in values.iter().zip(tau) {
        out.push_str(&csv_field(v));
        for t in row {
            let _ = write!(out, ",{t:.6}");
        }
        out.push('\n');
    }
    out
}

/// Shortest round-trip decimal after nine-digit rounding.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    let r = round_significant(x);
    if r.is_infinite() {
        return if r > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{r:?}")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
