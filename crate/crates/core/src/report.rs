//! Bit-stable JSON and CSV serialisation of reports.
//!
//! Field order follows struct declaration order and every real is rounded to
//! 12 significant digits before printing, so a fixed input always produces
//! the same bytes.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;
use crate::quasitest::DeviationReport;

pub const SIGNIFICANT_DIGITS: usize = 12;

pub fn round_significant(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses")
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(num) if num.is_f64() => {
            if let Some(x) = num.as_f64() {
                if let Some(r) = serde_json::Number::from_f64(round_significant(x)) {
                    *num = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with rounded reals and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

fn fmt_real(x: f64) -> String {
    let r = round_significant(x);
    serde_json::Number::from_f64(r).map_or_else(|| r.to_string(), |n| n.to_string())
}

/// One row per examined subset, members space-separated.
pub fn subsets_csv(report: &DeviationReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "index",
        "source",
        "size",
        "statistic",
        "expected",
        "abs_deviation",
        "normalized_deviation",
        "members",
    ])?;
    for (i, rec) in report.records.iter().enumerate() {
        let members = rec
            .members
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        w.write_record([
            i.to_string(),
            rec.source.to_string(),
            rec.members.len().to_string(),
            fmt_real(rec.statistic),
            fmt_real(rec.expected),
            fmt_real(rec.abs_deviation),
            fmt_real(rec.abs_deviation / report.normalizer),
            members,
        ])?;
    }
    finish_csv(w)
}

/// One row per report (one per swept size).
pub fn reports_csv(reports: &[DeviationReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "property",
        "subsets_examined",
        "max_abs_deviation",
        "mean_abs_deviation",
        "normalizer",
        "normalized_max",
        "threshold",
        "verdict",
        "worst_subset",
    ])?;
    for r in reports {
        let worst = r
            .worst_subset
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        w.write_record([
            r.property.clone(),
            r.subsets_examined.to_string(),
            fmt_real(r.max_abs_deviation),
            fmt_real(r.mean_abs_deviation),
            fmt_real(r.normalizer),
            fmt_real(r.normalized_max()),
            fmt_real(r.threshold),
            r.verdict.to_string(),
            worst,
        ])?;
    }
    finish_csv(w)
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes to `path`, or to stdout when `path` is `None` or `-`.
pub fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) if p != Path::new("-") => std::fs::write(p, text)?,
        _ => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}
