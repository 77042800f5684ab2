use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::MetricRow;
use crate::{Error, Result};

pub const COLUMNS: [&str; 10] = [
    "model",
    "precision",
    "recall",
    "f1",
    "selected",
    "initial",
    "lambda",
    "depth",
    "train_s",
    "infer_ms",
];

/// Rendering of an undefined (0/0) metric.
const UNDEFINED: &str = "0.00*";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "markdown" | "md" => Ok(Self::Markdown),
            other => Err(Error::Config(format!("unknown report format '{other}'"))),
        }
    }
}

fn metric(v: Option<f64>) -> String {
    v.map_or_else(|| UNDEFINED.to_string(), |v| format!("{v:.2}"))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn cells(r: &MetricRow) -> [String; 10] {
    [
        r.model.clone(),
        metric(r.precision),
        metric(r.recall),
        metric(r.f1),
        opt(r.selected),
        opt(r.initial),
        opt(r.lambda),
        opt(r.depth),
        r.train_s.map_or_else(String::new, |v| format!("{v:.3}")),
        r.infer_ms.map_or_else(String::new, |v| format!("{v:.4}")),
    ]
}

fn check_rows(rows: &[MetricRow]) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Config("report has no rows".into()));
    }
    Ok(())
}

pub fn render_csv(rows: &[MetricRow]) -> Result<String> {
    check_rows(rows)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Io {
        path: "<csv buffer>".into(),
        source: std::io::Error::other(e),
    };
    w.write_record(COLUMNS).map_err(err)?;
    for r in rows {
        w.write_record(cells(r)).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| err(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn render_markdown(rows: &[MetricRow]) -> Result<String> {
    check_rows(rows)?;
    let mut out = format!("| {} |\n", COLUMNS.join(" | "));
    out.push_str(&format!("|{}\n", "---|".repeat(COLUMNS.len())));
    for r in rows {
        let c = cells(r).map(|s| s.replace('|', "\\|"));
        out.push_str(&format!("| {} |\n", c.join(" | ")));
    }
    if rows
        .iter()
        .any(|r| r.precision.is_none() || r.recall.is_none() || r.f1.is_none())
    {
        out.push_str("\n\\* undefined: zero denominator\n");
    }
    Ok(out)
}

pub fn emit_report(rows: &[MetricRow], format: ReportFormat, path: &Path) -> Result<()> {
    let text = match format {
        ReportFormat::Csv => render_csv(rows)?,
        ReportFormat::Markdown => render_markdown(rows)?,
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads a CSV report back; metrics come out rounded as written.
pub fn parse_csv(text: &str) -> Result<Vec<MetricRow>> {
    let bad = |m: String| Error::Config(format!("malformed report: {m}"));
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.iter().ne(COLUMNS) {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    fn num<T: FromStr>(s: &str) -> std::result::Result<Option<T>, String> {
        if s.is_empty() || s == UNDEFINED {
            return Ok(None);
        }
        s.parse().map(Some).map_err(|_| format!("'{s}' is not a number"))
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let f = |i: usize| rec.get(i).unwrap_or("");
        rows.push(MetricRow {
            model: f(0).to_string(),
            precision: num(f(1)).map_err(bad)?,
            recall: num(f(2)).map_err(bad)?,
            f1: num(f(3)).map_err(bad)?,
            selected: num(f(4)).map_err(bad)?,
            initial: num(f(5)).map_err(bad)?,
            lambda: num(f(6)).map_err(bad)?,
            depth: num(f(7)).map_err(bad)?,
            train_s: num(f(8)).map_err(bad)?,
            infer_ms: num(f(9)).map_err(bad)?,
        });
    }
    Ok(rows)
}
