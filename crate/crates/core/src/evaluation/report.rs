//! Report output: versioned JSON plus aligned text tables and CSV series.

use std::io::Write;

use serde::Serialize;
use serde_json::{json, Value};

use super::{ClosedSetReport, CurvePoint, ImportanceReport, OpenSetReport};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Table {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    /// Left-aligned first column, right-aligned numbers after it.
    pub fn render(&self) -> String {
        let mut widths: Vec<usize> = self.headers.iter().map(String::len).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let line = |cells: &[String]| {
            cells
                .iter()
                .enumerate()
                .map(|(i, c)| if i == 0 { format!("{c:<w$}", w = widths[0]) } else { format!("{c:>w$}", w = widths[i]) })
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        let mut out = line(&self.headers);
        out.push('\n');
        out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1)));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&line(row));
            out.push('\n');
        }
        out
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let fail = |e: csv::Error| Error::Eval(format!("writing CSV: {e}"));
        w.write_record(&self.headers).map_err(fail)?;
        for row in &self.rows {
            w.write_record(row).map_err(fail)?;
        }
        w.flush().map_err(|e| Error::Eval(format!("writing CSV: {e}")))
    }
}

pub fn fmt(v: f64) -> String {
    if v.is_nan() {
        "-".into()
    } else {
        format!("{v:.4}")
    }
}

pub trait Tabulate {
    fn table(&self) -> Table;
}

impl Tabulate for ClosedSetReport {
    fn table(&self) -> Table {
        let mut t = Table::new(&["agent", "f1"]);
        for (name, f1) in &self.per_class_f1 {
            t.push(vec![name.clone(), fmt(*f1)]);
        }
        t.push(vec!["macro".into(), fmt(self.macro_f1)]);
        t.push(vec!["accuracy".into(), fmt(self.accuracy)]);
        t
    }
}

impl Tabulate for OpenSetReport {
    fn table(&self) -> Table {
        let mut t = Table::new(&["heldout", "auroc", "n_known", "n_unknown"]);
        for r in &self.runs {
            t.push(vec![r.heldout.clone(), fmt(r.auroc), r.n_known.to_string(), r.n_unknown.to_string()]);
        }
        t.push(vec!["mean".into(), fmt(self.mean_auroc), String::new(), String::new()]);
        t
    }
}

impl Tabulate for ImportanceReport {
    fn table(&self) -> Table {
        let mut t = Table::new(&["feature", "family", "mean_drop", "std_drop"]);
        for f in self.ranked() {
            let family = serde_json::to_value(f.family).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            t.push(vec![f.feature.clone(), family, fmt(f.mean_drop), fmt(f.std_drop)]);
        }
        t
    }
}

impl Tabulate for [CurvePoint] {
    fn table(&self) -> Table {
        let mut t = Table::new(&["x", "macro_f1", "n_train"]);
        for p in self {
            t.push(vec![format!("{}", p.x), fmt(p.macro_f1), p.n_train.to_string()]);
        }
        t
    }
}

/// A finished result: JSON body plus its text rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub kind: String,
    pub body: Value,
    pub table: Table,
}

impl Report {
    pub fn new<T: Serialize + Tabulate + ?Sized>(kind: &str, result: &T) -> Self {
        Report {
            kind: kind.to_string(),
            body: serde_json::to_value(result).expect("results always serialize"),
            table: result.table(),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({ "schema_version": SCHEMA_VERSION, "kind": self.kind, "result": self.body })
    }

    /// Stable pretty JSON with a trailing newline.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("report JSON");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        format!("{}\n\n{}", self.kind, self.table.render())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_alignment() {
        let mut t = Table::new(&["agent", "f1"]);
        t.push(vec!["a".into(), "1.0000".into()]);
        t.push(vec!["longer".into(), "0.5".into()]);
        let text = t.render();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "agent       f1");
        assert_eq!(lines[2], "a       1.0000");
        assert_eq!(lines[3], "longer     0.5");
    }

    #[test]
    fn report_json_is_versioned() {
        let points = vec![CurvePoint { x: 0.5, macro_f1: 0.75, n_train: 10 }];
        let r = Report::new("curve", points.as_slice());
        let v: Value = serde_json::from_str(&r.to_json_string()).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["result"][0]["macro_f1"], 0.75);
        let mut csv = Vec::new();
        r.table.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap(), "x,macro_f1,n_train\n0.5,0.7500,10\n");
    }
}
