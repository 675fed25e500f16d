//! Row-by-row comparison of two reports.

use serde::{Deserialize, Serialize};

use super::report::Report;
use crate::error::{Error, Result};

/// Tolerance used when neither the command line nor the reports give one.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffRow {
    pub n: usize,
    pub mode: String,
    pub region: String,
    pub value_a: Option<f64>,
    pub value_b: Option<f64>,
    /// `|a - b| / max(|a|, |b|)`; infinite when a row is missing on one side.
    pub rel_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diff {
    pub tolerance: f64,
    /// Rows whose values differ at all.
    pub rows: Vec<DiffRow>,
}

impl Diff {
    pub fn exceeds(&self) -> bool {
        self.rows.iter().any(|r| !(r.rel_diff <= self.tolerance))
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        out.write_record(["n", "mode", "region", "value_a", "value_b", "rel_diff"])
            .map_err(io)?;
        let f = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        for r in &self.rows {
            out.write_record([
                r.n.to_string(),
                r.mode.clone(),
                r.region.clone(),
                f(r.value_a),
                f(r.value_b),
                format!("{:.16e}", r.rel_diff),
            ])
            .map_err(io)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn relative(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if a == b {
        0.0
    } else if scale > 0.0 {
        (a - b).abs() / scale
    } else {
        f64::INFINITY
    }
}

/// Matches rows on `(n, mode, region)`; values from different methods are compared directly.
pub fn compare(a: &Report, b: &Report, tolerance: Option<f64>) -> Result<Diff> {
    if a.schema_version != b.schema_version {
        return Err(Error::Schema(format!(
            "schema versions differ: {} vs {}",
            a.schema_version, b.schema_version
        )));
    }
    let tolerance = tolerance
        .or(a.config.output.tolerance)
        .or(b.config.output.tolerance)
        .unwrap_or(DEFAULT_TOLERANCE);
    let mut rows = Vec::new();
    for ra in &a.rows {
        let rb = b.rows.iter().find(|r| r.key() == ra.key());
        let d = match rb {
            Some(rb) => relative(ra.value, rb.value),
            None => f64::INFINITY,
        };
        if d != 0.0 {
            rows.push(DiffRow {
                n: ra.n,
                mode: ra.mode.clone(),
                region: ra.region.clone(),
                value_a: Some(ra.value),
                value_b: rb.map(|r| r.value),
                rel_diff: d,
            });
        }
    }
    for rb in &b.rows {
        if !a.rows.iter().any(|r| r.key() == rb.key()) {
            rows.push(DiffRow {
                n: rb.n,
                mode: rb.mode.clone(),
                region: rb.region.clone(),
                value_a: None,
                value_b: Some(rb.value),
                rel_diff: f64::INFINITY,
            });
        }
    }
    Ok(Diff { tolerance, rows })
}
