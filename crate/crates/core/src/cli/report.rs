//! Report rows, CSV and JSON writers and readers.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SCHEMA_VERSION};
use crate::error::{Error, Result};

/// Frozen CSV column order.
pub const CSV_COLUMNS: [&str; 9] = [
    "n",
    "mode",
    "region",
    "method",
    "value",
    "normalized",
    "prediction_normalized",
    "gap",
    "runtime_s",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub n: usize,
    pub mode: String,
    pub region: String,
    pub method: String,
    pub value: f64,
    pub normalized: f64,
    pub prediction_normalized: Option<f64>,
    /// Relative gap to the prediction.
    pub gap: Option<f64>,
    pub runtime_s: f64,
    /// Which asymptotic statement the prediction comes from.
    pub provenance: String,
    #[serde(default)]
    pub stderr: Option<f64>,
}

impl Row {
    pub fn key(&self) -> (usize, &str, &str) {
        (self.n, &self.mode, &self.region)
    }
}

/// Least-squares slope of `log |gap|` against `log n` along one sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub mode: String,
    pub region: String,
    pub method: String,
    pub n: Vec<usize>,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub version: String,
    pub git_hash: String,
    pub config: ExperimentConfig,
    pub jobs: usize,
    pub rows: Vec<Row>,
    pub rates: Vec<Rate>,
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f).unwrap_or_default()
}

/// Empirical convergence rates for every `(mode, region-family, method)`
/// sequence with at least two distinct `n` and non-zero gaps.
pub fn convergence_rates(rows: &[Row]) -> Vec<Rate> {
    type Key = (String, String, String);
    let mut groups: Vec<(Key, Vec<(usize, f64)>)> = Vec::new();
    for r in rows {
        let Some(g) = r.gap else { continue };
        if !(g > 0.0) || r.n == 0 {
            continue;
        }
        let family = r.region.split(",n=").next().unwrap_or(&r.region).to_string();
        let key = (r.mode.clone(), family, r.method.clone());
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push((r.n, g)),
            None => groups.push((key, vec![(r.n, g)])),
        }
    }
    groups
        .into_iter()
        .filter(|(_, v)| {
            let mut ns: Vec<usize> = v.iter().map(|p| p.0).collect();
            ns.dedup();
            ns.len() >= 2 && ns.len() == v.len()
        })
        .map(|((mode, region, method), v)| {
            let xs: Vec<f64> = v.iter().map(|p| (p.0 as f64).ln()).collect();
            let ys: Vec<f64> = v.iter().map(|p| p.1.ln()).collect();
            let mx = xs.iter().sum::<f64>() / xs.len() as f64;
            let my = ys.iter().sum::<f64>() / ys.len() as f64;
            let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
            let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
            Rate {
                mode,
                region,
                method,
                n: v.iter().map(|p| p.0).collect(),
                slope: sxy / sxx,
            }
        })
        .collect()
}

impl Report {
    pub fn new(config: ExperimentConfig, jobs: usize, rows: Vec<Row>) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            version: env!("CARGO_PKG_VERSION").to_string(),
            git_hash: option_env!("RNMVAR_GIT_HASH").unwrap_or("unknown").to_string(),
            config,
            jobs,
            rates: convergence_rates(&rows),
            rows,
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        out.write_record(CSV_COLUMNS).map_err(io)?;
        for r in &self.rows {
            out.write_record([
                r.n.to_string(),
                r.mode.clone(),
                r.region.clone(),
                r.method.clone(),
                fmt_f(r.value),
                fmt_f(r.normalized),
                fmt_opt(r.prediction_normalized),
                fmt_opt(r.gap),
                fmt_f(r.runtime_s),
            ])
            .map_err(io)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Schema(e.to_string()))
    }

    /// Writes `<dir>/<name>.csv` and `<dir>/<name>.json`.
    pub fn write(&self, dir: &Path, name: &str) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{name}.csv"));
        let json_path = dir.join(format!("{name}.json"));
        self.write_csv(fs::File::create(&csv_path)?)?;
        fs::write(&json_path, self.to_json()?)?;
        Ok((csv_path, json_path))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        let version = v.get("schema_version").and_then(|s| s.as_u64());
        if version != Some(SCHEMA_VERSION as u64) {
            return Err(Error::Schema(format!(
                "report schema version {version:?}, expected {SCHEMA_VERSION}"
            )));
        }
        serde_json::from_value(v).map_err(|e| Error::Schema(e.to_string()))
    }

    /// Reads a report from its JSON sidecar, or from a CSV next to one.
    pub fn load(path: &Path) -> Result<Self> {
        let json = if path.extension().is_some_and(|e| e == "csv") {
            path.with_extension("json")
        } else {
            path.to_path_buf()
        };
        let text =
            fs::read_to_string(&json).map_err(|e| Error::Schema(format!("cannot read {}: {e}", json.display())))?;
        Self::from_json(&text)
    }
}

/// Parses the CSV contract back into rows (provenance and stderr are JSON-only).
pub fn read_csv<R: std::io::Read>(r: R) -> Result<Vec<Row>> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers().map_err(|e| Error::Schema(e.to_string()))?.clone();
    if header.iter().ne(CSV_COLUMNS) {
        return Err(Error::Schema(format!("unexpected CSV header {header:?}")));
    }
    let num = |s: &str, col: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::Schema(format!("bad {col} value {s:?}")))
    };
    let opt = |s: &str, col: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            num(s, col).map(Some)
        }
    };
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| Error::Schema(e.to_string()))?;
        rows.push(Row {
            n: rec[0]
                .parse()
                .map_err(|_| Error::Schema(format!("bad n value {:?}", &rec[0])))?,
            mode: rec[1].to_string(),
            region: rec[2].to_string(),
            method: rec[3].to_string(),
            value: num(&rec[4], "value")?,
            normalized: num(&rec[5], "normalized")?,
            prediction_normalized: opt(&rec[6], "prediction_normalized")?,
            gap: opt(&rec[7], "gap")?,
            runtime_s: num(&rec[8], "runtime_s")?,
            provenance: String::new(),
            stderr: None,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(n: usize, value: f64, gap: Option<f64>) -> Row {
        Row {
            n,
            mode: "bulk".into(),
            region: "disc(center=0+0i,radius=0.5)".into(),
            method: "RADIAL_EXACT".into(),
            value,
            normalized: value / (n as f64).sqrt(),
            prediction_normalized: Some(0.28),
            gap,
            runtime_s: 0.5,
            provenance: "bulk law".into(),
            stderr: None,
        }
    }

    fn config() -> ExperimentConfig {
        ExperimentConfig::from_toml("mode = \"identities\"\n[potential]\nkind = \"ginibre\"\n").unwrap()
    }

    #[test]
    fn rates_recover_power_law() {
        let rows: Vec<Row> = [100usize, 400, 1600]
            .iter()
            .map(|&n| row(n, 1.0, Some(3.0 / n as f64)))
            .collect();
        let rates = convergence_rates(&rows);
        assert_eq!(rates.len(), 1);
        assert!((rates[0].slope + 1.0).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let rep = Report::new(config(), 1, vec![row(10, 1.25, Some(0.1))]);
        let back = Report::from_json(&rep.to_json().unwrap()).unwrap();
        assert_eq!(back, rep);
        let bad = rep
            .to_json()
            .unwrap()
            .replace("\"schema_version\": 1", "\"schema_version\": 9");
        assert!(matches!(Report::from_json(&bad), Err(Error::Schema(_))));
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(v in proptest::num::f64::NORMAL, g in proptest::num::f64::POSITIVE) {
            let rep = Report::new(config(), 1, vec![row(7, v, Some(g)), row(9, -v, None)]);
            let mut buf = Vec::new();
            rep.write_csv(&mut buf).unwrap();
            let rows = read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(rows[0].value.to_bits(), v.to_bits());
            prop_assert_eq!(rows[0].gap.unwrap().to_bits(), g.to_bits());
            prop_assert_eq!(rows[1].gap, None);
            prop_assert_eq!(rows[1].normalized.to_bits(), (-v / 3.0).to_bits());
        }
    }
}
