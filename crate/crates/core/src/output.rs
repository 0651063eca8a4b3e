//! CSV and JSON writers for experiment results.
//!
//! Every CSV starts with `#` provenance lines: the file kind, the master
//! seed and the resolved configuration as one line of JSON.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::json;

use crate::error::{BanditError, Result};
use crate::experiment::{PolicyOutcome, ResolvedExperiment};
use crate::harness::sorted_final_regret;

/// Output encoding for tabular results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Columns of `sweep.csv` holding policy parameters, in order.
pub const SWEEP_PARAMS: [&str; 5] = ["c", "alpha", "rho", "delta", "tau"];

fn io_err(path: &Path, e: impl std::fmt::Display) -> BanditError {
    BanditError::Io(format!("cannot write {}: {e}", path.display()))
}

fn csv_err(e: csv::Error) -> BanditError {
    BanditError::Io(format!("csv: {e}"))
}

/// A named table: header plus rows of already formatted fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &'static str, header: &[&'static str]) -> Self {
        Table {
            name,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    /// CSV text with provenance comment lines.
    pub fn to_csv(&self, seed: u64, config_json: &str) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        writeln!(buf, "# riskbandit {} v1", self.name).expect("write to Vec");
        writeln!(buf, "# seed={seed}").expect("write to Vec");
        writeln!(buf, "# config={config_json}").expect("write to Vec");
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(&self.header).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| BanditError::Io(e.to_string()))?;
        drop(w);
        Ok(buf)
    }

    /// JSON document: `{"kind", "seed", "config", "columns", "rows"}`.
    pub fn to_json(&self, seed: u64, config: &serde_json::Value) -> Vec<u8> {
        let doc = json!({
            "kind": self.name,
            "seed": seed,
            "config": config,
            "columns": self.header,
            "rows": self.rows,
        });
        let mut out = serde_json::to_vec_pretty(&doc).expect("json value serializes");
        out.push(b'\n');
        out
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

pub fn regret_curve_table(outcomes: &[PolicyOutcome]) -> Table {
    let mut t = Table::new(
        "regret_curve",
        &["policy", "t", "mean_theoretical_regret", "mean_empirical_regret", "std"],
    );
    for o in outcomes {
        let c = &o.curve;
        for i in 0..c.horizon() {
            t.rows.push(vec![
                o.cell.label.clone(),
                (i + 1).to_string(),
                num(c.mean_theoretical[i]),
                num(c.mean_empirical[i]),
                num(c.std_theoretical[i]),
            ]);
        }
    }
    t
}

pub fn reward_cdf_table(outcomes: &[PolicyOutcome]) -> Table {
    let mut t = Table::new("reward_cdf", &["policy", "rank", "mean_reward"]);
    for o in outcomes {
        for (i, r) in o.reward_cdf.iter().enumerate() {
            t.rows.push(vec![o.cell.label.clone(), (i + 1).to_string(), num(*r)]);
        }
    }
    t
}

/// Per-instance mean final regret; both columns sorted independently.
pub fn final_regret_table(outcomes: &[PolicyOutcome]) -> Table {
    let mut t = Table::new(
        "final_regret",
        &["policy", "rank", "empirical_regret", "theoretical_regret"],
    );
    for o in outcomes {
        let emp = sorted_final_regret(&o.instance_final_empirical);
        let theo = sorted_final_regret(&o.instance_final_theoretical);
        for (i, (e, th)) in emp.iter().zip(&theo).enumerate() {
            t.rows
                .push(vec![o.cell.label.clone(), (i + 1).to_string(), num(*e), num(*th)]);
        }
    }
    t
}

pub fn sweep_table(outcomes: &[PolicyOutcome]) -> Table {
    let mut header = vec!["policy"];
    header.extend(SWEEP_PARAMS);
    header.extend(["final_theoretical_regret", "final_empirical_regret", "std"]);
    let mut t = Table::new("sweep", &header);
    for o in outcomes {
        let params = serde_json::to_value(o.cell.config).expect("policy serializes");
        let mut row = vec![params["kind"].as_str().unwrap_or_default().to_string()];
        for p in SWEEP_PARAMS {
            row.push(match &params[p] {
                serde_json::Value::Number(n) => n.to_string(),
                _ => String::new(),
            });
        }
        row.push(num(o.curve.final_theoretical()));
        row.push(num(o.curve.final_empirical()));
        row.push(num(o.curve.final_std()));
        t.rows.push(row);
    }
    t
}

/// Which tables a command produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Report {
    Run,
    Sweep,
}

/// Writes the report tables plus `summary.json` into `dir`; returns the
/// paths written.
pub fn write_report(
    dir: &Path,
    exp: &ResolvedExperiment,
    outcomes: &[PolicyOutcome],
    report: Report,
    format: Format,
    wall_time: Duration,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let config = serde_json::to_value(exp).expect("experiment serializes");
    let config_line = config.to_string();
    let tables = match report {
        Report::Run => vec![
            regret_curve_table(outcomes),
            reward_cdf_table(outcomes),
            final_regret_table(outcomes),
        ],
        Report::Sweep => vec![sweep_table(outcomes)],
    };
    let mut written = Vec::new();
    for table in &tables {
        let path = dir.join(format!("{}.{}", table.name, format.extension()));
        let bytes = match format {
            Format::Csv => table.to_csv(exp.seed, &config_line)?,
            Format::Json => table.to_json(exp.seed, &config),
        };
        fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
        written.push(path);
    }
    let path = dir.join("summary.json");
    let summary = summary_json(exp, outcomes, wall_time);
    let mut bytes = serde_json::to_vec_pretty(&summary).expect("json value serializes");
    bytes.push(b'\n');
    fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
    written.push(path);
    Ok(written)
}

pub fn summary_json(exp: &ResolvedExperiment, outcomes: &[PolicyOutcome], wall_time: Duration) -> serde_json::Value {
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let policies: Vec<_> = outcomes
        .iter()
        .map(|o| {
            json!({
                "policy": o.cell.label,
                "params": o.cell.config,
                "final_theoretical_regret": o.curve.final_theoretical(),
                "final_empirical_regret": o.curve.final_empirical(),
                "std": o.curve.final_std(),
                "pulls": o.pulls,
            })
        })
        .collect();
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "seed": exp.seed,
        "config": exp,
        "results": policies,
        "wall_time_seconds": wall_time.as_secs_f64(),
        "timestamp_unix": timestamp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_provenance_and_quotes_labels() {
        let mut t = Table::new("demo", &["policy", "x"]);
        t.rows.push(vec!["marab(c=1e0,alpha=0.1)".into(), "1".into()]);
        let text = String::from_utf8(t.to_csv(9, "{\"a\":1}").unwrap()).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "# riskbandit demo v1");
        assert_eq!(lines[1], "# seed=9");
        assert_eq!(lines[2], "# config={\"a\":1}");
        assert_eq!(lines[3], "policy,x");
        assert_eq!(lines[4], "\"marab(c=1e0,alpha=0.1)\",1");
    }

    #[test]
    fn json_table_shape() {
        let mut t = Table::new("demo", &["a"]);
        t.rows.push(vec!["1".into()]);
        let v: serde_json::Value = serde_json::from_slice(&t.to_json(3, &json!({}))).unwrap();
        assert_eq!(v["kind"], "demo");
        assert_eq!(v["seed"], 3);
        assert_eq!(v["rows"][0][0], "1");
    }
}
