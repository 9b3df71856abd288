//! Files written into the output directory.

use std::fs;
use std::path::{Path, PathBuf};

use clayer::energy::EnergyReport;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;

pub const SCHEMA: &str = "clayer/1";

pub fn prepare(dir: &Path) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))
}

/// `summary.json`: schema tag, the fully resolved configuration, results
/// and verdict.
pub fn write_summary(
    dir: &Path,
    command: &str,
    cfg: &RunConfig,
    results: Value,
    verdict: bool,
    exit_code: u8,
) -> Result<PathBuf, String> {
    let doc = json!({
        "schema": SCHEMA,
        "command": command,
        "config": cfg,
        "results": results,
        "verdict": verdict,
        "exit_code": exit_code,
    });
    let path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())?;
    fs::write(&path, text + "\n").map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(path)
}

#[derive(Serialize)]
struct ReportRow {
    t: f64,
    #[serde(rename = "Es")]
    es: f64,
    #[serde(rename = "Es_half")]
    es_half: f64,
    #[serde(rename = "Es_one")]
    es_one: f64,
    #[serde(rename = "Ds0")]
    ds0: f64,
    #[serde(rename = "Ds_half")]
    ds_half: f64,
    #[serde(rename = "Ds_one")]
    ds_one: f64,
    #[serde(rename = "Ds_threehalf")]
    ds_threehalf: f64,
    tau_t: f64,
    tau_empirical: Option<f64>,
    decay_slack: Option<f64>,
    master_slack: Option<f64>,
}

/// `report.csv`, one row per monitored sample.
pub fn write_report(
    dir: &Path,
    reports: &[EnergyReport<f64>],
    decay_slack: &[f64],
    master_slack: &[f64],
) -> Result<PathBuf, String> {
    let path = dir.join("report.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    for (i, r) in reports.iter().enumerate() {
        let f = &r.functionals;
        w.serialize(ReportRow {
            t: r.t,
            es: f.es,
            es_half: f.es_half,
            es_one: f.es_one,
            ds0: f.ds0,
            ds_half: f.ds_half,
            ds_one: f.ds_one,
            ds_threehalf: f.ds_threehalf,
            tau_t: r.tau_t,
            tau_empirical: r.tau_empirical,
            decay_slack: decay_slack.get(i).copied(),
            master_slack: master_slack.get(i).copied(),
        })
        .map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())?;
    Ok(path)
}

/// Any serializable rows as CSV.
pub fn write_rows<R: Serialize>(
    path: &Path,
    rows: impl IntoIterator<Item = R>,
) -> Result<(), String> {
    let mut w = csv::Writer::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    for r in rows {
        w.serialize(r).map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())
}
