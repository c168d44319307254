//! CSV, JSON and SVG writers.
//!
//! Column layouts:
//!
//! | file | columns |
//! |------|---------|
//! | `tradeoff.csv` | method, gamma_db, mean_sinr_db, stderr, n_ok, n_infeasible, n_failed |
//! | `beampattern.csv` | angle_deg, method, gain_db, side, n_tx |
//! | `beampattern_metrics.csv` | method, side, metric, angle_deg, value |
//! | `security.csv` | method, gamma_db, cu_ser, eve_ser, cu_errors, eve_errors, trials, n_ok |
//! | `solution.csv` | method, antenna, x_re, x_im, w_re, w_im |
//!
//! Floats are written in shortest round-trip form, so identical runs produce
//! identical bytes. Missing values (flagged points) are empty fields.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{DfrcError, Result};
use crate::harness::experiments::{BeampatternReport, SecurityReport, TradeoffReport, SDR_BOUND_LABEL};
use crate::harness::plot::{Chart, Series};

fn csv_err(e: csv::Error) -> DfrcError {
    DfrcError::Io(e.to_string())
}

pub(crate) fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_tradeoff(dir: &Path, report: &TradeoffReport) -> Result<Vec<PathBuf>> {
    let csv_path = dir.join("tradeoff.csv");
    write_csv(
        &csv_path,
        &[
            "method",
            "gamma_db",
            "mean_sinr_db",
            "stderr",
            "n_ok",
            "n_infeasible",
            "n_failed",
        ],
        report.points.iter().map(|p| {
            vec![
                p.method.clone(),
                num(p.gamma_db),
                opt(p.sinr_db.map(|s| s.mean)),
                opt(p.sinr_db.map(|s| s.stderr)),
                p.n_ok.to_string(),
                p.n_infeasible.to_string(),
                p.n_failed.to_string(),
            ]
        }),
    )?;
    let mut labels: Vec<&str> = Vec::new();
    for p in &report.points {
        if !labels.contains(&p.method.as_str()) {
            labels.push(&p.method);
        }
    }
    let chart = Chart {
        title: "Radar SINR versus user SNR target",
        x_label: "SNR target (dB)",
        y_label: "radar SINR (dB)",
        y_floor: None,
        series: labels
            .iter()
            .map(|&label| Series {
                label,
                points: report
                    .series(label)
                    .iter()
                    .map(|p| (p.gamma_db, p.sinr_db.map_or(f64::NAN, |s| s.mean)))
                    .collect(),
                dashed: label == SDR_BOUND_LABEL,
            })
            .collect(),
    };
    let svg_path = dir.join("tradeoff.svg");
    fs::write(&svg_path, chart.to_svg())?;
    Ok(vec![csv_path, svg_path])
}

pub fn write_beampattern(dir: &Path, report: &BeampatternReport) -> Result<Vec<PathBuf>> {
    let csv_path = dir.join("beampattern.csv");
    let n_tx = report.n_tx.to_string();
    let mut rows = Vec::new();
    for mp in &report.methods {
        for (side, db) in [("tx", &mp.tx_db), ("rx", &mp.rx_db)] {
            for (a, g) in report.angles_deg.iter().zip(db.iter()) {
                rows.push(vec![
                    num(*a),
                    mp.method.clone(),
                    num(*g),
                    side.to_string(),
                    n_tx.clone(),
                ]);
            }
        }
    }
    write_csv(&csv_path, &["angle_deg", "method", "gain_db", "side", "n_tx"], rows)?;

    let metrics_path = dir.join("beampattern_metrics.csv");
    let mut rows = Vec::new();
    for mp in &report.methods {
        for (side, m) in [("tx", &mp.tx_metrics), ("rx", &mp.rx_metrics)] {
            let Some(m) = m else { continue };
            let row = |metric: &str, angle: String, value: String| {
                vec![mp.method.clone(), side.to_string(), metric.to_string(), angle, value]
            };
            rows.push(row("pslr_db", String::new(), opt(m.pslr_db)));
            rows.push(row("width_3db_deg", String::new(), opt(m.width_3db_deg)));
            for nd in &m.null_depths {
                rows.push(row("null_depth_db", num(nd.angle_deg), num(nd.depth_db)));
            }
        }
    }
    write_csv(&metrics_path, &["method", "side", "metric", "angle_deg", "value"], rows)?;

    let mut files = vec![csv_path, metrics_path];
    for side in ["tx", "rx"] {
        let chart = Chart {
            title: &format!(
                "{} beampattern, N_T = {}",
                if side == "tx" { "Transmit" } else { "Receive" },
                report.n_tx
            ),
            x_label: "angle (deg)",
            y_label: "normalized gain (dB)",
            y_floor: Some(-80.0),
            series: report
                .methods
                .iter()
                .map(|mp| Series {
                    label: &mp.method,
                    points: report
                        .angles_deg
                        .iter()
                        .copied()
                        .zip(if side == "tx" { &mp.tx_db } else { &mp.rx_db }.iter().copied())
                        .collect(),
                    dashed: false,
                })
                .collect(),
        };
        let path = dir.join(format!("beampattern_{side}.svg"));
        fs::write(&path, chart.to_svg())?;
        files.push(path);
    }
    Ok(files)
}

pub fn write_security(dir: &Path, report: &SecurityReport) -> Result<Vec<PathBuf>> {
    let csv_path = dir.join("security.csv");
    write_csv(
        &csv_path,
        &[
            "method",
            "gamma_db",
            "cu_ser",
            "eve_ser",
            "cu_errors",
            "eve_errors",
            "trials",
            "n_ok",
        ],
        report.points.iter().map(|p| {
            vec![
                p.method.clone(),
                num(p.gamma_db),
                opt(p.cu_ser()),
                opt(p.eve_ser()),
                p.cu_errors.to_string(),
                p.eve_errors.to_string(),
                p.trials.to_string(),
                p.n_ok.to_string(),
            ]
        }),
    )?;
    Ok(vec![csv_path])
}

pub fn write_solution_csv(dir: &Path, rows: Vec<Vec<String>>) -> Result<PathBuf> {
    let path = dir.join("solution.csv");
    write_csv(&path, &["method", "antenna", "x_re", "x_im", "w_re", "w_im"], rows)?;
    Ok(path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| DfrcError::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

pub fn file_entry(path: &Path) -> Result<FileEntry> {
    let data = fs::read(path)?;
    Ok(FileEntry {
        name: path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        bytes: data.len() as u64,
        sha256: sha256_hex(&data),
    })
}
