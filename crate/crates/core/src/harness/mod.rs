//! Monte Carlo experiments: configuration, deterministic draws, the three
//! studies and their file outputs.

pub mod config;
pub mod experiments;
pub mod metrics;
pub mod output;
pub mod plot;
pub mod rng;

pub use config::{ConfigFile, ExperimentSpec, Overrides, SCHEMA_VERSION};
pub use experiments::{
    run_beampattern, run_security_metrics, run_tradeoff, solve_instance, BeampatternReport, InstanceSolution,
    SecurityReport, TradeoffReport, SDR_BOUND_LABEL,
};
pub use rng::{draw_channels, draw_instance, draw_symbols};

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;

use crate::ci::check_feasible;
use crate::error::{DfrcError, Result};
use crate::solvers::{SolverStatus, TraceEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Tradeoff,
    Beampattern,
    Security,
    Solve,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Tradeoff => "tradeoff",
            Command::Beampattern => "beampattern",
            Command::Security => "security",
            Command::Solve => "solve",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What a run produced.
#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    /// Points with no successful draw.
    pub flagged_points: usize,
    /// Solver runs that ended in an error other than infeasibility.
    pub failed_runs: usize,
    pub total_runs: usize,
    /// Every point is flagged and only infeasibility caused it.
    pub all_infeasible: bool,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    schema_version: u32,
    seed: u64,
    config_sha256: String,
    config: &'a str,
    files: Vec<output::FileEntry>,
    flagged_points: usize,
    failed_runs: usize,
    total_runs: usize,
    runtime: serde_json::Value,
}

/// Runs `command` with a resolved configuration and writes all outputs
/// (data files, plots, `manifest.json`) into its `output_dir`.
pub fn execute(command: Command, cfg: &ConfigFile) -> Result<RunSummary> {
    let spec = cfg.to_spec()?;
    let dir = &spec.output_dir;
    fs::create_dir_all(dir).map_err(|e| DfrcError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let started = Instant::now();
    let mut summary = RunSummary::default();
    let runtime = match command {
        Command::Tradeoff => {
            let report = run_tradeoff(&spec);
            summary.files = output::write_tradeoff(dir, &report)?;
            let methods: Vec<_> = report.points.iter().filter(|p| p.method != SDR_BOUND_LABEL).collect();
            summary.flagged_points = methods.iter().filter(|p| p.is_flagged()).count();
            summary.failed_runs = methods.iter().map(|p| p.n_failed).sum();
            summary.total_runs = methods.iter().map(|p| p.n_ok + p.n_infeasible + p.n_failed).sum();
            set_all_infeasible(&mut summary, methods.len());
            serde_json::to_value(&report.runtime)
        }
        Command::Beampattern => {
            let report = run_beampattern(&spec)?;
            summary.files = output::write_beampattern(dir, &report)?;
            summary.flagged_points = report.methods.iter().filter(|m| m.n_ok == 0).count();
            summary.failed_runs = report.methods.iter().map(|m| m.n_failed).sum();
            summary.total_runs = report
                .methods
                .iter()
                .map(|m| m.n_ok + m.n_infeasible + m.n_failed)
                .sum();
            set_all_infeasible(&mut summary, report.methods.len());
            serde_json::to_value(&report.runtime)
        }
        Command::Security => {
            let report = run_security_metrics(&spec)?;
            summary.files = output::write_security(dir, &report)?;
            summary.flagged_points = report.points.iter().filter(|p| p.n_ok == 0).count();
            summary.total_runs = report.points.len() * spec.n_draws();
            set_all_infeasible(&mut summary, report.points.len());
            serde_json::to_value(&report.runtime)
        }
        Command::Solve => {
            let (files, all_infeasible) = solve_and_write(&spec)?;
            summary.files = files;
            summary.total_runs = spec.methods.len();
            summary.all_infeasible = all_infeasible;
            summary.flagged_points = if all_infeasible { spec.methods.len() } else { 0 };
            Ok(serde_json::json!({ "total_seconds": started.elapsed().as_secs_f64() }))
        }
    }
    .map_err(|e| DfrcError::Io(e.to_string()))?;

    let config_text = cfg.to_toml_string();
    let manifest = Manifest {
        tool: "dfrc",
        version: env!("CARGO_PKG_VERSION"),
        command: command.name(),
        schema_version: SCHEMA_VERSION,
        seed: cfg.seed,
        config_sha256: output::sha256_hex(config_text.as_bytes()),
        config: &config_text,
        files: summary
            .files
            .iter()
            .map(|p| output::file_entry(p))
            .collect::<Result<_>>()?,
        flagged_points: summary.flagged_points,
        failed_runs: summary.failed_runs,
        total_runs: summary.total_runs,
        runtime,
    };
    let manifest_path = dir.join("manifest.json");
    output::write_json(&manifest_path, &manifest)?;
    summary.files.push(manifest_path);
    Ok(summary)
}

fn set_all_infeasible(summary: &mut RunSummary, n_points: usize) {
    summary.all_infeasible = n_points > 0 && summary.flagged_points == n_points && summary.failed_runs == 0;
}

#[derive(Serialize)]
struct SolvedMethod {
    method: String,
    status: SolverStatus,
    sinr_db: Option<f64>,
    sinr_linear: f64,
    bound_sinr_db: Option<f64>,
    iterations: usize,
    power: f64,
    user_margins: Vec<f64>,
    user_snr_db: Vec<f64>,
    trace: Vec<TraceEntry>,
}

#[derive(Serialize)]
struct SolveReport {
    gamma_db: f64,
    n_tx: usize,
    n_rx: usize,
    n_users: usize,
    draw: (usize, usize),
    methods: Vec<SolvedMethod>,
}

/// Solves draw `(0, 0)` at the operating SNR target with every configured method.
/// Returns the written files and whether every method found the instance infeasible.
fn solve_and_write(spec: &ExperimentSpec) -> Result<(Vec<PathBuf>, bool)> {
    let sc = &spec.scenario;
    let (channels, symbols) = draw_instance(sc, spec.seed, 0, 0)?;
    let mut rows = Vec::new();
    let mut methods = Vec::new();
    let mut all_infeasible = true;
    for (m, base) in spec.methods.iter().enumerate() {
        let cfg = crate::solvers::SolverConfig {
            rng_seed: rng::solver_seed(spec.seed, 0, m, 0),
            ..base.clone()
        };
        let sol = solve_instance(sc, &cfg, spec.gamma_db, &channels, &symbols)?;
        let r = &sol.result;
        let feasible = r.status != SolverStatus::Infeasible;
        all_infeasible &= !feasible;
        for (i, (x, w)) in r.x_opt.iter().zip(r.w_opt.iter()).enumerate() {
            rows.push(vec![
                r.method.to_string(),
                i.to_string(),
                output::num(x.re),
                output::num(x.im),
                output::num(w.re),
                output::num(w.im),
            ]);
        }
        let report = check_feasible(&sol.constraints, &r.x_opt);
        let user_snr_db = channels
            .iter()
            .enumerate()
            .map(|(k, h)| crate::signal_model::snr_user(sc, k, h, &r.x_opt).map(crate::signal_model::linear_to_db))
            .collect::<Result<Vec<_>>>()?;
        methods.push(SolvedMethod {
            method: r.method.to_string(),
            status: r.status,
            sinr_db: feasible.then(|| r.sinr_db()),
            sinr_linear: r.sinr_rad,
            bound_sinr_db: sol.bound_sinr.map(crate::signal_model::linear_to_db),
            iterations: r.iterations,
            power: r.x_opt.norm_squared(),
            user_margins: report.per_user_margins,
            user_snr_db,
            trace: r.trace.clone(),
        });
    }
    let dir = &spec.output_dir;
    let csv = output::write_solution_csv(dir, rows)?;
    let json = dir.join("solution.json");
    output::write_json(
        &json,
        &SolveReport {
            gamma_db: spec.gamma_db,
            n_tx: sc.n_tx,
            n_rx: sc.n_rx,
            n_users: sc.n_users(),
            draw: (0, 0),
            methods,
        },
    )?;
    Ok((vec![csv, json], all_infeasible))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config(dir: &std::path::Path) -> ConfigFile {
        let mut cfg = ConfigFile::default();
        cfg.output_dir = dir.to_path_buf();
        cfg.scenario.n_tx = 4;
        cfg.scenario.n_rx = 4;
        cfg.scenario.n_users = 2;
        cfg.experiment.gamma_sweep_db = vec![12.0, 18.0];
        cfg.experiment.n_channel_draws = 2;
        cfg.experiment.n_symbol_draws = 2;
        cfg.experiment.noise_trials = 100;
        cfg
    }

    #[test]
    fn every_command_writes_manifested_outputs() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = tiny_config(tmp.path());
        for command in [
            Command::Tradeoff,
            Command::Beampattern,
            Command::Security,
            Command::Solve,
        ] {
            let summary = execute(command, &cfg).unwrap();
            assert!(!summary.all_infeasible);
            let manifest: serde_json::Value =
                serde_json::from_str(&fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
            assert_eq!(manifest["command"], command.name());
            let listed = manifest["files"].as_array().unwrap();
            assert_eq!(listed.len() + 1, summary.files.len());
            for entry in listed {
                let data = fs::read(tmp.path().join(entry["name"].as_str().unwrap())).unwrap();
                assert_eq!(entry["sha256"], output::sha256_hex(&data));
            }
        }
        let bp = fs::read_to_string(tmp.path().join("beampattern.csv")).unwrap();
        for method in ["sca", "sq", "sdr"] {
            let gains: Vec<f64> = bp
                .lines()
                .skip(1)
                .filter(|l| l.contains(&format!(",{method},")) && l.contains(",tx,"))
                .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
                .collect();
            assert_eq!(gains.iter().copied().fold(f64::NEG_INFINITY, f64::max), 0.0);
        }
    }

    #[test]
    fn infeasible_solve_is_reported() {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = tiny_config(tmp.path());
        cfg.experiment.gamma_db = 80.0;
        let summary = execute(Command::Solve, &cfg).unwrap();
        assert!(summary.all_infeasible);
        let mut cfg = tiny_config(tmp.path());
        cfg.experiment.gamma_sweep_db = vec![80.0];
        assert!(execute(Command::Tradeoff, &cfg).unwrap().all_infeasible);
    }

    #[test]
    fn csv_outputs_are_byte_identical() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        for dir in [a.path(), b.path()] {
            execute(Command::Tradeoff, &tiny_config(dir)).unwrap();
        }
        assert_eq!(
            fs::read(a.path().join("tradeoff.csv")).unwrap(),
            fs::read(b.path().join("tradeoff.csv")).unwrap()
        );
    }
}
