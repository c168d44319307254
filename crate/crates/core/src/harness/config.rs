//! Experiment configuration file.
//!
//! The file is TOML with a strict, versioned schema. Every quantity given in
//! decibels carries a `_db` (ratio) or `_dbm` (absolute power) suffix; a key
//! that matches a known dB field minus its suffix is rejected with a hint, so
//! a linear value can never be read as decibels by accident.
//!
//! ```toml
//! schema_version = 1
//! seed = 2026
//! output_dir = "out"
//!
//! [scenario]
//! n_tx = 8
//! n_rx = 8
//! n_users = 5
//! psk_order = 4
//! target_angle_deg = 0.0
//! target_power_db = 10.0
//! clutter_angles_deg = [-50.0, -20.0, 20.0, 50.0]
//! clutter_powers_db = [30.0, 30.0, 30.0, 30.0]
//! power_budget_dbm = 30.0
//! user_noise_var_db = 0.0
//!
//! [experiment]
//! gamma_db = 15.0
//! gamma_sweep_db = [12.0, 15.0, 18.0, 21.0, 24.0, 27.0]
//! n_channel_draws = 50
//! n_symbol_draws = 10
//! angle_min_deg = -90.0
//! angle_max_deg = 90.0
//! angle_step_deg = 0.5
//! noise_trials = 10000
//! eve_noise_var_db = 0.0
//!
//! [solver]
//! methods = ["sca", "sq", "sdr"]
//! max_outer_iters = 200
//! conv_tol = 1e-5
//! linesearch = "armijo"
//! randomization_samples = 100
//! sq_lambda_scale = 1.0
//! ```
//!
//! Powers are normalized by the radar noise variance, which is the unit of
//! the whole model; `power_budget_dbm = 30` maps to a linear budget of 1000.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{DfrcError, Result};
use crate::signal_model::{db_to_linear, Scenario};
use crate::solvers::{LineSearch, Method, SolverConfig};

pub const SCHEMA_VERSION: u32 = 1;

/// Largest sweep or grid the harness accepts.
const MAX_POINTS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioFile {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_users: usize,
    pub psk_order: usize,
    pub target_angle_deg: f64,
    pub target_power_db: f64,
    pub clutter_angles_deg: Vec<f64>,
    pub clutter_powers_db: Vec<f64>,
    pub power_budget_dbm: f64,
    pub user_noise_var_db: f64,
}

impl Default for ScenarioFile {
    fn default() -> Self {
        ScenarioFile {
            n_tx: 8,
            n_rx: 8,
            n_users: 5,
            psk_order: 4,
            target_angle_deg: 0.0,
            target_power_db: 10.0,
            clutter_angles_deg: vec![-50.0, -20.0, 20.0, 50.0],
            clutter_powers_db: vec![30.0; 4],
            power_budget_dbm: 30.0,
            user_noise_var_db: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentFile {
    /// Operating point of `beampattern` and `solve`.
    pub gamma_db: f64,
    pub gamma_sweep_db: Vec<f64>,
    pub n_channel_draws: usize,
    pub n_symbol_draws: usize,
    pub angle_min_deg: f64,
    pub angle_max_deg: f64,
    pub angle_step_deg: f64,
    /// Noise realizations per waveform and user in the SER study.
    pub noise_trials: usize,
    pub eve_noise_var_db: f64,
}

impl Default for ExperimentFile {
    fn default() -> Self {
        ExperimentFile {
            gamma_db: 15.0,
            gamma_sweep_db: vec![12.0, 15.0, 18.0, 21.0, 24.0, 27.0],
            n_channel_draws: 50,
            n_symbol_draws: 10,
            angle_min_deg: -90.0,
            angle_max_deg: 90.0,
            angle_step_deg: 0.5,
            noise_trials: 10_000,
            eve_noise_var_db: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverFile {
    pub methods: Vec<Method>,
    pub max_outer_iters: usize,
    pub conv_tol: f64,
    pub linesearch: LineSearch,
    pub randomization_samples: usize,
    pub sq_lambda_scale: f64,
}

impl Default for SolverFile {
    fn default() -> Self {
        let d = SolverConfig::new(Method::Sca);
        SolverFile {
            methods: vec![Method::Sca, Method::Sq, Method::Sdr],
            max_outer_iters: d.max_outer_iters,
            conv_tol: d.conv_tol,
            linesearch: d.linesearch,
            randomization_samples: d.randomization_samples,
            sq_lambda_scale: d.sq_lambda_scale,
        }
    }
}

/// The configuration file as written on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub scenario: ScenarioFile,
    #[serde(default)]
    pub experiment: ExperimentFile,
    #[serde(default)]
    pub solver: SolverFile,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for ConfigFile {
    fn default() -> Self {
        ConfigFile {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            output_dir: default_output_dir(),
            scenario: ScenarioFile::default(),
            experiment: ExperimentFile::default(),
            solver: SolverFile::default(),
        }
    }
}

/// Scalar overrides applied on top of a file (command-line flags).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub methods: Option<Vec<Method>>,
    pub n_tx: Option<usize>,
    pub n_rx: Option<usize>,
    pub n_users: Option<usize>,
    pub gamma_db: Option<f64>,
    pub n_channel_draws: Option<usize>,
    pub n_symbol_draws: Option<usize>,
    pub noise_trials: Option<usize>,
}

/// Keys allowed in each table; used for suffix hints before serde sees the file.
const TOP_KEYS: &[&str] = &[
    "schema_version",
    "seed",
    "output_dir",
    "scenario",
    "experiment",
    "solver",
];
const SCENARIO_KEYS: &[&str] = &[
    "n_tx",
    "n_rx",
    "n_users",
    "psk_order",
    "target_angle_deg",
    "target_power_db",
    "clutter_angles_deg",
    "clutter_powers_db",
    "power_budget_dbm",
    "user_noise_var_db",
];
const EXPERIMENT_KEYS: &[&str] = &[
    "gamma_db",
    "gamma_sweep_db",
    "n_channel_draws",
    "n_symbol_draws",
    "angle_min_deg",
    "angle_max_deg",
    "angle_step_deg",
    "noise_trials",
    "eve_noise_var_db",
];
const SOLVER_KEYS: &[&str] = &[
    "methods",
    "max_outer_iters",
    "conv_tol",
    "linesearch",
    "randomization_samples",
    "sq_lambda_scale",
];

impl ConfigFile {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| DfrcError::Config(format!("malformed config: {}", e.message())))?;
        check_keys(&table, TOP_KEYS, "")?;
        for (name, keys) in [
            ("scenario", SCENARIO_KEYS),
            ("experiment", EXPERIMENT_KEYS),
            ("solver", SOLVER_KEYS),
        ] {
            match table.get(name) {
                None => {}
                Some(toml::Value::Table(t)) => check_keys(t, keys, name)?,
                Some(_) => return Err(DfrcError::Config(format!("'{name}' must be a table"))),
            }
        }
        match table.get("schema_version") {
            Some(toml::Value::Integer(v)) if *v == SCHEMA_VERSION as i64 => {}
            Some(v) => {
                return Err(DfrcError::Config(format!(
                    "unsupported schema_version {v} (this build reads version {SCHEMA_VERSION})"
                )))
            }
            None => return Err(DfrcError::Config("missing schema_version".into())),
        }
        let cfg: ConfigFile = toml::from_str(text)
            .map_err(|e: toml::de::Error| DfrcError::Config(format!("invalid config: {}", e.message())))?;
        cfg.to_spec()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DfrcError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = &o.output_dir {
            self.output_dir = v.clone();
        }
        if let Some(v) = &o.methods {
            self.solver.methods = v.clone();
        }
        if let Some(v) = o.n_tx {
            self.scenario.n_tx = v;
        }
        if let Some(v) = o.n_rx {
            self.scenario.n_rx = v;
        }
        if let Some(v) = o.n_users {
            self.scenario.n_users = v;
        }
        if let Some(v) = o.gamma_db {
            self.experiment.gamma_db = v;
        }
        if let Some(v) = o.n_channel_draws {
            self.experiment.n_channel_draws = v;
        }
        if let Some(v) = o.n_symbol_draws {
            self.experiment.n_symbol_draws = v;
        }
        if let Some(v) = o.noise_trials {
            self.experiment.noise_trials = v;
        }
    }

    /// Converts to linear units and validates everything.
    pub fn to_spec(&self) -> Result<ExperimentSpec> {
        let s = &self.scenario;
        if s.clutter_angles_deg.len() != s.clutter_powers_db.len() {
            return Err(DfrcError::Config(format!(
                "{} clutter angles but {} clutter powers",
                s.clutter_angles_deg.len(),
                s.clutter_powers_db.len()
            )));
        }
        let scenario = Scenario {
            n_tx: s.n_tx,
            n_rx: s.n_rx,
            target_angle: s.target_angle_deg.to_radians(),
            target_power: db_to_linear(s.target_power_db),
            clutter_angles: s.clutter_angles_deg.iter().map(|d| d.to_radians()).collect(),
            clutter_powers: s.clutter_powers_db.iter().map(|&d| db_to_linear(d)).collect(),
            radar_noise_var: 1.0,
            user_noise_vars: vec![db_to_linear(s.user_noise_var_db); s.n_users],
            power_budget: db_to_linear(s.power_budget_dbm),
            psk_order: s.psk_order,
        };
        scenario.validate()?;

        let e = &self.experiment;
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(DfrcError::Config(format!("{name} must be finite")))
            }
        };
        finite("gamma_db", e.gamma_db)?;
        finite("eve_noise_var_db", e.eve_noise_var_db)?;
        if e.gamma_sweep_db.is_empty() {
            return Err(DfrcError::Config("gamma_sweep_db must not be empty".into()));
        }
        for &g in &e.gamma_sweep_db {
            finite("gamma_sweep_db entry", g)?;
        }
        if e.n_channel_draws == 0 || e.n_symbol_draws == 0 {
            return Err(DfrcError::Config("draw counts must be positive".into()));
        }
        if e.noise_trials == 0 {
            return Err(DfrcError::Config("noise_trials must be positive".into()));
        }
        let angle_grid = angle_grid(e.angle_min_deg, e.angle_max_deg, e.angle_step_deg)?;

        let v = &self.solver;
        if v.methods.is_empty() {
            return Err(DfrcError::Config("solver.methods must not be empty".into()));
        }
        let mut methods = Vec::with_capacity(v.methods.len());
        for (i, &m) in v.methods.iter().enumerate() {
            if v.methods[..i].contains(&m) {
                return Err(DfrcError::Config(format!("method '{m}' listed twice")));
            }
            let cfg = SolverConfig {
                max_outer_iters: v.max_outer_iters,
                conv_tol: v.conv_tol,
                linesearch: v.linesearch,
                randomization_samples: v.randomization_samples,
                sq_lambda_scale: v.sq_lambda_scale,
                ..SolverConfig::new(m)
            };
            cfg.validate()?;
            methods.push(cfg);
        }

        Ok(ExperimentSpec {
            scenario,
            methods,
            gamma_db: e.gamma_db,
            gamma_sweep_db: e.gamma_sweep_db.clone(),
            n_channel_draws: e.n_channel_draws,
            n_symbol_draws: e.n_symbol_draws,
            angle_grid_deg: angle_grid,
            noise_trials: e.noise_trials,
            eve_noise_var: db_to_linear(e.eve_noise_var_db),
            seed: self.seed,
            output_dir: self.output_dir.clone(),
        })
    }
}

fn angle_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(min.is_finite() && max.is_finite() && step.is_finite()) || step <= 0.0 || max < min {
        return Err(DfrcError::Config(format!(
            "bad angle grid: min {min}, max {max}, step {step}"
        )));
    }
    if min < -90.0 || max > 90.0 {
        return Err(DfrcError::Config("angle grid must lie within [-90, 90] degrees".into()));
    }
    let count = ((max - min) / step + 1e-9).floor() as usize + 1;
    if count > MAX_POINTS {
        return Err(DfrcError::Config(format!(
            "angle grid has {count} points (limit {MAX_POINTS})"
        )));
    }
    Ok((0..count).map(|i| min + i as f64 * step).collect())
}

fn check_keys(table: &toml::Table, allowed: &[&str], section: &str) -> Result<()> {
    for key in table.keys() {
        if allowed.contains(&key.as_str()) {
            continue;
        }
        let path = if section.is_empty() {
            key.clone()
        } else {
            format!("{section}.{key}")
        };
        let stem = key
            .strip_suffix("_linear")
            .or_else(|| key.strip_suffix("_lin"))
            .unwrap_or(key);
        let hint = ["_db", "_dbm"]
            .iter()
            .map(|suffix| format!("{stem}{suffix}"))
            .find(|cand| allowed.contains(&cand.as_str()));
        return Err(DfrcError::Config(match hint {
            Some(cand) => format!(
                "unknown key '{path}': quantities are given in decibels with an explicit unit suffix; use '{cand}'"
            ),
            None => format!("unknown key '{path}' (allowed: {})", allowed.join(", ")),
        }));
    }
    Ok(())
}

/// A validated experiment in linear units.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    pub methods: Vec<SolverConfig>,
    pub gamma_db: f64,
    pub gamma_sweep_db: Vec<f64>,
    pub n_channel_draws: usize,
    pub n_symbol_draws: usize,
    pub angle_grid_deg: Vec<f64>,
    pub noise_trials: usize,
    pub eve_noise_var: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn standard() -> Self {
        ConfigFile::default().to_spec().expect("defaults are valid")
    }

    pub fn n_draws(&self) -> usize {
        self.n_channel_draws * self.n_symbol_draws
    }
}
