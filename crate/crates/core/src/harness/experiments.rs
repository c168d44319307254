//! The Monte Carlo studies: SINR versus SNR target, beampatterns and
//! link-level security.
//!
//! Work units are `(point, method, draw)` triples mapped in parallel; the
//! reduction runs sequentially in index order, so every aggregate is
//! reproducible regardless of scheduling.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::ci::{build_constraints, CiConstraintSet, PskSymbol};
use crate::error::{DfrcError, Result};
use crate::harness::config::ExperimentSpec;
use crate::harness::metrics::{self, count_symbol_errors, eavesdropper_observation, normalize_db};
use crate::harness::rng::{draw_instance, solver_seed, unit_rng, StreamKind};
use crate::numerics::ComplexVector;
use crate::signal_model::{self, db_to_linear, linear_to_db, Scenario};
use crate::solvers::{sca_solve, sdr_solve, sq_solve, Method, SolverConfig, SolverResult, SolverStatus};

/// Label of the relaxation-bound series in tradeoff outputs.
pub const SDR_BOUND_LABEL: &str = "sdr_bound";

/// One solver run on one drawn instance.
#[derive(Debug, Clone)]
pub struct InstanceSolution {
    pub result: SolverResult,
    /// `mu` times the certified relaxation bound (SDR only).
    pub bound_sinr: Option<f64>,
    pub constraints: CiConstraintSet,
}

/// Builds the CI constraints of one draw with every user at `gamma_db` and solves.
pub fn solve_instance(
    scenario: &Scenario,
    cfg: &SolverConfig,
    gamma_db: f64,
    channels: &[ComplexVector],
    symbols: &[PskSymbol],
) -> Result<InstanceSolution> {
    let gammas = vec![db_to_linear(gamma_db); scenario.n_users()];
    let cs = build_constraints(scenario, channels, symbols, &gammas)?;
    let (result, bound_sinr) = match cfg.method {
        Method::Sca => (sca_solve(scenario, &cs, cfg)?, None),
        Method::Sq => (sq_solve(scenario, &cs, cfg)?, None),
        Method::Sdr => {
            let r = sdr_solve(scenario, &cs, cfg)?;
            let bound = r.bound_sinr(scenario);
            let bound = (r.result.status != SolverStatus::Infeasible).then_some(bound);
            (r.result, bound)
        }
    };
    Ok(InstanceSolution {
        result,
        bound_sinr,
        constraints: cs,
    })
}

/// Outcome of one work unit.
#[derive(Debug, Clone)]
pub enum UnitOutcome {
    Solved(Box<InstanceSolution>),
    Infeasible,
    Failed(String),
}

impl UnitOutcome {
    pub fn solution(&self) -> Option<&InstanceSolution> {
        match self {
            UnitOutcome::Solved(s) => Some(s),
            _ => None,
        }
    }
}

/// Solves draw `draw` (flattened `channel * n_symbol_draws + symbol`) at `gamma_db`.
pub fn run_unit(spec: &ExperimentSpec, point: usize, method: usize, gamma_db: f64, draw: usize) -> UnitOutcome {
    let channel = draw / spec.n_symbol_draws;
    let symbol = draw % spec.n_symbol_draws;
    let (channels, symbols) = match draw_instance(&spec.scenario, spec.seed, channel, symbol) {
        Ok(v) => v,
        Err(e) => return UnitOutcome::Failed(e.to_string()),
    };
    let cfg = SolverConfig {
        rng_seed: solver_seed(spec.seed, point, method, draw),
        ..spec.methods[method].clone()
    };
    match solve_instance(&spec.scenario, &cfg, gamma_db, &channels, &symbols) {
        Ok(sol) if sol.result.status == SolverStatus::Infeasible => UnitOutcome::Infeasible,
        Ok(sol) => UnitOutcome::Solved(Box::new(sol)),
        Err(DfrcError::Infeasible { .. }) => UnitOutcome::Infeasible,
        Err(e) => UnitOutcome::Failed(e.to_string()),
    }
}

/// Runs `run_unit` over `points x methods x draws` in parallel; results in index order.
fn run_grid(spec: &ExperimentSpec, gammas: &[f64]) -> Vec<Vec<Vec<UnitOutcome>>> {
    let (n_m, n_d) = (spec.methods.len(), spec.n_draws());
    let flat: Vec<UnitOutcome> = (0..gammas.len() * n_m * n_d)
        .into_par_iter()
        .map(|i| {
            let (p, rest) = (i / (n_m * n_d), i % (n_m * n_d));
            run_unit(spec, p, rest / n_d, gammas[p], rest % n_d)
        })
        .collect();
    let mut it = flat.into_iter();
    (0..gammas.len())
        .map(|_| (0..n_m).map(|_| it.by_ref().take(n_d).collect()).collect())
        .collect()
}

/// Mean, standard error and count of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Some(Summary { mean, stderr, n })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RuntimeStats {
    pub total_seconds: f64,
    /// Per method: mean solver wall time in seconds over successful runs.
    pub mean_solve_seconds: Vec<(String, f64)>,
}

impl RuntimeStats {
    fn collect<'a>(
        started: Instant,
        spec: &ExperimentSpec,
        per_method: impl Fn(usize) -> Vec<&'a InstanceSolution>,
    ) -> Self {
        let mean_solve_seconds = spec
            .methods
            .iter()
            .enumerate()
            .map(|(m, cfg)| {
                let runs = per_method(m);
                let t = runs.iter().map(|s| s.result.wall_time).sum::<f64>() / runs.len().max(1) as f64;
                (cfg.method.to_string(), t)
            })
            .collect();
        RuntimeStats {
            total_seconds: started.elapsed().as_secs_f64(),
            mean_solve_seconds,
        }
    }
}

/// One point of the SINR-versus-SNR-target curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffPoint {
    pub method: String,
    pub gamma_db: f64,
    /// Mean and standard error of the per-draw radar SINR in dB; `None` if no draw succeeded.
    pub sinr_db: Option<Summary>,
    /// Per-draw SINR in dB, in draw order, successful draws only.
    pub samples_db: Vec<f64>,
    pub n_ok: usize,
    pub n_infeasible: usize,
    pub n_failed: usize,
}

impl TradeoffPoint {
    pub fn is_flagged(&self) -> bool {
        self.n_ok == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffReport {
    pub points: Vec<TradeoffPoint>,
    #[serde(skip)]
    pub runtime: RuntimeStats,
}

impl TradeoffReport {
    pub fn series(&self, method: &str) -> Vec<&TradeoffPoint> {
        self.points.iter().filter(|p| p.method == method).collect()
    }
}

/// Average radar SINR (in dB) per SNR target and method, plus the SDR relaxation bound.
pub fn run_tradeoff(spec: &ExperimentSpec) -> TradeoffReport {
    let started = Instant::now();
    let grid = run_grid(spec, &spec.gamma_sweep_db);
    let mut points = Vec::new();
    for (p, &gamma_db) in spec.gamma_sweep_db.iter().enumerate() {
        for (m, cfg) in spec.methods.iter().enumerate() {
            let units = &grid[p][m];
            let sinr = |s: &InstanceSolution| Some(s.result.sinr_rad);
            points.push(tradeoff_point(cfg.method.name(), gamma_db, units, sinr));
            if cfg.method == Method::Sdr {
                points.push(tradeoff_point(SDR_BOUND_LABEL, gamma_db, units, |s| s.bound_sinr));
            }
        }
    }
    let runtime = RuntimeStats::collect(started, spec, |m| {
        grid.iter()
            .flat_map(|point| point[m].iter().filter_map(UnitOutcome::solution))
            .collect()
    });
    TradeoffReport { points, runtime }
}

fn tradeoff_point(
    label: &str,
    gamma_db: f64,
    units: &[UnitOutcome],
    value: impl Fn(&InstanceSolution) -> Option<f64>,
) -> TradeoffPoint {
    let mut samples_db = Vec::new();
    let (mut n_infeasible, mut n_failed) = (0, 0);
    for u in units {
        match u {
            UnitOutcome::Solved(s) => match value(s) {
                Some(v) if v > 0.0 && v.is_finite() => samples_db.push(linear_to_db(v)),
                _ => n_failed += 1,
            },
            UnitOutcome::Infeasible => n_infeasible += 1,
            UnitOutcome::Failed(_) => n_failed += 1,
        }
    }
    TradeoffPoint {
        method: label.to_string(),
        gamma_db,
        sinr_db: Summary::of(&samples_db),
        n_ok: samples_db.len(),
        samples_db,
        n_infeasible,
        n_failed,
    }
}

/// Null depth at one clutter angle: pattern there relative to the target direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NullDepth {
    pub angle_deg: f64,
    pub depth_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternMetrics {
    pub pslr_db: Option<f64>,
    pub width_3db_deg: Option<f64>,
    pub null_depths: Vec<NullDepth>,
}

/// Averaged transmit pattern and MVDR receive response of one method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodPattern {
    pub method: String,
    pub n_ok: usize,
    pub n_infeasible: usize,
    pub n_failed: usize,
    /// Peak-normalized, on the spec's angle grid; empty if no draw succeeded.
    pub tx_db: Vec<f64>,
    pub rx_db: Vec<f64>,
    pub tx_metrics: Option<PatternMetrics>,
    pub rx_metrics: Option<PatternMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeampatternReport {
    pub n_tx: usize,
    pub gamma_db: f64,
    pub angles_deg: Vec<f64>,
    pub methods: Vec<MethodPattern>,
    #[serde(skip)]
    pub runtime: RuntimeStats,
}

/// Transmit and receive patterns averaged over draws at the operating SNR target.
pub fn run_beampattern(spec: &ExperimentSpec) -> Result<BeampatternReport> {
    let started = Instant::now();
    let grid = run_grid(spec, &[spec.gamma_db]);
    let sc = &spec.scenario;
    let rad: Vec<f64> = spec.angle_grid_deg.iter().map(|d| d.to_radians()).collect();
    let mut methods = Vec::new();
    for (m, cfg) in spec.methods.iter().enumerate() {
        let units = &grid[0][m];
        let sols: Vec<&InstanceSolution> = units.iter().filter_map(UnitOutcome::solution).collect();
        let n_infeasible = units.iter().filter(|u| matches!(u, UnitOutcome::Infeasible)).count();
        let mut mp = MethodPattern {
            method: cfg.method.to_string(),
            n_ok: sols.len(),
            n_infeasible,
            n_failed: units.len() - sols.len() - n_infeasible,
            tx_db: Vec::new(),
            rx_db: Vec::new(),
            tx_metrics: None,
            rx_metrics: None,
        };
        if !sols.is_empty() {
            let xs: Vec<ComplexVector> = sols.iter().map(|s| s.result.x_opt.clone()).collect();
            let ws: Vec<ComplexVector> = sols.iter().map(|s| s.result.w_opt.clone()).collect();
            let tx = |angles: &[f64]| signal_model::transmit_beampattern(sc, &xs, angles);
            let rx = |angles: &[f64]| signal_model::receive_beampattern(sc, &ws, angles);
            mp.tx_db = normalize_db(&tx(&rad)?);
            mp.rx_db = normalize_db(&rx(&rad)?);
            mp.tx_metrics = Some(pattern_metrics(spec, &mp.tx_db, &tx)?);
            mp.rx_metrics = Some(pattern_metrics(spec, &mp.rx_db, &rx)?);
        }
        methods.push(mp);
    }
    let runtime = RuntimeStats::collect(started, spec, |m| {
        grid[0][m].iter().filter_map(UnitOutcome::solution).collect()
    });
    Ok(BeampatternReport {
        n_tx: sc.n_tx,
        gamma_db: spec.gamma_db,
        angles_deg: spec.angle_grid_deg.clone(),
        methods,
        runtime,
    })
}

/// PSLR and width on the grid; null depths evaluated exactly at the clutter angles.
fn pattern_metrics(
    spec: &ExperimentSpec,
    db: &[f64],
    eval: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
) -> Result<PatternMetrics> {
    let sc = &spec.scenario;
    let target_deg = sc.target_angle.to_degrees();
    let reference = eval(&[sc.target_angle])?[0];
    let at_clutter = eval(&sc.clutter_angles)?;
    let null_depths = sc
        .clutter_angles
        .iter()
        .zip(at_clutter)
        .map(|(a, p)| NullDepth {
            angle_deg: a.to_degrees(),
            depth_db: if reference > 0.0 {
                linear_to_db(p / reference).max(metrics::DB_FLOOR)
            } else {
                f64::NAN
            },
        })
        .collect();
    Ok(PatternMetrics {
        pslr_db: metrics::pslr_db(&spec.angle_grid_deg, db, target_deg),
        width_3db_deg: metrics::width_3db(&spec.angle_grid_deg, db, target_deg),
        null_depths,
    })
}

/// Communication user and eavesdropper symbol error rates at one SNR target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecurityPoint {
    pub method: String,
    pub gamma_db: f64,
    pub cu_errors: u64,
    pub eve_errors: u64,
    /// Decisions per receiver type: waveforms x users x noise trials.
    pub trials: u64,
    pub n_ok: usize,
}

impl SecurityPoint {
    pub fn cu_ser(&self) -> Option<f64> {
        (self.trials > 0).then(|| self.cu_errors as f64 / self.trials as f64)
    }

    pub fn eve_ser(&self) -> Option<f64> {
        (self.trials > 0).then(|| self.eve_errors as f64 / self.trials as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecurityReport {
    pub points: Vec<SecurityPoint>,
    #[serde(skip)]
    pub runtime: RuntimeStats,
}

/// Error counts `(cu, eve)` of one solved draw. The eavesdropper sits in the
/// target direction and observes `a_t(theta_0)^T x` plus noise; its decisions
/// are scored against every user's symbol.
pub fn link_errors(
    spec: &ExperimentSpec,
    sol: &InstanceSolution,
    symbols: &[PskSymbol],
    channels: &[ComplexVector],
    stream: (usize, usize, usize),
) -> (u64, u64) {
    let sc = &spec.scenario;
    let x = &sol.result.x_opt;
    let mut rng = unit_rng(spec.seed, StreamKind::Noise, stream.0, stream.1, stream.2);
    let eve_y = eavesdropper_observation(&signal_model::steering_tx(sc, sc.target_angle), x);
    let mut cu = 0;
    let mut eve = 0;
    for (k, (h, s)) in channels.iter().zip(symbols).enumerate() {
        cu += count_symbol_errors(&mut rng, h.dotc(x), s, sc.user_noise_vars[k], spec.noise_trials);
        eve += count_symbol_errors(&mut rng, eve_y, s, spec.eve_noise_var, spec.noise_trials);
    }
    (cu, eve)
}

/// CU and eavesdropper SER for every SNR target and method.
pub fn run_security_metrics(spec: &ExperimentSpec) -> Result<SecurityReport> {
    let started = Instant::now();
    let grid = run_grid(spec, &spec.gamma_sweep_db);
    let (n_m, n_d) = (spec.methods.len(), spec.n_draws());
    let counts: Vec<Option<(u64, u64)>> = (0..spec.gamma_sweep_db.len() * n_m * n_d)
        .into_par_iter()
        .map(|i| {
            let (p, m, d) = (i / (n_m * n_d), (i / n_d) % n_m, i % n_d);
            let sol = grid[p][m][d].solution()?;
            let (channels, symbols) = draw_instance(
                &spec.scenario,
                spec.seed,
                d / spec.n_symbol_draws,
                d % spec.n_symbol_draws,
            )
            .ok()?;
            Some(link_errors(spec, sol, &symbols, &channels, (p, m, d)))
        })
        .collect();
    let per_draw = (spec.scenario.n_users() * spec.noise_trials) as u64;
    let mut points = Vec::new();
    for (p, &gamma_db) in spec.gamma_sweep_db.iter().enumerate() {
        for (m, cfg) in spec.methods.iter().enumerate() {
            let mut pt = SecurityPoint {
                method: cfg.method.to_string(),
                gamma_db,
                cu_errors: 0,
                eve_errors: 0,
                trials: 0,
                n_ok: 0,
            };
            for (cu, eve) in counts[(p * n_m + m) * n_d..][..n_d].iter().flatten() {
                pt.cu_errors += cu;
                pt.eve_errors += eve;
                pt.trials += per_draw;
                pt.n_ok += 1;
            }
            points.push(pt);
        }
    }
    let runtime = RuntimeStats::collect(started, spec, |m| {
        grid.iter()
            .flat_map(|point| point[m].iter().filter_map(UnitOutcome::solution))
            .collect()
    });
    Ok(SecurityReport { points, runtime })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ConfigFile;

    fn small_spec() -> ExperimentSpec {
        let mut cfg = ConfigFile::default();
        cfg.seed = 3;
        cfg.scenario.n_tx = 4;
        cfg.scenario.n_rx = 4;
        cfg.scenario.n_users = 2;
        cfg.experiment.gamma_sweep_db = vec![10.0, 20.0];
        cfg.experiment.n_channel_draws = 3;
        cfg.experiment.n_symbol_draws = 2;
        cfg.experiment.noise_trials = 200;
        cfg.experiment.angle_step_deg = 1.0;
        cfg.to_spec().unwrap()
    }

    #[test]
    fn summary_statistics() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.stderr - (5.0f64 / 12.0).sqrt()).abs() < 1e-12);
        assert_eq!(Summary::of(&[7.0]).unwrap().stderr, 0.0);
        assert!(Summary::of(&[]).is_none());
    }

    #[test]
    fn single_draw_average_is_that_run() {
        let mut spec = small_spec();
        spec.n_channel_draws = 1;
        spec.n_symbol_draws = 1;
        spec.gamma_sweep_db = vec![15.0];
        spec.methods.truncate(1);
        let report = run_tradeoff(&spec);
        let (h, s) = draw_instance(&spec.scenario, spec.seed, 0, 0).unwrap();
        let cfg = SolverConfig {
            rng_seed: solver_seed(spec.seed, 0, 0, 0),
            ..spec.methods[0].clone()
        };
        let direct = solve_instance(&spec.scenario, &cfg, 15.0, &h, &s).unwrap();
        let point = &report.points[0];
        assert_eq!(point.n_ok, 1);
        assert_eq!(point.sinr_db.unwrap().mean, linear_to_db(direct.result.sinr_rad));
    }

    #[test]
    fn tradeoff_layout_and_bound() {
        let spec = small_spec();
        let report = run_tradeoff(&spec);
        // sca, sq, sdr, sdr_bound at each of the two targets
        assert_eq!(report.points.len(), 8);
        for p in &report.points {
            assert_eq!(p.n_ok + p.n_infeasible + p.n_failed, spec.n_draws());
            assert_eq!(p.is_flagged(), p.sinr_db.is_none());
        }
        for g in &spec.gamma_sweep_db {
            let at = |m: &str| {
                report
                    .points
                    .iter()
                    .find(|p| p.method == m && p.gamma_db == *g)
                    .unwrap()
            };
            let (sdr, bound) = (at("sdr"), at(SDR_BOUND_LABEL));
            for (a, b) in sdr.samples_db.iter().zip(&bound.samples_db) {
                assert!(b >= &(a - 1e-6));
            }
        }
    }

    #[test]
    fn infeasible_targets_are_flagged_not_fabricated() {
        let mut spec = small_spec();
        spec.gamma_sweep_db = vec![80.0];
        let report = run_tradeoff(&spec);
        assert!(report
            .points
            .iter()
            .all(|p| p.is_flagged() && p.n_infeasible == spec.n_draws()));
    }

    #[test]
    fn beampattern_without_users_peaks_at_target() {
        let mut spec = small_spec();
        spec.scenario = spec.scenario.clone().with_users(0).without_clutter();
        spec.methods.truncate(1);
        let report = run_beampattern(&spec).unwrap();
        let mp = &report.methods[0];
        let peak = mp.tx_db.iter().position(|&v| v == 0.0).unwrap();
        assert_eq!(report.angles_deg[peak], 0.0);
        assert!(mp.tx_metrics.as_ref().unwrap().width_3db_deg.is_some());
    }

    #[test]
    fn security_counts_are_consistent() {
        let spec = small_spec();
        let report = run_security_metrics(&spec).unwrap();
        assert_eq!(report.points.len(), 6);
        for p in &report.points {
            assert_eq!(p.trials, (p.n_ok * 2 * 200) as u64);
            if p.n_ok > 0 {
                let (cu, eve) = (p.cu_ser().unwrap(), p.eve_ser().unwrap());
                assert!((0.0..=1.0).contains(&cu) && (0.0..=1.0).contains(&eve));
            }
        }
    }

    #[test]
    fn experiments_are_deterministic() {
        let spec = small_spec();
        assert_eq!(run_tradeoff(&spec).points, run_tradeoff(&spec).points);
        assert_eq!(
            run_security_metrics(&spec).unwrap().points,
            run_security_metrics(&spec).unwrap().points
        );
    }
}
