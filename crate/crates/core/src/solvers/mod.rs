//! The three waveform designs: SCA (conditional gradient on the true SINR),
//! SQ (sequential concave QCQP with the `Phi - lambda I` shift) and SDR
//! (lifted relaxation with Gaussian randomization). All three return a
//! CI- and power-feasible waveform, its MVDR filter and a per-iteration trace.

mod sca;
mod sdr;
mod sq;

pub use sca::{sca_initialize, sca_solve};
pub use sdr::{principal_waveform, sdr_solve, SdrResult, RANK_ONE_RATIO};
pub use sq::sq_solve;

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::ci::{check_feasible, CiConstraintSet};
use crate::convex_kernel::FeasibleRegion;
use crate::error::{DfrcError, Result};
use crate::numerics::ComplexVector;
use crate::signal_model::{self, Scenario};

/// Default relative tolerance of the barrier subproblems.
pub const SUBPROBLEM_TOL: f64 = 1e-10;
/// Default tolerance of the lifted relaxation.
pub const SDP_TOL: f64 = 1e-6;
/// SQ and SDR stop once the SINR changes by less than this, relatively.
pub const OUTER_REL_TOL: f64 = 1e-6;
pub const ARMIJO_SHRINK: f64 = 0.5;
pub const ARMIJO_SLOPE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sq,
    Sdr,
    Sca,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Sq, Method::Sdr, Method::Sca];

    pub fn name(self) -> &'static str {
        match self {
            Method::Sq => "sq",
            Method::Sdr => "sdr",
            Method::Sca => "sca",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = DfrcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sq" => Ok(Method::Sq),
            "sdr" => Ok(Method::Sdr),
            "sca" => Ok(Method::Sca),
            other => Err(DfrcError::Config(format!(
                "unknown method '{other}' (expected sq, sdr or sca)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineSearch {
    /// Endpoint search on the fixed-`Phi` quadratic; `Phi` refreshed only
    /// after the inner loop converges.
    ExactFixedPhi,
    /// Backtracking on the true objective with `Phi` refreshed every iteration.
    Armijo,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// Maximize `sum_p Re(x_p)` over the feasible set.
    SumOfReals,
    Custom(ComplexVector),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    pub max_outer_iters: usize,
    pub conv_tol: f64,
    pub linesearch: LineSearch,
    pub randomization_samples: usize,
    pub rng_seed: u64,
    pub init: Init,
    /// SQ uses `lambda = sq_lambda_scale * lambda_max(Phi)`.
    pub sq_lambda_scale: f64,
    pub subproblem_tol: f64,
}

impl SolverConfig {
    pub fn new(method: Method) -> Self {
        SolverConfig {
            method,
            max_outer_iters: 200,
            conv_tol: 1e-5,
            linesearch: LineSearch::Armijo,
            randomization_samples: 100,
            rng_seed: 0,
            init: Init::SumOfReals,
            sq_lambda_scale: 1.0,
            subproblem_tol: SUBPROBLEM_TOL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.conv_tol > 0.0 && self.conv_tol.is_finite()) {
            return Err(DfrcError::Config(format!(
                "conv_tol must be positive, got {}",
                self.conv_tol
            )));
        }
        if self.max_outer_iters == 0 {
            return Err(DfrcError::Config("max_outer_iters must be at least 1".into()));
        }
        if self.randomization_samples == 0 {
            return Err(DfrcError::Config("randomization_samples must be at least 1".into()));
        }
        if !(self.sq_lambda_scale >= 1.0 && self.sq_lambda_scale.is_finite()) {
            return Err(DfrcError::Config("sq_lambda_scale must be finite and >= 1".into()));
        }
        if !(self.subproblem_tol > 0.0 && self.subproblem_tol < 1.0) {
            return Err(DfrcError::Config("subproblem_tol must lie in (0, 1)".into()));
        }
        Ok(())
    }

    fn expect(&self, method: Method) -> Result<()> {
        self.validate()?;
        if self.method != method {
            return Err(DfrcError::Contract(format!(
                "{method} solver called with a {} configuration",
                self.method
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Converged,
    IterCap,
    Stalled,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub iteration: usize,
    /// `-x^H Phi(x) x` at the iterate entering this iteration (SCA) or produced by it (SQ, SDR).
    pub objective: f64,
    /// `mu x^H Phi(x) x`, linear.
    pub sinr: f64,
    /// SCA: duality gap `g`. SQ and SDR: relative objective change.
    pub gap: f64,
    pub step: f64,
    pub min_margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub method: Method,
    pub x_opt: ComplexVector,
    pub w_opt: ComplexVector,
    /// `mu x^H Phi(x) x`, linear.
    pub sinr_rad: f64,
    pub trace: Vec<TraceEntry>,
    pub status: SolverStatus,
    pub iterations: usize,
    pub wall_time: f64,
}

impl SolverResult {
    pub fn sinr_db(&self) -> f64 {
        signal_model::linear_to_db(self.sinr_rad)
    }

    pub fn is_feasible_status(&self) -> bool {
        matches!(self.status, SolverStatus::Converged | SolverStatus::IterCap)
    }

    fn infeasible(method: Method, scenario: &Scenario, started: Instant) -> Self {
        SolverResult {
            method,
            x_opt: ComplexVector::zeros(scenario.n_tx),
            w_opt: ComplexVector::zeros(scenario.n_rx),
            sinr_rad: 0.0,
            trace: Vec::new(),
            status: SolverStatus::Infeasible,
            iterations: 0,
            wall_time: started.elapsed().as_secs_f64(),
        }
    }
}

/// Shared front matter: validates inputs and runs Phase 1.
/// `Ok(None)` means the CI region is infeasible.
fn prepare(scenario: &Scenario, cs: &CiConstraintSet) -> Result<Option<FeasibleRegion>> {
    scenario.validate()?;
    if cs.n_users() != scenario.n_users() {
        return Err(DfrcError::Dimension {
            expected: scenario.n_users(),
            got: cs.n_users(),
            context: "constraint set users",
        });
    }
    match FeasibleRegion::new(cs, scenario.n_tx) {
        Ok(region) => Ok(Some(region)),
        Err(DfrcError::Infeasible { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn initial_point(cfg: &SolverConfig, region: &FeasibleRegion, cs: &CiConstraintSet) -> Result<ComplexVector> {
    match &cfg.init {
        Init::SumOfReals => sum_of_reals_point(region, cfg.subproblem_tol),
        Init::Custom(x) => {
            if !check_feasible(cs, x).feasible {
                return Err(DfrcError::Contract("custom initial point is not feasible".into()));
            }
            Ok(x.clone())
        }
    }
}

fn sum_of_reals_point(region: &FeasibleRegion, tol: f64) -> Result<ComplexVector> {
    let c = ComplexVector::from_element(region.n_tx(), num_complex::Complex64::new(-1.0, 0.0));
    region.minimize_linear(&c, tol)
}

fn min_margin(cs: &CiConstraintSet, x: &ComplexVector) -> f64 {
    check_feasible(cs, x).min_user_margin()
}

fn attach_iteration(e: DfrcError, iteration: usize) -> DfrcError {
    match e {
        DfrcError::Numeric {
            routine,
            detail,
            residual,
        } => DfrcError::Numeric {
            routine,
            detail: format!("{detail} (outer iteration {iteration})"),
            residual,
        },
        other => other,
    }
}

#[cfg(test)]
mod tests;
