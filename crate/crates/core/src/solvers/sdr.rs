use std::time::Instant;

use super::{
    attach_iteration, initial_point, min_margin, prepare, Method, SolverConfig, SolverResult, SolverStatus, TraceEntry,
    OUTER_REL_TOL, SDP_TOL,
};
use crate::ci::{check_feasible, CiConstraintSet};
use crate::convex_kernel::{randomize_with_region, restore_feasibility, solve_sdr, FeasibleRegion, SdpSolution};
use crate::error::{DfrcError, Result};
use crate::numerics::{self, ComplexMatrix, ComplexVector};
use crate::signal_model::{self, Scenario};

/// Top-eigenvalue share of the `X` block above which the relaxation is read as rank one.
pub const RANK_ONE_RATIO: f64 = 0.999;

#[derive(Debug, Clone)]
pub struct SdrResult {
    pub result: SolverResult,
    /// Certified bound on `x^H Phi x` for the last relaxation solved (no `mu`).
    pub upper_bound: f64,
    /// The `Phi` at which `upper_bound` holds.
    pub bound_sinr_matrix: ComplexMatrix,
    /// Whether the last relaxation was rank one (no randomization needed).
    pub rank_one: bool,
}

impl SdrResult {
    /// `mu * upper_bound`, comparable to `SolverResult::sinr_rad`.
    pub fn bound_sinr(&self, scenario: &Scenario) -> f64 {
        scenario.mu() * self.upper_bound
    }
}

/// Sequential semidefinite relaxation: with `Phi` frozen, solve the lifted
/// problem, extract a waveform (principal eigenvector when the solution is
/// rank one, Gaussian randomization otherwise) and refresh `Phi`.
pub fn sdr_solve(scenario: &Scenario, cs: &CiConstraintSet, cfg: &SolverConfig) -> Result<SdrResult> {
    let started = Instant::now();
    cfg.expect(Method::Sdr)?;
    let Some(region) = prepare(scenario, cs)? else {
        return Ok(SdrResult {
            result: SolverResult::infeasible(Method::Sdr, scenario, started),
            upper_bound: f64::NAN,
            bound_sinr_matrix: ComplexMatrix::zeros(scenario.n_tx, scenario.n_tx),
            rank_one: false,
        });
    };
    let mu = scenario.mu();
    let mut x = initial_point(cfg, &region, cs)?;
    let mut value = signal_model::sinr_objective(scenario, &x)?;
    let mut trace = Vec::new();
    let mut status = SolverStatus::IterCap;
    let mut bound = f64::NAN;
    let mut bound_phi = ComplexMatrix::zeros(scenario.n_tx, scenario.n_tx);
    let mut rank_one = false;

    for m in 1..=cfg.max_outer_iters {
        let phi = signal_model::sinr_matrix(scenario, &x)?;
        let sol = solve_sdr(&phi, cs, SDP_TOL).map_err(|e| attach_iteration(e, m))?;
        bound = sol.upper_bound;
        bound_phi = phi;
        let extracted = match extract(&sol, cs, &region, cfg, m) {
            Ok((candidate, r1)) => {
                rank_one = r1;
                candidate
            }
            Err(DfrcError::RandomizationFailed { .. }) => {
                status = SolverStatus::Stalled;
                break;
            }
            Err(e) => return Err(attach_iteration(e, m)),
        };
        let next_value = signal_model::sinr_objective(scenario, &extracted)?;
        let change = (next_value - value) / value.abs().max(numerics::ABS_FLOOR);
        let improved = next_value > value;
        if improved {
            x = extracted;
            value = next_value;
        }
        trace.push(TraceEntry {
            iteration: m,
            objective: -value,
            sinr: mu * value,
            gap: change,
            step: if improved { 1.0 } else { 0.0 },
            min_margin: min_margin(cs, &x),
        });
        if change < OUTER_REL_TOL {
            status = SolverStatus::Converged;
            break;
        }
    }

    let w = signal_model::mvdr_beamformer(scenario, &x)?;
    Ok(SdrResult {
        result: SolverResult {
            method: Method::Sdr,
            iterations: trace.len(),
            x_opt: x,
            w_opt: w,
            sinr_rad: mu * value,
            trace,
            status,
            wall_time: started.elapsed().as_secs_f64(),
        },
        upper_bound: bound,
        bound_sinr_matrix: bound_phi,
        rank_one,
    })
}

/// Rank-one read-out when the relaxation is tight, randomization otherwise.
fn extract(
    sol: &SdpSolution,
    cs: &CiConstraintSet,
    region: &FeasibleRegion,
    cfg: &SolverConfig,
    iteration: usize,
) -> Result<(ComplexVector, bool)> {
    if sol.rank_one_ratio()? > RANK_ONE_RATIO {
        let candidate = principal_waveform(sol)?;
        let repaired = if check_feasible(cs, &candidate).feasible {
            candidate
        } else {
            restore_feasibility(region, cs, &candidate)?
        };
        return Ok((repaired, true));
    }
    let seed = cfg.rng_seed.wrapping_add(iteration as u64);
    Ok((
        randomize_with_region(sol, cs, region, cfg.randomization_samples, seed)?,
        false,
    ))
}

/// Principal eigenvector of `X~`, normalized so that its last entry is one.
pub fn principal_waveform(sol: &SdpSolution) -> Result<ComplexVector> {
    let n = sol.n_tx();
    let eig = numerics::herm_eig(&numerics::hermitize(&sol.x_tilde))?;
    let v = eig.eigenvectors.column(0);
    let last = v[n];
    if last.norm() <= numerics::ABS_FLOOR {
        return Err(DfrcError::Degenerate(
            "principal eigenvector has no unit component".into(),
        ));
    }
    Ok(ComplexVector::from_fn(n, |i, _| v[i] / last))
}
