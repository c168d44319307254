use num_complex::Complex64;
use std::time::Instant;

use super::{
    attach_iteration, initial_point, min_margin, prepare, sum_of_reals_point, LineSearch, Method, SolverConfig,
    SolverResult, SolverStatus, TraceEntry, ARMIJO_SHRINK, ARMIJO_SLOPE,
};
use crate::ci::CiConstraintSet;
use crate::convex_kernel::{armijo_from, exact_linesearch_fixed_phi, step_point, FeasibleRegion};
use crate::error::Result;
use crate::numerics::{self, ComplexVector};
use crate::signal_model::{self, Scenario};

/// Default starting point: `argmax sum_p Re(x_p)` over the CI region and power ball.
pub fn sca_initialize(cs: &CiConstraintSet, n_tx: usize) -> Result<ComplexVector> {
    let region = FeasibleRegion::new(cs, n_tx)?;
    sum_of_reals_point(&region, super::SUBPROBLEM_TOL)
}

/// Successive convex approximation. Each iteration linearizes
/// `f(x) = -x^H Phi x` at the current point with gradient `-2 Phi x`, solves
/// the linear program over the feasible set for `x*`, and steps along
/// `x* - x`. The duality gap `g = Re(grad^H (x* - x))` is the stopping measure.
pub fn sca_solve(scenario: &Scenario, cs: &CiConstraintSet, cfg: &SolverConfig) -> Result<SolverResult> {
    let started = Instant::now();
    cfg.expect(Method::Sca)?;
    let Some(region) = prepare(scenario, cs)? else {
        return Ok(SolverResult::infeasible(Method::Sca, scenario, started));
    };
    let mu = scenario.mu();
    let mut x = initial_point(cfg, &region, cs)?;
    let mut phi = signal_model::sinr_matrix(scenario, &x)?;
    let mut phi_fresh = true;
    // Whether `phi` was evaluated at the current `x`.
    let mut phi_at_x = true;
    let mut f = -numerics::quad_form(&phi, &x);
    let mut trace = Vec::new();
    let mut status = SolverStatus::IterCap;

    for m in 1..=cfg.max_outer_iters {
        if !phi_fresh {
            phi = signal_model::sinr_matrix(scenario, &x)?;
            if cfg.linesearch == LineSearch::ExactFixedPhi {
                f = -numerics::quad_form(&phi, &x);
            }
            phi_fresh = true;
            phi_at_x = true;
        }
        let grad = &phi * &x * Complex64::from(-2.0);
        let target = region
            .minimize_linear(&grad, cfg.subproblem_tol)
            .map_err(|e| attach_iteration(e, m))?;
        let d = &target - &x;
        let g = grad.dotc(&d).re;
        let mut entry = TraceEntry {
            iteration: m,
            objective: f,
            sinr: -mu * f,
            gap: g,
            step: 0.0,
            min_margin: min_margin(cs, &x),
        };
        if g.abs() < cfg.conv_tol {
            match cfg.linesearch {
                LineSearch::Armijo => {
                    trace.push(entry);
                    status = SolverStatus::Converged;
                    break;
                }
                LineSearch::ExactFixedPhi => {
                    // Converged on this Phi; done only if Phi was evaluated here.
                    trace.push(entry);
                    if phi_at_x {
                        status = SolverStatus::Converged;
                        break;
                    }
                    phi_fresh = false;
                    continue;
                }
            }
        }
        match cfg.linesearch {
            LineSearch::Armijo => {
                let outcome = armijo_from(scenario, &x, &d, ARMIJO_SHRINK, ARMIJO_SLOPE, mu * f)?;
                entry.step = outcome.step;
                trace.push(entry);
                if outcome.stalled {
                    status = SolverStatus::Stalled;
                    break;
                }
                x = step_point(&x, &d, outcome.step);
                f = outcome.objective / mu;
                phi_fresh = false;
            }
            LineSearch::ExactFixedPhi => {
                let t = exact_linesearch_fixed_phi(&phi, &x, &d);
                entry.step = t;
                trace.push(entry);
                if t == 0.0 {
                    if phi_at_x {
                        status = SolverStatus::Stalled;
                        break;
                    }
                    phi_fresh = false;
                    continue;
                }
                x = step_point(&x, &d, t);
                f = -numerics::quad_form(&phi, &x);
                phi_at_x = false;
            }
        }
    }

    let w = signal_model::mvdr_beamformer(scenario, &x)?;
    let sinr = mu * signal_model::sinr_objective(scenario, &x)?;
    Ok(SolverResult {
        method: Method::Sca,
        iterations: trace.len(),
        x_opt: x,
        w_opt: w,
        sinr_rad: sinr,
        trace,
        status,
        wall_time: started.elapsed().as_secs_f64(),
    })
}
