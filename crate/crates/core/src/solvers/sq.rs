use num_complex::Complex64;
use std::time::Instant;

use super::{
    attach_iteration, initial_point, min_margin, prepare, Method, SolverConfig, SolverResult, SolverStatus, TraceEntry,
    OUTER_REL_TOL,
};
use crate::ci::CiConstraintSet;
use crate::error::Result;
use crate::numerics::{self, ComplexMatrix};
use crate::signal_model::{self, Scenario};

/// Sequential QCQP. With `Phi` frozen at the current waveform, the inner
/// problem maximizes `x^H (Phi - lambda I) x` over the feasible set, where
/// `lambda >= lambda_max(Phi)` makes it concave. Because `||x||^2` is not
/// constant on the set this only relaxes the fixed-`Phi` problem; the inner
/// maximizer typically does not use the full power budget.
pub fn sq_solve(scenario: &Scenario, cs: &CiConstraintSet, cfg: &SolverConfig) -> Result<SolverResult> {
    let started = Instant::now();
    cfg.expect(Method::Sq)?;
    let Some(region) = prepare(scenario, cs)? else {
        return Ok(SolverResult::infeasible(Method::Sq, scenario, started));
    };
    let mu = scenario.mu();
    let n = scenario.n_tx;
    let mut x = initial_point(cfg, &region, cs)?;
    let mut value = signal_model::sinr_objective(scenario, &x)?;
    let mut trace = Vec::new();
    let mut status = SolverStatus::IterCap;

    for m in 1..=cfg.max_outer_iters {
        let phi = signal_model::sinr_matrix(scenario, &x)?;
        let lambda = cfg.sq_lambda_scale * numerics::herm_eig(&phi)?.max_eigenvalue();
        let q = numerics::hermitize(&(phi - ComplexMatrix::identity(n, n) * Complex64::from(lambda)));
        let next = region
            .maximize_concave_quadratic(&q, cfg.subproblem_tol)
            .map_err(|e| attach_iteration(e, m))?;
        let next_value = signal_model::sinr_objective(scenario, &next)?;
        let change = (next_value - value).abs() / value.abs().max(numerics::ABS_FLOOR);
        x = next;
        value = next_value;
        trace.push(TraceEntry {
            iteration: m,
            objective: -value,
            sinr: mu * value,
            gap: change,
            step: 1.0,
            min_margin: min_margin(cs, &x),
        });
        if change < OUTER_REL_TOL {
            status = SolverStatus::Converged;
            break;
        }
    }

    let w = signal_model::mvdr_beamformer(scenario, &x)?;
    Ok(SolverResult {
        method: Method::Sq,
        iterations: trace.len(),
        x_opt: x,
        w_opt: w,
        sinr_rad: mu * value,
        trace,
        status,
        wall_time: started.elapsed().as_secs_f64(),
    })
}
