//! Convex subproblems over the CI region: linear minimization, concave
//! quadratic maximization, the semidefinite relaxation with Gaussian
//! randomization, and the line searches used by the outer solvers.

mod barrier;
mod linesearch;
mod nnqp;
mod randomization;
mod region;
mod sdp;

pub(crate) use linesearch::armijo_from;
pub use linesearch::{
    armijo_linesearch_true_objective, exact_linesearch_fixed_phi, step_point, true_objective, ArmijoOutcome,
    ARMIJO_FLOOR,
};
pub use randomization::{gaussian_randomization, randomize_with_region, restore_feasibility, scale_to_budget};
pub use region::FeasibleRegion;
pub use sdp::{solve_sdr, SdpSolution, SDP_MAX_ITERS, SDP_MAX_TX};

use crate::ci::CiConstraintSet;
use crate::error::{DfrcError, Result};
use crate::numerics::{self, ComplexMatrix, ComplexVector};

/// `minimize Re(c^H x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearObjective {
    pub c: ComplexVector,
}

impl LinearObjective {
    pub fn new(c: ComplexVector) -> Result<Self> {
        if !numerics::all_finite_vec(&c) {
            return Err(DfrcError::Contract("linear objective has non-finite entries".into()));
        }
        Ok(LinearObjective { c })
    }

    pub fn value(&self, x: &ComplexVector) -> f64 {
        self.c.dotc(x).re
    }
}

pub fn solve_linear_over_ci(objective: &LinearObjective, cs: &CiConstraintSet, tol: f64) -> Result<ComplexVector> {
    FeasibleRegion::new(cs, objective.c.len())?.minimize_linear(&objective.c, tol)
}

/// Maximizes `x^H q x` for negative semidefinite `q`.
pub fn solve_concave_qp_over_ci(q: &ComplexMatrix, cs: &CiConstraintSet, tol: f64) -> Result<ComplexVector> {
    check_nsd(q)?;
    FeasibleRegion::new(cs, q.nrows())?.maximize_concave_quadratic(q, tol)
}

pub(crate) fn check_nsd(q: &ComplexMatrix) -> Result<()> {
    numerics::check_hermitian(q, "solve_concave_qp_over_ci")?;
    let eig = numerics::herm_eig(q)?;
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs())).max(1.0);
    if eig.max_eigenvalue() > 1e-10 * scale {
        return Err(DfrcError::Contract(format!(
            "quadratic form is not negative semidefinite (largest eigenvalue {:.3e})",
            eig.max_eigenvalue()
        )));
    }
    Ok(())
}
