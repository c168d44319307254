use nalgebra::{DMatrix, DVector};

use super::barrier::{BarrierProblem, BarrierSolution};
use crate::ci::{CiConstraintSet, HalfSpace};
use crate::error::{DfrcError, Result};
use crate::numerics::{self, ComplexMatrix, ComplexVector};

/// CI half-spaces intersected with the power ball, in `[Re x; Im x]`
/// coordinates, together with a strictly feasible point found by Phase 1.
#[derive(Debug, Clone)]
pub struct FeasibleRegion {
    n: usize,
    halfspaces: Vec<HalfSpace>,
    radius_sq: f64,
    interior: DVector<f64>,
}

impl FeasibleRegion {
    /// Runs Phase 1 (maximize the smallest CI slack inside the ball).
    pub fn new(cs: &CiConstraintSet, n_tx: usize) -> Result<Self> {
        if let Some(d) = cs.dim() {
            if d != n_tx {
                return Err(DfrcError::Dimension {
                    expected: n_tx,
                    got: d,
                    context: "constraint set dimension",
                });
            }
        }
        if !(cs.power_budget > 0.0 && cs.power_budget.is_finite()) {
            return Err(DfrcError::Contract("power budget must be positive".into()));
        }
        let halfspaces = cs.halfspaces();
        let interior = phase_one(&halfspaces, 2 * n_tx, cs.power_budget)?;
        Ok(FeasibleRegion {
            n: n_tx,
            halfspaces,
            radius_sq: cs.power_budget,
            interior,
        })
    }

    pub fn n_tx(&self) -> usize {
        self.n
    }

    pub fn halfspaces(&self) -> &[HalfSpace] {
        &self.halfspaces
    }

    pub fn power_budget(&self) -> f64 {
        self.radius_sq
    }

    /// The strictly feasible Phase-1 point.
    pub fn interior_point(&self) -> ComplexVector {
        numerics::from_real(&self.interior)
    }

    fn problem(&self, h: Option<DMatrix<f64>>, c: DVector<f64>) -> BarrierProblem {
        BarrierProblem {
            h,
            c,
            a: self.halfspaces.iter().map(|h| h.normal.clone()).collect(),
            b: self.halfspaces.iter().map(|h| h.offset).collect(),
            ball_dims: 2 * self.n,
            radius_sq: self.radius_sq,
        }
    }

    fn run(&self, h: Option<DMatrix<f64>>, c: DVector<f64>, tol: f64) -> Result<BarrierSolution> {
        self.problem(h, c).solve(self.interior.clone(), tol, None)
    }

    /// `argmin Re(c^H x)` over the region.
    pub fn minimize_linear(&self, c: &ComplexVector, tol: f64) -> Result<ComplexVector> {
        self.check_dim(c.len())?;
        if c.iter().all(|v| v.norm() == 0.0) {
            return Ok(self.interior_point());
        }
        Ok(numerics::from_real(&self.run(None, numerics::to_real(c), tol)?.z))
    }

    /// `argmax x^H q x` over the region for negative semidefinite `q`.
    pub fn maximize_concave_quadratic(&self, q: &ComplexMatrix, tol: f64) -> Result<ComplexVector> {
        self.check_dim(q.nrows())?;
        let h = numerics::real_form(q) * -2.0;
        if h.amax() == 0.0 {
            return Ok(self.interior_point());
        }
        let sol = self.run(Some(h), DVector::zeros(2 * self.n), tol)?;
        Ok(numerics::from_real(&sol.z))
    }

    /// Euclidean projection of `x` onto the region.
    pub fn project(&self, x: &ComplexVector, tol: f64) -> Result<ComplexVector> {
        self.check_dim(x.len())?;
        let xi = numerics::to_real(x);
        let h = DMatrix::identity(2 * self.n, 2 * self.n) * 2.0;
        let sol = self.run(Some(h), xi * -2.0, tol)?;
        Ok(numerics::from_real(&sol.z))
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.n {
            return Err(DfrcError::Dimension {
                expected: self.n,
                got,
                context: "waveform length",
            });
        }
        Ok(())
    }
}

/// Maximizes `sigma` subject to `slack_j >= sigma` and the ball, stopping once
/// the point is comfortably interior.
fn phase_one(halfspaces: &[HalfSpace], dim: usize, radius_sq: f64) -> Result<DVector<f64>> {
    if halfspaces.is_empty() {
        return Ok(DVector::zeros(dim));
    }
    let a: Vec<DVector<f64>> = halfspaces
        .iter()
        .map(|h| {
            let mut row = DVector::zeros(dim + 1);
            row.rows_mut(0, dim).copy_from(&h.normal);
            row[dim] = 1.0;
            row
        })
        .collect();
    let b: Vec<f64> = halfspaces.iter().map(|h| h.offset).collect();
    let min_b = b.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut c = DVector::zeros(dim + 1);
    c[dim] = -1.0;
    let problem = BarrierProblem {
        h: None,
        c,
        a,
        b,
        ball_dims: dim,
        radius_sq,
    };
    let mut start = DVector::zeros(dim + 1);
    start[dim] = min_b - 1.0;
    let interior_enough = |z: &DVector<f64>, gap: f64| {
        let sigma = z[dim];
        sigma > 0.0 && sigma >= 0.5 * (sigma + gap)
    };
    let sol = problem.solve(start, 1e-12, Some(&interior_enough))?;
    let sigma = sol.z[dim];
    let xi = sol.z.rows(0, dim).into_owned();
    if sigma > 0.0 {
        return Ok(xi);
    }
    let worst = halfspaces
        .iter()
        .min_by(|p, q| p.slack(&xi).total_cmp(&q.slack(&xi)))
        .map(|h| h.user)
        .unwrap_or(0);
    // A best common slack in [-1e-7, 0] leaves no interior; reported the same way.
    Err(DfrcError::Infeasible {
        user: worst,
        best_margin: sigma,
    })
}
