//! Log-barrier interior-point method for
//!
//! ```text
//! minimize   1/2 z^T H z + c^T z
//! subject to a_j^T z <= b_j           (rows of A)
//!            ||z[..ball_dims]||^2 <= r2
//! ```
//!
//! with `H` positive semidefinite. Each centering step is a damped Newton
//! iteration with a dense Cholesky solve, so one step costs `O(d^3)`. The
//! surrogate duality gap `m / t` certifies the returned objective.

use nalgebra::{DMatrix, DVector};

use crate::error::{DfrcError, Result};

const MU_GROWTH: f64 = 20.0;
const MAX_NEWTON_STEPS: usize = 2000;
const CENTERING_TOL: f64 = 1e-9;
const ARMIJO_SLOPE: f64 = 0.01;
const BACKTRACK: f64 = 0.5;

#[derive(Debug, Clone)]
pub(crate) struct BarrierProblem {
    pub h: Option<DMatrix<f64>>,
    pub c: DVector<f64>,
    pub a: Vec<DVector<f64>>,
    pub b: Vec<f64>,
    pub ball_dims: usize,
    pub radius_sq: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct BarrierSolution {
    pub z: DVector<f64>,
    /// Upper bound on `objective(z) - optimum`.
    #[cfg_attr(not(test), allow(dead_code))]
    pub gap: f64,
}

/// Decides after each centering whether to stop early.
pub(crate) type EarlyStop<'a> = &'a dyn Fn(&DVector<f64>, f64) -> bool;

impl BarrierProblem {
    pub fn dim(&self) -> usize {
        self.c.len()
    }

    fn n_constraints(&self) -> usize {
        self.a.len() + 1
    }

    pub fn objective(&self, z: &DVector<f64>) -> f64 {
        let lin = self.c.dot(z);
        match &self.h {
            Some(h) => 0.5 * z.dot(&(h * z)) + lin,
            None => lin,
        }
    }

    /// Slacks of all constraints (ball last); `None` if any is not strictly positive.
    fn slacks(&self, z: &DVector<f64>) -> Option<(Vec<f64>, f64)> {
        let s: Vec<f64> = self.a.iter().zip(&self.b).map(|(a, b)| b - a.dot(z)).collect();
        let s0 = self.radius_sq - z.rows(0, self.ball_dims).norm_squared();
        if s.iter().all(|v| *v > 0.0) && s0 > 0.0 {
            Some((s, s0))
        } else {
            None
        }
    }

    fn barrier_value(&self, z: &DVector<f64>, t: f64) -> Option<f64> {
        let (s, s0) = self.slacks(z)?;
        Some(t * self.objective(z) - s.iter().map(|v| v.ln()).sum::<f64>() - s0.ln())
    }

    pub fn strictly_feasible(&self, z: &DVector<f64>) -> bool {
        self.slacks(z).is_some()
    }

    /// Runs the barrier method from a strictly feasible `start` until
    /// `m / t <= tol * (1 + |f|)` or `early_stop` fires.
    pub fn solve(&self, start: DVector<f64>, tol: f64, early_stop: Option<EarlyStop>) -> Result<BarrierSolution> {
        let d = self.dim();
        if start.len() != d {
            return Err(DfrcError::Dimension {
                expected: d,
                got: start.len(),
                context: "barrier start point",
            });
        }
        if !self.strictly_feasible(&start) {
            return Err(DfrcError::Contract(
                "barrier start point is not strictly feasible".into(),
            ));
        }
        let m = self.n_constraints() as f64;
        let mut z = start;
        let mut t = self.initial_t(&z, m);
        let mut steps = 0usize;
        loop {
            let (taken, centered) = self.center(&mut z, t, MAX_NEWTON_STEPS.saturating_sub(steps))?;
            steps += taken;
            // `m / t` bounds the gap only at a central point.
            let gap = m / t;
            if centered
                && (gap <= tol * (1.0 + self.objective(&z).abs()) || early_stop.is_some_and(|stop| stop(&z, gap)))
            {
                return Ok(BarrierSolution { z, gap });
            }
            if steps >= MAX_NEWTON_STEPS {
                return Err(DfrcError::Numeric {
                    routine: "barrier",
                    detail: format!("Newton step cap {MAX_NEWTON_STEPS} reached"),
                    residual: gap,
                });
            }
            t *= MU_GROWTH;
        }
    }

    /// Starting `t` that puts the barrier about `m` nats from its center:
    /// `m` over the spread of a linearized objective across the ball.
    fn initial_t(&self, z: &DVector<f64>, m: f64) -> f64 {
        let mut grad = self.c.clone();
        if let Some(h) = &self.h {
            grad += h * z;
        }
        let spread = grad.norm() * 2.0 * self.radius_sq.sqrt();
        if spread > 0.0 && spread.is_finite() {
            m / spread
        } else {
            1.0
        }
    }

    /// Bound on the magnitudes of the terms summed in the barrier value.
    fn value_scale(&self, z: &DVector<f64>, t: f64, s: &[f64], s0: f64) -> f64 {
        let zn = z.norm();
        let quad = self.h.as_ref().map_or(0.0, |h| 0.5 * h.norm() * zn * zn);
        t * (quad + self.c.norm() * zn) + s.iter().map(|v| v.ln().abs()).sum::<f64>() + s0.ln().abs()
    }

    /// Newton centering at fixed `t`. Returns the number of steps taken and
    /// whether the point is centered (false when the budget ran out first).
    fn center(&self, z: &mut DVector<f64>, t: f64, budget: usize) -> Result<(usize, bool)> {
        let d = self.dim();
        let mut steps = 0;
        while steps < budget {
            let (s, s0) = self.slacks(z).ok_or_else(|| DfrcError::Numeric {
                routine: "barrier",
                detail: "iterate left the interior".into(),
                residual: f64::NAN,
            })?;
            let mut grad = self.c.clone() * t;
            let mut hess = match &self.h {
                Some(h) => {
                    grad += h * &*z * t;
                    h * t
                }
                None => DMatrix::zeros(d, d),
            };
            for (a, sj) in self.a.iter().zip(&s) {
                grad.axpy(1.0 / sj, a, 1.0);
                hess.ger(1.0 / (sj * sj), a, a, 1.0);
            }
            let zb = z.rows(0, self.ball_dims).into_owned();
            for i in 0..self.ball_dims {
                grad[i] += 2.0 * zb[i] / s0;
                hess[(i, i)] += 2.0 / s0;
            }
            {
                let mut block = hess.view_mut((0, 0), (self.ball_dims, self.ball_dims));
                block.ger(4.0 / (s0 * s0), &zb, &zb, 1.0);
            }
            let step = newton_direction(hess, &grad)?;
            let decrement = -grad.dot(&step);
            if !(decrement.is_finite()) {
                return Err(DfrcError::Numeric {
                    routine: "barrier",
                    detail: "non-finite Newton decrement".into(),
                    residual: decrement,
                });
            }
            let f0 = self.barrier_value(z, t).unwrap_or(f64::INFINITY);
            // Below the rounding error of the barrier value nothing is left to gain.
            if decrement / 2.0 <= CENTERING_TOL.max(4.0 * f64::EPSILON * self.value_scale(z, t, &s, s0)) {
                return Ok((steps, true));
            }
            let mut alpha = 1.0;
            let mut accepted = false;
            while alpha > 1e-20 {
                let cand = &*z + &step * alpha;
                if let Some(f1) = self.barrier_value(&cand, t) {
                    if f1 <= f0 - ARMIJO_SLOPE * alpha * decrement {
                        *z = cand;
                        accepted = true;
                        break;
                    }
                }
                alpha *= BACKTRACK;
            }
            steps += 1;
            if !accepted {
                // Rounding floor reached: the point is as centered as f64 allows.
                return Ok((steps, true));
            }
        }
        Ok((steps, false))
    }
}

/// Solves `H dz = -g`, adding a small ridge if `H` is numerically singular.
fn newton_direction(hess: DMatrix<f64>, grad: &DVector<f64>) -> Result<DVector<f64>> {
    let scale = hess.diagonal().amax().max(f64::MIN_POSITIVE);
    let mut ridge = 0.0;
    for _ in 0..6 {
        let mut h = hess.clone();
        if ridge > 0.0 {
            for i in 0..h.nrows() {
                h[(i, i)] += ridge;
            }
        }
        if let Some(chol) = h.cholesky() {
            return Ok(-chol.solve(grad));
        }
        ridge = if ridge == 0.0 { scale * 1e-14 } else { ridge * 100.0 };
    }
    Err(DfrcError::Numeric {
        routine: "barrier",
        detail: "Newton system is not positive definite".into(),
        residual: scale,
    })
}
