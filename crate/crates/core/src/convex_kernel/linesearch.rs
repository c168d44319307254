use crate::error::Result;
use crate::numerics::{ComplexMatrix, ComplexVector};
use crate::signal_model::{self, Scenario};
use num_complex::Complex64;

/// Smallest Armijo step tried before giving up.
pub const ARMIJO_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmijoOutcome {
    pub step: f64,
    /// Objective at the accepted point (`f(x)` when stalled).
    pub objective: f64,
    pub stalled: bool,
}

/// Minimizes `f(t) = -(x + t d)^H Phi (x + t d)` over `[0, 1]`.
///
/// `f` is concave in `t`, so the minimum sits at an endpoint.
pub fn exact_linesearch_fixed_phi(phi: &ComplexMatrix, x: &ComplexVector, direction: &ComplexVector) -> f64 {
    if direction.iter().all(|v| v.norm() == 0.0) {
        return 0.0;
    }
    let phi_d = phi * direction;
    // f(1) - f(0) = -(2 Re(d^H Phi x) + d^H Phi d)
    let linear = 2.0 * phi_d.dotc(x).re;
    let quadratic = direction.dotc(&phi_d).re;
    if -(linear + quadratic) < 0.0 {
        1.0
    } else {
        0.0
    }
}

/// True objective `f(x) = -mu x^H Phi(x) x`.
pub fn true_objective(scenario: &Scenario, x: &ComplexVector) -> Result<f64> {
    Ok(-scenario.mu() * signal_model::sinr_objective(scenario, x)?)
}

/// Backtracking on the true objective: the largest `t` in `{1, shrink, shrink^2, ...}`
/// above [`ARMIJO_FLOOR`] with `f(x + t d) <= f(x) + slope t Re(grad f(x)^H d)`.
pub fn armijo_linesearch_true_objective(
    scenario: &Scenario,
    x: &ComplexVector,
    direction: &ComplexVector,
    shrink: f64,
    slope: f64,
) -> Result<ArmijoOutcome> {
    let f0 = true_objective(scenario, x)?;
    armijo_from(scenario, x, direction, shrink, slope, f0)
}

pub(crate) fn armijo_from(
    scenario: &Scenario,
    x: &ComplexVector,
    direction: &ComplexVector,
    shrink: f64,
    slope: f64,
    f0: f64,
) -> Result<ArmijoOutcome> {
    if !(shrink > 0.0 && shrink < 1.0 && slope > 0.0 && slope < 1.0) {
        return Err(crate::DfrcError::Contract(format!(
            "Armijo parameters must lie in (0, 1): shrink {shrink}, slope {slope}"
        )));
    }
    let stall = ArmijoOutcome {
        step: 0.0,
        objective: f0,
        stalled: true,
    };
    if direction.iter().all(|v| v.norm() == 0.0) {
        return Ok(ArmijoOutcome {
            stalled: false,
            ..stall
        });
    }
    let grad = signal_model::sinr_objective_gradient(scenario, x)? * Complex64::from(-scenario.mu());
    let derivative = grad.dotc(direction).re;
    if derivative >= 0.0 {
        return Ok(stall);
    }
    let mut t = 1.0;
    while t >= ARMIJO_FLOOR {
        let cand = x + direction * Complex64::from(t);
        let f1 = true_objective(scenario, &cand)?;
        if f1 <= f0 + slope * t * derivative {
            return Ok(ArmijoOutcome {
                step: t,
                objective: f1,
                stalled: false,
            });
        }
        t *= shrink;
    }
    Ok(stall)
}

/// `x + t d` exactly as evaluated inside the line searches.
pub fn step_point(x: &ComplexVector, direction: &ComplexVector, t: f64) -> ComplexVector {
    if t == 0.0 {
        return x.clone();
    }
    x + direction * Complex64::from(t)
}
