use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::region::FeasibleRegion;
use super::sdp::SdpSolution;
use crate::ci::{check_feasible, CiConstraintSet};
use crate::error::{DfrcError, Result};
use crate::numerics::{self, ComplexMatrix, ComplexVector};

/// Tolerance of the projection used to restore feasibility.
const RESTORE_TOL: f64 = 1e-10;

/// Scales `x` onto the power sphere. A scale factor at least one never
/// breaks a CI constraint, a smaller one might.
pub fn scale_to_budget(x: &ComplexVector, power_budget: f64) -> ComplexVector {
    let norm_sq = x.norm_squared();
    if norm_sq <= numerics::ABS_FLOOR {
        return x.clone();
    }
    x * Complex64::from((power_budget / norm_sq).sqrt())
}

/// Projects `x` onto the CI region and scales the result onto the power sphere.
pub fn restore_feasibility(region: &FeasibleRegion, cs: &CiConstraintSet, x: &ComplexVector) -> Result<ComplexVector> {
    let direct = scale_to_budget(x, cs.power_budget);
    if check_feasible(cs, &direct).feasible {
        return Ok(direct);
    }
    let projected = region.project(x, RESTORE_TOL)?;
    let scaled = scale_to_budget(&projected, cs.power_budget);
    if check_feasible(cs, &scaled).feasible {
        Ok(scaled)
    } else if check_feasible(cs, &projected).feasible {
        Ok(projected)
    } else {
        Err(DfrcError::Numeric {
            routine: "restore_feasibility",
            detail: "projection onto the CI region is not feasible".into(),
            residual: check_feasible(cs, &projected).min_user_margin(),
        })
    }
}

/// Gaussian randomization around an SDP solution; builds the feasible region itself.
pub fn gaussian_randomization(
    sol: &SdpSolution,
    cs: &CiConstraintSet,
    n_samples: usize,
    rng_seed: u64,
) -> Result<ComplexVector> {
    let region = FeasibleRegion::new(cs, sol.n_tx())?;
    randomize_with_region(sol, cs, &region, n_samples, rng_seed)
}

/// Draws `n_samples` candidates from `CN(x*, X - x* x*^H)`, scales each onto
/// the power sphere, drops CI-infeasible ones and returns the best by
/// `x^H Phi x`. The restored `x*` always joins the pool, so the result is
/// monotone in `n_samples` for a fixed seed.
pub fn randomize_with_region(
    sol: &SdpSolution,
    cs: &CiConstraintSet,
    region: &FeasibleRegion,
    n_samples: usize,
    rng_seed: u64,
) -> Result<ComplexVector> {
    if n_samples == 0 {
        return Err(DfrcError::Contract("randomization needs at least one sample".into()));
    }
    let n = sol.n_tx();
    let mean = sol.x_column();
    let cov = numerics::psd_project(&numerics::hermitize(&(sol.x_block() - &mean * mean.adjoint())))?;
    let eig = numerics::herm_eig(&cov)?;
    let factor = ComplexMatrix::from_fn(n, n, |i, j| {
        eig.eigenvectors[(i, j)] * eig.eigenvalues[j].max(0.0).sqrt()
    });

    let mut best: Option<(f64, ComplexVector)> = None;
    let mut consider = |x: ComplexVector| {
        if !check_feasible(cs, &x).feasible {
            return;
        }
        let value = numerics::quad_form(&sol.phi, &x);
        if best.as_ref().is_none_or(|(v, _)| value > *v) {
            best = Some((value, x));
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    for _ in 0..n_samples {
        let w = ComplexVector::from_fn(n, |_, _| {
            Complex64::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            ) * scale
        });
        consider(scale_to_budget(&(&mean + &factor * w), cs.power_budget));
    }
    if let Ok(restored) = restore_feasibility(region, cs, &mean) {
        consider(restored);
    }
    best.map(|(_, x)| x)
        .ok_or(DfrcError::RandomizationFailed { samples: n_samples })
}
