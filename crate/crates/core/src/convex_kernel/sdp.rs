//! Semidefinite relaxation
//!
//! ```text
//! maximize tr(Phi X)  s.t.  tr(X) <= P,  CI constraints on x,  [X x; x^H 1] >= 0
//! ```
//!
//! The primal is solved by ADMM on the lifted matrix with a PSD projection
//! per iteration. Independently, the Lagrange dual collapses to
//!
//! ```text
//! min_{tau > lambda_max(Phi), eta >= 0}  tau + eta^T b + 1/4 (G eta)^H (tau I - Phi)^{-1} (G eta)
//! ```
//!
//! (scaled to `P = 1`), which is convex in `tau` after minimizing over `eta`.
//! Any `(tau, eta)` gives a valid upper bound, so the reported bound does not
//! depend on ADMM accuracy.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::nnqp::{project_polytope, solve_nnqp};
use crate::ci::{CiConstraintSet, HalfSpace};
use crate::error::{DfrcError, Result};
use crate::numerics::{self, ComplexMatrix, ComplexVector};

/// ADMM iteration cap.
pub const SDP_MAX_ITERS: usize = 50_000;
/// Largest transmit array handled by the relaxation.
pub const SDP_MAX_TX: usize = 16;

const RHO_UPDATE_EVERY: usize = 10;
const GOLDEN_ITERS: usize = 120;

#[derive(Debug, Clone)]
pub struct SdpSolution {
    /// `[X x; x^H 1]` in physical units.
    pub x_tilde: ComplexMatrix,
    /// `tr(Phi X)` of `x_tilde`.
    pub objective: f64,
    /// Certified upper bound on `x^H Phi x` over the CI region and power ball.
    pub upper_bound: f64,
    /// Relative primal residual, dual residual and bound gap.
    pub kkt_residuals: (f64, f64, f64),
    pub phi: ComplexMatrix,
    pub iterations: usize,
}

impl SdpSolution {
    pub fn n_tx(&self) -> usize {
        self.phi.nrows()
    }

    pub fn x_block(&self) -> ComplexMatrix {
        let n = self.n_tx();
        self.x_tilde.view((0, 0), (n, n)).into_owned()
    }

    pub fn x_column(&self) -> ComplexVector {
        let n = self.n_tx();
        self.x_tilde.view((0, n), (n, 1)).column(0).into_owned()
    }

    /// `lambda_1 / sum(lambda)` of the `X` block.
    pub fn rank_one_ratio(&self) -> Result<f64> {
        let eig = numerics::herm_eig(&numerics::hermitize(&self.x_block()))?;
        let total: f64 = eig.eigenvalues.iter().map(|l| l.max(0.0)).sum();
        if total <= numerics::ABS_FLOOR {
            return Ok(0.0);
        }
        Ok(eig.max_eigenvalue().max(0.0) / total)
    }
}

pub fn solve_sdr(phi: &ComplexMatrix, cs: &CiConstraintSet, tol: f64) -> Result<SdpSolution> {
    let n = phi.nrows();
    if n > SDP_MAX_TX {
        return Err(DfrcError::Contract(format!(
            "relaxation limited to {SDP_MAX_TX} transmit antennas, got {n}"
        )));
    }
    if let Some(d) = cs.dim() {
        if d != n {
            return Err(DfrcError::Dimension {
                expected: n,
                got: d,
                context: "constraint set vs SINR matrix",
            });
        }
    }
    numerics::check_hermitian(phi, "solve_sdr")?;
    let p = cs.power_budget;
    let sp = p.sqrt();
    let halfspaces: Vec<HalfSpace> = cs
        .halfspaces()
        .into_iter()
        .map(|h| HalfSpace {
            offset: h.offset / sp,
            ..h
        })
        .collect();

    let phi_eig = numerics::herm_eig(phi)?;
    let scale = phi_eig.max_eigenvalue().abs().max(numerics::ABS_FLOOR);
    let (z, iterations, primal_res, dual_res) = admm(&(phi / Complex64::from(scale)), &halfspaces, tol)?;

    let corner = z[(n, n)].re;
    if !(corner > numerics::ABS_FLOOR) {
        return Err(DfrcError::Numeric {
            routine: "solve_sdr",
            detail: "lifted matrix lost its corner".into(),
            residual: corner,
        });
    }
    let mut x_tilde = z / Complex64::from(corner);
    for i in 0..n {
        for j in 0..n {
            x_tilde[(i, j)] *= p;
        }
        x_tilde[(i, n)] *= sp;
        x_tilde[(n, i)] *= sp;
    }
    x_tilde[(n, n)] = Complex64::from(1.0);
    let x_block = x_tilde.view((0, 0), (n, n)).into_owned();
    let objective = (phi * x_block).trace().re;
    let upper_bound = p * dual_bound(&phi_eig, &halfspaces)?;
    let gap = (upper_bound - objective) / upper_bound.abs().max(1.0);
    Ok(SdpSolution {
        x_tilde,
        objective,
        upper_bound,
        kkt_residuals: (primal_res, dual_res, gap),
        phi: phi.clone(),
        iterations,
    })
}

/// Scaled ADMM (`P = 1`); returns the PSD iterate, iteration count and residuals.
fn admm(phi: &ComplexMatrix, halfspaces: &[HalfSpace], tol: f64) -> Result<(ComplexMatrix, usize, f64, f64)> {
    let n = phi.nrows();
    let d = n + 1;
    let mut phi_t = ComplexMatrix::zeros(d, d);
    phi_t.view_mut((0, 0), (n, n)).copy_from(phi);
    let a: Vec<DVector<f64>> = halfspaces.iter().map(|h| h.normal.clone()).collect();
    let b: Vec<f64> = halfspaces.iter().map(|h| h.offset).collect();

    let mut rho = 1.0;
    let mut z = ComplexMatrix::zeros(d, d);
    z[(n, n)] = Complex64::from(1.0);
    let mut u = ComplexMatrix::zeros(d, d);
    let (mut r, mut s) = (f64::INFINITY, f64::INFINITY);
    for it in 1..=SDP_MAX_ITERS {
        let v = &z - &u + &phi_t * Complex64::from(1.0 / rho);
        let y = project_affine(&v, &a, &b);
        let z_old = z;
        z = numerics::psd_project(&numerics::hermitize(&(&y + &u)))?;
        u += &y - &z;
        r = (&y - &z).norm();
        s = rho * (&z - &z_old).norm();
        let r_scale = y.norm().max(z.norm()).max(1.0);
        let s_scale = (rho * u.norm()).max(1.0);
        if r <= tol * r_scale && s <= tol * s_scale {
            return Ok((z, it, r / r_scale, s / s_scale));
        }
        if it % RHO_UPDATE_EVERY == 0 {
            if r / r_scale > 10.0 * s / s_scale {
                rho *= 2.0;
                u /= Complex64::from(2.0);
            } else if s / s_scale > 10.0 * r / r_scale {
                rho /= 2.0;
                u *= Complex64::from(2.0);
            }
        }
    }
    Err(DfrcError::Numeric {
        routine: "solve_sdr",
        detail: format!("ADMM hit {SDP_MAX_ITERS} iterations (dual residual {s:.3e})"),
        residual: r,
    })
}

/// Projection onto `{corner = 1, tr(X) <= 1, x in polytope}` (Hermitian matrices).
fn project_affine(v: &ComplexMatrix, a: &[DVector<f64>], b: &[f64]) -> ComplexMatrix {
    let d = v.nrows();
    let n = d - 1;
    let mut y = numerics::hermitize(v);
    y[(n, n)] = Complex64::from(1.0);
    let trace: f64 = (0..n).map(|i| y[(i, i)].re).sum();
    if trace > 1.0 {
        let shift = (trace - 1.0) / n as f64;
        for i in 0..n {
            y[(i, i)] = Complex64::from(y[(i, i)].re - shift);
        }
    }
    if !a.is_empty() {
        let x = y.view((0, n), (n, 1)).column(0).into_owned();
        let xp = numerics::from_real(&project_polytope(a, b, &numerics::to_real(&x)));
        for i in 0..n {
            y[(i, n)] = xp[i];
            y[(n, i)] = xp[i].conj();
        }
    }
    y
}

/// Minimizes the dual function over `tau` by golden section in `log(tau - lambda_max)`.
fn dual_bound(phi_eig: &numerics::EigDecomposition, halfspaces: &[HalfSpace]) -> Result<f64> {
    let lmax = phi_eig.max_eigenvalue();
    if halfspaces.is_empty() {
        return Ok(lmax);
    }
    let n = phi_eig.eigenvectors.nrows();
    let m = halfspaces.len();
    // g_j with Re(g_j^H x) = a_j . [Re x; Im x], expressed in the eigenbasis.
    let g = ComplexMatrix::from_fn(n, m, |i, j| {
        let a = &halfspaces[j].normal;
        Complex64::new(a[i], a[n + i])
    });
    let w = phi_eig.eigenvectors.adjoint() * g;
    let b = DVector::from_iterator(m, halfspaces.iter().map(|h| h.offset));

    let value = |tau: f64| -> f64 {
        let mut mm = DMatrix::<f64>::zeros(m, m);
        for (i, lam) in phi_eig.eigenvalues.iter().enumerate() {
            let inv = 1.0 / (tau - lam);
            for j in 0..m {
                for k in 0..m {
                    mm[(j, k)] += inv * (w[(i, j)].conj() * w[(i, k)]).re;
                }
            }
        }
        // min eta^T b + 1/4 eta^T M eta  ==  NNQP with G = M/2, q = -b
        let eta = solve_nnqp(&(&mm * 0.5), &(-&b));
        tau + eta.dot(&b) + 0.25 * eta.dot(&(&mm * &eta))
    };

    let scale = lmax.abs().max(b.amax().powi(2)).max(1e-12);
    let (mut lo, mut hi) = ((1e-12 * scale).ln(), (1e6 * scale).ln());
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let at = |s: f64| value(lmax + s.exp());
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (at(x1), at(x2));
    let mut best = f1.min(f2);
    for _ in 0..GOLDEN_ITERS {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = at(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = at(x2);
        }
        best = best.min(f1).min(f2);
    }
    if !best.is_finite() {
        return Err(DfrcError::Numeric {
            routine: "solve_sdr",
            detail: "dual bound is not finite".into(),
            residual: best,
        });
    }
    Ok(best)
}
