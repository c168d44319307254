//! Dense complex linear algebra used throughout the crate.
//!
//! Vectors and matrices are plain `nalgebra` containers of `Complex64`. The
//! Hermitian eigensolver is a cyclic Jacobi iteration, which converges
//! unconditionally and is accurate to machine precision at the sizes used
//! here (at most 64x64).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{DfrcError, Result};

pub type ComplexVector = DVector<Complex64>;
pub type ComplexMatrix = DMatrix<Complex64>;

/// Largest dimension the Hermitian routines accept.
pub const MAX_DIM: usize = 64;

/// Relative Hermitian-symmetry tolerance.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Absolute floor for relative tolerances (keeps zero matrices well defined).
pub const ABS_FLOOR: f64 = 1e-14;

const MAX_SWEEPS: usize = 100;

/// Eigen-pairs of a Hermitian matrix, eigenvalues sorted in descending order.
#[derive(Debug, Clone)]
pub struct EigDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Unitary matrix whose `i`-th column pairs with `eigenvalues[i]`.
    pub eigenvectors: ComplexMatrix,
}

impl EigDecomposition {
    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// `V diag(f(lambda)) V^H`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let mut scaled = self.eigenvectors.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let s = f(lam);
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        hermitize(&(scaled * self.eigenvectors.adjoint()))
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|l| l)
    }
}

/// `||A - A^H||_F / max(||A||_F, floor)`.
pub fn hermitian_defect(a: &ComplexMatrix) -> f64 {
    if a.nrows() != a.ncols() {
        return f64::INFINITY;
    }
    let diff = a - a.adjoint();
    diff.norm() / a.norm().max(ABS_FLOOR)
}

/// Symmetrized copy `(A + A^H) / 2`.
pub fn hermitize(a: &ComplexMatrix) -> ComplexMatrix {
    (a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

pub fn all_finite_vec(v: &ComplexVector) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn all_finite_mat(a: &ComplexMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub(crate) fn check_hermitian(a: &ComplexMatrix, routine: &'static str) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(DfrcError::Contract(format!(
            "{routine}: matrix is {}x{}, expected square",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.nrows() > MAX_DIM {
        return Err(DfrcError::Contract(format!(
            "{routine}: dimension {} exceeds {MAX_DIM}",
            a.nrows()
        )));
    }
    if !all_finite_mat(a) {
        return Err(DfrcError::Contract(format!("{routine}: non-finite entry")));
    }
    let defect = hermitian_defect(a);
    if defect > HERMITIAN_TOL {
        return Err(DfrcError::Contract(format!(
            "{routine}: matrix is not Hermitian (relative defect {defect:.3e})"
        )));
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
pub fn herm_eig(a: &ComplexMatrix) -> Result<EigDecomposition> {
    check_hermitian(a, "herm_eig")?;
    let n = a.nrows();
    let mut m = hermitize(a);
    for i in 0..n {
        m[(i, i)].im = 0.0;
    }
    let mut v = ComplexMatrix::identity(n, n);
    let scale = m.norm().max(ABS_FLOOR);
    let target = f64::EPSILON * scale;

    let mut converged = n <= 1;
    let mut off = 0.0;
    for _sweep in 0..MAX_SWEEPS {
        off = off_diagonal_norm(&m);
        if off <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut m, &mut v, p, q, target / (n as f64));
            }
        }
    }
    if !converged {
        off = off_diagonal_norm(&m);
        if off > 1e3 * target {
            return Err(DfrcError::Numeric {
                routine: "herm_eig",
                detail: format!("Jacobi sweeps exhausted ({MAX_SWEEPS})"),
                residual: off / scale,
            });
        }
    }
    let _ = off;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].re.total_cmp(&m[(i, i)].re));
    let eigenvalues = order.iter().map(|&i| m[(i, i)].re).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &v.column(src));
    }
    Ok(EigDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// One Jacobi rotation annihilating `m[p, q]`.
///
/// The rotation is `G = D J`: `D` makes the pivot real, `J` is the real
/// symmetric Schur rotation. `m <- G^H m G`, `v <- v G`.
fn rotate(m: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize, skip_below: f64) {
    let apq = m[(p, q)];
    let g = apq.norm();
    if g <= skip_below || g == 0.0 {
        return;
    }
    let phase = apq / g;
    let phase_c = phase.conj();
    let tau = (m[(q, q)].re - m[(p, p)].re) / (2.0 * g);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let n = m.nrows();

    for k in 0..n {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = mkp * c - mkq * phase_c * s;
        m[(k, q)] = mkp * s + mkq * phase_c * c;
    }
    for k in 0..n {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = mpk * c - mqk * phase * s;
        m[(q, k)] = mpk * s + mqk * phase * c;
    }
    m[(p, q)] = Complex64::new(0.0, 0.0);
    m[(q, p)] = Complex64::new(0.0, 0.0);
    m[(p, p)].im = 0.0;
    m[(q, q)].im = 0.0;

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * phase_c * s;
        v[(k, q)] = vkp * s + vkq * phase_c * c;
    }
}

/// Solves `a x = b` for Hermitian positive-definite `a`.
pub fn herm_solve(a: &ComplexMatrix, b: &ComplexVector) -> Result<ComplexVector> {
    if b.len() != a.nrows() {
        return Err(DfrcError::Dimension {
            expected: a.nrows(),
            got: b.len(),
            context: "herm_solve right-hand side",
        });
    }
    let rhs = ComplexMatrix::from_column_slice(b.len(), 1, b.as_slice());
    let sol = herm_solve_matrix(a, &rhs)?;
    Ok(sol.column(0).into_owned())
}

/// Solves `a X = B` column by column for Hermitian positive-definite `a`.
pub fn herm_solve_matrix(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_hermitian(a, "herm_solve")?;
    if b.nrows() != a.nrows() {
        return Err(DfrcError::Dimension {
            expected: a.nrows(),
            got: b.nrows(),
            context: "herm_solve right-hand side",
        });
    }
    let sym = hermitize(a);
    let not_pd = |sym: &ComplexMatrix| -> DfrcError {
        match herm_eig(sym) {
            Ok(eig) => DfrcError::NotPositiveDefinite {
                min_eigenvalue: eig.min_eigenvalue(),
            },
            Err(e) => e,
        }
    };
    let chol = match nalgebra::Cholesky::new(sym.clone()) {
        Some(c) => c,
        None => return Err(not_pd(&sym)),
    };
    // Reject numerically singular factors: min pivot^2 relative to max pivot^2.
    let l = chol.l_dirty();
    let diag: Vec<f64> = (0..l.nrows()).map(|i| l[(i, i)].re).collect();
    let dmax = diag.iter().cloned().fold(0.0, f64::max);
    let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(dmin > 0.0) || dmin * dmin <= 1e-12 * dmax * dmax {
        return Err(not_pd(&sym));
    }
    Ok(chol.solve(b))
}

/// Nearest positive-semidefinite matrix in Frobenius norm (eigenvalue clipping).
pub fn psd_project(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = herm_eig(a)?;
    Ok(eig.reconstruct_with(|l| l.max(0.0)))
}

/// Stacks `[Re x; Im x]`.
pub fn to_real(x: &ComplexVector) -> DVector<f64> {
    let n = x.len();
    DVector::from_fn(2 * n, |i, _| if i < n { x[i].re } else { x[i - n].im })
}

/// Inverse of [`to_real`].
pub fn from_real(xi: &DVector<f64>) -> ComplexVector {
    let n = xi.len() / 2;
    ComplexVector::from_fn(n, |i, _| Complex64::new(xi[i], xi[i + n]))
}

/// Real `2n x 2n` matrix `R` with `xi^T R xi = x^H Q x` for Hermitian `Q`.
pub fn real_form(q: &ComplexMatrix) -> DMatrix<f64> {
    let n = q.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let (bi, ii) = (i / n, i % n);
        let (bj, jj) = (j / n, j % n);
        let z = q[(ii, jj)];
        match (bi, bj) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            _ => z.im,
        }
    })
}

/// `x^H a x` (real part; exact for Hermitian `a`).
pub fn quad_form(a: &ComplexMatrix, x: &ComplexVector) -> f64 {
    x.dotc(&(a * x)).re
}

#[cfg(test)]
pub(crate) mod test_util {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    pub fn cn(rng: &mut ChaCha8Rng) -> Complex64 {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        Complex64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
    }

    pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> ComplexVector {
        ComplexVector::from_fn(n, |_, _| cn(rng))
    }

    pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        let g = ComplexMatrix::from_fn(n, n, |_, _| cn(rng));
        hermitize(&(&g + g.adjoint()))
    }

    pub fn random_pd(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        let g = ComplexMatrix::from_fn(n, n, |_, _| cn(rng));
        hermitize(&(&g * g.adjoint() + ComplexMatrix::identity(n, n)))
    }

    pub fn rel_err(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
        (a - b).norm() / b.norm().max(ABS_FLOOR)
    }

    /// Minimum-norm `x` with `h_k^H x = targets[k]` (requires `K <= N`).
    pub fn zero_forcing(channels: &[ComplexVector], targets: &[Complex64]) -> ComplexVector {
        let n = channels[0].len();
        let h = ComplexMatrix::from_fn(n, channels.len(), |i, k| channels[k][i]);
        let gram = h.adjoint() * &h;
        let t = ComplexVector::from_column_slice(targets);
        let coef = gram.lu().solve(&t).expect("channels must be linearly independent");
        h * coef
    }

    /// Point whose rotated outputs are `threshold_k + extra` on the real axis.
    pub fn zf_constructive(cs: &crate::ci::CiConstraintSet, extra: f64) -> ComplexVector {
        let targets: Vec<Complex64> = cs.thresholds.iter().map(|t| Complex64::new(t + extra, 0.0)).collect();
        zero_forcing(&cs.rotated_channels, &targets)
    }
}
