//! Small non-negative quadratic programs
//! `min 1/2 l^T G l - q^T l, l >= 0` by a Lawson-Hanson active set, and the
//! Euclidean projection onto a polytope built on top of them.

use nalgebra::{DMatrix, DVector};

const MAX_ITERS: usize = 500;

/// Solves the NNQP for positive semidefinite `g`. Exact up to rounding for
/// the small (at most a few dozen variables) systems used here.
pub(crate) fn solve_nnqp(g: &DMatrix<f64>, q: &DVector<f64>) -> DVector<f64> {
    let m = q.len();
    let scale = g.diagonal().amax().max(q.amax()).max(f64::MIN_POSITIVE);
    let tol = 1e-13 * scale;
    let mut lambda = DVector::<f64>::zeros(m);
    let mut passive = vec![false; m];
    for _ in 0..MAX_ITERS {
        let w = q - g * &lambda;
        let candidate = (0..m).filter(|&j| !passive[j]).max_by(|&i, &j| w[i].total_cmp(&w[j]));
        match candidate {
            Some(j) if w[j] > tol => passive[j] = true,
            _ => break,
        }
        loop {
            let z = solve_passive(g, q, &passive);
            if (0..m).all(|j| !passive[j] || z[j] > 0.0) {
                lambda = z;
                break;
            }
            let mut alpha = 1.0f64;
            for j in 0..m {
                if passive[j] && z[j] <= 0.0 {
                    alpha = alpha.min(lambda[j] / (lambda[j] - z[j]));
                }
            }
            lambda += (z - &lambda) * alpha;
            let mut removed = false;
            for j in 0..m {
                if passive[j] && lambda[j] <= tol.max(1e-300) {
                    passive[j] = false;
                    lambda[j] = 0.0;
                    removed = true;
                }
            }
            if !removed {
                break;
            }
        }
    }
    lambda
}

fn solve_passive(g: &DMatrix<f64>, q: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let idx: Vec<usize> = (0..q.len()).filter(|&j| passive[j]).collect();
    let k = idx.len();
    let mut gp = DMatrix::from_fn(k, k, |i, j| g[(idx[i], idx[j])]);
    let qp = DVector::from_fn(k, |i, _| q[idx[i]]);
    let scale = gp.diagonal().amax().max(f64::MIN_POSITIVE);
    let mut sol = None;
    let mut ridge = 0.0;
    for _ in 0..8 {
        if let Some(ch) = gp.clone().cholesky() {
            sol = Some(ch.solve(&qp));
            break;
        }
        let bump = if ridge == 0.0 { scale * 1e-13 } else { ridge * 10.0 };
        for i in 0..k {
            gp[(i, i)] += bump - ridge;
        }
        ridge = bump;
    }
    let sol = sol.unwrap_or_else(|| DVector::zeros(k));
    let mut z = DVector::zeros(q.len());
    for (i, &j) in idx.iter().enumerate() {
        z[j] = sol[i];
    }
    z
}

/// Euclidean projection of `p` onto `{v : a_j . v <= b_j}` through the dual NNQP.
/// The polytope must be non-empty.
pub(crate) fn project_polytope(a: &[DVector<f64>], b: &[f64], p: &DVector<f64>) -> DVector<f64> {
    if a.iter().zip(b).all(|(aj, bj)| aj.dot(p) <= *bj) {
        return p.clone();
    }
    let m = a.len();
    let g = DMatrix::from_fn(m, m, |i, j| a[i].dot(&a[j]));
    let q = DVector::from_fn(m, |j, _| a[j].dot(p) - b[j]);
    let lambda = solve_nnqp(&g, &q);
    let mut v = p.clone();
    for (aj, l) in a.iter().zip(lambda.iter()) {
        v.axpy(-l, aj, 1.0);
    }
    v
}
