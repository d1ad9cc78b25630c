//! Fixed-step integration and matrix diagnostics.
//!
//! Everything here is deterministic: identical inputs produce identical
//! results, including the iterative eigenvalue helpers (fixed start vectors,
//! fixed iteration limits). All other modules build on these primitives.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// One classical fourth-order Runge-Kutta step of `y' = f(t, y)`.
///
/// Returns an integration fault naming `t` if any stage evaluates to a
/// non-finite value.
pub fn rk4_step<F>(f: F, t: f64, y: &DVector<f64>, h: f64) -> Result<DVector<f64>>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
{
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::UnsupportedConfiguration(format!(
            "rk4_step requires h > 0, got {h}"
        )));
    }
    let check = |k: &DVector<f64>| -> Result<()> {
        if k.iter().any(|v| !v.is_finite()) {
            Err(Error::IntegrationFault { t })
        } else {
            Ok(())
        }
    };
    let k1 = f(t, y);
    check(&k1)?;
    let k2 = f(t + 0.5 * h, &(y + &k1 * (0.5 * h)));
    check(&k2)?;
    let k3 = f(t + 0.5 * h, &(y + &k2 * (0.5 * h)));
    check(&k3)?;
    let k4 = f(t + h, &(y + &k3 * h));
    check(&k4)?;
    Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

/// All `min(rows, cols)` singular values of `m`, sorted descending.
pub fn singular_values(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "singular_values",
        });
    }
    let svd = m.clone().svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).expect("singular values are finite"));
    Ok(DVector::from_vec(sv))
}

/// Regularized condition number `(sigma_max^2 + eps) / (sigma_min^2 + eps)`.
///
/// With `eps = 0` this is the ordinary squared-spectrum condition number and
/// requires `sigma_min > 0`.
pub fn regularized_condition(m: &DMatrix<f64>, eps: f64) -> Result<f64> {
    if eps < 0.0 {
        return Err(Error::UnsupportedConfiguration(format!(
            "regularized_condition requires eps >= 0, got {eps}"
        )));
    }
    let sv = singular_values(m)?;
    let s_max = sv[0];
    let s_min = sv[sv.len() - 1];
    if eps == 0.0 && s_min == 0.0 {
        return Err(Error::Singular {
            context: "regularized_condition with eps = 0",
        });
    }
    Ok((s_max * s_max + eps) / (s_min * s_min + eps))
}

/// Norm of the component of `v` outside the numerical range of `m`.
///
/// The range projector is assembled from left singular vectors with
/// `sigma > rank_tol * sigma_max`. For `m = 0` the projector is zero and the
/// residual is `||v||`.
pub fn range_projection_residual(
    m: &DMatrix<f64>,
    v: &DVector<f64>,
    rank_tol: f64,
) -> Result<f64> {
    if v.len() != m.nrows() {
        return Err(Error::DimensionMismatch {
            context: "range_projection_residual",
            expected: format!("vector of length {}", m.nrows()),
            actual: format!("{}", v.len()),
        });
    }
    if !rank_tol.is_finite() || rank_tol <= 0.0 {
        return Err(Error::UnsupportedConfiguration(format!(
            "range_projection_residual requires rank_tol > 0, got {rank_tol}"
        )));
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.as_ref().expect("u requested");
    let s_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let mut projected = DVector::zeros(v.len());
    if s_max > 0.0 {
        for (i, &s) in svd.singular_values.iter().enumerate() {
            if s > rank_tol * s_max {
                let col = u.column(i);
                projected += col * col.dot(v);
            }
        }
    }
    Ok((v - projected).norm())
}

/// Numerical rank: the number of singular values above `rank_tol * sigma_max`.
pub fn numerical_rank(m: &DMatrix<f64>, rank_tol: f64) -> Result<usize> {
    let sv = singular_values(m)?;
    let s_max = sv[0];
    if s_max == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > rank_tol * s_max).count())
}

/// Dimension threshold below which the dense symmetric eigensolver is used
/// directly instead of the iterative extremes.
const DENSE_EIGEN_LIMIT: usize = 64;

/// Regularized condition number of `g + eps I` for a symmetric PSD `g`.
///
/// Equivalent to [`regularized_condition`] applied to a matrix whose Gram
/// matrix is `g`, but computed from `g` alone, which is much cheaper when
/// the data matrix has many rows. Small matrices use the dense symmetric
/// eigensolver; larger ones use power iteration for the top eigenvalue and
/// Cholesky-based inverse iteration for the bottom one.
pub fn gram_regularized_condition(g: &DMatrix<f64>, eps: f64) -> Result<f64> {
    if !g.is_square() {
        return Err(Error::DimensionMismatch {
            context: "gram_regularized_condition",
            expected: "square matrix".into(),
            actual: format!("{}x{}", g.nrows(), g.ncols()),
        });
    }
    let (lo, hi) = symmetric_extremes(g)?;
    // g is PSD up to roundoff; clamp tiny negative bottom eigenvalues.
    let lo = lo.max(0.0);
    if eps == 0.0 && lo == 0.0 {
        return Err(Error::Singular {
            context: "gram_regularized_condition with eps = 0",
        });
    }
    Ok((hi + eps) / (lo + eps))
}

/// Smallest and largest eigenvalues of a symmetric matrix.
fn symmetric_extremes(g: &DMatrix<f64>) -> Result<(f64, f64)> {
    let n = g.nrows();
    if n == 0 {
        return Err(Error::DimensionMismatch {
            context: "symmetric_extremes",
            expected: "non-empty matrix".into(),
            actual: "0x0".into(),
        });
    }
    if n <= DENSE_EIGEN_LIMIT {
        let eig = SymmetricEigen::new(g.clone());
        let hi = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        return Ok((lo, hi));
    }
    let hi = top_eigenvalue(g);
    // Shift so the matrix is PD, factor once, and run inverse iteration.
    // For PSD g the shift eps_shift keeps the factorization well-defined
    // even when g is exactly singular.
    let shift = (hi.abs() * 1e-14).max(f64::MIN_POSITIVE);
    let mut shifted = g.clone();
    for i in 0..n {
        shifted[(i, i)] += shift;
    }
    match Cholesky::new(shifted) {
        Some(chol) => {
            let lo = bottom_eigenvalue(g, &chol);
            Ok((lo, hi))
        }
        None => {
            // Indefinite input; fall back to the dense solver.
            let eig = SymmetricEigen::new(g.clone());
            let hi = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
            Ok((lo, hi))
        }
    }
}

const POWER_ITER_MAX: usize = 2000;
const POWER_ITER_RTOL: f64 = 1e-13;

/// Largest eigenvalue of a symmetric PSD matrix by power iteration with a
/// deterministic start vector.
fn top_eigenvalue(g: &DMatrix<f64>) -> f64 {
    let n = g.nrows();
    // Mildly irregular start vector so it is not orthogonal to the top
    // eigenvector of structured matrices.
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i as f64) / (n as f64));
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..POWER_ITER_MAX {
        let w = g * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / norm;
        if (next - lambda).abs() <= POWER_ITER_RTOL * next.abs().max(1e-300) {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// Smallest eigenvalue of `g` given a Cholesky factorization of a slightly
/// shifted copy, by inverse iteration.
fn bottom_eigenvalue(g: &DMatrix<f64>, chol: &Cholesky<f64, Dyn>) -> f64 {
    let n = g.nrows();
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i as f64) / (n as f64));
    v /= v.norm();
    let mut lambda = f64::INFINITY;
    for _ in 0..POWER_ITER_MAX {
        let w = chol.solve(&v);
        let norm = w.norm();
        if norm == 0.0 {
            break;
        }
        v = w / norm;
        let next = v.dot(&(g * &v));
        if (next - lambda).abs() <= POWER_ITER_RTOL * next.abs().max(1e-300) {
            return next;
        }
        lambda = next;
    }
    if lambda.is_finite() {
        lambda
    } else {
        0.0
    }
}
