//! Expert synthesis: Riccati solution, feedback gain, and observer gain.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numerics::rk4_step;
use crate::rng::SplitMix64;

/// Options for [`solve_care`] and the closed-loop decay check in
/// [`lqr_gain`].
#[derive(Debug, Clone)]
pub struct CareOptions {
    /// Integration step for the differential Riccati equation, in seconds.
    pub step: f64,
    /// Convergence tolerance on the residual, relative to `max(1, ||Q||_F)`.
    pub rel_tol: f64,
    /// Give up if the residual has not converged by this pseudo-time.
    pub horizon: f64,
    /// Horizon over which the empirical closed-loop decay check runs.
    pub decay_horizon: f64,
}

impl Default for CareOptions {
    fn default() -> Self {
        Self {
            step: 1e-3,
            rel_tol: 1e-12,
            horizon: 500.0,
            decay_horizon: 30.0,
        }
    }
}

/// Stabilizing solution of the continuous algebraic Riccati equation.
#[derive(Debug, Clone)]
pub struct CareSolution {
    /// Symmetric value-function Hessian.
    pub s: DMatrix<f64>,
    /// Frobenius norm of `A'S + SA - S B R^-1 B' S + Q` at the returned `s`.
    pub residual_norm: f64,
    /// Pseudo-time the integration ran before converging.
    pub time_to_converge: f64,
}

/// The expert: feedback gain together with the cost it optimizes.
#[derive(Debug, Clone)]
pub struct ExpertPolicy {
    /// Feedback gain, applied as `u = gain * x`.
    pub gain: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

fn riccati_residual(
    a: &DMatrix<f64>,
    q: &DMatrix<f64>,
    gain_term: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> DMatrix<f64> {
    a.transpose() * p + p * a - p * gain_term * p + q
}

/// Solve `A'S + SA - S B R^-1 B' S + Q = 0` for the stabilizing `S` by
/// integrating the differential Riccati equation from `P(0) = 0` until the
/// derivative norm falls below tolerance.
///
/// ```
/// use irlqr_core::synthesis::{solve_care, CareOptions};
/// use nalgebra::DMatrix;
///
/// // Scalar problem: (b^2/r) s^2 - 2 a s - q = 0 with a = 3, b = 11.
/// let m = |x: f64| DMatrix::from_element(1, 1, x);
/// let sol = solve_care(&m(3.0), &m(11.0), &m(1.0), &m(1.0), &CareOptions::default()).unwrap();
/// let oracle = (3.0 + (9.0f64 + 121.0).sqrt()) / 121.0;
/// assert!((sol.s[(0, 0)] - oracle).abs() < 1e-8);
/// ```
pub fn solve_care(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    opts: &CareOptions,
) -> Result<CareSolution> {
    let n = a.nrows();
    if !a.is_square() || q.nrows() != n || q.ncols() != n || b.nrows() != n {
        return Err(Error::DimensionMismatch {
            context: "solve_care",
            expected: format!("A {n}x{n}, Q {n}x{n}, B with {n} rows"),
            actual: format!(
                "A {}x{}, Q {}x{}, B {}x{}",
                a.nrows(),
                a.ncols(),
                q.nrows(),
                q.ncols(),
                b.nrows(),
                b.ncols()
            ),
        });
    }
    let m = b.ncols();
    if r.nrows() != m || r.ncols() != m {
        return Err(Error::DimensionMismatch {
            context: "solve_care",
            expected: format!("R {m}x{m}"),
            actual: format!("{}x{}", r.nrows(), r.ncols()),
        });
    }
    let r_chol = Cholesky::new(r.clone()).ok_or(Error::Singular {
        context: "solve_care: R must be symmetric positive definite",
    })?;
    let r_inv = r_chol.inverse();
    let gain_term = b * r_inv * b.transpose();

    let tol = opts.rel_tol * q.norm().max(1.0);
    let mut p = DMatrix::<f64>::zeros(n, n);
    let mut t = 0.0;
    let mut residual = riccati_residual(a, q, &gain_term, &p).norm();
    while residual > tol {
        if t >= opts.horizon {
            return Err(Error::SynthesisFailure {
                what: "solve_care",
                residual,
            });
        }
        let flat = DVector::from_column_slice(p.as_slice());
        let next = rk4_step(
            |_, y| {
                let pm = DMatrix::from_column_slice(n, n, y.as_slice());
                let dp = riccati_residual(a, q, &gain_term, &pm);
                DVector::from_column_slice(dp.as_slice())
            },
            t,
            &flat,
            opts.step,
        )?;
        p = DMatrix::from_column_slice(n, n, next.as_slice());
        // Keep the iterate exactly symmetric against roundoff drift.
        p = (&p + p.transpose()) * 0.5;
        t += opts.step;
        residual = riccati_residual(a, q, &gain_term, &p).norm();
    }
    Ok(CareSolution {
        s: p,
        residual_norm: residual,
        time_to_converge: t,
    })
}

/// Synthesize the optimal state feedback `u = -R^-1 B' S x` and verify the
/// closed loop empirically: the state norm from a seeded random initial
/// condition must decay by at least 10x over `opts.decay_horizon`.
pub fn lqr_gain(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    opts: &CareOptions,
) -> Result<ExpertPolicy> {
    let care = solve_care(a, b, q, r, opts)?;
    let r_inv = Cholesky::new(r.clone())
        .ok_or(Error::Singular {
            context: "lqr_gain: R must be symmetric positive definite",
        })?
        .inverse();
    let gain = -(&r_inv * b.transpose() * &care.s);

    // Empirical stability proxy, skipped when the gain is exactly zero and
    // the loop is untouched (Q = 0 leaves the plant as-is).
    if gain.norm() > 0.0 || q.norm() == 0.0 {
        let n = a.nrows();
        let closed = a + b * &gain;
        let mut rng = SplitMix64::new(0x1CEB00DA);
        let x0 = DVector::from_fn(n, |_, _| rng.uniform(-1.0, 1.0));
        let x0_norm = x0.norm();
        if x0_norm > 0.0 && q.norm() > 0.0 {
            let mut x = x0;
            let steps = (opts.decay_horizon / opts.step).round() as usize;
            for k in 0..steps {
                x = rk4_step(|_, y| &closed * y, k as f64 * opts.step, &x, opts.step)?;
            }
            if x.norm() > 0.1 * x0_norm {
                return Err(Error::SynthesisFailure {
                    what: "lqr_gain closed-loop decay check",
                    residual: x.norm() / x0_norm,
                });
            }
        }
    }

    Ok(ExpertPolicy {
        gain,
        s: care.s,
        q: q.clone(),
        r: r.clone(),
    })
}

/// Observer gain placing the poles of `A - K3 C` at `poles` exactly, for
/// square invertible `C`: `K3 = (A - diag(poles)) C^-1`.
pub fn observer_gain(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    poles: &[f64],
) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if c.nrows() != n || c.ncols() != n {
        return Err(Error::UnsupportedConfiguration(format!(
            "observer_gain supports only square C matching A ({n}x{n}); \
             got {}x{}. Supply K3 directly in the configuration instead.",
            c.nrows(),
            c.ncols()
        )));
    }
    if poles.len() != n {
        return Err(Error::DimensionMismatch {
            context: "observer_gain",
            expected: format!("{n} poles"),
            actual: format!("{}", poles.len()),
        });
    }
    if poles.iter().any(|p| !p.is_finite() || *p >= 0.0) {
        return Err(Error::UnsupportedConfiguration(format!(
            "observer_gain requires strictly negative real poles, got {poles:?}"
        )));
    }
    let c_inv = c.clone().try_inverse().ok_or_else(|| {
        Error::UnsupportedConfiguration(
            "observer_gain requires invertible C; supply K3 directly in the configuration"
                .into(),
        )
    })?;
    let lambda = DMatrix::from_diagonal(&DVector::from_row_slice(poles));
    Ok((a - lambda) * c_inv)
}
