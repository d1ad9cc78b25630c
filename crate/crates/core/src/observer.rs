//! The coupled state/weight observer.
//!
//! The state estimate follows a Luenberger correction; the weight estimate
//! follows a ridge-regularized normal-equation flow driven by the active
//! history stack:
//!
//! ```text
//! x_hat' = A x_hat + B u + K3 (y - C x_hat)
//! w'     = k4 (G + eps I)^-1 (rhs - G w)
//! ```
//!
//! where `G` is the Gram matrix of the stacked regressor and `rhs` the
//! regressor-transposed target vector, both held constant between stack
//! swaps. The stacked residual `delta = target - regressor * w` then obeys
//! `delta' = -Sigma k4 (G + eps I)^-1 Sigma' delta`, which is non-increasing
//! in norm; its limit is the component of the target outside the regressor
//! range, and zero exactly when the data are informative.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::basis::{extract_solution, WeightVector};
use crate::error::{Error, Result};
use crate::numerics::rk4_step;
use crate::stack::HistoryStack;
use crate::system::LtiSystem;

/// Observer gains: the Luenberger gain, the scalar weight-update rate, and
/// the ridge term.
#[derive(Debug, Clone)]
pub struct GainConfig {
    /// State-estimate correction gain (`n x L`).
    pub k3: DMatrix<f64>,
    /// Weight-update rate; the weight gain matrix is `k4 * I`.
    pub k4: f64,
    /// Ridge term keeping the normal matrix invertible.
    pub epsilon: f64,
}

impl GainConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.k4.is_finite() || self.k4 <= 0.0 {
            return Err(Error::UnsupportedConfiguration(format!(
                "weight-update rate k4 must be positive, got {}",
                self.k4
            )));
        }
        if self.epsilon < 0.0 {
            return Err(Error::UnsupportedConfiguration(format!(
                "epsilon must be non-negative, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Estimator state: state estimate, weight estimate, and time.
#[derive(Debug, Clone)]
pub struct ObserverState {
    pub x_hat: DVector<f64>,
    pub weights: WeightVector,
    pub t: f64,
}

/// Stacked residual `target - regressor * w`.
pub fn delta(
    regressor: &DMatrix<f64>,
    target: &DVector<f64>,
    w_reduced: &DVector<f64>,
) -> Result<DVector<f64>> {
    if regressor.nrows() != target.len() || regressor.ncols() != w_reduced.len() {
        return Err(Error::DimensionMismatch {
            context: "delta",
            expected: format!("{}x{}", target.len(), w_reduced.len()),
            actual: format!("{}x{}", regressor.nrows(), regressor.ncols()),
        });
    }
    Ok(target - regressor * w_reduced)
}

/// Precomputed weight-update operator for one fixed stack segment.
///
/// Holds the Cholesky factorization of `G + eps I`, so each derivative
/// evaluation costs two triangular solves instead of a fresh factorization.
#[derive(Debug, Clone)]
pub struct WeightUpdate {
    gram: DMatrix<f64>,
    rhs: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    k4: f64,
}

impl WeightUpdate {
    /// Build from the active stack. Returns `None` for an empty stack: with
    /// no recorded data the weight derivative is held at zero rather than
    /// dividing a zero regressor by the ridge term.
    pub fn from_stack(stack: &HistoryStack, gains: &GainConfig) -> Result<Option<Self>> {
        gains.validate()?;
        if stack.is_empty() {
            return Ok(None);
        }
        let gram = stack.gram().clone();
        let dim = gram.nrows();
        let mut regularized = gram.clone();
        for i in 0..dim {
            regularized[(i, i)] += gains.epsilon;
        }
        let chol = Cholesky::new(regularized).ok_or(Error::Singular {
            context: "weight update: Gram matrix with eps = 0 is singular",
        })?;
        Ok(Some(Self {
            gram,
            rhs: stack.rhs().clone(),
            chol,
            k4: gains.k4,
        }))
    }

    /// Weight derivative `k4 (G + eps I)^-1 (rhs - G w)`.
    pub fn derivative(&self, w_reduced: &DVector<f64>) -> DVector<f64> {
        let residual = &self.rhs - &self.gram * w_reduced;
        self.chol.solve(&residual) * self.k4
    }

    /// Solve `(G + eps I) y = z` with the cached factorization.
    pub fn solve_regularized(&self, z: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(z)
    }
}

/// One fixed-step update of the coupled observer, holding the measurement
/// `y` and input `u` constant across the step (zero-order hold) and the
/// active stack constant as well.
pub fn observer_step(
    state: &ObserverState,
    y: &DVector<f64>,
    u: &DVector<f64>,
    active: &HistoryStack,
    sys: &LtiSystem,
    gains: &GainConfig,
    h: f64,
) -> Result<ObserverState> {
    let update = WeightUpdate::from_stack(active, gains)?;
    let n = sys.n();
    let w_len = state.weights.reduced().len();

    let mut joint = DVector::zeros(n + w_len);
    joint.rows_mut(0, n).copy_from(&state.x_hat);
    joint.rows_mut(n, w_len).copy_from(&state.weights.reduced());

    let next = rk4_step(
        |_, z| {
            let x_hat = z.rows(0, n).into_owned();
            let w = z.rows(n, w_len).into_owned();
            let dx = &sys.a * &x_hat + &sys.b * u + &gains.k3 * (y - sys.output(&x_hat));
            let dw = match &update {
                Some(op) => op.derivative(&w),
                None => DVector::zeros(w_len),
            };
            let mut dz = DVector::zeros(n + w_len);
            dz.rows_mut(0, n).copy_from(&dx);
            dz.rows_mut(n, w_len).copy_from(&dw);
            dz
        },
        state.t,
        &joint,
        h,
    )?;

    let weights = WeightVector::from_reduced(
        &next.rows(n, w_len).into_owned(),
        active.layout(),
        state.weights.r1,
    )?;
    Ok(ObserverState {
        x_hat: next.rows(0, n).into_owned(),
        weights,
        t: state.t + h,
    })
}

/// Orbital derivative of `||delta||^2 / 2` along the weight flow:
/// `-k4 * delta' Sigma (G + eps I)^-1 Sigma' delta`. Never positive beyond
/// roundoff.
pub fn vdot_check(
    regressor: &DMatrix<f64>,
    delta: &DVector<f64>,
    k4: f64,
    eps: f64,
) -> Result<f64> {
    if regressor.nrows() != delta.len() {
        return Err(Error::DimensionMismatch {
            context: "vdot_check",
            expected: format!("delta of length {}", regressor.nrows()),
            actual: format!("{}", delta.len()),
        });
    }
    let z = regressor.transpose() * delta;
    let dim = regressor.ncols();
    let mut reg = regressor.transpose() * regressor;
    for i in 0..dim {
        reg[(i, i)] += eps;
    }
    let solved = match Cholesky::new(reg.clone()) {
        Some(chol) => chol.solve(&z),
        None => {
            // eps = 0 with singular Gram: diagnostic fallback through the
            // eigendecomposition pseudo-inverse.
            let eig = SymmetricEigen::new(reg);
            let max_ev = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
            let cutoff = max_ev * 1e-12;
            let coeffs = eig.eigenvectors.transpose() * &z;
            let mut acc = DVector::zeros(dim);
            for (i, &ev) in eig.eigenvalues.iter().enumerate() {
                if ev > cutoff {
                    acc += eig.eigenvectors.column(i) * (coeffs[i] / ev);
                }
            }
            acc
        }
    };
    Ok(-k4 * z.dot(&solved))
}

/// Certification of a weight estimate against the recorded data.
#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    /// Quadratic-form residual of the Riccati expression at each recorded
    /// state estimate.
    pub pointwise_hjb_residuals: Vec<f64>,
    /// Frobenius distance between the implied and the expert feedback gain.
    pub gain_error: f64,
    /// Frobenius norm of the full Riccati expression. Diagnostic only; the
    /// certificate uses the pointwise residuals.
    pub full_hjb_residual: f64,
    /// Gain tolerance the certificate was evaluated at.
    pub varpi: f64,
    /// Pointwise tolerance per unit of `1 + ||x||^2`.
    pub hjb_tol: f64,
    /// True when every pointwise residual and the gain error pass.
    pub equivalent: bool,
}

/// Evaluate whether extracted estimates constitute an equivalent solution on
/// the recorded data: the Riccati quadratic form must vanish at every stored
/// state (to `hjb_tol`, scaled by `1 + ||x||^2`) and the implied gain must be
/// within `varpi` of the expert gain in Frobenius norm.
pub fn certify_equivalence(
    w: &WeightVector,
    stack: &HistoryStack,
    sys: &LtiSystem,
    expert_gain: &DMatrix<f64>,
    varpi: f64,
    hjb_tol: f64,
) -> Result<EquivalenceReport> {
    let sol = extract_solution(w, &sys.b)?;
    let r_inv = sol
        .r_hat
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Extraction("estimated input cost is singular".into()))?;
    let hjb = sys.a.transpose() * &sol.s_hat + &sol.s_hat * &sys.a
        - &sol.s_hat * &sys.b * r_inv * sys.b.transpose() * &sol.s_hat
        + &sol.q_hat;

    let mut pointwise = Vec::with_capacity(stack.len());
    let mut max_scaled: f64 = 0.0;
    for e in stack.entries() {
        let r = e.x_hat.dot(&(&hjb * &e.x_hat));
        max_scaled = max_scaled.max(r.abs() / (1.0 + e.x_hat.norm_squared()));
        pointwise.push(r);
    }
    let gain_error = (&sol.k_hat - expert_gain).norm();
    Ok(EquivalenceReport {
        pointwise_hjb_residuals: pointwise,
        gain_error,
        full_hjb_residual: hjb.norm(),
        varpi,
        hjb_tol,
        equivalent: max_scaled <= hjb_tol && gain_error <= varpi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisLayout;
    use crate::rng::SplitMix64;
    use crate::stack::{StackConfig, StackEntry};
    use crate::synthesis::{lqr_gain, CareOptions, ExpertPolicy};
    use nalgebra::{DMatrix, DVector};

    fn academic_system() -> (LtiSystem, ExpertPolicy) {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 5.0, 7.0]));
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![11.0, 13.0, 17.0]));
        let q = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0, 3.0]));
        let r = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.75, 4.0]));
        let expert = lqr_gain(&a, &b, &q, &r, &CareOptions::default()).unwrap();
        let sys = LtiSystem::new(a, b, DMatrix::identity(3, 3)).unwrap();
        (sys, expert)
    }

    fn expert_stack(
        sys: &LtiSystem,
        expert: &ExpertPolicy,
        count: usize,
        seed: u64,
    ) -> HistoryStack {
        let mut stack = HistoryStack::new(
            BasisLayout::new(3, 3),
            StackConfig {
                capacity: count,
                epsilon: 1e-3,
                cond_threshold: 1e8,
                r1: 1.0,
            },
        );
        let mut rng = SplitMix64::new(seed);
        for k in 0..count {
            let x = DVector::from_fn(3, |_, _| rng.uniform(-2.0, 2.0));
            let u = &expert.gain * &x;
            stack
                .try_add(StackEntry { t: k as f64, x_hat: x, u }, sys)
                .unwrap();
        }
        stack
    }

    fn gains(sys: &LtiSystem, k4: f64, epsilon: f64) -> GainConfig {
        GainConfig {
            k3: DMatrix::zeros(sys.n(), sys.l()),
            k4,
            epsilon,
        }
    }

    #[test]
    fn delta_examples() {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let target = DVector::from_vec(vec![3.0, -1.0]);
        let w = DVector::from_vec(vec![3.0, -1.0]);
        assert!(delta(&sigma, &target, &w).unwrap().norm() == 0.0);

        let zero = DMatrix::zeros(2, 2);
        let d = delta(&zero, &target, &w).unwrap();
        assert_eq!(d, target);
    }

    #[test]
    fn delta_vanishes_at_expert_weights_on_exact_data() {
        let (sys, expert) = academic_system();
        let stack = expert_stack(&sys, &expert, 17, 21);
        let w = WeightVector::from_cost(&expert.s, &expert.q, &expert.r, 1.0).unwrap();
        let d = delta(
            &stack.assemble_regressor(),
            &stack.assemble_target(),
            &w.reduced(),
        )
        .unwrap();
        assert!(d.norm() <= 1e-9, "delta norm {}", d.norm());
    }

    #[test]
    fn open_loop_step_leaves_weights_untouched() {
        let (sys, expert) = academic_system();
        let stack = expert_stack(&sys, &expert, 5, 22);
        let layout = BasisLayout::new(3, 3);
        // k4 can't be zero by contract; an empty stack freezes the weights
        // instead. With K3 = 0 the state estimate propagates open loop.
        let empty = HistoryStack::new(
            layout,
            StackConfig {
                capacity: 5,
                epsilon: 1e-3,
                cond_threshold: 1e8,
                r1: 1.0,
            },
        );
        drop(stack);
        let state = ObserverState {
            x_hat: DVector::from_vec(vec![1.0, 0.5, -0.25]),
            weights: WeightVector::zeros(&layout, 1.0),
            t: 0.0,
        };
        let u = DVector::zeros(3);
        let y = DVector::zeros(3);
        let h = 1e-3;
        let next = observer_step(&state, &y, &u, &empty, &sys, &gains(&sys, 50.0, 1e-3), h)
            .unwrap();
        // Weights frozen.
        assert_eq!(next.weights.reduced(), state.weights.reduced());
        // State followed x' = A x (u = 0, K3 = 0).
        let expected = crate::numerics::rk4_step(
            |_, x| &sys.a * x,
            0.0,
            &state.x_hat,
            h,
        )
        .unwrap();
        assert!((next.x_hat - expected).norm() <= 1e-14);
    }

    #[test]
    fn fixed_stack_flow_reaches_least_squares_limit() {
        let (sys, expert) = academic_system();
        let stack = expert_stack(&sys, &expert, 17, 23);
        let layout = BasisLayout::new(3, 3);
        let gains = gains(&sys, 50.0, 1e-3);

        let sigma = stack.assemble_regressor();
        let target = stack.assemble_target();

        let mut state = ObserverState {
            x_hat: DVector::zeros(3),
            weights: WeightVector::zeros(&layout, 1.0),
            t: 0.0,
        };
        let y = DVector::zeros(3);
        let u = DVector::zeros(3);
        let h = 1e-3;
        let mut last_norm = f64::INFINITY;
        for _ in 0..20_000 {
            state = observer_step(&state, &y, &u, &stack, &sys, &gains, h).unwrap();
            let d = delta(&sigma, &target, &state.weights.reduced()).unwrap();
            let norm = d.norm();
            assert!(norm <= last_norm + 1e-9, "delta must not grow");
            last_norm = norm;
        }

        // Stationarity: the normal equations hold at the limit.
        let d = delta(&sigma, &target, &state.weights.reduced()).unwrap();
        assert!(
            (sigma.transpose() * &d).norm() <= 1e-6 * target.norm().max(1.0),
            "normal equations violated"
        );

        // Independent oracle: the fitted value matches the projection of the
        // target onto the regressor range, computed by SVD.
        let svd = sigma.clone().svd(true, false);
        let u_mat = svd.u.as_ref().unwrap();
        let s_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let mut projected = DVector::zeros(target.len());
        for (i, &s) in svd.singular_values.iter().enumerate() {
            if s > 1e-8 * s_max {
                let col = u_mat.column(i);
                projected += col * col.dot(&target);
            }
        }
        let fitted = &sigma * state.weights.reduced();
        assert!(
            (fitted - projected).norm() <= 1e-6 * target.norm(),
            "fixed-stack limit does not match the SVD projector"
        );
    }

    #[test]
    fn null_space_component_is_frozen() {
        let (sys, expert) = academic_system();
        // Modest sample amplitudes keep the normal-equation solve well
        // conditioned, so solver roundoff does not masquerade as drift.
        let mut stack = HistoryStack::new(
            BasisLayout::new(3, 3),
            StackConfig {
                capacity: 17,
                epsilon: 1e-3,
                cond_threshold: 1e8,
                r1: 1.0,
            },
        );
        let mut seed_rng = SplitMix64::new(24);
        for k in 0..17 {
            let x = DVector::from_fn(3, |_, _| seed_rng.uniform(-1.0, 1.0));
            let u = &expert.gain * &x;
            stack
                .try_add(StackEntry { t: k as f64, x_hat: x, u }, &sys)
                .unwrap();
        }
        let layout = BasisLayout::new(3, 3);
        let gains = gains(&sys, 50.0, 1e-3);
        let sigma = stack.assemble_regressor();

        // Null-space basis of the regressor from right singular vectors.
        let svd = sigma.clone().svd(false, true);
        let v_t = svd.v_t.as_ref().unwrap();
        let s_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let mut null_rows: Vec<usize> = Vec::new();
        for (i, &s) in svd.singular_values.iter().enumerate() {
            if s <= 1e-8 * s_max {
                null_rows.push(i);
            }
        }
        assert!(
            !null_rows.is_empty(),
            "non-unique problem must have a regressor null space"
        );

        let w0 = {
            let mut rng = SplitMix64::new(77);
            DVector::from_fn(layout.reduced_len(), |_, _| rng.uniform(-0.5, 0.5))
        };
        let mut state = ObserverState {
            x_hat: DVector::zeros(3),
            weights: WeightVector::from_reduced(&w0, &layout, 1.0).unwrap(),
            t: 0.0,
        };
        let y = DVector::zeros(3);
        let u = DVector::zeros(3);
        for _ in 0..3000 {
            state = observer_step(&state, &y, &u, &stack, &sys, &gains, 1e-3).unwrap();
        }
        let drift = state.weights.reduced() - &w0;
        for &row in &null_rows {
            let along = v_t.row(row).transpose().dot(&drift);
            assert!(
                along.abs() <= 1e-8,
                "null-space drift {along} along direction {row}"
            );
        }
    }

    #[test]
    fn vdot_cases() {
        // Columns of sigma span e1, e2 of R^3.
        let sigma = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let k4 = 50.0;
        let eps = 1e-3;

        // Delta in the left null space: derivative is zero.
        let d_null = DVector::from_vec(vec![0.0, 0.0, 2.0]);
        let v = vdot_check(&sigma, &d_null, k4, eps).unwrap();
        assert!(v.abs() <= 1e-12 * d_null.norm_squared());

        // Delta in the range: strictly negative.
        let d_range = &sigma * DVector::from_vec(vec![1.0, -2.0]);
        let v = vdot_check(&sigma, &d_range, k4, eps).unwrap();
        assert!(v < 0.0);

        // Zero delta: zero.
        let v = vdot_check(&sigma, &DVector::zeros(3), k4, eps).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn cached_solver_agrees_with_vdot_check() {
        // The run loop evaluates the orbital derivative through the cached
        // factorization; it must agree with the public operation.
        let (sys, expert) = academic_system();
        let stack = expert_stack(&sys, &expert, 17, 29);
        let gains = gains(&sys, 50.0, 1e-3);
        let op = WeightUpdate::from_stack(&stack, &gains).unwrap().unwrap();
        let sigma = stack.assemble_regressor();
        let mut rng = SplitMix64::new(41);
        for _ in 0..10 {
            let d = DVector::from_fn(sigma.nrows(), |_, _| rng.uniform(-1.0, 1.0));
            let z = sigma.transpose() * &d;
            let via_cache = -gains.k4 * z.dot(&op.solve_regularized(&z));
            let via_check = vdot_check(&sigma, &d, gains.k4, gains.epsilon).unwrap();
            assert!(
                (via_cache - via_check).abs() <= 1e-9 * via_check.abs().max(1.0),
                "{via_cache} vs {via_check}"
            );
        }
    }

    #[test]
    fn vdot_never_positive_on_trajectory_data() {
        let (sys, expert) = academic_system();
        let stack = expert_stack(&sys, &expert, 17, 25);
        let sigma = stack.assemble_regressor();
        let mut rng = SplitMix64::new(31);
        for _ in 0..50 {
            let d = DVector::from_fn(sigma.nrows(), |_, _| rng.uniform(-1.0, 1.0));
            let v = vdot_check(&sigma, &d, 50.0, 1e-3).unwrap();
            assert!(v <= 1e-12 * d.norm_squared(), "vdot {v}");
        }
    }

    #[test]
    fn certification_accepts_expert_and_scaled_expert() {
        let (sys, expert) = academic_system();
        let stack = expert_stack(&sys, &expert, 17, 26);

        let w = WeightVector::from_cost(&expert.s, &expert.q, &expert.r, 1.0).unwrap();
        let report =
            certify_equivalence(&w, &stack, &sys, &expert.gain, 1e-6, 1e-8).unwrap();
        assert!(report.equivalent);
        assert!(report.gain_error <= 1e-10);
        assert!(report
            .pointwise_hjb_residuals
            .iter()
            .all(|r| r.abs() <= 1e-9));

        // Scaled cost: same gain, different parameters.
        let w2 = WeightVector::from_cost(
            &(&expert.s * 2.0),
            &(&expert.q * 2.0),
            &(&expert.r * 2.0),
            2.0,
        )
        .unwrap();
        let report2 =
            certify_equivalence(&w2, &stack, &sys, &expert.gain, 1e-6, 1e-8).unwrap();
        assert!(report2.equivalent);
        let sol = extract_solution(&w2, &sys.b).unwrap();
        assert!((&sol.q_hat - &expert.q).norm() > 0.1);
    }

    #[test]
    fn certification_rejects_zero_weights() {
        let (sys, expert) = academic_system();
        let stack = expert_stack(&sys, &expert, 17, 27);
        let layout = BasisLayout::new(3, 3);
        let w = WeightVector::zeros(&layout, 1.0);
        // R = diag(1, 0, 0) is singular: extraction error.
        assert!(certify_equivalence(&w, &stack, &sys, &expert.gain, 1e-6, 1e-8).is_err());
    }

    #[test]
    fn certification_rejects_zero_gain_scalar() {
        // Scalar variant where R stays invertible: gain 0 fails the test.
        let a = DMatrix::from_element(1, 1, 3.0);
        let b = DMatrix::from_element(1, 1, 11.0);
        let q = DMatrix::from_element(1, 1, 1.0);
        let r = DMatrix::from_element(1, 1, 1.0);
        let expert = lqr_gain(&a, &b, &q, &r, &CareOptions::default()).unwrap();
        let sys = LtiSystem::new(a, b, DMatrix::identity(1, 1)).unwrap();
        let mut stack = HistoryStack::new(
            BasisLayout::new(1, 1),
            StackConfig {
                capacity: 3,
                epsilon: 1e-3,
                cond_threshold: 1e8,
                r1: 1.0,
            },
        );
        let mut rng = SplitMix64::new(5);
        for k in 0..3 {
            let x = DVector::from_vec(vec![rng.uniform(-2.0, 2.0)]);
            let u = &expert.gain * &x;
            stack
                .try_add(StackEntry { t: k as f64, x_hat: x, u }, &sys)
                .unwrap();
        }
        let w = WeightVector::zeros(&BasisLayout::new(1, 1), 1.0);
        let report =
            certify_equivalence(&w, &stack, &sys, &expert.gain, 1e-6, 1e-8).unwrap();
        assert!(!report.equivalent);
    }

    #[test]
    fn singular_normal_matrix_with_zero_eps_errors() {
        let (sys, expert) = academic_system();
        // Rank-deficient data with eps = 0 must surface as a singularity.
        let stack = expert_stack(&sys, &expert, 17, 28);
        let gains = GainConfig {
            k3: DMatrix::zeros(3, 3),
            k4: 50.0,
            epsilon: 0.0,
        };
        let err = WeightUpdate::from_stack(&stack, &gains).unwrap_err();
        assert!(matches!(err, Error::Singular { .. }));
    }
}
