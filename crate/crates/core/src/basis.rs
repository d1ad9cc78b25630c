//! Quadratic basis functions, symmetric-matrix vectorization, regressor
//! assembly, and extraction of cost estimates from weight vectors.
//!
//! A symmetric matrix is flattened over upper-triangle index pairs `(i, j)`,
//! `i <= j`, in row-major order. Weights carry raw matrix entries; the factor
//! of two for off-diagonal terms lives in the basis monomials, so a single
//! weight layout serves the value function, the state cost, and the input
//! cost. Fixing the first input-cost entry `r1` removes the scaling ambiguity
//! of the inverse problem; the reduced weight vector stacks
//! `[w_s, w_q, w_r_minus]` where `w_r_minus` omits that first entry.

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::error::{Error, Result};

/// Index bookkeeping for the quadratic parameterization of an `n`-state,
/// `m`-input problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisLayout {
    n: usize,
    m: usize,
}

impl BasisLayout {
    pub fn new(n: usize, m: usize) -> Self {
        assert!(n > 0 && m > 0, "state and input dimensions must be positive");
        Self { n, m }
    }

    pub fn state_dim(&self) -> usize {
        self.n
    }

    pub fn input_dim(&self) -> usize {
        self.m
    }

    /// Number of value-function basis terms, `n(n+1)/2`.
    pub fn value_terms(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    /// Number of state-cost basis terms, `n(n+1)/2`.
    pub fn state_cost_terms(&self) -> usize {
        self.value_terms()
    }

    /// Number of input-cost basis terms, `m(m+1)/2`.
    pub fn input_cost_terms(&self) -> usize {
        self.m * (self.m + 1) / 2
    }

    /// Length of the reduced weight vector (first input-cost entry removed).
    pub fn reduced_len(&self) -> usize {
        self.value_terms() + self.state_cost_terms() + self.input_cost_terms() - 1
    }

    /// Rows contributed to the stacked regressor by one recorded sample.
    pub fn rows_per_sample(&self) -> usize {
        1 + self.m
    }
}

/// Upper-triangle index pairs `(i, j)`, `i <= j`, row-major.
fn pairs(dim: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..dim).flat_map(move |i| (i..dim).map(move |j| (i, j)))
}

/// Flatten a symmetric matrix over the upper-triangle layout.
pub fn sym_vec(s: &DMatrix<f64>) -> Result<DVector<f64>> {
    let dim = s.nrows();
    if !s.is_square() {
        return Err(Error::DimensionMismatch {
            context: "sym_vec",
            expected: "square matrix".into(),
            actual: format!("{}x{}", s.nrows(), s.ncols()),
        });
    }
    let scale = s.iter().cloned().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut asym = 0.0f64;
    for i in 0..dim {
        for j in (i + 1)..dim {
            asym = asym.max((s[(i, j)] - s[(j, i)]).abs());
        }
    }
    if asym > 1e-10 * scale.max(1.0) {
        return Err(Error::Asymmetric {
            context: "sym_vec",
            asymmetry: asym,
        });
    }
    Ok(DVector::from_iterator(
        dim * (dim + 1) / 2,
        pairs(dim).map(|(i, j)| s[(i, j)]),
    ))
}

/// Inverse of [`sym_vec`]: rebuild the symmetric matrix.
pub fn sym_unvec(w: &DVector<f64>, dim: usize) -> Result<DMatrix<f64>> {
    let expected = dim * (dim + 1) / 2;
    if w.len() != expected {
        return Err(Error::DimensionMismatch {
            context: "sym_unvec",
            expected: format!("{expected} entries for dimension {dim}"),
            actual: format!("{}", w.len()),
        });
    }
    let mut s = DMatrix::zeros(dim, dim);
    for (k, (i, j)) in pairs(dim).enumerate() {
        s[(i, j)] = w[k];
        s[(j, i)] = w[k];
    }
    Ok(s)
}

/// Quadratic feature vector: entry for pair `(i, j)` is `x_i^2` on the
/// diagonal and `2 x_i x_j` off it, so that `w' sigma(x) = x' unvec(w) x`.
///
/// Serves as the value-function, state-cost, and input-cost basis alike.
pub fn quad_features(x: &DVector<f64>) -> DVector<f64> {
    let dim = x.len();
    DVector::from_iterator(
        dim * (dim + 1) / 2,
        pairs(dim).map(|(i, j)| if i == j { x[i] * x[i] } else { 2.0 * x[i] * x[j] }),
    )
}

/// Jacobian of [`quad_features`]: one row per pair, one column per
/// coordinate. Satisfies `J(x)' w = 2 unvec(w) x`.
pub fn quad_features_jacobian(x: &DVector<f64>) -> DMatrix<f64> {
    let dim = x.len();
    let mut jac = DMatrix::zeros(dim * (dim + 1) / 2, dim);
    for (k, (i, j)) in pairs(dim).enumerate() {
        if i == j {
            jac[(k, i)] = 2.0 * x[i];
        } else {
            jac[(k, i)] = 2.0 * x[j];
            jac[(k, j)] = 2.0 * x[i];
        }
    }
    jac
}

/// Input-side basis: the `m x M` matrix with
/// `input_gradient_features(u) * sym_vec(R) = R u`.
pub fn input_gradient_features(u: &DVector<f64>) -> DMatrix<f64> {
    let m = u.len();
    let mut out = DMatrix::zeros(m, m * (m + 1) / 2);
    for (k, (i, j)) in pairs(m).enumerate() {
        if i == j {
            out[(i, k)] = u[i];
        } else {
            // R_ij multiplies u_j in row i and u_i in row j.
            out[(i, k)] = u[j];
            out[(j, k)] = u[i];
        }
    }
    out
}

/// Reduced weight estimate: value-function, state-cost, and trailing
/// input-cost weights, with the fixed scale `r1` carried alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub w_s: DVector<f64>,
    pub w_q: DVector<f64>,
    pub w_r_minus: DVector<f64>,
    pub r1: f64,
}

impl WeightVector {
    /// All-zero weights for a layout.
    pub fn zeros(layout: &BasisLayout, r1: f64) -> Self {
        Self {
            w_s: DVector::zeros(layout.value_terms()),
            w_q: DVector::zeros(layout.state_cost_terms()),
            w_r_minus: DVector::zeros(layout.input_cost_terms() - 1),
            r1,
        }
    }

    /// Stack into the reduced vector `[w_s; w_q; w_r_minus]`.
    pub fn reduced(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.w_s.len() + self.w_q.len() + self.w_r_minus.len());
        out.rows_mut(0, self.w_s.len()).copy_from(&self.w_s);
        out.rows_mut(self.w_s.len(), self.w_q.len()).copy_from(&self.w_q);
        out.rows_mut(self.w_s.len() + self.w_q.len(), self.w_r_minus.len())
            .copy_from(&self.w_r_minus);
        out
    }

    /// Rebuild from a reduced vector.
    pub fn from_reduced(reduced: &DVector<f64>, layout: &BasisLayout, r1: f64) -> Result<Self> {
        if reduced.len() != layout.reduced_len() {
            return Err(Error::DimensionMismatch {
                context: "WeightVector::from_reduced",
                expected: format!("{}", layout.reduced_len()),
                actual: format!("{}", reduced.len()),
            });
        }
        let p_s = layout.value_terms();
        let p_q = layout.state_cost_terms();
        Ok(Self {
            w_s: reduced.rows(0, p_s).into_owned(),
            w_q: reduced.rows(p_s, p_q).into_owned(),
            w_r_minus: reduced
                .rows(p_s + p_q, layout.input_cost_terms() - 1)
                .into_owned(),
            r1,
        })
    }

    /// Weights reproducing a given `(S, Q, R)` triple exactly, rescaled so
    /// the first input-cost entry equals `r1`. Fails if `R[0,0] = 0`.
    pub fn from_cost(
        s: &DMatrix<f64>,
        q: &DMatrix<f64>,
        r: &DMatrix<f64>,
        r1: f64,
    ) -> Result<Self> {
        let r_vec = sym_vec(r)?;
        if r_vec[0] == 0.0 {
            return Err(Error::Extraction(
                "cannot scale weights: R[0,0] is zero".into(),
            ));
        }
        let c = r1 / r_vec[0];
        Ok(Self {
            w_s: sym_vec(s)? * c,
            w_q: sym_vec(q)? * c,
            w_r_minus: r_vec.rows(1, r_vec.len() - 1).into_owned() * c,
            r1,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.r1.is_finite()
            && self.w_s.iter().all(|v| v.is_finite())
            && self.w_q.iter().all(|v| v.is_finite())
            && self.w_r_minus.iter().all(|v| v.is_finite())
    }
}

/// Regressor rows contributed by one `(x_hat, u)` sample.
///
/// `bellman_row * w + u1^2 r1` is the inverse Bellman error and
/// `control_rows * w + 2 u1 r1 e1` is the control residual; equivalently
/// `stacked() * w - constants` stacks both, where `constants` is the
/// corresponding slice of the target vector built from the fixed `r1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressorBlock {
    /// `1 x (P-1)` inverse-Bellman row.
    pub bellman_row: RowDVector<f64>,
    /// `m x (P-1)` control-residual rows.
    pub control_rows: DMatrix<f64>,
    /// Length `1 + m` constants `[-u1^2 r1, -2 u1 r1, 0, ...]`.
    pub constants: DVector<f64>,
}

impl RegressorBlock {
    /// All rows stacked: `(1 + m) x (P-1)`.
    pub fn stacked(&self) -> DMatrix<f64> {
        let m = self.control_rows.nrows();
        let cols = self.bellman_row.len();
        let mut out = DMatrix::zeros(1 + m, cols);
        out.row_mut(0).copy_from(&self.bellman_row);
        out.rows_mut(1, m).copy_from(&self.control_rows);
        out
    }

    /// Residual `[delta; delta_u] = stacked * w - constants` at a weight
    /// estimate.
    pub fn residual(&self, w: &WeightVector) -> DVector<f64> {
        self.stacked() * w.reduced() - &self.constants
    }
}

/// Assemble the regressor block for one sample.
///
/// The drift factor `A x_hat + B u` multiplies the value-function gradient
/// in the Bellman row; the input-gradient basis enters the control rows with
/// a factor of two. The column belonging to the fixed first input-cost entry
/// is removed and its contribution moved into `constants`.
pub fn build_regressor_block(
    x_hat: &DVector<f64>,
    u: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    r1: f64,
) -> Result<RegressorBlock> {
    let n = a.nrows();
    let m = b.ncols();
    if x_hat.len() != n || u.len() != m || b.nrows() != n || !a.is_square() {
        return Err(Error::DimensionMismatch {
            context: "build_regressor_block",
            expected: format!("x_hat len {n}, u len {m}"),
            actual: format!("x_hat len {}, u len {}", x_hat.len(), u.len()),
        });
    }
    if !r1.is_finite() || r1 <= 0.0 {
        return Err(Error::UnsupportedConfiguration(format!(
            "build_regressor_block requires r1 > 0, got {r1}"
        )));
    }
    let layout = BasisLayout::new(n, m);
    let p_s = layout.value_terms();
    let p_q = layout.state_cost_terms();
    let m_r = layout.input_cost_terms();

    let drift = a * x_hat + b * u;
    let grad = quad_features_jacobian(x_hat); // P_S x n
    let drift_features = &grad * &drift; // P_S
    let state_features = quad_features(x_hat); // P_Q
    let input_features = quad_features(u); // M
    let input_grad = input_gradient_features(u); // m x M

    let cols = layout.reduced_len();
    let mut bellman_row = RowDVector::zeros(cols);
    let mut control_rows = DMatrix::zeros(m, cols);

    for k in 0..p_s {
        bellman_row[k] = drift_features[k];
    }
    for k in 0..p_q {
        bellman_row[p_s + k] = state_features[k];
    }
    // Input-cost columns, skipping the first (fixed r1) term.
    for k in 1..m_r {
        bellman_row[p_s + p_q + k - 1] = input_features[k];
    }

    let b_t_grad_t = b.transpose() * grad.transpose(); // m x P_S
    for row in 0..m {
        for k in 0..p_s {
            control_rows[(row, k)] = b_t_grad_t[(row, k)];
        }
        for k in 1..m_r {
            control_rows[(row, p_s + p_q + k - 1)] = 2.0 * input_grad[(row, k)];
        }
    }

    let mut constants = DVector::zeros(1 + m);
    constants[0] = -u[0] * u[0] * r1;
    constants[1] = -2.0 * u[0] * r1;

    Ok(RegressorBlock {
        bellman_row,
        control_rows,
        constants,
    })
}

/// Diagonal entries of the symmetric matrix packed in `w`, without
/// rebuilding the matrix. Row `i` of the upper triangle starts at offset
/// `i*dim - i(i-1)/2` and leads with its diagonal entry.
pub fn sym_vec_diagonal(w: &DVector<f64>, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|i| w[i * dim - i * i.saturating_sub(1) / 2])
        .collect()
}

/// Cost estimate extracted from a weight vector.
#[derive(Debug, Clone)]
pub struct ExtractedSolution {
    pub s_hat: DMatrix<f64>,
    pub q_hat: DMatrix<f64>,
    pub r_hat: DMatrix<f64>,
    /// Implied feedback gain `-r_hat^-1 B' s_hat`.
    pub k_hat: DMatrix<f64>,
}

/// Rebuild `(S, Q, R)` estimates and the implied feedback gain from weights.
///
/// Fails with an extraction error when the assembled input cost is singular;
/// this is expected while estimates are still in their transient.
pub fn extract_solution(w: &WeightVector, b: &DMatrix<f64>) -> Result<ExtractedSolution> {
    let n = b.nrows();
    let m = b.ncols();
    let s_hat = sym_unvec(&w.w_s, n)?;
    let q_hat = sym_unvec(&w.w_q, n)?;
    let mut r_full = DVector::zeros(w.w_r_minus.len() + 1);
    r_full[0] = w.r1;
    r_full.rows_mut(1, w.w_r_minus.len()).copy_from(&w.w_r_minus);
    let r_hat = sym_unvec(&r_full, m)?;
    let r_inv = r_hat.clone().try_inverse().ok_or_else(|| {
        Error::Extraction("estimated input cost is singular".into())
    })?;
    let k_hat = -(r_inv * b.transpose() * &s_hat);
    Ok(ExtractedSolution {
        s_hat,
        q_hat,
        r_hat,
        k_hat,
    })
}
