//! Plant and cost descriptions.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Linear time-invariant plant `x' = A x + B u` with measurement `y = C x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

impl LtiSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "LtiSystem",
                expected: format!("square A ({n}x{n})"),
                actual: format!("{}x{}", a.nrows(), a.ncols()),
            });
        }
        if b.nrows() != n {
            return Err(Error::DimensionMismatch {
                context: "LtiSystem",
                expected: format!("B with {n} rows"),
                actual: format!("{}x{}", b.nrows(), b.ncols()),
            });
        }
        if c.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "LtiSystem",
                expected: format!("C with {n} columns"),
                actual: format!("{}x{}", c.nrows(), c.ncols()),
            });
        }
        for m in [&a, &b, &c] {
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    context: "LtiSystem",
                });
            }
        }
        Ok(Self { a, b, c })
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Input dimension.
    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    /// Output dimension.
    pub fn l(&self) -> usize {
        self.c.nrows()
    }

    pub fn output(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.c * x
    }
}

/// State and input cost weights of a quadratic cost functional.
#[derive(Debug, Clone, PartialEq)]
pub struct CostPair {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl CostPair {
    pub fn new(q: DMatrix<f64>, r: DMatrix<f64>) -> Result<Self> {
        if !q.is_square() || !r.is_square() {
            return Err(Error::DimensionMismatch {
                context: "CostPair",
                expected: "square Q and R".into(),
                actual: format!(
                    "Q {}x{}, R {}x{}",
                    q.nrows(),
                    q.ncols(),
                    r.nrows(),
                    r.ncols()
                ),
            });
        }
        Ok(Self { q, r })
    }
}
