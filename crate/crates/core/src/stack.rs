//! History stacks: fixed-capacity sample buffers with condition-driven
//! point selection, the swap-and-purge schedule, and the data-informativity
//! diagnostic.
//!
//! Two stacks run side by side: the active one drives weight updates while
//! the filling one collects fresh samples. Once the filling stack is well
//! conditioned and enough time has passed, it replaces the active stack and
//! is purged, so stale state estimates age out of the dataset.
//!
//! The stack entries are the source of truth. The stacked regressor, its
//! Gram matrix, and the target vector are derived from the entries in slot
//! order, so they regenerate bit-identically.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::basis::{build_regressor_block, BasisLayout, RegressorBlock};
use crate::error::{Error, Result};
use crate::numerics::{
    gram_regularized_condition, numerical_rank, range_projection_residual,
    regularized_condition,
};
use crate::system::LtiSystem;

/// One recorded sample: time, state estimate, and input.
#[derive(Debug, Clone, PartialEq)]
pub struct StackEntry {
    pub t: f64,
    pub x_hat: DVector<f64>,
    pub u: DVector<f64>,
}

impl StackEntry {
    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.t >= 0.0
            && self.x_hat.iter().all(|v| v.is_finite())
            && self.u.iter().all(|v| v.is_finite())
    }
}

/// Outcome of offering a sample to a stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AddDecision {
    /// Stack had spare capacity; the sample was appended.
    Appended,
    /// The sample replaced the entry in this slot, improving conditioning.
    Replaced(usize),
    /// No single-slot replacement improved conditioning.
    Rejected,
}

/// Selection and readiness thresholds for a stack.
#[derive(Debug, Clone)]
pub struct StackConfig {
    /// Capacity in samples. A warning flag is raised (not an error) when
    /// this is below the reduced weight count, since under-determined
    /// problems may still be informative.
    pub capacity: usize,
    /// Ridge term used in the regularized condition number.
    pub epsilon: f64,
    /// Readiness threshold on the regularized condition number.
    pub cond_threshold: f64,
    /// Fixed first input-cost entry used when building regressor rows.
    pub r1: f64,
}

/// Fixed-capacity history stack with derived regressor state.
#[derive(Debug, Clone)]
pub struct HistoryStack {
    config: StackConfig,
    layout: BasisLayout,
    entries: Vec<StackEntry>,
    blocks: Vec<RegressorBlock>,
    /// Gram matrix of the stacked regressor, rebuilt on every commit.
    gram: DMatrix<f64>,
    /// Regressor' * target vector, rebuilt on every commit.
    rhs: DVector<f64>,
    /// Squared norm of the target vector.
    target_norm2: f64,
    /// Cached condition number of the committed stack.
    cond: Option<f64>,
}

impl HistoryStack {
    pub fn new(layout: BasisLayout, config: StackConfig) -> Self {
        let cols = layout.reduced_len();
        Self {
            config,
            layout,
            entries: Vec::new(),
            blocks: Vec::new(),
            gram: DMatrix::zeros(cols, cols),
            rhs: DVector::zeros(cols),
            target_norm2: 0.0,
            cond: None,
        }
    }

    pub fn layout(&self) -> &BasisLayout {
        &self.layout
    }

    pub fn config(&self) -> &StackConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() >= self.config.capacity
    }

    /// True when the capacity cannot determine all reduced weights.
    pub fn under_capacity_warning(&self) -> bool {
        self.config.capacity < self.layout.reduced_len()
    }

    pub fn entries(&self) -> &[StackEntry] {
        &self.entries
    }

    /// Gram matrix of the stacked regressor.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Regressor-transposed target vector.
    pub fn rhs(&self) -> &DVector<f64> {
        &self.rhs
    }

    /// Squared Euclidean norm of the target vector.
    pub fn target_norm_squared(&self) -> f64 {
        self.target_norm2
    }

    /// Stacked regressor, `len * (1 + m)` rows by `P - 1` columns.
    pub fn assemble_regressor(&self) -> DMatrix<f64> {
        let rows_per = self.layout.rows_per_sample();
        let cols = self.layout.reduced_len();
        let mut out = DMatrix::zeros(self.entries.len() * rows_per, cols);
        for (i, block) in self.blocks.iter().enumerate() {
            out.rows_mut(i * rows_per, rows_per)
                .copy_from(&block.stacked());
        }
        out
    }

    /// Stacked target vector matching [`Self::assemble_regressor`].
    pub fn assemble_target(&self) -> DVector<f64> {
        let rows_per = self.layout.rows_per_sample();
        let mut out = DVector::zeros(self.entries.len() * rows_per);
        for (i, block) in self.blocks.iter().enumerate() {
            out.rows_mut(i * rows_per, rows_per)
                .copy_from(&block.constants);
        }
        out
    }

    fn rebuild_derived(&mut self) {
        let cols = self.layout.reduced_len();
        let mut gram = DMatrix::zeros(cols, cols);
        let mut rhs = DVector::zeros(cols);
        let mut target_norm2 = 0.0;
        for block in &self.blocks {
            let stacked = block.stacked();
            gram += stacked.transpose() * &stacked;
            rhs += stacked.transpose() * &block.constants;
            target_norm2 += block.constants.norm_squared();
        }
        self.gram = gram;
        self.rhs = rhs;
        self.target_norm2 = target_norm2;
        self.cond = None;
    }

    /// Regularized condition number of the committed stack: the spread of
    /// the full eigenvalue spectrum of `Gram + eps I`.
    ///
    /// Equals the singular-value route through the stacked regressor
    /// whenever the stack has at least as many rows as columns; an
    /// under-filled stack additionally counts its structurally empty
    /// directions, which is what the selection and readiness rules want.
    pub fn condition(&mut self) -> Result<f64> {
        if let Some(c) = self.cond {
            return Ok(c);
        }
        let c = gram_regularized_condition(&self.gram, self.config.epsilon)?;
        self.cond = Some(c);
        Ok(c)
    }

    /// True when the stack is full, carries signal, and meets the
    /// condition-number threshold.
    pub fn is_ready(&mut self) -> bool {
        if !self.is_full() {
            return false;
        }
        if self.gram.iter().all(|v| *v == 0.0) {
            return false;
        }
        match self.condition() {
            Ok(c) => c <= self.config.cond_threshold,
            Err(_) => false,
        }
    }

    /// Offer a sample. Appends while below capacity; once full, commits the
    /// single-slot replacement that most decreases the regularized condition
    /// number, if any decreases it strictly. Ties break on the lowest slot.
    pub fn try_add(
        &mut self,
        candidate: StackEntry,
        sys: &LtiSystem,
    ) -> Result<AddDecision> {
        if !candidate.is_finite() {
            return Err(Error::NonFinite {
                context: "HistoryStack::try_add",
            });
        }
        let block = build_regressor_block(
            &candidate.x_hat,
            &candidate.u,
            &sys.a,
            &sys.b,
            self.config.r1,
        )?;

        if !self.is_full() {
            self.entries.push(candidate);
            self.blocks.push(block);
            self.rebuild_derived();
            return Ok(AddDecision::Appended);
        }

        let eps = self.config.epsilon;
        let base = gram_regularized_condition(&self.gram, eps)?;
        let cand_stacked = block.stacked();
        let cand_outer = cand_stacked.transpose() * &cand_stacked;

        let mut best: Option<(usize, f64)> = None;
        for slot in 0..self.entries.len() {
            let old_stacked = self.blocks[slot].stacked();
            let old_outer = old_stacked.transpose() * &old_stacked;
            let swapped = &self.gram - old_outer + &cand_outer;
            let cond = gram_regularized_condition(&swapped, eps)?;
            if best.is_none_or(|(_, c)| cond < c) {
                best = Some((slot, cond));
            }
        }

        if let Some((slot, cond)) = best {
            if cond < base {
                let old_entry = self.entries[slot].clone();
                let old_block = self.blocks[slot].clone();
                self.entries[slot] = candidate;
                self.blocks[slot] = block;
                self.rebuild_derived();
                // Re-check against the freshly assembled Gram matrix; revert
                // if roundoff in the incremental evaluation flipped the sign.
                let fresh = gram_regularized_condition(&self.gram, eps)?;
                if fresh < base {
                    return Ok(AddDecision::Replaced(slot));
                }
                self.entries[slot] = old_entry;
                self.blocks[slot] = old_block;
                self.rebuild_derived();
            }
        }
        Ok(AddDecision::Rejected)
    }

    /// Drop all entries, keeping configuration.
    pub fn purge(&mut self) {
        self.entries.clear();
        self.blocks.clear();
        self.rebuild_derived();
    }

    /// Data-informativity report: whether the stored states span the state
    /// space and the target vector lies in the range of the regressor.
    pub fn informativity_report(&self, fi_tol: f64, rank_tol: f64) -> Result<InformativityReport> {
        if self.entries.is_empty() {
            return Err(Error::UnsupportedConfiguration(
                "informativity_report requires a non-empty stack".into(),
            ));
        }
        let n = self.layout.state_dim();
        let span = DMatrix::from_fn(n, self.entries.len(), |i, j| self.entries[j].x_hat[i]);
        let span_rank = numerical_rank(&span, rank_tol)?;
        let span_ok = span_rank == n;

        let sigma = self.assemble_regressor();
        let target = self.assemble_target();
        let target_norm = target.norm();
        let sigma_u_residual = range_projection_residual(&sigma, &target, rank_tol)?;
        let fi_ok = span_ok && sigma_u_residual <= fi_tol * target_norm;
        Ok(InformativityReport {
            span_rank,
            span_ok,
            sigma_u_residual,
            target_norm,
            degenerate: target_norm == 0.0,
            fi_ok,
        })
    }

    /// Dump entries as CSV: `t, x_hat..., u...` with a header row.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        let n = self.layout.state_dim();
        let m = self.layout.input_dim();
        write!(out, "t")?;
        for i in 0..n {
            write!(out, ",x_hat_{i}")?;
        }
        for i in 0..m {
            write!(out, ",u_{i}")?;
        }
        writeln!(out)?;
        for e in &self.entries {
            write!(out, "{:.8e}", e.t)?;
            for v in e.x_hat.iter() {
                write!(out, ",{v:.8e}")?;
            }
            for v in e.u.iter() {
                write!(out, ",{v:.8e}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Condition number via the singular values of the assembled regressor.
    /// Slower than [`Self::condition`]; used as an independent cross-check.
    pub fn condition_via_svd(&self) -> Result<f64> {
        regularized_condition(&self.assemble_regressor(), self.config.epsilon)
    }
}

/// Result of the informativity diagnostic.
#[derive(Debug, Clone)]
pub struct InformativityReport {
    /// Numerical rank of the stored state estimates.
    pub span_rank: usize,
    /// True when the states span the full state space.
    pub span_ok: bool,
    /// Residual of projecting the target vector onto the regressor range.
    pub sigma_u_residual: f64,
    /// Euclidean norm of the target vector.
    pub target_norm: f64,
    /// True when the target vector is identically zero (no usable signal).
    pub degenerate: bool,
    /// Both informativity conditions hold.
    pub fi_ok: bool,
}

/// Why a requested swap did not happen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwapSkip {
    /// The filling stack is not ready (not full, empty signal, or badly
    /// conditioned) and the elapsed-time alternative does not apply.
    NotReady,
    /// Not enough time has passed since the last swap.
    PeriodNotElapsed,
}

/// Outcome of a swap attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwapOutcome {
    Swapped,
    Skipped(SwapSkip),
}

/// How readiness and elapsed time combine to trigger a swap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PurgePolicy {
    /// Swap when the filling stack is ready and the period has elapsed.
    #[default]
    And,
    /// Swap when the filling stack is full and either it is ready or the
    /// period has elapsed.
    Or,
}

/// The active/filling stack pair with its swap schedule.
#[derive(Debug, Clone)]
pub struct StackPair {
    active: HistoryStack,
    filling: HistoryStack,
    purge_period: f64,
    policy: PurgePolicy,
    last_swap: f64,
    swap_count: usize,
}

impl StackPair {
    /// Both stacks start empty; the swap clock starts at time zero.
    pub fn new(
        layout: BasisLayout,
        config: StackConfig,
        purge_period: f64,
        policy: PurgePolicy,
    ) -> Self {
        Self {
            active: HistoryStack::new(layout, config.clone()),
            filling: HistoryStack::new(layout, config),
            purge_period,
            policy,
            last_swap: 0.0,
            swap_count: 0,
        }
    }

    pub fn active(&self) -> &HistoryStack {
        &self.active
    }

    pub fn active_mut(&mut self) -> &mut HistoryStack {
        &mut self.active
    }

    pub fn filling(&self) -> &HistoryStack {
        &self.filling
    }

    pub fn swap_count(&self) -> usize {
        self.swap_count
    }

    pub fn last_swap(&self) -> f64 {
        self.last_swap
    }

    /// Offer a sample to the filling stack.
    pub fn offer(&mut self, candidate: StackEntry, sys: &LtiSystem) -> Result<AddDecision> {
        self.filling.try_add(candidate, sys)
    }

    /// Promote the filling stack if the schedule allows: the active stack
    /// takes its place and the filling stack is purged.
    pub fn try_swap(&mut self, now: f64) -> SwapOutcome {
        let elapsed = now - self.last_swap >= self.purge_period;
        let ready = self.filling.is_ready();
        let go = match self.policy {
            PurgePolicy::And => ready && elapsed,
            PurgePolicy::Or => self.filling.is_full() && (ready || elapsed),
        };
        if !go {
            return SwapOutcome::Skipped(if ready {
                SwapSkip::PeriodNotElapsed
            } else {
                SwapSkip::NotReady
            });
        }
        std::mem::swap(&mut self.active, &mut self.filling);
        self.filling.purge();
        self.last_swap = now;
        self.swap_count += 1;
        SwapOutcome::Swapped
    }
}
