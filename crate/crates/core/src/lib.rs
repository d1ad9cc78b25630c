//! Online inverse reinforcement learning for linear-quadratic experts.
//!
//! An expert drives a known linear plant with the feedback policy that
//! minimizes an unknown quadratic cost. This crate estimates that cost
//! online from input and output data with a history-stack observer whose
//! weight update is ridge-regularized, so it remains well-posed when the
//! inverse problem admits many cost functionals. The estimate converges to
//! an *equivalent* solution: one that satisfies the optimality conditions on
//! the recorded data and reproduces the expert's feedback gain, without
//! necessarily matching the expert's cost matrices.
//!
//! Module map:
//!
//! - [`numerics`]: fixed-step integration and spectral diagnostics.
//! - [`synthesis`]: Riccati solution, feedback gain, observer gain.
//! - [`basis`]: quadratic bases, regressor assembly, cost extraction.
//! - [`stack`]: history stacks, point selection, swap-and-purge schedule.
//! - [`observer`]: the coupled state/weight update law and certification.
//! - [`scenario`]: benchmark problems, excitation, and the run driver.
//!
//! Running the small benchmark for a few seconds of simulated time:
//!
//! ```
//! use irlqr_core::scenario::{academic_scenario, simulate_expert, NoHooks, SimOptions};
//!
//! let scenario = academic_scenario();
//! let log = simulate_expert(&scenario, &SimOptions::new(3.0, 1e-3), &mut NoHooks).unwrap();
//! assert_eq!(log.expert.gain.nrows(), 3);
//! assert!(!log.records.is_empty());
//! ```

pub mod basis;
pub mod error;
pub mod numerics;
pub mod observer;
pub mod rng;
pub mod scenario;
pub mod stack;
pub mod synthesis;
pub mod system;

pub use basis::{
    build_regressor_block, extract_solution, BasisLayout, ExtractedSolution, RegressorBlock,
    WeightVector,
};
pub use error::{Error, Result};
pub use observer::{
    certify_equivalence, delta, observer_step, vdot_check, EquivalenceReport, GainConfig,
    ObserverState, WeightUpdate,
};
pub use scenario::{
    academic_scenario, excitation_signal, quadcopter_scenario, simulate_expert, ExcitationSignal,
    ExcitationSpec, NoHooks, QuadcopterParams, RunHooks, RunLog, Scenario, Schedule, SimOptions,
    StepRecord, SwapEvent,
};
pub use stack::{
    AddDecision, HistoryStack, InformativityReport, PurgePolicy, StackConfig, StackEntry,
    StackPair, SwapOutcome, SwapSkip,
};
pub use synthesis::{lqr_gain, observer_gain, solve_care, CareOptions, CareSolution, ExpertPolicy};
pub use system::{CostPair, LtiSystem};
