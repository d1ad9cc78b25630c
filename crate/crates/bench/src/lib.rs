//! Shared fixtures for the benchmark suite.

use nalgebra::DVector;

use irlqr_core::basis::BasisLayout;
use irlqr_core::rng::SplitMix64;
use irlqr_core::scenario::{academic_scenario, Scenario};
use irlqr_core::stack::{HistoryStack, StackConfig, StackEntry};
use irlqr_core::synthesis::{lqr_gain, CareOptions, ExpertPolicy};

/// The three-state benchmark with its synthesized expert.
pub fn academic_fixture() -> (Scenario, ExpertPolicy) {
    let scn = academic_scenario();
    let expert = lqr_gain(
        &scn.sys.a,
        &scn.sys.b,
        &scn.expert_cost.q,
        &scn.expert_cost.r,
        &CareOptions::default(),
    )
    .expect("academic expert");
    (scn, expert)
}

/// A filled stack of exact expert samples.
pub fn filled_stack(scn: &Scenario, expert: &ExpertPolicy, capacity: usize) -> HistoryStack {
    let layout = BasisLayout::new(scn.sys.n(), scn.sys.m());
    let mut stack = HistoryStack::new(
        layout,
        StackConfig {
            capacity,
            epsilon: scn.schedule.epsilon,
            cond_threshold: scn.schedule.cond_threshold,
            r1: scn.schedule.r1,
        },
    );
    let mut rng = SplitMix64::new(5);
    for k in 0..capacity {
        let x = DVector::from_fn(scn.sys.n(), |_, _| rng.uniform(-2.0, 2.0));
        let u = &expert.gain * &x;
        stack
            .try_add(
                StackEntry {
                    t: k as f64 * scn.schedule.data_period,
                    x_hat: x,
                    u,
                },
                &scn.sys,
            )
            .expect("fill");
    }
    stack
}
