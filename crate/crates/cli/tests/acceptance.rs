//! Acceptance suite: one test per shipping criterion, each printing a
//! pass/fail line with the measured quantities (visible under
//! `cargo test --test acceptance -- --nocapture`).
//!
//! The tests serialize on a global lock so wall-clock assertions are not
//! distorted by sibling tests.

use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use irlqr_core::basis::{extract_solution, BasisLayout, WeightVector};
use irlqr_core::observer::{certify_equivalence, observer_step, GainConfig, ObserverState};
use irlqr_core::rng::SplitMix64;
use irlqr_core::scenario::{
    academic_scenario, quadcopter_scenario, simulate_expert, NoHooks, QuadcopterParams, RunLog,
    SimOptions,
};
use irlqr_core::stack::{HistoryStack, StackConfig, StackEntry};
use irlqr_core::synthesis::{lqr_gain, solve_care, CareOptions};
use irlqr_core::system::LtiSystem;

fn lock() -> MutexGuard<'static, ()> {
    static LOCK: OnceLock<Mutex<()>> = OnceLock::new();
    LOCK.get_or_init(|| Mutex::new(()))
        .lock()
        .unwrap_or_else(|poisoned| poisoned.into_inner())
}

fn report(criterion: &str, detail: &str) {
    println!("acceptance {criterion}: PASS ({detail})");
}

/// Per-axis stabilizing Riccati root of `(b^2/r) s^2 - 2 a s - q = 0`.
fn scalar_care_oracle(a: f64, b: f64, q: f64, r: f64) -> f64 {
    let g = b * b / r;
    (a + (a * a + g * q).sqrt()) / g
}

fn academic_system() -> (LtiSystem, DMatrix<f64>, DMatrix<f64>) {
    let scn = academic_scenario();
    (scn.sys.clone(), scn.expert_cost.q.clone(), scn.expert_cost.r.clone())
}

/// Range projection of `target` onto the columns of `sigma`, by SVD.
fn svd_range_projection(sigma: &DMatrix<f64>, target: &DVector<f64>) -> DVector<f64> {
    let svd = sigma.clone().svd(true, false);
    let u = svd.u.as_ref().expect("u requested");
    let s_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let mut projected = DVector::zeros(target.len());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > 1e-8 * s_max {
            let col = u.column(i);
            projected += col * col.dot(target);
        }
    }
    projected
}

/// Smallest nonzero eigenvalue of the residual-flow operator restricted to
/// the regressor range: `min sigma_i^2 / (sigma_i^2 + eps)`.
fn slowest_range_rate(sigma: &DMatrix<f64>, eps: f64) -> f64 {
    let svd = sigma.clone().svd(false, false);
    let s_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    svd.singular_values
        .iter()
        .filter(|&&s| s > 1e-8 * s_max)
        .map(|&s| s * s / (s * s + eps))
        .fold(f64::INFINITY, f64::min)
}

/// Integrate the weight flow on a frozen stack until well past the slowest
/// range time constant, with the state estimate pinned at zero.
///
/// The flow never moves the component of the weights in the regressor null
/// space, so `w0` selects which member of the solution family the limit
/// lands on; the fitted value is the same for every choice.
fn fixed_stack_limit(
    stack: &HistoryStack,
    sys: &LtiSystem,
    k4: f64,
    eps: f64,
    h: f64,
    w0: Option<&DVector<f64>>,
) -> WeightVector {
    let layout = *stack.layout();
    let sigma = stack.assemble_regressor();
    let rate = slowest_range_rate(&sigma, eps);
    let horizon = 1.5 * 20.0 / (k4 * rate);
    let steps = (horizon / h).ceil() as usize;
    let gains = GainConfig {
        k3: DMatrix::zeros(sys.n(), sys.l()),
        k4,
        epsilon: eps,
    };
    let weights = match w0 {
        Some(w0) => WeightVector::from_reduced(w0, &layout, stack.config().r1).expect("w0"),
        None => WeightVector::zeros(&layout, stack.config().r1),
    };
    let mut state = ObserverState {
        x_hat: DVector::zeros(sys.n()),
        weights,
        t: 0.0,
    };
    let y = DVector::zeros(sys.l());
    let u = DVector::zeros(sys.m());
    for _ in 0..steps {
        state = observer_step(&state, &y, &u, stack, sys, &gains, h).expect("observer step");
    }
    state.weights
}

/// Group records into fixed-stack segments by swap times and assert the
/// residual norm never increases inside a segment.
fn assert_delta_monotone_per_segment(log: &RunLog, tol: f64) {
    let mut max_rise: f64 = 0.0;
    for pair in log.records.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if !a.delta_norm.is_finite() || !b.delta_norm.is_finite() {
            continue;
        }
        // A swap strictly between the two records (or at the second one)
        // starts a new segment.
        let crosses_swap = log
            .swaps
            .iter()
            .any(|s| s.t > a.t && s.t <= b.t);
        if crosses_swap {
            continue;
        }
        max_rise = max_rise.max(b.delta_norm - a.delta_norm);
    }
    assert!(
        max_rise <= tol,
        "residual rose by {max_rise:.3e} within a fixed-stack segment"
    );
}

#[test]
fn criterion_1_care_correctness() {
    let _guard = lock();
    let start = Instant::now();
    let opts = CareOptions::default();

    let (sys, q, r) = academic_system();
    let sol = solve_care(&sys.a, &sys.b, &q, &r, &opts).expect("academic CARE");
    let axes = [(3.0, 11.0, 1.0, 1.0), (5.0, 13.0, 4.0, 1.75), (7.0, 17.0, 3.0, 4.0)];
    for (i, (a, b, qq, rr)) in axes.into_iter().enumerate() {
        let oracle = scalar_care_oracle(a, b, qq, rr);
        let got = sol.s[(i, i)];
        assert!(
            (got - oracle).abs() <= 1e-6 * oracle.abs(),
            "axis {i}: S = {got}, oracle = {oracle}"
        );
    }
    assert!(
        sol.residual_norm <= 1e-8 * q.norm().max(1.0),
        "academic residual {}",
        sol.residual_norm
    );

    let quad = quadcopter_scenario(&QuadcopterParams::default());
    let quad_sol = solve_care(
        &quad.sys.a,
        &quad.sys.b,
        &quad.expert_cost.q,
        &quad.expert_cost.r,
        &opts,
    )
    .expect("quadcopter CARE");
    assert!(
        quad_sol.residual_norm <= 1e-8 * quad.expert_cost.q.norm().max(1.0),
        "quadcopter residual {}",
        quad_sol.residual_norm
    );

    let wall = start.elapsed().as_secs_f64();
    assert!(wall < 5.0, "runtime {wall:.2} s exceeds 5 s");
    report(
        "criterion 1 (CARE correctness)",
        &format!(
            "per-axis S within 1e-6 of the quadratic-formula oracle; residuals {:.2e} / {:.2e}; wall {:.2} s",
            sol.residual_norm, quad_sol.residual_norm, wall
        ),
    );
}

#[test]
fn criterion_2_exact_data_equivalence() {
    let _guard = lock();
    let start = Instant::now();
    let (sys, q, r) = academic_system();
    let expert = lqr_gain(&sys.a, &sys.b, &q, &r, &CareOptions::default()).expect("expert");

    // Twelve exact samples spanning the state space, with the true state
    // recorded and the exact optimal input.
    let eps = 0.1;
    let mut stack = HistoryStack::new(
        BasisLayout::new(3, 3),
        StackConfig {
            capacity: 12,
            epsilon: eps,
            cond_threshold: 1e12,
            r1: 1.0,
        },
    );
    assert!(stack.under_capacity_warning(), "12 < 17 reduced weights");
    let mut rng = SplitMix64::new(2024);
    for k in 0..12 {
        let x = DVector::from_fn(3, |_, _| rng.uniform(-1.0, 1.0));
        let u = &expert.gain * &x;
        stack
            .try_add(StackEntry { t: k as f64 * 0.08, x_hat: x, u }, &sys)
            .expect("add");
    }
    let report_fi = stack.informativity_report(1e-6, 1e-8).expect("report");
    assert!(report_fi.span_ok, "samples must span the state space");

    // Start from generic initial weights. Their frozen null-space component
    // selects a family member whose input-cost block is invertible; with
    // zero initial weights this decoupled benchmark converges exactly onto
    // the degenerate member that scales two axes to zero, where no gain can
    // be extracted (the invertibility premise of the equivalence result).
    let w0 = DVector::from_fn(BasisLayout::new(3, 3).reduced_len(), |i, _| {
        0.5 + 0.05 * (i as f64)
    });
    let k4 = 50.0;
    let weights = fixed_stack_limit(&stack, &sys, k4, eps, 1e-3, Some(&w0));

    // Limit fit matches the SVD least-squares oracle.
    let sigma = stack.assemble_regressor();
    let target = stack.assemble_target();
    let fitted = &sigma * weights.reduced();
    let projected = svd_range_projection(&sigma, &target);
    let fit_err = (&fitted - &projected).norm();
    assert!(
        fit_err <= 1e-6 * target.norm().max(1.0),
        "limit fit differs from SVD oracle by {fit_err:.3e}"
    );

    // Equivalence: gain recovered, optimality holds pointwise.
    let cert = certify_equivalence(&weights, &stack, &sys, &expert.gain, 1e-6, 1e-8)
        .expect("certify");
    assert!(
        cert.gain_error <= 1e-6,
        "gain error {:.3e} exceeds 1e-6",
        cert.gain_error
    );
    for (i, res) in cert.pointwise_hjb_residuals.iter().enumerate() {
        assert!(res.abs() <= 1e-8, "pointwise residual {i}: {res:.3e}");
    }
    assert!(cert.equivalent);

    let wall = start.elapsed().as_secs_f64();
    assert!(wall < 10.0, "runtime {wall:.2} s exceeds 10 s");
    report(
        "criterion 2 (exact-data equivalence)",
        &format!(
            "gain error {:.2e}, max pointwise residual {:.2e}, LS-oracle gap {:.2e}, wall {:.2} s",
            cert.gain_error,
            cert.pointwise_hjb_residuals
                .iter()
                .fold(0.0f64, |m, r| m.max(r.abs())),
            fit_err,
            wall
        ),
    );
}

#[test]
fn criterion_3_residual_energy_decay() {
    let _guard = lock();
    let scn = academic_scenario();
    let opts = SimOptions::new(50.0, 1e-3);
    let log = simulate_expert(&scn, &opts, &mut NoHooks).expect("academic run");

    let mut checked = 0usize;
    for r in &log.records {
        if r.delta_norm.is_finite() {
            assert!(
                r.vdot <= 1e-12 * r.delta_norm * r.delta_norm,
                "t = {}: vdot {:.3e} with ||delta|| {:.3e}",
                r.t,
                r.vdot,
                r.delta_norm
            );
            checked += 1;
        }
    }
    assert!(checked > 100, "too few finite records ({checked})");
    assert_delta_monotone_per_segment(&log, 1e-9);
    report(
        "criterion 3 (residual-energy decay)",
        &format!(
            "vdot non-positive at all {checked} logged steps; per-segment monotone to 1e-9 across {} swaps",
            log.swaps.len()
        ),
    );
}

#[test]
fn criterion_4_fixed_stack_limit_identity() {
    let _guard = lock();
    let (sys, q, r) = academic_system();
    let expert = lqr_gain(&sys.a, &sys.b, &q, &r, &CareOptions::default()).expect("expert");
    let eps = 0.1;
    let k4 = 50.0;

    let build_stack = |seed: u64, perturb: bool| {
        let mut stack = HistoryStack::new(
            BasisLayout::new(3, 3),
            StackConfig {
                capacity: 17,
                epsilon: eps,
                cond_threshold: 1e12,
                r1: 1.0,
            },
        );
        let mut rng = SplitMix64::new(seed);
        for k in 0..17 {
            let x = DVector::from_fn(3, |_, _| rng.uniform(-1.5, 1.5));
            let mut u = &expert.gain * &x;
            if perturb {
                u += DVector::from_fn(3, |_, _| rng.uniform(-0.5, 0.5));
            }
            stack
                .try_add(StackEntry { t: k as f64 * 0.08, x_hat: x, u }, &sys)
                .expect("add");
        }
        stack
    };

    // Inconsistent data: the limit residual is the out-of-range component.
    let stack = build_stack(11, true);
    let sigma = stack.assemble_regressor();
    let target = stack.assemble_target();
    let weights = fixed_stack_limit(&stack, &sys, k4, eps, 1e-3, None);
    let delta_inf = &target - &sigma * weights.reduced();
    let oracle = &target - svd_range_projection(&sigma, &target);
    let gap = (&delta_inf - &oracle).norm();
    assert!(
        gap <= 1e-6 * target.norm(),
        "limit residual differs from projector oracle by {gap:.3e}"
    );
    assert!(oracle.norm() > 1e-3 * target.norm(), "test data not inconsistent enough");

    // Consistent data: informativity holds and the limit residual vanishes.
    let stack = build_stack(12, false);
    let fi = stack.informativity_report(1e-6, 1e-8).expect("report");
    assert!(fi.fi_ok, "consistent stack must be finitely informative");
    let sigma = stack.assemble_regressor();
    let target = stack.assemble_target();
    let weights = fixed_stack_limit(&stack, &sys, k4, eps, 1e-3, None);
    let delta_inf_norm = (&target - &sigma * weights.reduced()).norm();
    assert!(
        delta_inf_norm <= 1e-6 * target.norm(),
        "informative stack left ||delta|| = {delta_inf_norm:.3e}"
    );

    report(
        "criterion 4 (fixed-stack limit identity)",
        &format!(
            "projector-oracle gap {:.2e} of ||target||; informative-limit residual {:.2e} of ||target||",
            gap / target.norm(),
            delta_inf_norm / target.norm()
        ),
    );
}

#[test]
fn criterion_5_academic_end_to_end() {
    let _guard = lock();
    let start = Instant::now();
    let scn = academic_scenario();
    assert_eq!(scn.schedule.data_period, 0.08);
    assert_eq!(scn.schedule.cond_threshold, 1e8);
    assert_eq!(scn.schedule.purge_period, 2.0);
    assert_eq!(scn.schedule.observer_poles, vec![-0.1, -1.5, -2.0]);
    assert_eq!(scn.excitation.count, 30);
    assert_eq!(scn.excitation.amplitude, 1.0);

    let opts = SimOptions::new(50.0, 1e-3);
    let log = simulate_expert(&scn, &opts, &mut NoHooks).expect("academic run");
    let wall = start.elapsed().as_secs_f64();

    let gain_norm = log.expert.gain.norm();
    let last = log.records.last().expect("records");
    assert!(
        last.gain_error_fro <= 0.05 * gain_norm,
        "gain error {:.3e} exceeds 5% of ||K|| = {:.3}",
        last.gain_error_fro,
        gain_norm
    );

    let first_swap = log.swaps.first().expect("at least one swap");
    let reduction = first_swap.delta_norm_at_swap / last.delta_norm;
    assert!(
        reduction >= 100.0,
        "residual reduced only {reduction:.1}x from its value at the first swap"
    );

    // Equivalent yet different: certification passes while the recovered
    // cost is far from the expert's.
    let varpi = 0.05 * gain_norm;
    let cert = certify_equivalence(
        &log.final_state.weights,
        &log.final_active_stack,
        &scn.sys,
        &log.expert.gain,
        varpi,
        1e-3,
    )
    .expect("certify");
    assert!(cert.equivalent, "certification failed: gain error {:.3e}", cert.gain_error);
    let sol = extract_solution(&log.final_state.weights, &scn.sys.b).expect("extract");
    let cost_distance =
        (&sol.q_hat - &scn.expert_cost.q).norm() + (&sol.r_hat - &scn.expert_cost.r).norm();
    assert!(
        cost_distance > 0.1,
        "recovered cost unexpectedly matches the expert: distance {cost_distance:.3e}"
    );

    assert!(wall < 60.0, "wall {wall:.1} s exceeds 60 s");
    report(
        "criterion 5 (academic end-to-end)",
        &format!(
            "gain error {:.2e} ({:.2}% of ||K||), residual reduction {:.0}x, cost distance {:.2}, certified at varpi = 5%, wall {:.1} s",
            last.gain_error_fro,
            100.0 * last.gain_error_fro / gain_norm,
            reduction,
            cost_distance,
            wall
        ),
    );
}

#[test]
fn criterion_6_quadcopter_end_to_end() {
    let _guard = lock();
    let start = Instant::now();
    let scn = quadcopter_scenario(&QuadcopterParams::default());
    assert_eq!(scn.schedule.epsilon, 0.002);
    assert_eq!(scn.excitation.amplitude, 0.03);
    assert_eq!(scn.schedule.purge_period, 10.0);
    assert_eq!(scn.schedule.cond_threshold, 1e10);

    let opts = SimOptions::new(60.0, 1e-3);
    let log = simulate_expert(&scn, &opts, &mut NoHooks).expect("quadcopter run");
    let wall = start.elapsed().as_secs_f64();

    let gain_norm = log.expert.gain.norm();
    let last = log.records.last().expect("records");
    assert!(
        last.gain_error_fro <= 0.10 * gain_norm,
        "gain error {:.3e} exceeds 10% of ||K|| = {:.3}",
        last.gain_error_fro,
        gain_norm
    );
    assert!(!log.swaps.is_empty());
    assert_delta_monotone_per_segment(&log, 1e-9);

    assert!(wall < 600.0, "wall {wall:.1} s exceeds 10 min");
    report(
        "criterion 6 (quadcopter end-to-end)",
        &format!(
            "gain error {:.2e} ({:.2}% of ||K||), {} swaps, per-segment monotone, wall {:.1} s at h = 1e-3",
            last.gain_error_fro,
            100.0 * last.gain_error_fro / gain_norm,
            log.swaps.len(),
            wall
        ),
    );
}

#[test]
fn criterion_7_gain_scaling_invariance() {
    let _guard = lock();
    let (sys, q, r) = academic_system();
    let opts = CareOptions::default();
    let base = lqr_gain(&sys.a, &sys.b, &q, &r, &opts).expect("base");
    let mut worst: f64 = 0.0;
    for c in [0.5, 2.0, 10.0] {
        let scaled = lqr_gain(&sys.a, &sys.b, &(&q * c), &(&r * c), &opts).expect("scaled");
        for (x, y) in base.gain.iter().zip(scaled.gain.iter()) {
            let diff = (x - y).abs();
            worst = worst.max(diff);
            assert!(diff <= 1e-8, "scale {c}: entry differs by {diff:.3e}");
        }
    }
    report(
        "criterion 7 (gain scaling invariance)",
        &format!("max entrywise gain difference over c in {{0.5, 2, 10}}: {worst:.2e}"),
    );
}

#[test]
fn criterion_8_excitation_residual_floor() {
    let _guard = lock();
    let (sys, q, r) = academic_system();
    let expert = lqr_gain(&sys.a, &sys.b, &q, &r, &CareOptions::default()).expect("expert");
    let weights = WeightVector::from_cost(&expert.s, &expert.q, &expert.r, 1.0).expect("weights");

    let mut rng = SplitMix64::new(88);
    let mut worst_delta: f64 = 0.0;
    let mut worst_control: f64 = 0.0;
    for _ in 0..50 {
        let x = DVector::from_fn(3, |_, _| rng.uniform(-3.0, 3.0));
        let d = DVector::from_fn(3, |_, _| rng.uniform(-1.0, 1.0));
        let u = &expert.gain * &x + &d;
        let block =
            irlqr_core::basis::build_regressor_block(&x, &u, &sys.a, &sys.b, 1.0).expect("block");
        let residual = block.residual(&weights);
        let delta_gap = (residual[0] - d.dot(&(&expert.r * &d))).abs();
        let control_gap = (residual.rows(1, 3).into_owned() - &expert.r * &d * 2.0).norm();
        worst_delta = worst_delta.max(delta_gap);
        worst_control = worst_control.max(control_gap);
        assert!(delta_gap <= 1e-9, "bellman residual off by {delta_gap:.3e}");
        assert!(control_gap <= 1e-9, "control residual off by {control_gap:.3e}");
    }
    report(
        "criterion 8 (excitation residual floor)",
        &format!(
            "over 50 perturbed samples: |delta - d'Rd| <= {worst_delta:.2e}, ||residual - 2Rd|| <= {worst_control:.2e}"
        ),
    );
}

#[test]
fn criterion_9_byte_identical_reruns() {
    let _guard = lock();
    let base = std::env::temp_dir().join(format!("irlqr_acceptance_{}", std::process::id()));
    std::fs::create_dir_all(&base).expect("temp dir");

    let text = "scenario = academic\nduration = 6.0\nseed = 42\n";
    let mut first = irlqr_cli::config::resolve_config(text).expect("config");
    first.output_dir = base.join("first");
    let mut second = irlqr_cli::config::resolve_config(text).expect("config");
    second.output_dir = base.join("second");

    irlqr_cli::run::run(&first).expect("first run");
    irlqr_cli::run::run(&second).expect("second run");

    let a = std::fs::read(first.output_dir.join("timeseries.csv")).expect("first csv");
    let b = std::fs::read(second.output_dir.join("timeseries.csv")).expect("second csv");
    assert!(!a.is_empty());
    assert_eq!(a, b, "timeseries.csv differs between identical runs");
    report(
        "criterion 9 (determinism)",
        &format!("two identical runs produced byte-identical timeseries.csv ({} bytes)", a.len()),
    );
}
