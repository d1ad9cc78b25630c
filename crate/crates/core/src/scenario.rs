//! Benchmark scenarios and the co-simulation driver.
//!
//! Two built-in problems exercise the estimator: a three-state diagonal
//! system whose inverse problem is known to admit multiple cost functionals,
//! and a twelve-state linearized quadcopter flown by a surrogate optimal
//! pilot through an onboard autopilot. Both record the schedules, gains, and
//! excitation used in the experiments they reproduce.

use nalgebra::{DMatrix, DVector};

use crate::basis::{extract_solution, BasisLayout, WeightVector};
use crate::error::{Error, Result};
use crate::numerics::rk4_step;
use crate::observer::{GainConfig, ObserverState, WeightUpdate};
use crate::rng::SplitMix64;
use crate::stack::{
    HistoryStack, InformativityReport, PurgePolicy, StackConfig, StackEntry, StackPair,
    SwapOutcome,
};
use crate::synthesis::{lqr_gain, observer_gain, CareOptions, ExpertPolicy};
use crate::system::{CostPair, LtiSystem};

/// Timing, thresholds, and gains for one experiment.
#[derive(Debug, Clone)]
pub struct Schedule {
    /// Seconds between samples offered to the filling stack.
    pub data_period: f64,
    /// Minimum seconds between stack swaps.
    pub purge_period: f64,
    /// Readiness threshold on the regularized condition number.
    pub cond_threshold: f64,
    /// Ridge term shared by point selection and the weight update.
    pub epsilon: f64,
    /// Fixed first input-cost entry.
    pub r1: f64,
    /// Weight-update rate.
    pub k4: f64,
    /// Observer poles, one per state, all negative.
    pub observer_poles: Vec<f64>,
    /// History stack capacity in samples.
    pub stack_capacity: usize,
    /// How readiness and elapsed time combine to trigger a swap.
    pub purge_policy: PurgePolicy,
    /// Relative tolerance for the informativity residual.
    pub fi_tol: f64,
    /// Relative singular-value cutoff for rank decisions.
    pub rank_tol: f64,
}

/// Sum-of-sinusoids excitation description.
#[derive(Debug, Clone)]
pub struct ExcitationSpec {
    /// Number of sinusoids per excited channel.
    pub count: usize,
    /// Amplitude of each sinusoid.
    pub amplitude: f64,
    /// Frequency range in Hz, ascending.
    pub freq_range: (f64, f64),
    /// Phase range in radians, ascending.
    pub phase_range: (f64, f64),
    /// Seed for the SplitMix64 draws.
    pub seed: u64,
    /// Input channels to excite; `None` excites all.
    pub channels: Option<Vec<usize>>,
}

impl ExcitationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.freq_range.0 > self.freq_range.1 || self.phase_range.0 > self.phase_range.1 {
            return Err(Error::UnsupportedConfiguration(
                "excitation ranges must be ascending".into(),
            ));
        }
        Ok(())
    }
}

/// A sampled excitation signal with frequencies and phases drawn once.
///
/// Draw order is fixed: channels in increasing index, and per channel the
/// frequency then the phase of each sinusoid, so any implementation of the
/// generator reproduces the same signal from the same seed.
#[derive(Debug, Clone)]
pub struct ExcitationSignal {
    amplitude: f64,
    /// Per input channel: `(2 pi f, phase)` pairs; empty when not excited.
    terms: Vec<Vec<(f64, f64)>>,
}

impl ExcitationSignal {
    pub fn new(spec: &ExcitationSpec, input_dim: usize) -> Result<Self> {
        spec.validate()?;
        let mut rng = SplitMix64::new(spec.seed);
        let excited = |ch: usize| match &spec.channels {
            Some(list) => list.contains(&ch),
            None => true,
        };
        let mut terms = Vec::with_capacity(input_dim);
        for ch in 0..input_dim {
            if !excited(ch) {
                terms.push(Vec::new());
                continue;
            }
            let mut chan = Vec::with_capacity(spec.count);
            for _ in 0..spec.count {
                let f = rng.uniform(spec.freq_range.0, spec.freq_range.1);
                let phase = rng.uniform(spec.phase_range.0, spec.phase_range.1);
                chan.push((2.0 * std::f64::consts::PI * f, phase));
            }
            terms.push(chan);
        }
        Ok(Self {
            amplitude: spec.amplitude,
            terms,
        })
    }

    /// Evaluate the excitation at time `t`.
    pub fn sample(&self, t: f64) -> DVector<f64> {
        DVector::from_iterator(
            self.terms.len(),
            self.terms.iter().map(|chan| {
                chan.iter()
                    .map(|(omega, phase)| self.amplitude * (omega * t + phase).sin())
                    .sum()
            }),
        )
    }
}

/// Convenience: draw and evaluate in one call.
pub fn excitation_signal(spec: &ExcitationSpec, input_dim: usize, t: f64) -> Result<DVector<f64>> {
    Ok(ExcitationSignal::new(spec, input_dim)?.sample(t))
}

/// A complete benchmark problem.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub sys: LtiSystem,
    pub expert_cost: CostPair,
    pub x0: DVector<f64>,
    pub schedule: Schedule,
    pub excitation: ExcitationSpec,
    /// Observer gain supplied directly, bypassing pole placement. Required
    /// when `C` is not square invertible.
    pub k3_override: Option<DMatrix<f64>>,
}

impl Scenario {
    pub fn layout(&self) -> BasisLayout {
        BasisLayout::new(self.sys.n(), self.sys.m())
    }
}

/// Three-state diagonal benchmark with a non-unique inverse problem.
pub fn academic_scenario() -> Scenario {
    let a = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 5.0, 7.0]));
    let b = DMatrix::from_diagonal(&DVector::from_vec(vec![11.0, 13.0, 17.0]));
    let c = DMatrix::identity(3, 3);
    let q = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0, 3.0]));
    let r = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.75, 4.0]));
    let layout = BasisLayout::new(3, 3);
    Scenario {
        name: "academic".into(),
        sys: LtiSystem::new(a, b, c).expect("static dimensions"),
        expert_cost: CostPair::new(q, r).expect("static dimensions"),
        x0: DVector::from_element(3, 0.5),
        schedule: Schedule {
            data_period: 0.08,
            purge_period: 2.0,
            cond_threshold: 1e8,
            // Chosen so filled stacks clear the condition threshold and
            // swaps recur on the purge period; below ~1e-2 readiness is
            // marginal and the estimate stalls on its first stack.
            epsilon: 0.1,
            r1: 1.0,
            k4: 50.0,
            observer_poles: vec![-0.1, -1.5, -2.0],
            stack_capacity: layout.reduced_len(),
            purge_policy: PurgePolicy::And,
            fi_tol: 1e-6,
            rank_tol: 1e-8,
        },
        excitation: ExcitationSpec {
            count: 30,
            amplitude: 1.0,
            freq_range: (0.001, 0.1),
            phase_range: (0.0, std::f64::consts::PI),
            seed: 42,
            channels: None,
        },
        k3_override: None,
    }
}

/// Physical and autopilot parameters of the quadcopter model.
#[derive(Debug, Clone)]
pub struct QuadcopterParams {
    /// Arm length, m.
    pub arm_length: f64,
    /// Moments of inertia, kg m^2.
    pub inertia_xx: f64,
    pub inertia_yy: f64,
    pub inertia_zz: f64,
    /// Aerodynamic drag coefficient.
    pub drag: f64,
    /// Gravitational acceleration, m/s^2.
    pub gravity: f64,
    /// Mass, kg.
    pub mass: f64,
    /// Autopilot velocity-loop gains.
    pub k_p11: f64,
    pub k_p12: f64,
    pub k_p13: f64,
    /// Autopilot attitude-loop gains.
    pub k_p21: f64,
    pub k_p22: f64,
    pub k_p23: f64,
    /// Autopilot rate-damping gains.
    pub k_d1: f64,
    pub k_d2: f64,
    pub k_d3: f64,
}

impl Default for QuadcopterParams {
    fn default() -> Self {
        Self {
            arm_length: 0.092,
            inertia_xx: 0.001225,
            inertia_yy: 0.001234,
            inertia_zz: 0.002303,
            drag: 0.01,
            gravity: 9.81,
            mass: 0.552,
            k_p11: 5.25,
            k_p12: 6.0,
            k_p13: 3.0,
            k_p21: 2.0,
            k_p22: 1.0,
            k_p23: 0.35,
            k_d1: 0.5,
            k_d2: 0.4,
            k_d3: 0.1,
        }
    }
}

/// Twelve-state linearized quadcopter with a surrogate optimal pilot.
///
/// State order `[x, y, z, x', y', z', phi, theta, psi, phi', theta', psi']`;
/// inputs are the commanded velocities and yaw rate
/// `[x_d', y_d', z_d', psi_d']`. The velocity-command loops close through
/// the autopilot gains, which is why the commands enter the angular
/// acceleration rows.
pub fn quadcopter_scenario(p: &QuadcopterParams) -> Scenario {
    let b1 = p.arm_length / p.inertia_xx;
    let b2 = p.arm_length / p.inertia_yy;
    let b3 = 1.0 / p.inertia_zz;
    let drag_by_mass = p.drag / p.mass;
    let quarter_pi = std::f64::consts::PI / 4.0;

    let mut a = DMatrix::zeros(12, 12);
    let mut b = DMatrix::zeros(12, 4);

    // Kinematics.
    a[(0, 3)] = 1.0;
    a[(1, 4)] = 1.0;
    a[(2, 5)] = 1.0;
    a[(6, 9)] = 1.0;
    a[(7, 10)] = 1.0;
    a[(8, 11)] = 1.0;

    // Translational accelerations.
    a[(3, 7)] = -p.gravity;
    a[(3, 3)] = -drag_by_mass;
    a[(4, 6)] = p.gravity;
    a[(4, 4)] = -drag_by_mass;
    // The altitude row keeps its positive velocity coefficient as printed
    // for the NED convention; the optimal pilot stabilizes it in closed loop.
    a[(5, 5)] = p.k_p13 - drag_by_mass;
    b[(5, 2)] = -p.k_p13;

    // Roll acceleration.
    let roll_coupling = b1 * quarter_pi * p.k_p21 * p.k_p12 / p.gravity;
    a[(9, 4)] = roll_coupling;
    b[(9, 1)] = -roll_coupling;
    a[(9, 9)] = -b1 * p.k_d1;
    a[(9, 6)] = -b1 * p.k_p21;

    // Pitch acceleration.
    let pitch_coupling = b2 * quarter_pi * p.k_p22 * p.k_p11 / p.gravity;
    a[(10, 3)] = -pitch_coupling;
    b[(10, 0)] = pitch_coupling;
    a[(10, 10)] = -b2 * p.k_d2;
    a[(10, 7)] = -b2 * p.k_p22;

    // Yaw acceleration.
    a[(11, 11)] = -b3 * p.k_d3;
    b[(11, 3)] = b3 * p.k_d3;
    a[(11, 8)] = -b3 * p.k_p23;

    let c = DMatrix::identity(12, 12);
    let q = DMatrix::from_diagonal(&DVector::from_vec(vec![
        9.5752, 6.9139, 2.8378, 0.0, 0.0, 0.0, 0.0, 0.0, 11.6834, 0.0, 0.0, 0.0,
    ]));
    let r = DMatrix::from_diagonal(&DVector::from_vec(vec![9.572, 3.4773, 14.4034, 0.1707]));

    let layout = BasisLayout::new(12, 4);
    let mut poles = vec![-1.0; 8];
    poles.extend_from_slice(&[-2.0; 4]);

    Scenario {
        name: "quadcopter".into(),
        sys: LtiSystem::new(a, b, c).expect("static dimensions"),
        expert_cost: CostPair::new(q, r).expect("static dimensions"),
        x0: DVector::from_element(12, 0.5),
        schedule: Schedule {
            data_period: 0.08,
            purge_period: 10.0,
            cond_threshold: 1e10,
            epsilon: 0.002,
            r1: 1.0,
            k4: 50.0,
            observer_poles: poles,
            stack_capacity: layout.reduced_len(),
            purge_policy: PurgePolicy::And,
            fi_tol: 1e-6,
            rank_tol: 1e-8,
        },
        excitation: ExcitationSpec {
            count: 30,
            amplitude: 0.03,
            freq_range: (0.001, 10.0),
            phase_range: (0.0, std::f64::consts::PI),
            seed: 42,
            channels: None,
        },
        k3_override: None,
    }
}

/// One logged sample of a run.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub t: f64,
    /// Norm of the stacked residual against the active stack; NaN before the
    /// first swap installs one.
    pub delta_norm: f64,
    /// Frobenius distance between the implied and expert gains; NaN while
    /// the estimated input cost is singular.
    pub gain_error_fro: f64,
    /// Informativity residual of the active stack (constant per segment).
    pub sigma_u_residual: f64,
    /// Regularized condition number of the active stack (constant per
    /// segment).
    pub cond_reg: f64,
    /// Orbital derivative of the residual energy; NaN before the first swap.
    pub vdot: f64,
    pub q_hat_diag: Vec<f64>,
    pub r_hat_diag: Vec<f64>,
    pub x: Vec<f64>,
    pub x_hat: Vec<f64>,
    pub u: Vec<f64>,
}

/// A stack swap, logged when it happens.
#[derive(Debug, Clone)]
pub struct SwapEvent {
    pub t: f64,
    /// 1-based swap counter.
    pub index: usize,
    /// Residual norm against the newly installed stack, at the swap instant.
    pub delta_norm_at_swap: f64,
    /// Condition number of the installed stack.
    pub cond_reg: f64,
    /// Informativity of the installed stack.
    pub report: InformativityReport,
}

/// Observation points for a running simulation.
pub trait RunHooks {
    fn on_step(&mut self, _t: f64, _x: &DVector<f64>, _x_hat: &DVector<f64>) {}
    fn on_log(&mut self, _record: &StepRecord) {}
    fn on_swap(&mut self, _event: &SwapEvent) {}
}

/// No-op hooks.
pub struct NoHooks;

impl RunHooks for NoHooks {}

/// Simulation controls.
#[derive(Debug, Clone)]
pub struct SimOptions {
    /// Simulated duration, seconds.
    pub duration: f64,
    /// Integration step, seconds. Must not exceed the data period.
    pub step: f64,
    /// Seconds between logged records; defaults to the data period.
    pub log_period: Option<f64>,
    /// Initial state estimate; defaults to zero.
    pub x_hat0: Option<DVector<f64>>,
    /// Initial reduced weights; defaults to zero.
    pub w0: Option<DVector<f64>>,
    /// Evaluate informativity after every offered sample and record the
    /// first time it holds. Costs one decomposition per sample.
    pub track_informativity: bool,
    /// Riccati solver controls for the expert synthesis.
    pub care: CareOptions,
}

impl SimOptions {
    pub fn new(duration: f64, step: f64) -> Self {
        Self {
            duration,
            step,
            log_period: None,
            x_hat0: None,
            w0: None,
            track_informativity: false,
            care: CareOptions::default(),
        }
    }
}

/// Everything a finished run produces.
#[derive(Debug, Clone)]
pub struct RunLog {
    pub records: Vec<StepRecord>,
    pub swaps: Vec<SwapEvent>,
    pub expert: ExpertPolicy,
    pub k3: DMatrix<f64>,
    pub final_state: ObserverState,
    pub final_plant_state: DVector<f64>,
    /// Informativity of the active stack at the end, when one exists.
    pub final_informativity: Option<InformativityReport>,
    /// First simulated time at which informativity held, when tracked.
    pub fi_first_time: Option<f64>,
    /// True when the run never produced usable signal (zero target vector).
    pub degenerate: bool,
    /// The active stack at the end of the run.
    pub final_active_stack: HistoryStack,
}

struct SegmentCache {
    regressor: DMatrix<f64>,
    target: DVector<f64>,
    cond: f64,
    sigma_u_residual: f64,
}

/// Co-simulate the plant under the expert policy plus excitation, the
/// coupled observer, and the stack schedule.
///
/// The plant receives the expert's command plus the excitation; the
/// excitation is an experimenter-injected signal, so the observer propagates
/// its model with the same total input. The dataset, however, records the
/// expert's command `K x(t)` alone: the learner watches what the expert
/// does, and the excitation's role is only to enrich the visited states.
///
/// Plant, state estimate, and weights advance as one joint fixed-step
/// integration with stage-exact feedback and excitation; the active stack is
/// held piecewise-constant between swaps. Samples are offered to the filling
/// stack every data period, records are logged every log period, and hooks
/// fire as each event happens.
pub fn simulate_expert<H: RunHooks>(
    scn: &Scenario,
    opts: &SimOptions,
    hooks: &mut H,
) -> Result<RunLog> {
    if !opts.step.is_finite() || opts.step <= 0.0 || !opts.duration.is_finite() || opts.duration <= 0.0 {
        return Err(Error::UnsupportedConfiguration(format!(
            "duration and step must be positive (duration {}, step {})",
            opts.duration, opts.step
        )));
    }
    if opts.step > scn.schedule.data_period {
        return Err(Error::UnsupportedConfiguration(format!(
            "step {} exceeds data period {}",
            opts.step, scn.schedule.data_period
        )));
    }

    let sys = &scn.sys;
    let n = sys.n();
    let m = sys.m();
    let layout = scn.layout();
    let sched = &scn.schedule;

    let expert = lqr_gain(
        &sys.a,
        &sys.b,
        &scn.expert_cost.q,
        &scn.expert_cost.r,
        &opts.care,
    )?;
    let k3 = match &scn.k3_override {
        Some(k3) => k3.clone(),
        None => observer_gain(&sys.a, &sys.c, &sched.observer_poles)?,
    };
    let gains = GainConfig {
        k3: k3.clone(),
        k4: sched.k4,
        epsilon: sched.epsilon,
    };
    gains.validate()?;
    let excitation = ExcitationSignal::new(&scn.excitation, m)?;

    let mut pair = StackPair::new(
        layout,
        StackConfig {
            capacity: sched.stack_capacity,
            epsilon: sched.epsilon,
            cond_threshold: sched.cond_threshold,
            r1: sched.r1,
        },
        sched.purge_period,
        sched.purge_policy,
    );

    let h = opts.step;
    let total_steps = (opts.duration / h).round() as usize;
    let data_every = ((sched.data_period / h).round() as usize).max(1);
    let log_period = opts.log_period.unwrap_or(sched.data_period);
    let log_every = ((log_period / h).round() as usize).max(1);

    let mut x = scn.x0.clone();
    let initial_weights = match &opts.w0 {
        Some(w0) => WeightVector::from_reduced(w0, &layout, sched.r1)?,
        None => WeightVector::zeros(&layout, sched.r1),
    };
    let mut state = ObserverState {
        x_hat: opts
            .x_hat0
            .clone()
            .unwrap_or_else(|| DVector::zeros(n)),
        weights: initial_weights,
        t: 0.0,
    };

    let mut weight_update: Option<WeightUpdate> = None;
    let mut segment: Option<SegmentCache> = None;
    let mut records = Vec::new();
    let mut swaps = Vec::new();
    let mut fi_first_time = None;

    let pilot_input = |x: &DVector<f64>| &expert.gain * x;
    let total_input = |t: f64, x: &DVector<f64>| pilot_input(x) + excitation.sample(t);

    for k in 0..=total_steps {
        let t = k as f64 * h;
        let u_now = pilot_input(&x);

        if k % data_every == 0 {
            pair.offer(
                StackEntry {
                    t,
                    x_hat: state.x_hat.clone(),
                    u: u_now.clone(),
                },
                sys,
            )?;
            if opts.track_informativity
                && fi_first_time.is_none()
                && fi_holds(pair.filling(), sched)?
            {
                fi_first_time = Some(t);
            }
            if pair.try_swap(t) == SwapOutcome::Swapped {
                weight_update = WeightUpdate::from_stack(pair.active(), &gains)?;
                let regressor = pair.active().assemble_regressor();
                let target = pair.active().assemble_target();
                let cond = pair.active_mut().condition()?;
                let report = pair
                    .active()
                    .informativity_report(sched.fi_tol, sched.rank_tol)?;
                let delta_now = (&target - &regressor * state.weights.reduced()).norm();
                let event = SwapEvent {
                    t,
                    index: pair.swap_count(),
                    delta_norm_at_swap: delta_now,
                    cond_reg: cond,
                    report: report.clone(),
                };
                hooks.on_swap(&event);
                swaps.push(event);
                segment = Some(SegmentCache {
                    regressor,
                    target,
                    cond,
                    sigma_u_residual: report.sigma_u_residual,
                });
            }
        }

        if k % log_every == 0 {
            let record = make_record(
                t,
                &x,
                &state,
                &u_now,
                segment.as_ref(),
                weight_update.as_ref(),
                &expert,
                &sys.b,
                sched.k4,
            );
            hooks.on_log(&record);
            records.push(record);
        }

        if k == total_steps {
            break;
        }

        // Joint step of plant, state estimate, and weights.
        let w_len = layout.reduced_len();
        let mut joint = DVector::zeros(2 * n + w_len);
        joint.rows_mut(0, n).copy_from(&x);
        joint.rows_mut(n, n).copy_from(&state.x_hat);
        joint.rows_mut(2 * n, w_len).copy_from(&state.weights.reduced());

        let next = rk4_step(
            |tau, z| {
                let xs = z.rows(0, n).into_owned();
                let xh = z.rows(n, n).into_owned();
                let w = z.rows(2 * n, w_len).into_owned();
                let u = total_input(tau, &xs);
                let dx = &sys.a * &xs + &sys.b * &u;
                let dxh = &sys.a * &xh + &sys.b * &u + &gains.k3 * (sys.output(&xs) - sys.output(&xh));
                let dw = match &weight_update {
                    Some(op) => op.derivative(&w),
                    None => DVector::zeros(w_len),
                };
                let mut dz = DVector::zeros(2 * n + w_len);
                dz.rows_mut(0, n).copy_from(&dx);
                dz.rows_mut(n, n).copy_from(&dxh);
                dz.rows_mut(2 * n, w_len).copy_from(&dw);
                dz
            },
            t,
            &joint,
            h,
        )?;

        x = next.rows(0, n).into_owned();
        state = ObserverState {
            x_hat: next.rows(n, n).into_owned(),
            weights: WeightVector::from_reduced(
                &next.rows(2 * n, w_len).into_owned(),
                &layout,
                sched.r1,
            )?,
            t: (k + 1) as f64 * h,
        };
        hooks.on_step(state.t, &x, &state.x_hat);
    }

    let final_informativity = if pair.active().is_empty() {
        None
    } else {
        Some(
            pair.active()
                .informativity_report(sched.fi_tol, sched.rank_tol)?,
        )
    };
    let degenerate = match &final_informativity {
        Some(report) => report.degenerate,
        None => true,
    };

    Ok(RunLog {
        records,
        swaps,
        expert,
        k3,
        final_state: state,
        final_plant_state: x,
        final_informativity,
        fi_first_time,
        degenerate,
        final_active_stack: pair.active().clone(),
    })
}

/// Informativity check with a cheap span pre-filter.
fn fi_holds(stack: &HistoryStack, sched: &Schedule) -> Result<bool> {
    if stack.is_empty() {
        return Ok(false);
    }
    let n = stack.layout().state_dim();
    if stack.len() < n {
        return Ok(false);
    }
    let span = DMatrix::from_fn(n, stack.len(), |i, j| stack.entries()[j].x_hat[i]);
    if crate::numerics::numerical_rank(&span, sched.rank_tol)? < n {
        return Ok(false);
    }
    Ok(stack
        .informativity_report(sched.fi_tol, sched.rank_tol)?
        .fi_ok)
}

#[allow(clippy::too_many_arguments)]
fn make_record(
    t: f64,
    x: &DVector<f64>,
    state: &ObserverState,
    u_now: &DVector<f64>,
    segment: Option<&SegmentCache>,
    weight_update: Option<&WeightUpdate>,
    expert: &ExpertPolicy,
    b: &DMatrix<f64>,
    k4: f64,
) -> StepRecord {
    let w = state.weights.reduced();
    let (delta_norm, vdot, sigma_u_residual, cond_reg) = match (segment, weight_update) {
        (Some(seg), Some(op)) => {
            let delta = &seg.target - &seg.regressor * &w;
            // Same quadratic form as the public check, reusing the cached
            // factorization: -k4 z' (G + eps I)^-1 z with z the projected
            // residual.
            let z = seg.regressor.transpose() * &delta;
            let vdot = -k4 * z.dot(&op.solve_regularized(&z));
            (delta.norm(), vdot, seg.sigma_u_residual, seg.cond)
        }
        _ => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
    };
    let gain_error_fro = match extract_solution(&state.weights, b) {
        Ok(sol) => (&sol.k_hat - &expert.gain).norm(),
        Err(_) => f64::NAN,
    };
    let n = x.len();
    let m = u_now.len();
    let q_hat_diag = crate::basis::sym_vec_diagonal(&state.weights.w_q, n);
    let mut r_full = DVector::zeros(state.weights.w_r_minus.len() + 1);
    r_full[0] = state.weights.r1;
    r_full
        .rows_mut(1, state.weights.w_r_minus.len())
        .copy_from(&state.weights.w_r_minus);
    let r_hat_diag = crate::basis::sym_vec_diagonal(&r_full, m);
    StepRecord {
        t,
        delta_norm,
        gain_error_fro,
        sigma_u_residual,
        cond_reg,
        vdot,
        q_hat_diag,
        r_hat_diag,
        x: x.iter().copied().collect(),
        x_hat: state.x_hat.iter().copied().collect(),
        u: u_now.iter().copied().collect(),
    }
}
