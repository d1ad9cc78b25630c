//! Experiment execution: simulate, stream CSV artifacts, certify, summarize.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use nalgebra::DMatrix;

use irlqr_core::observer::certify_equivalence;
use irlqr_core::scenario::{simulate_expert, RunHooks, SimOptions, StepRecord, SwapEvent};

use crate::config::RunConfig;
use crate::svg::{write_chart, Series};

/// End-of-run summary, printed as one line on standard output.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub scenario: String,
    pub final_delta_norm: f64,
    pub final_gain_error: f64,
    /// None when certification was not evaluated (singular estimate).
    pub equivalent: Option<bool>,
    pub wall_seconds: f64,
    pub swap_count: usize,
    pub fi_ok_at_end: bool,
    pub degenerate: bool,
}

impl RunSummary {
    pub fn to_line(&self) -> String {
        format!(
            "scenario={} final_delta={:.6e} gain_error={:.6e} equivalent={} swaps={} fi_at_end={} degenerate={} wall_s={:.2}",
            self.scenario,
            self.final_delta_norm,
            self.final_gain_error,
            match self.equivalent {
                Some(true) => "yes",
                Some(false) => "no",
                None => "unavailable",
            },
            self.swap_count,
            self.fi_ok_at_end,
            self.degenerate,
            self.wall_seconds,
        )
    }
}

/// Format one value with nine significant digits, stable across runs.
fn fmt(v: f64) -> String {
    format!("{v:.8e}")
}

/// Streams `timeseries.csv` rows as the run produces them, so a failing run
/// still leaves the rows logged up to the fault.
struct CsvHooks {
    out: BufWriter<File>,
    header_written: bool,
    records: Vec<StepRecord>,
    swaps: Vec<SwapEvent>,
    error: Option<std::io::Error>,
}

impl CsvHooks {
    fn new(path: &Path) -> anyhow::Result<Self> {
        Ok(Self {
            out: BufWriter::new(File::create(path).with_context(|| {
                format!("cannot create {}", path.display())
            })?),
            header_written: false,
            records: Vec::new(),
            swaps: Vec::new(),
            error: None,
        })
    }

    fn write_record(&mut self, r: &StepRecord) -> std::io::Result<()> {
        if !self.header_written {
            write!(self.out, "t,delta_norm,gain_error_fro,sigma_u_residual,cond_reg")?;
            for i in 0..r.q_hat_diag.len() {
                write!(self.out, ",q_hat_{i}")?;
            }
            for i in 0..r.r_hat_diag.len() {
                write!(self.out, ",r_hat_{i}")?;
            }
            for i in 0..r.x.len() {
                write!(self.out, ",x_{i}")?;
            }
            for i in 0..r.x_hat.len() {
                write!(self.out, ",x_hat_{i}")?;
            }
            for i in 0..r.u.len() {
                write!(self.out, ",u_{i}")?;
            }
            writeln!(self.out)?;
            self.header_written = true;
        }
        write!(
            self.out,
            "{},{},{},{},{}",
            fmt(r.t),
            fmt(r.delta_norm),
            fmt(r.gain_error_fro),
            fmt(r.sigma_u_residual),
            fmt(r.cond_reg)
        )?;
        for group in [&r.q_hat_diag, &r.r_hat_diag, &r.x, &r.x_hat, &r.u] {
            for v in group {
                write!(self.out, ",{}", fmt(*v))?;
            }
        }
        writeln!(self.out)
    }
}

impl RunHooks for CsvHooks {
    fn on_log(&mut self, record: &StepRecord) {
        if self.error.is_none() {
            if let Err(e) = self.write_record(record) {
                self.error = Some(e);
            }
        }
        self.records.push(record.clone());
    }

    fn on_swap(&mut self, event: &SwapEvent) {
        self.swaps.push(event.clone());
    }
}

fn write_matrix_rows(
    out: &mut impl Write,
    name: &str,
    m: &DMatrix<f64>,
) -> std::io::Result<()> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            writeln!(out, "{name},{i},{j},{}", fmt(m[(i, j)]))?;
        }
    }
    Ok(())
}

/// Execute one configured run, writing `timeseries.csv` and
/// `final_solution.csv` into the output directory and returning the summary.
pub fn run(config: &RunConfig) -> anyhow::Result<RunSummary> {
    warn_if_under_capacity(config);
    std::fs::create_dir_all(&config.output_dir).with_context(|| {
        format!("cannot create output dir {}", config.output_dir.display())
    })?;
    let timeseries_path = config.output_dir.join("timeseries.csv");
    let mut hooks = CsvHooks::new(&timeseries_path)?;

    let mut opts = SimOptions::new(config.duration, config.step);
    opts.log_period = config.log_period;
    opts.x_hat0 = config.x_hat0.clone();
    opts.care = config.care.clone();

    let start = Instant::now();
    let log = simulate_expert(&config.scenario, &opts, &mut hooks);
    hooks.out.flush().ok();
    let log = log?;
    if let Some(e) = hooks.error.take() {
        return Err(e).context("failed writing timeseries.csv");
    }
    let wall_seconds = start.elapsed().as_secs_f64();

    // Final solution artifact: estimated triple, implied gain, expert gain.
    let solution_path = config.output_dir.join("final_solution.csv");
    {
        let mut out = BufWriter::new(File::create(&solution_path).with_context(|| {
            format!("cannot create {}", solution_path.display())
        })?);
        writeln!(out, "matrix,row,col,value")?;
        write_matrix_rows(&mut out, "k_expert", &log.expert.gain)?;
        match irlqr_core::basis::extract_solution(&log.final_state.weights, &config.scenario.sys.b)
        {
            Ok(sol) => {
                write_matrix_rows(&mut out, "s_hat", &sol.s_hat)?;
                write_matrix_rows(&mut out, "q_hat", &sol.q_hat)?;
                write_matrix_rows(&mut out, "r_hat", &sol.r_hat)?;
                write_matrix_rows(&mut out, "k_hat", &sol.k_hat)?;
            }
            Err(_) => {
                // Transient-singular estimate: record the raw weights so the
                // artifact is still regenerable.
                writeln!(out, "# final input-cost estimate singular; raw weights follow")?;
                let w = log.final_state.weights.reduced();
                for (i, v) in w.iter().enumerate() {
                    writeln!(out, "w,{i},0,{}", fmt(*v))?;
                }
            }
        }
    }

    // Debugging dump of the dataset the final estimate was driven by.
    if !log.final_active_stack.is_empty() {
        let stack_path = config.output_dir.join("final_stack.csv");
        let mut out = BufWriter::new(File::create(&stack_path).with_context(|| {
            format!("cannot create {}", stack_path.display())
        })?);
        log.final_active_stack.write_csv(&mut out)?;
    }

    // Certification against the final active stack.
    let varpi = config.varpi_rel * log.expert.gain.norm();
    let equivalent = if log.final_active_stack.is_empty() {
        None
    } else {
        certify_equivalence(
            &log.final_state.weights,
            &log.final_active_stack,
            &config.scenario.sys,
            &log.expert.gain,
            varpi,
            config.hjb_tol,
        )
        .ok()
        .map(|report| report.equivalent)
    };

    if config.emit_svg {
        emit_charts(&config.output_dir, &hooks.records)?;
    }

    let last = hooks.records.last();
    let summary = RunSummary {
        scenario: config.scenario.name.clone(),
        final_delta_norm: last.map_or(f64::NAN, |r| r.delta_norm),
        final_gain_error: last.map_or(f64::NAN, |r| r.gain_error_fro),
        equivalent,
        wall_seconds,
        swap_count: log.swaps.len(),
        fi_ok_at_end: log.final_informativity.as_ref().is_some_and(|r| r.fi_ok),
        degenerate: log.degenerate,
    };
    Ok(summary)
}

fn emit_charts(dir: &Path, records: &[StepRecord]) -> anyhow::Result<()> {
    let delta: Vec<(f64, f64)> = records.iter().map(|r| (r.t, r.delta_norm)).collect();
    write_chart(
        &dir.join("delta_norm.svg"),
        "stacked residual norm",
        "||delta|| (log)",
        &[Series {
            label: "delta".into(),
            points: &delta,
        }],
        true,
    )?;

    let gain: Vec<(f64, f64)> = records.iter().map(|r| (r.t, r.gain_error_fro)).collect();
    write_chart(
        &dir.join("gain_error.svg"),
        "feedback-gain error",
        "||K_hat - K_expert||_F (log)",
        &[Series {
            label: "gain error".into(),
            points: &gain,
        }],
        true,
    )?;

    if let Some(first) = records.first() {
        let q_series: Vec<Vec<(f64, f64)>> = (0..first.q_hat_diag.len())
            .map(|i| records.iter().map(|r| (r.t, r.q_hat_diag[i])).collect())
            .collect();
        let series: Vec<Series<'_>> = q_series
            .iter()
            .enumerate()
            .map(|(i, pts)| Series {
                label: format!("q_hat[{i}]"),
                points: pts,
            })
            .collect();
        write_chart(
            &dir.join("qhat_diag.svg"),
            "estimated state-cost diagonal",
            "q_hat diagonal",
            &series,
            false,
        )?;

        let r_series: Vec<Vec<(f64, f64)>> = (0..first.r_hat_diag.len())
            .map(|i| records.iter().map(|r| (r.t, r.r_hat_diag[i])).collect())
            .collect();
        let series: Vec<Series<'_>> = r_series
            .iter()
            .enumerate()
            .map(|(i, pts)| Series {
                label: format!("r_hat[{i}]"),
                points: pts,
            })
            .collect();
        write_chart(
            &dir.join("rhat_diag.svg"),
            "estimated input-cost diagonal",
            "r_hat diagonal",
            &series,
            false,
        )?;
    }
    Ok(())
}

/// Stacks below the reduced weight count cannot determine every weight on
/// their own; still usable (regularized), but worth flagging.
fn warn_if_under_capacity(config: &RunConfig) {
    let layout = config.scenario.layout();
    if config.scenario.schedule.stack_capacity < layout.reduced_len() {
        eprintln!(
            "warning: stack capacity {} is below the {} reduced weights; \
             the stack alone cannot determine every weight",
            config.scenario.schedule.stack_capacity,
            layout.reduced_len()
        );
    }
}

/// Run the informativity check: simulate with tracking on and report the
/// first time the data-informativity conditions hold.
pub fn check_informativity(config: &RunConfig, out: &mut impl Write) -> anyhow::Result<()> {
    warn_if_under_capacity(config);
    let mut opts = SimOptions::new(config.duration, config.step);
    opts.log_period = config.log_period;
    opts.x_hat0 = config.x_hat0.clone();
    opts.care = config.care.clone();
    opts.track_informativity = true;

    let log = simulate_expert(&config.scenario, &opts, &mut irlqr_core::scenario::NoHooks)?;
    match log.fi_first_time {
        Some(t) => writeln!(out, "finitely informative: first held at t = {t:.3} s")?,
        None => writeln!(
            out,
            "finitely informative: never within {} s",
            config.duration
        )?,
    }
    match &log.final_informativity {
        Some(report) => {
            writeln!(
                out,
                "final active stack: span_rank={} span_ok={} sigma_u_residual={:.6e} (target norm {:.6e}) fi_ok={}{}",
                report.span_rank,
                report.span_ok,
                report.sigma_u_residual,
                report.target_norm,
                report.fi_ok,
                if report.degenerate { " degenerate" } else { "" },
            )?;
        }
        None => writeln!(out, "final active stack: empty (no swap ever occurred)")?,
    }
    Ok(())
}

/// Synthesize and print the expert for a configured scenario.
pub fn synth_lqr(config: &RunConfig, out: &mut impl Write) -> anyhow::Result<()> {
    let scn = &config.scenario;
    let expert = irlqr_core::synthesis::lqr_gain(
        &scn.sys.a,
        &scn.sys.b,
        &scn.expert_cost.q,
        &scn.expert_cost.r,
        &config.care,
    )?;
    let r_inv = expert
        .r
        .clone()
        .try_inverse()
        .context("expert input cost is singular")?;
    let residual = (scn.sys.a.transpose() * &expert.s + &expert.s * &scn.sys.a
        - &expert.s * &scn.sys.b * r_inv * scn.sys.b.transpose() * &expert.s
        + &expert.q)
        .norm();
    writeln!(out, "expert feedback gain (u = K x):")?;
    for i in 0..expert.gain.nrows() {
        let row: Vec<String> = (0..expert.gain.ncols())
            .map(|j| format!("{:>14.6e}", expert.gain[(i, j)]))
            .collect();
        writeln!(out, "  {}", row.join(" "))?;
    }
    writeln!(out, "value-function matrix S:")?;
    for i in 0..expert.s.nrows() {
        let row: Vec<String> = (0..expert.s.ncols())
            .map(|j| format!("{:>14.6e}", expert.s[(i, j)]))
            .collect();
        writeln!(out, "  {}", row.join(" "))?;
    }
    writeln!(out, "riccati residual: {residual:.6e}")?;
    Ok(())
}

/// Run several configs, optionally in parallel. Each config writes into its
/// own output directory; when directories collide, a subdirectory named
/// after the config file keeps the artifacts apart.
pub fn run_many(
    configs: Vec<(PathBuf, RunConfig)>,
    jobs: usize,
) -> anyhow::Result<Vec<(PathBuf, anyhow::Result<RunSummary>)>> {
    let mut configs = disambiguate_output_dirs(configs);
    let jobs = jobs.max(1);
    let mut results: Vec<Option<(PathBuf, anyhow::Result<RunSummary>)>> =
        (0..configs.len()).map(|_| None).collect();

    while !configs.is_empty() {
        let batch: Vec<(usize, (PathBuf, RunConfig))> = {
            let take = jobs.min(configs.len());
            let offset = results.iter().filter(|r| r.is_some()).count();
            configs
                .drain(..take)
                .enumerate()
                .map(|(i, c)| (offset + i, c))
                .collect()
        };
        let handles: Vec<_> = batch
            .into_iter()
            .map(|(idx, (path, config))| {
                std::thread::spawn(move || (idx, path, run(&config)))
            })
            .collect();
        for handle in handles {
            let (idx, path, result) = handle
                .join()
                .map_err(|_| anyhow::anyhow!("a run thread panicked"))?;
            results[idx] = Some((path, result));
        }
    }
    Ok(results.into_iter().map(|r| r.expect("filled")).collect())
}

fn disambiguate_output_dirs(
    configs: Vec<(PathBuf, RunConfig)>,
) -> Vec<(PathBuf, RunConfig)> {
    let mut seen: Vec<PathBuf> = Vec::new();
    configs
        .into_iter()
        .map(|(path, mut config)| {
            if seen.contains(&config.output_dir) {
                let stem = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "run".into());
                config.output_dir = config.output_dir.join(stem);
            }
            seen.push(config.output_dir.clone());
            (path, config)
        })
        .collect()
}
