//! Flat key-path configuration files.
//!
//! The format is line-based `key = value` with `#` comments. Keys are dotted
//! paths (`scenario.epsilon`, `excitation.amplitude`); unknown keys are
//! rejected with their line number, as are duplicates. Every field defaults
//! from the selected scenario, so the minimal useful file is a single
//! `scenario = academic` line.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use nalgebra::{DMatrix, DVector};

use irlqr_core::scenario::{academic_scenario, quadcopter_scenario, QuadcopterParams, Scenario};
use irlqr_core::stack::PurgePolicy;
use irlqr_core::synthesis::CareOptions;
use irlqr_core::system::{CostPair, LtiSystem};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "IRLQR_OUT_DIR";

/// A fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: Scenario,
    /// Simulated duration, seconds.
    pub duration: f64,
    /// Integration step, seconds.
    pub step: f64,
    /// Logging period, seconds; defaults to the scenario data period.
    pub log_period: Option<f64>,
    pub output_dir: PathBuf,
    pub emit_svg: bool,
    pub require_equivalence: bool,
    /// Gain tolerance for certification, relative to the expert gain norm.
    pub varpi_rel: f64,
    /// Pointwise optimality tolerance per unit of `1 + ||x||^2`.
    pub hjb_tol: f64,
    /// Initial state estimate; zero when absent.
    pub x_hat0: Option<DVector<f64>>,
    pub care: CareOptions,
}

fn parse_f64(key: &str, v: &str) -> anyhow::Result<f64> {
    v.parse::<f64>()
        .map_err(|_| anyhow!("key '{key}': expected a number, got '{v}'"))
}

fn parse_usize(key: &str, v: &str) -> anyhow::Result<usize> {
    v.parse::<usize>()
        .map_err(|_| anyhow!("key '{key}': expected a non-negative integer, got '{v}'"))
}

fn parse_u64(key: &str, v: &str) -> anyhow::Result<u64> {
    v.parse::<u64>()
        .map_err(|_| anyhow!("key '{key}': expected an unsigned integer, got '{v}'"))
}

fn parse_bool(key: &str, v: &str) -> anyhow::Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => bail!("key '{key}': expected true or false, got '{v}'"),
    }
}

fn parse_f64_list(key: &str, v: &str) -> anyhow::Result<Vec<f64>> {
    v.split(',')
        .map(|s| parse_f64(key, s.trim()))
        .collect::<anyhow::Result<Vec<f64>>>()
}

fn parse_usize_list(key: &str, v: &str) -> anyhow::Result<Vec<usize>> {
    v.split(',')
        .map(|s| parse_usize(key, s.trim()))
        .collect::<anyhow::Result<Vec<usize>>>()
}

/// Raw `key = value` pairs with line numbers, before interpretation.
fn parse_pairs(text: &str) -> anyhow::Result<BTreeMap<String, (usize, String)>> {
    let mut pairs = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {line_no}: expected 'key = value', got '{line}'"))?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() {
            bail!("line {line_no}: empty key");
        }
        if pairs.insert(key.clone(), (line_no, value)).is_some() {
            bail!("line {line_no}: duplicate key '{key}'");
        }
    }
    Ok(pairs)
}

struct Pairs {
    map: BTreeMap<String, (usize, String)>,
}

impl Pairs {
    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key).map(|(_, v)| v)
    }

    fn finish(self) -> anyhow::Result<()> {
        if let Some((key, (line, _))) = self.map.into_iter().next() {
            bail!("line {line}: unknown key '{key}'");
        }
        Ok(())
    }
}

/// Load and fully resolve a configuration file.
pub fn load_config(path: &Path) -> anyhow::Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    resolve_config(&text)
        .with_context(|| format!("in config file {}", path.display()))
}

/// Resolve configuration text. Split from file loading for tests.
pub fn resolve_config(text: &str) -> anyhow::Result<RunConfig> {
    let mut pairs = Pairs {
        map: parse_pairs(text)?,
    };

    let kind = pairs.take("scenario").unwrap_or_else(|| "academic".into());
    let (mut scenario, default_duration, default_varpi) = match kind.as_str() {
        "academic" => (academic_scenario(), 50.0, 0.05),
        "quadcopter" => (
            quadcopter_scenario(&QuadcopterParams::default()),
            60.0,
            0.10,
        ),
        "custom" => (custom_scenario(&mut pairs)?, 50.0, 0.05),
        other => bail!("key 'scenario': expected academic, quadcopter, or custom, got '{other}'"),
    };

    // Schedule overrides.
    if let Some(v) = pairs.take("scenario.data_period") {
        scenario.schedule.data_period = parse_f64("scenario.data_period", &v)?;
    }
    if let Some(v) = pairs.take("scenario.purge_period") {
        scenario.schedule.purge_period = parse_f64("scenario.purge_period", &v)?;
    }
    if let Some(v) = pairs.take("scenario.cond_threshold") {
        scenario.schedule.cond_threshold = parse_f64("scenario.cond_threshold", &v)?;
    }
    if let Some(v) = pairs.take("scenario.epsilon") {
        scenario.schedule.epsilon = parse_f64("scenario.epsilon", &v)?;
    }
    if let Some(v) = pairs.take("scenario.r1") {
        scenario.schedule.r1 = parse_f64("scenario.r1", &v)?;
    }
    if let Some(v) = pairs.take("scenario.k4") {
        scenario.schedule.k4 = parse_f64("scenario.k4", &v)?;
    }
    if let Some(v) = pairs.take("scenario.stack_capacity") {
        scenario.schedule.stack_capacity = parse_usize("scenario.stack_capacity", &v)?;
    }
    if let Some(v) = pairs.take("scenario.purge_policy") {
        scenario.schedule.purge_policy = match v.as_str() {
            "and" => PurgePolicy::And,
            "or" => PurgePolicy::Or,
            other => bail!("key 'scenario.purge_policy': expected and/or, got '{other}'"),
        };
    }
    if let Some(v) = pairs.take("scenario.fi_tol") {
        scenario.schedule.fi_tol = parse_f64("scenario.fi_tol", &v)?;
    }
    if let Some(v) = pairs.take("scenario.rank_tol") {
        scenario.schedule.rank_tol = parse_f64("scenario.rank_tol", &v)?;
    }
    if let Some(v) = pairs.take("scenario.observer_poles") {
        scenario.schedule.observer_poles = parse_f64_list("scenario.observer_poles", &v)?;
    }
    if let Some(v) = pairs.take("scenario.x0") {
        let x0 = parse_f64_list("scenario.x0", &v)?;
        if x0.len() != scenario.sys.n() {
            bail!(
                "key 'scenario.x0': expected {} entries, got {}",
                scenario.sys.n(),
                x0.len()
            );
        }
        scenario.x0 = DVector::from_vec(x0);
    }

    // Excitation overrides.
    if let Some(v) = pairs.take("excitation.count") {
        scenario.excitation.count = parse_usize("excitation.count", &v)?;
    }
    if let Some(v) = pairs.take("excitation.amplitude") {
        scenario.excitation.amplitude = parse_f64("excitation.amplitude", &v)?;
    }
    if let Some(v) = pairs.take("excitation.freq_lo") {
        scenario.excitation.freq_range.0 = parse_f64("excitation.freq_lo", &v)?;
    }
    if let Some(v) = pairs.take("excitation.freq_hi") {
        scenario.excitation.freq_range.1 = parse_f64("excitation.freq_hi", &v)?;
    }
    if let Some(v) = pairs.take("excitation.phase_lo") {
        scenario.excitation.phase_range.0 = parse_f64("excitation.phase_lo", &v)?;
    }
    if let Some(v) = pairs.take("excitation.phase_hi") {
        scenario.excitation.phase_range.1 = parse_f64("excitation.phase_hi", &v)?;
    }
    if let Some(v) = pairs.take("excitation.channels") {
        scenario.excitation.channels = Some(parse_usize_list("excitation.channels", &v)?);
    }
    if let Some(v) = pairs.take("seed") {
        scenario.excitation.seed = parse_u64("seed", &v)?;
    }

    let duration = match pairs.take("duration") {
        Some(v) => parse_f64("duration", &v)?,
        None => default_duration,
    };
    let step = match pairs.take("step") {
        Some(v) => parse_f64("step", &v)?,
        None => 1e-3,
    };
    let log_period = match pairs.take("log_period") {
        Some(v) => Some(parse_f64("log_period", &v)?),
        None => None,
    };
    let output_dir = match pairs.take("output_dir") {
        Some(v) => PathBuf::from(v),
        None => std::env::var_os(OUTPUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    let emit_svg = match pairs.take("emit_svg") {
        Some(v) => parse_bool("emit_svg", &v)?,
        None => false,
    };
    let require_equivalence = match pairs.take("require_equivalence") {
        Some(v) => parse_bool("require_equivalence", &v)?,
        None => false,
    };
    let varpi_rel = match pairs.take("equivalence.varpi_rel") {
        Some(v) => parse_f64("equivalence.varpi_rel", &v)?,
        None => default_varpi,
    };
    let hjb_tol = match pairs.take("equivalence.hjb_tol") {
        Some(v) => parse_f64("equivalence.hjb_tol", &v)?,
        None => 1e-3,
    };
    let x_hat0 = match pairs.take("scenario.x_hat0") {
        Some(v) => {
            let x = parse_f64_list("scenario.x_hat0", &v)?;
            if x.len() != scenario.sys.n() {
                bail!(
                    "key 'scenario.x_hat0': expected {} entries, got {}",
                    scenario.sys.n(),
                    x.len()
                );
            }
            Some(DVector::from_vec(x))
        }
        None => None,
    };

    let mut care = CareOptions::default();
    if let Some(v) = pairs.take("care.step") {
        care.step = parse_f64("care.step", &v)?;
    }
    if let Some(v) = pairs.take("care.rel_tol") {
        care.rel_tol = parse_f64("care.rel_tol", &v)?;
    }
    if let Some(v) = pairs.take("care.horizon") {
        care.horizon = parse_f64("care.horizon", &v)?;
    }
    if let Some(v) = pairs.take("care.decay_horizon") {
        care.decay_horizon = parse_f64("care.decay_horizon", &v)?;
    }

    pairs.finish()?;

    let config = RunConfig {
        scenario,
        duration,
        step,
        log_period,
        output_dir,
        emit_svg,
        require_equivalence,
        varpi_rel,
        hjb_tol,
        x_hat0,
        care,
    };
    validate(&config)?;
    Ok(config)
}

fn validate(config: &RunConfig) -> anyhow::Result<()> {
    if !config.duration.is_finite() || config.duration <= 0.0 {
        bail!("key 'duration': must be positive, got {}", config.duration);
    }
    if !config.step.is_finite() || config.step <= 0.0 {
        bail!("key 'step': must be positive, got {}", config.step);
    }
    if config.step > config.scenario.schedule.data_period {
        bail!(
            "key 'step': {} exceeds scenario.data_period {}",
            config.step,
            config.scenario.schedule.data_period
        );
    }
    if let Some(lp) = config.log_period {
        if !lp.is_finite() || lp <= 0.0 {
            bail!("key 'log_period': must be positive, got {lp}");
        }
    }
    let sched = &config.scenario.schedule;
    if sched.data_period <= 0.0 || sched.purge_period <= 0.0 {
        bail!("scenario periods must be positive");
    }
    if sched.epsilon < 0.0 {
        bail!("key 'scenario.epsilon': must be non-negative, got {}", sched.epsilon);
    }
    if sched.r1 <= 0.0 {
        bail!("key 'scenario.r1': must be positive, got {}", sched.r1);
    }
    if sched.k4 <= 0.0 {
        bail!("key 'scenario.k4': must be positive, got {}", sched.k4);
    }
    if sched.stack_capacity == 0 {
        bail!("key 'scenario.stack_capacity': must be positive");
    }
    let exc = &config.scenario.excitation;
    if exc.freq_range.0 > exc.freq_range.1 || exc.phase_range.0 > exc.phase_range.1 {
        bail!("excitation ranges must be ascending");
    }
    if let Some(channels) = &exc.channels {
        for &ch in channels {
            if ch >= config.scenario.sys.m() {
                bail!(
                    "key 'excitation.channels': channel {ch} out of range for {} inputs",
                    config.scenario.sys.m()
                );
            }
        }
    }
    if config.varpi_rel <= 0.0 {
        bail!("key 'equivalence.varpi_rel': must be positive");
    }
    if config.hjb_tol <= 0.0 {
        bail!("key 'equivalence.hjb_tol': must be positive");
    }
    Ok(())
}

/// Build a scenario from explicit matrices in the config.
fn custom_scenario(pairs: &mut Pairs) -> anyhow::Result<Scenario> {
    let n = parse_usize(
        "custom.n",
        &pairs
            .take("custom.n")
            .ok_or_else(|| anyhow!("custom scenario requires 'custom.n'"))?,
    )?;
    let m = parse_usize(
        "custom.m",
        &pairs
            .take("custom.m")
            .ok_or_else(|| anyhow!("custom scenario requires 'custom.m'"))?,
    )?;
    if n == 0 || m == 0 {
        bail!("custom.n and custom.m must be positive");
    }

    let mut matrix = |key: &str, rows: usize, cols: usize, required: bool| -> anyhow::Result<Option<DMatrix<f64>>> {
        match pairs.take(key) {
            Some(v) => {
                let entries = parse_f64_list(key, &v)?;
                if entries.len() != rows * cols {
                    bail!(
                        "key '{key}': expected {rows}x{cols} = {} entries, got {}",
                        rows * cols,
                        entries.len()
                    );
                }
                Ok(Some(DMatrix::from_row_slice(rows, cols, &entries)))
            }
            None if required => bail!("custom scenario requires '{key}'"),
            None => Ok(None),
        }
    };

    let a = matrix("custom.a", n, n, true)?.expect("required");
    let b = matrix("custom.b", n, m, true)?.expect("required");
    let c = matrix("custom.c", n, n, false)?.unwrap_or_else(|| DMatrix::identity(n, n));
    let q = matrix("custom.q", n, n, true)?.expect("required");
    let r = matrix("custom.r", m, m, true)?.expect("required");
    let k3 = matrix("custom.k3", n, n, false)?;

    let sys = LtiSystem::new(a, b, c).map_err(|e| anyhow!("custom system: {e}"))?;
    let cost = CostPair::new(q, r).map_err(|e| anyhow!("custom cost: {e}"))?;

    // Generic defaults mirroring the small benchmark; poles at -1.
    let mut scenario = academic_scenario();
    let layout_len = {
        let p = n * (n + 1) / 2;
        let mm = m * (m + 1) / 2;
        2 * p + mm - 1
    };
    scenario.name = "custom".into();
    scenario.x0 = DVector::from_element(n, 0.5);
    scenario.schedule.observer_poles = vec![-1.0; n];
    scenario.schedule.stack_capacity = layout_len;
    scenario.sys = sys;
    scenario.expert_cost = cost;
    scenario.k3_override = k3;
    Ok(scenario)
}
