//! `irlqr`: run inverse-reinforcement-learning experiments on
//! linear-quadratic experts, check data informativity, and synthesize expert
//! gains.
//!
//! Exit codes: 0 success, 1 configuration or runtime error, 2 certification
//! failure under `--require-equivalence`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use irlqr_cli::config::load_config;
use irlqr_cli::run;

#[derive(Parser)]
#[command(name = "irlqr", version, about = "Online cost-function estimation for linear-quadratic experts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a configured experiment and write CSV (and optional SVG)
    /// artifacts.
    Run {
        /// Configuration file; repeat to run several experiments.
        #[arg(long, required = true)]
        config: Vec<PathBuf>,
        /// Output directory, overriding the config and IRLQR_OUT_DIR.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write one SVG chart per logged metric.
        #[arg(long)]
        emit_svg: bool,
        /// Exit with code 2 unless the final estimate certifies as an
        /// equivalent solution.
        #[arg(long)]
        require_equivalence: bool,
        /// Number of configs to run in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Report the first time the recorded data become finitely informative.
    CheckInformativity {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the expert gain, value-function matrix, and Riccati residual.
    SynthLqr {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run {
            config,
            out,
            emit_svg,
            require_equivalence,
            jobs,
        } => {
            let mut loaded = Vec::new();
            for path in config {
                let mut cfg = load_config(&path)?;
                if let Some(out) = &out {
                    cfg.output_dir = out.clone();
                }
                cfg.emit_svg |= emit_svg;
                cfg.require_equivalence |= require_equivalence;
                loaded.push((path, cfg));
            }
            let require = loaded.iter().any(|(_, c)| c.require_equivalence);
            let results = run::run_many(loaded, jobs)?;

            let mut all_equivalent = true;
            for (path, result) in results {
                let summary = result
                    .map_err(|e| e.context(format!("run failed for {}", path.display())))?;
                println!("{}", summary.to_line());
                if summary.equivalent != Some(true) {
                    all_equivalent = false;
                }
            }
            if require && !all_equivalent {
                eprintln!("certification failed: final estimate is not an equivalent solution");
                return Ok(ExitCode::from(2));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckInformativity { config } => {
            let cfg = load_config(&config)?;
            run::check_informativity(&cfg, &mut std::io::stdout())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::SynthLqr { config } => {
            let cfg = load_config(&config)?;
            run::synth_lqr(&cfg, &mut std::io::stdout())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
