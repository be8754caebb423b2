//! `smse`: closed-form bounds, Monte-Carlo checks and parameter sweeps for
//! multi-cell massive MIMO uplinks with spatial-modulation UEs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod output;
mod values;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use smse_core::bounds::Combiner;
use smse_core::sweep::Axis;
use smse_core::{ErrorKind, ExperimentConfig};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SMSE_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "smse", version, about = "Spectral-efficiency bounds and checks for spatial-modulation massive MIMO")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML experiment file; every key must be present.
    #[arg(long, global = true, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Start from a built-in figure preset (fig4 ... fig14).
    #[arg(long, global = true, value_name = "ID")]
    preset: Option<String>,
    /// Override one key, e.g. `--set system.m=256`. Repeatable.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", env = OUT_DIR_ENV)]
    out: Option<PathBuf>,
    /// Master seed; replaces `montecarlo.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Args, Clone)]
pub struct MonteCarloArgs {
    /// Restrict to one combiner. Repeatable.
    #[arg(long = "combiner", value_name = "mr|zf")]
    pub combiners: Vec<Combiner>,
    /// Channel draws; replaces `montecarlo.draws`.
    #[arg(long)]
    pub draws: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form SINR and rate bounds at the configured operating point.
    Bounds,
    /// Monte-Carlo SINR reciprocals next to the closed forms.
    Simulate(MonteCarloArgs),
    /// Bound against simulated rate over the configured grid.
    Tightness(MonteCarloArgs),
    /// Rates for every candidate N over a parameter grid, and N*.
    Sweep {
        /// Swept parameter: m, k, t, d_m, omega, n or snr_db.
        #[arg(long)]
        axis: Option<Axis>,
        /// `a,b,c`, `a..b`, `a..b:step` or `a..b*ratio`.
        #[arg(long, allow_hyphen_values = true)]
        values: Option<String>,
        #[arg(long = "combiner", value_name = "mr|zf")]
        combiners: Vec<Combiner>,
    },
    /// Best antenna count at the configured operating point.
    OptimizeN {
        #[arg(long = "combiner", value_name = "mr|zf")]
        combiners: Vec<Combiner>,
    },
    /// Leakage-minimising antenna spacing for each candidate N.
    OptimizeSpacing,
    /// Spatial moments of the interference ratios (cached).
    Moments,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Bounds => "bounds",
            Command::Simulate(_) => "simulate",
            Command::Tightness(_) => "tightness",
            Command::Sweep { .. } => "sweep",
            Command::OptimizeN { .. } => "optimize-n",
            Command::OptimizeSpacing => "optimize-spacing",
            Command::Moments => "moments",
        }
    }
}

fn resolve(common: &Common) -> Result<ExperimentConfig, smse_core::Error> {
    let mut cfg = match (&common.config, &common.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| smse_core::Error::Config(format!("reading {}: {e}", path.display())))?;
            ExperimentConfig::from_toml(&text)?
        }
        (None, Some(id)) => ExperimentConfig::preset(id)?,
        (None, None) => ExperimentConfig::default(),
    };
    for o in &common.overrides {
        cfg.apply_override(o)?;
    }
    if let Some(seed) = common.seed {
        cfg.montecarlo.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output.dir = out.to_string_lossy().into_owned();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| smse_core::Error::Config(format!("--threads: {e}")))?;
    }
    let mut cfg = resolve(&cli.common)?;
    let start = std::time::Instant::now();
    let mut out = output::OutputDir::create(PathBuf::from(&cfg.output.dir))?;
    match &cli.command {
        Command::Bounds => commands::bounds(&cfg, &mut out)?,
        Command::Simulate(args) => {
            commands::apply_monte_carlo(&mut cfg, args)?;
            commands::simulate(&cfg, &mut out)?
        }
        Command::Tightness(args) => {
            commands::apply_monte_carlo(&mut cfg, args)?;
            commands::tightness(&cfg, &mut out)?
        }
        Command::Sweep { axis, values, combiners } => {
            if let Some(axis) = axis {
                cfg.sweep.axis = Some(*axis);
            }
            if let Some(v) = values {
                cfg.sweep.values = values::parse_values(v)?;
            }
            if !combiners.is_empty() {
                cfg.system.combiners = combiners.clone();
            }
            cfg.validate()?;
            commands::sweep(&cfg, &mut out)?
        }
        Command::OptimizeN { combiners } => {
            if !combiners.is_empty() {
                cfg.system.combiners = combiners.clone();
            }
            commands::optimize_n(&cfg, &mut out)?
        }
        Command::OptimizeSpacing => commands::optimize_spacing(&cfg, &mut out)?,
        Command::Moments => commands::moments(&cfg, &mut out)?,
    }
    let written = out.finish(cli.command.name(), &cfg, start.elapsed().as_secs_f64())?;
    eprintln!("wrote {} files to {}", written.len(), cfg.output.dir);
    Ok(())
}

/// 2: configuration, 3: infeasible operating point, 4: numerical failure,
/// 1: anything else (I/O and the like).
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<smse_core::Error>().map(|e| e.kind()) {
        Some(ErrorKind::Config) => 2,
        Some(ErrorKind::Infeasible) => 3,
        Some(ErrorKind::Numerical) => 4,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
