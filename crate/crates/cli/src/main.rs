mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use divopt::SimConfig;

use crate::commands::{Grid, StrategySpec};
use crate::config::{FileConfig, Overrides, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{emit, Format};

/// Optimal periodic dividends with proportional reinsurance.
#[derive(Debug, Parser)]
#[command(name = "solver", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Flat JSON object with delta, sigma, mu, eta, gamma (and optionally x0).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dividend decision intensity: a number, `2^N` or `inf`.
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<String>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long, default_value_t = 0.001)]
    x_min: f64,
    #[arg(long, default_value_t = 1.0)]
    x_max: f64,
    #[arg(long, default_value_t = 200)]
    x_steps: usize,
    /// Space the grid points logarithmically.
    #[arg(long)]
    x_log: bool,
}

#[derive(Debug, Args)]
struct SimArgs {
    /// Initial surplus (falls back to `x0` in the config file).
    #[arg(long)]
    x0: Option<f64>,
    /// Number of simulated paths (even when antithetic).
    #[arg(long, default_value_t = 20_000)]
    paths: usize,
    #[arg(long, default_value_t = divopt::montecarlo::DEFAULT_DT)]
    dt: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Horizon; defaults to 40/delta.
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long)]
    no_antithetic: bool,
    /// Detect ruin only at grid points.
    #[arg(long)]
    no_bridge: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Regime and thresholds.
    Classify(#[command(flatten)] Common),
    /// Barrier, switch level and constants.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        barrier: Option<f64>,
    },
    /// Value function, derivatives and retention on a grid.
    Curve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        barrier: Option<f64>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Optimal barrier and switch level for gamma = 2^N over a range of N.
    SweepGamma {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = -4.0, allow_hyphen_values = true)]
        n_min: f64,
        #[arg(long, default_value_t = 50.0, allow_hyphen_values = true)]
        n_max: f64,
        #[arg(long, default_value_t = 0.2)]
        n_step: f64,
    },
    /// Value of fixed-barrier strategies against the optimal one.
    SweepBarrier {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0)]
        b_min: f64,
        #[arg(long, default_value_t = 0.5)]
        b_max: f64,
        #[arg(long, default_value_t = 0.02)]
        b_step: f64,
        #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2,0.4")]
        x_values: Vec<f64>,
    },
    /// Monte Carlo estimate of the expected discounted dividends.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Barrier of the simulated strategy (default: optimal).
        #[arg(long)]
        barrier: Option<f64>,
        /// Constant retention fraction instead of the optimal feedback.
        #[arg(long)]
        retention: Option<f64>,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// HJB residual and shape checks; exit 1 on failure.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        barrier: Option<f64>,
        /// Relative barrier perturbation (absolute when the barrier is 0).
        #[arg(long, allow_hyphen_values = true)]
        perturb_barrier: Option<f64>,
    },
}

fn resolve(c: &Common, x0: Option<f64>) -> CliResult<RunConfig> {
    let file = c.config.as_deref().map(FileConfig::load).transpose()?;
    let o = Overrides {
        delta: c.delta,
        sigma: c.sigma,
        mu: c.mu,
        eta: c.eta,
        gamma: c.gamma.clone(),
        x0,
    };
    RunConfig::resolve(file, &o)
}

/// Thread pool honouring `SOLVER_THREADS` (0 or unset: automatic).
fn pool() -> CliResult<rayon::ThreadPool> {
    let n = match std::env::var("SOLVER_THREADS") {
        Ok(s) if !s.trim().is_empty() => s.trim().parse::<usize>().map_err(|_| {
            CliError::Usage(format!("SOLVER_THREADS must be an integer, got {:?}", s))
        })?,
        _ => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> CliResult<bool> {
    let (common, out, ok) = match &cli.command {
        Command::Classify(c) => (c, commands::classify(&resolve(c, None)?)?, true),
        Command::Solve { common, barrier } => (
            common,
            commands::solve(&resolve(common, None)?, *barrier)?,
            true,
        ),
        Command::Curve {
            common,
            barrier,
            grid,
        } => {
            let g = Grid {
                x_min: grid.x_min,
                x_max: grid.x_max,
                steps: grid.x_steps,
                log: grid.x_log,
            };
            (
                common,
                commands::curve(&resolve(common, None)?, *barrier, &g)?,
                true,
            )
        }
        Command::SweepGamma {
            common,
            n_min,
            n_max,
            n_step,
        } => {
            let ns = commands::range(*n_min, *n_max, *n_step)?;
            (
                common,
                commands::sweep_gamma(&resolve(common, None)?, &ns)?,
                true,
            )
        }
        Command::SweepBarrier {
            common,
            b_min,
            b_max,
            b_step,
            x_values,
        } => {
            let bs = commands::range(*b_min, *b_max, *b_step)?;
            let cfg = resolve(common, None)?;
            (common, commands::sweep_barrier(&cfg, &bs, x_values)?, true)
        }
        Command::Simulate {
            common,
            barrier,
            retention,
            sim,
        } => {
            let cfg = resolve(common, sim.x0)?;
            let x0 = cfg
                .x0
                .ok_or_else(|| CliError::Usage("simulate needs --x0 or x0 in the config".into()))?;
            let mut sc = SimConfig::new(&cfg.params, x0, sim.paths, sim.seed);
            sc.dt = sim.dt;
            if let Some(t) = sim.tmax {
                sc.t_max = t;
            }
            sc.antithetic = !sim.no_antithetic;
            sc.bridge_ruin = !sim.no_bridge;
            let spec = StrategySpec {
                barrier: *barrier,
                retention: *retention,
            };
            let out = pool()?.install(|| commands::simulate(&cfg, spec, &sc))?;
            (common, out, true)
        }
        Command::Verify {
            common,
            barrier,
            perturb_barrier,
        } => {
            let (out, ok) = commands::verify(&resolve(common, None)?, *barrier, *perturb_barrier)?;
            (common, out, ok)
        }
    };
    let default = match cli.command {
        Command::Curve { .. } | Command::SweepGamma { .. } | Command::SweepBarrier { .. } => {
            Format::Csv
        }
        _ => Format::Json,
    };
    let text = out.render(common.format.unwrap_or(default))?;
    emit(&text, common.out.as_deref())?;
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(CliError::Verification.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
