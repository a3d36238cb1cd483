//! `qsl`: bounds, trajectories, passage times, channel certification, and
//! metrology sweeps for open-system speed limits, driven by JSON model
//! files and emitting deterministic CSV.
//!
//! Exit codes: 0 success, 2 validation failure, 3 numerical failure,
//! 4 target not reached.

mod commands;
mod csv_out;
mod model_file;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qsl_core::models::{load_model, LoadedModel};
use qsl_core::{Error, Result};

use commands::CmdResult;

#[derive(Parser)]
#[command(
    name = "qsl",
    version,
    about = "Speed-limit bounds for open quantum systems",
    max_term_width = 100
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArgs {
    /// JSON model file (see docs/models/ for examples)
    #[arg(long)]
    model: PathBuf,
    /// Reject unknown fields in the model file
    #[arg(long)]
    strict: bool,
}

impl ModelArgs {
    fn load(&self) -> Result<LoadedModel> {
        let spec = model_file::parse_model_file(&self.model, self.strict)?;
        load_model(&spec)
    }
}

#[derive(Args)]
struct TargetArgs {
    /// Target angle in radians, in (0, pi/2]; defaults to pi/2
    #[arg(long, conflicts_with = "target_f")]
    theta: Option<f64>,
    /// Target relative purity in [0, 1), an alternative to --theta
    #[arg(long)]
    target_f: Option<f64>,
}

#[derive(Args)]
struct OutArg {
    /// Write the CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every speed-limit bound the model supports
    Bound {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        target: TargetArgs,
        /// End of the time grid for channel-route bounds
        #[arg(long, default_value_t = 1.0)]
        t_max: f64,
        /// Number of grid points
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Integrate the dynamics and tabulate relative purity over time
    Evolve {
        #[command(flatten)]
        model: ModelArgs,
        /// End of the trajectory
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        /// Integrator step for the nonlinear gain/loss flow
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// Number of output rows
        #[arg(long, default_value_t = 200)]
        grid: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Find the first time the relative purity reaches cos(theta)
    Passage {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        target: TargetArgs,
        /// Scan horizon
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        /// Integrator step for the nonlinear gain/loss flow
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// Scan resolution (intervals across [0, t-max])
        #[arg(long, default_value_t = qsl_core::bounds::DEFAULT_SCAN_POINTS)]
        grid: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Compare product and GHZ Ramsey protocols at equal total time
    Metrology {
        /// Local dephasing rate (0 selects the noiseless convention)
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Largest register size; rows cover N = 1..n
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Sweep the exact-passage-to-bound ratio across target angles
    /// for the isotropic model
    #[command(name = "reproduce-sm-figure")]
    ReproduceSmFigure {
        #[command(flatten)]
        model: ModelArgs,
        /// Number of angles across the reachable window
        #[arg(long, default_value_t = 50)]
        grid: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Check complete positivity and trace preservation of the model's
    /// Kraus family at 20 log-spaced times
    Certify {
        #[command(flatten)]
        model: ModelArgs,
        /// Largest probe time (smallest is fixed at 1e-3)
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        #[command(flatten)]
        out: OutArg,
    },
}

fn run(cli: Cli) -> Result<(CmdResult, OutArg)> {
    match cli.command {
        Command::Bound {
            model,
            target,
            t_max,
            grid,
            out,
        } => {
            let theta = commands::resolve_theta(target.theta, target.target_f)?;
            Ok((commands::cmd_bound(&model.load()?, theta, t_max, grid)?, out))
        }
        Command::Evolve {
            model,
            t_max,
            dt,
            grid,
            out,
        } => Ok((commands::cmd_evolve(&model.load()?, t_max, dt, grid)?, out)),
        Command::Passage {
            model,
            target,
            t_max,
            dt,
            grid,
            out,
        } => {
            let theta = commands::resolve_theta(target.theta, target.target_f)?;
            Ok((
                commands::cmd_passage(&model.load()?, theta, t_max, dt, grid)?,
                out,
            ))
        }
        Command::Metrology { gamma, n, out } => Ok((commands::cmd_metrology(gamma, n)?, out)),
        Command::ReproduceSmFigure { model, grid, out } => Ok((
            commands::cmd_reproduce_figure(&model.load()?, grid)?,
            out,
        )),
        Command::Certify { model, t_max, out } => {
            Ok((commands::cmd_certify(&model.load()?, t_max)?, out))
        }
    }
}

fn error_exit_code(e: &Error) -> u8 {
    if e.is_validation() {
        2
    } else if e.is_not_reached() {
        4
    } else {
        3
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok((result, out)) => {
            if let Err(e) = result.doc.write(out.out.as_deref()) {
                eprintln!("error: cannot write output: {e}");
                return ExitCode::from(3);
            }
            // Keep the summary off the data stream when the CSV goes to
            // stdout.
            if out.out.is_some() {
                println!("{}", result.summary);
            } else {
                eprintln!("{}", result.summary);
            }
            ExitCode::from(u8::try_from(result.exit).unwrap_or(3))
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_exit_code(&e))
        }
    }
}
