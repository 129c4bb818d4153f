use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mimocap::capacity::SweepAxis;
use mimocap::cli::{run, Command, RunConfig, DEFAULT_SEED};
use mimocap::figures::Figure;
use mimocap::report::parse_grid;
use mimocap::verify::Depth;

/// Exact ergodic MIMO mutual information with co-channel interference.
#[derive(Parser)]
#[command(name = "mimocap", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Multiuser, Gaussian-approximation and interference-free values for one scenario.
    Capacity,
    /// Per-point values along an SNR or SIR grid, as CSV.
    Sweep,
    /// Largest-eigenvalue histogram against the exact marginal, as CSV.
    Pdf,
    /// Run the verification suites; exits nonzero on any failure.
    Verify,
    /// Write the CSV curves of a reference figure.
    Figure,
}

#[derive(Args)]
struct Common {
    /// Scenario file (key = value lines).
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Output file, or output directory for `figure`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Monte Carlo samples (at least 1000).
    #[arg(long, global = true)]
    mc_samples: Option<usize>,
    #[arg(long, global = true, value_enum)]
    figure: Option<FigureArg>,
    #[arg(long, global = true, value_enum, default_value = "sir")]
    axis: AxisArg,
    /// Grid in dB as start:stop:step (negative starts are fine).
    #[arg(long, global = true, allow_hyphen_values = true)]
    grid: Option<String>,
    #[arg(long, global = true, value_enum, default_value = "quick")]
    verify: DepthArg,
    /// Histogram bins for `pdf`.
    #[arg(long, global = true, default_value_t = 40)]
    bins: usize,
    /// Warn (and attach Monte Carlo) above this per-k determinant spread.
    #[arg(long, global = true)]
    spread_limit: Option<f64>,
    /// Relative agreement required between precision rungs.
    #[arg(long, global = true)]
    precision_tolerance: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy)]
enum FigureArg {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

#[derive(ValueEnum, Clone, Copy)]
enum AxisArg {
    Snr,
    Sir,
}

#[derive(ValueEnum, Clone, Copy)]
enum DepthArg {
    Quick,
    Full,
}

fn config(cli: Cli) -> mimocap::Result<RunConfig> {
    let command = match cli.command {
        Cmd::Capacity => Command::Capacity,
        Cmd::Sweep => Command::Sweep,
        Cmd::Pdf => Command::Pdf,
        Cmd::Verify => Command::Verify,
        Cmd::Figure => Command::Figure,
    };
    let c = cli.common;
    let mut cfg = RunConfig::new(command);
    cfg.scenario = c.scenario;
    cfg.out = c.out;
    cfg.seed = c.seed;
    cfg.mc_samples = c.mc_samples;
    cfg.figure = c.figure.map(|f| match f {
        FigureArg::Fig2 => Figure::Fig2,
        FigureArg::Fig3 => Figure::Fig3,
        FigureArg::Fig4 => Figure::Fig4,
        FigureArg::Fig5 => Figure::Fig5,
    });
    cfg.axis = match c.axis {
        AxisArg::Snr => SweepAxis::Snr,
        AxisArg::Sir => SweepAxis::Sir,
    };
    cfg.grid = c.grid.as_deref().map(parse_grid).transpose()?;
    cfg.depth = match c.verify {
        DepthArg::Quick => Depth::Quick,
        DepthArg::Full => Depth::Full,
    };
    cfg.bins = c.bins;
    cfg.spread_limit = c.spread_limit;
    cfg.precision_tolerance = c.precision_tolerance;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let outcome = config(Cli::parse()).and_then(|cfg| run(&cfg));
    match outcome {
        Ok(o) => {
            print!("{}", o.output);
            if o.success {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("mimocap: {e}");
            ExitCode::from(2)
        }
    }
}
