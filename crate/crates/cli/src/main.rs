//! `dsw-lab`: step classification, Whitham profiles, direct simulation and the cubic-breaking problem.

mod commands;
mod output;
mod svg;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dsw_core::hydro::HydroState;
use thiserror::Error;

use commands::{GridArgs, Span};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("instability at t = {time}: max|u| = {max_amplitude} (initially {initial_amplitude})")]
    Instability { time: f64, max_amplitude: f64, initial_amplitude: f64 },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Input(_) => "invalid_input",
            CliError::Solver(_) => "solver_failure",
            CliError::Instability { .. } => "instability",
            CliError::Io(_) => "io",
        }
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Instability { .. } => 4,
        }
    }
}

fn parse_state(s: &str) -> Result<HydroState, String> {
    let (r, n) = s.split_once(',').ok_or_else(|| format!("expected RHO,NU, got {s:?}"))?;
    let rho: f64 = r.trim().parse().map_err(|e| format!("rho {r:?}: {e}"))?;
    let nu: f64 = n.trim().parse().map_err(|e| format!("nu {n:?}: {e}"))?;
    HydroState::new(rho, nu).map_err(|e| e.to_string())
}

fn parse_span(s: &str) -> Result<Span, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts[..] else {
        return Err(format!("expected A:B:N, got {s:?}"));
    };
    let a: f64 = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    let n: usize = n.trim().parse().map_err(|e| format!("{n:?}: {e}"))?;
    if !(a.is_finite() && b.is_finite()) || n == 0 || (n > 1 && a >= b) {
        return Err(format!("need finite A < B and N >= 1, got {s:?}"));
    }
    Ok(Span { a, b, n })
}

#[derive(Parser)]
#[command(name = "dsw-lab", version, about = "Dispersive shock waves of the higher-order Chen-Lee-Liu equation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Step {
    /// Left state as RHO,NU
    #[arg(long, value_parser = parse_state, allow_hyphen_values = true)]
    left: HydroState,
    /// Right state as RHO,NU
    #[arg(long, value_parser = parse_state, allow_hyphen_values = true)]
    right: HydroState,
}

#[derive(Args)]
struct GridFlags {
    /// Grid points (power of two)
    #[arg(long, default_value_t = 4096)]
    n: usize,
    /// Period of the computational box
    #[arg(long, default_value_t = 400.0)]
    length: f64,
    /// Width of the tanh smoothing of the step
    #[arg(long, default_value_t = 0.5)]
    width: f64,
    /// Fixed time step (default: automatic)
    #[arg(long)]
    dt: Option<f64>,
    /// Retained fraction of the spectrum
    #[arg(long, default_value_t = 2.0 / 3.0)]
    dealias: f64,
}

impl From<&GridFlags> for GridArgs {
    fn from(g: &GridFlags) -> Self {
        GridArgs { n: g.n, length: g.length, width: g.width, dt: g.dt, dealias: g.dealias }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify step data and print the wave pattern as JSON
    Classify {
        #[command(flatten)]
        step: Step,
    },
    /// Sample the Whitham solution on a grid of x as CSV
    Profile {
        #[command(flatten)]
        step: Step,
        #[arg(long)]
        t: f64,
        /// Sample points A:B:N
        #[arg(long, value_parser = parse_span, allow_hyphen_values = true)]
        x: Span,
        /// Output CSV (default stdout)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the PDE from smoothed step data, writing snapshots and a conservation report
    Simulate {
        #[command(flatten)]
        step: Step,
        #[arg(long)]
        t: f64,
        #[command(flatten)]
        grid: GridFlags,
        /// Extra snapshot times, comma separated
        #[arg(long, value_delimiter = ',')]
        snapshots: Vec<f64>,
        #[arg(long, default_value = "dsw-out")]
        out_dir: PathBuf,
    },
    /// Compare simulated edges and plateaus with the Whitham prediction
    Compare {
        #[command(flatten)]
        step: Step,
        #[arg(long)]
        t: f64,
        #[command(flatten)]
        grid: GridFlags,
    },
    /// Edges and modulation of the cubic-breaking problem
    Cubic {
        #[arg(long)]
        lminus: f64,
        #[arg(long)]
        lplus: f64,
        #[arg(long)]
        t: f64,
        /// Sample points A:B:N (default spans the oscillation zone)
        #[arg(long, value_parser = parse_span, allow_hyphen_values = true)]
        x: Option<Span>,
        #[arg(long, default_value = "cubic.csv")]
        csv: PathBuf,
    },
    /// Measure the plane-wave frequency and compare with the dispersion relation
    DispersionTest {
        #[arg(long, allow_hyphen_values = true)]
        k: f64,
        #[arg(long)]
        amp: f64,
    },
    /// Line plot of CSV columns as SVG
    Plot {
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Abscissa column (default: first)
        #[arg(long)]
        x: Option<String>,
        /// Ordinate columns, comma separated (default: all others)
        #[arg(long, value_delimiter = ',')]
        y: Vec<String>,
        #[arg(long)]
        title: Option<String>,
    },
}

fn run(cmd: Cmd) -> Result<Option<String>, CliError> {
    match cmd {
        Cmd::Classify { step } => commands::classify(step.left, step.right).map(Some),
        Cmd::Profile { step, t, x, out } => commands::profile(step.left, step.right, t, x, out.as_deref()).map(|_| None),
        Cmd::Simulate { step, t, grid, snapshots, out_dir } => {
            commands::simulate(step.left, step.right, t, &(&grid).into(), &snapshots, &out_dir).map(Some)
        }
        Cmd::Compare { step, t, grid } => commands::compare(step.left, step.right, t, &(&grid).into()).map(Some),
        Cmd::Cubic { lminus, lplus, t, x, csv } => commands::cubic(lminus, lplus, t, x, &csv).map(Some),
        Cmd::DispersionTest { k, amp } => commands::dispersion_test(k, amp).map(Some),
        Cmd::Plot { csv, out, x, y, title } => {
            commands::plot(&csv, &out, x.as_deref(), &y, title.as_deref()).map(|_| None)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("DSW_LAB_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    match run(cli.cmd) {
        Ok(text) => {
            if let Some(text) = text {
                // a closed pipe is not an error of ours
                let _ = writeln!(std::io::stdout().lock(), "{text}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("dsw-lab: {e}");
            if !matches!(e, CliError::Input(_)) {
                eprintln!("{}", commands::diagnostics(&e));
            }
            ExitCode::from(e.code())
        }
    }
}
