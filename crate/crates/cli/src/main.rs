//! Command-line driver: approximation runs, norm queries, conversions,
//! identity verification and the dual-measure demo. Every subcommand can
//! emit a machine-readable run report; files are written atomically.
//!
//! Exit codes: 0 success; 1 invalid input (parse failure, target outside
//! the weighted space, malformed file); 2 knot budget exhausted
//! (best-effort outputs are still written).

mod output;
mod run;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "relu-span", version, about = "Two-layer ReLU networks as a dense span over the whole real line: certified approximation, weighted norms, exact conversions and dual-measure experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a network approximating a target to a certified tolerance.
    Approximate(ApproximateArgs),
    /// Weighted norm of a network, piecewise-linear function or expression.
    Norm(NormArgs),
    /// Convert between network and piecewise-linear files.
    Convert(ConvertArgs),
    /// Check the built-in exact identities on a dense grid.
    VerifyIdentity(VerifyArgs),
    /// Run the annihilation transcript for an atomic measure.
    DualDemo(DualArgs),
}

#[derive(Args)]
pub struct ApproximateArgs {
    /// Target as an expression in x, e.g. "sqrt(1+x^2)".
    #[arg(long, conflicts_with = "target_file")]
    expr: Option<String>,
    /// Target as a network file evaluated opaquely.
    #[arg(long)]
    target_file: Option<PathBuf>,
    /// Tolerance ε for the certified error.
    #[arg(long, allow_negative_numbers = true)]
    eps: f64,
    /// Declared limit of f(x)/(1+|x|) at +∞ (estimated when omitted).
    #[arg(long, allow_negative_numbers = true)]
    alpha_plus: Option<f64>,
    /// Declared limit of f(x)/(1+|x|) at −∞ (estimated when omitted).
    #[arg(long, allow_negative_numbers = true)]
    alpha_minus: Option<f64>,
    /// Where to write the resulting network.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the full certificate report.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Where to write per-grid-point samples (CSV).
    #[arg(long)]
    samples: Option<PathBuf>,
    /// Oracle grid resolution n (the grid has 2n+1 points).
    #[arg(long, default_value_t = 100_000)]
    resolution: u32,
    /// Refinement knot budget.
    #[arg(long, default_value_t = 1_000_000)]
    max_knots: usize,
    /// Starting radius for the tail search.
    #[arg(long, default_value_t = 1.0)]
    initial_radius: f64,
    /// Convergence threshold for asymptote estimation.
    #[arg(long, default_value_t = 1e-8)]
    alpha_tol: f64,
}

#[derive(Args)]
pub struct NormArgs {
    /// Network file.
    #[arg(long, conflicts_with_all = ["pl", "expr"])]
    net: Option<PathBuf>,
    /// Piecewise-linear file.
    #[arg(long, conflicts_with = "expr")]
    pl: Option<PathBuf>,
    /// Expression in x.
    #[arg(long)]
    expr: Option<String>,
    /// Compute the exact norm (networks and piecewise-linear only).
    #[arg(long, conflicts_with = "grid")]
    exact: bool,
    /// Compute the grid-oracle norm at this resolution.
    #[arg(long)]
    grid: Option<u32>,
    #[arg(long, allow_negative_numbers = true)]
    alpha_plus: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    alpha_minus: Option<f64>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
pub struct ConvertArgs {
    /// Input file (network or piecewise-linear; detected by shape).
    #[arg(long = "in")]
    input: PathBuf,
    /// Output file for the converted form.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Verify the round-trip pointwise and report the deviation.
    #[arg(long)]
    check: bool,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
pub struct VerifyArgs {
    /// Left end of the check grid.
    #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
    min_x: f64,
    /// Right end of the check grid.
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    max_x: f64,
    /// Perturb one coefficient by 1e-6 to exercise the failure path.
    #[arg(long, hide = true)]
    inject_fault: bool,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
pub struct DualArgs {
    /// Measure file: {"atoms": [{"loc": number|"+inf"|"-inf", "w": w}]}.
    #[arg(long)]
    measure: PathBuf,
    /// Annihilation tolerance.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Hat halfwidth (centers are spaced by the same amount).
    #[arg(long, default_value_t = 1.0)]
    halfwidth: f64,
    #[arg(long)]
    report: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Approximate(args) => run::approximate(args),
        Command::Norm(args) => run::norm(args),
        Command::Convert(args) => run::convert(args),
        Command::VerifyIdentity(args) => run::verify_identity(args),
        Command::DualDemo(args) => run::dual_demo(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
