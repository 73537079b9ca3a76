//! `bellforge`: singlet predictions, inequality checks, angle scans, seeded
//! simulations and polytope fits from the command line.
//!
//! Exit codes: 0 success / all satisfied, 1 violated or infeasible, 2 usage
//! or input error.

mod bound;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "bellforge",
    version,
    about = "Bell inequalities for spin-½ singlet pairs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic singlet and Malus values for one separation or a pair of angles.
    Predict(PredictArgs),
    /// Evaluate every inequality a preset supports against some statistics.
    Check(CheckArgs),
    /// Tabulate a one- or two-angle inequality family with singlet values.
    Scan(ScanArgs),
    /// Sample singlet pairs at the actual settings and write runs + report.
    Simulate(SimulateArgs),
    /// Classical-polytope membership, or bounds implied by fixed coincidences.
    Fit(FitArgs),
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("angles").required(true).args(["sep", "a"])))]
pub struct PredictArgs {
    /// Angular separation in degrees.
    #[arg(long, allow_hyphen_values = true)]
    pub sep: Option<f64>,
    /// E direction in degrees (with --b).
    #[arg(long, requires = "b", allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// P direction in degrees (with --a).
    #[arg(long, requires = "a", allow_hyphen_values = true)]
    pub b: Option<f64>,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["qm", "model", "stats"])))]
pub struct CheckArgs {
    /// three-vector or penrose-four-vector.
    pub preset: String,
    /// Use the quantum predictions.
    #[arg(long)]
    pub qm: bool,
    /// Hidden-variable model JSON (scenario + weights).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Coincidence statistics JSON.
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum FamilyArg {
    Star,
    #[value(alias = "star-star", alias = "star_star")]
    Starstar,
}

#[derive(Args)]
pub struct ScanArgs {
    pub family: FamilyArg,
    /// Grid step in degrees over the open interval (--from, --to).
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub from: f64,
    #[arg(long, default_value_t = 180.0)]
    pub to: f64,
    /// Single θ in degrees.
    #[arg(long, conflicts_with = "step")]
    pub theta: Option<f64>,
    /// Single θ′ in degrees (two-angle family).
    #[arg(long, requires = "theta")]
    pub theta_prime: Option<f64>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[arg(long, default_value = "three-vector")]
    pub preset: String,
    /// E setting: a label of the preset or its angle in degrees.
    #[arg(long, default_value = "E", allow_hyphen_values = true)]
    pub e: String,
    /// P setting: a label of the preset or its angle in degrees.
    #[arg(long, default_value = "P", allow_hyphen_values = true)]
    pub p: String,
    /// Number of trials.
    #[arg(long)]
    pub n: u64,
    /// 64-bit seed; falls back to BELLFORGE_SEED, then 0.
    #[arg(long, env = "BELLFORGE_SEED")]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = bellforge::montecarlo::DEFAULT_CONFIDENCE)]
    pub confidence: f64,
    /// Directory receiving runs.csv and report.json.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum MetricArg {
    Linf,
    L1,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("input").required(true).args(["targets", "triplet", "bound"])))]
pub struct FitArgs {
    /// Targets JSON: {"preset" | "scenario", "targets": [{x, y, pi}], "constraints"?}.
    pub targets: Option<PathBuf>,
    /// The 15%-15%-50% triplet on the three-vector scenario.
    #[arg(long)]
    pub triplet: bool,
    /// Implied bound, e.g. "pi(E,E') | pi(P,E)=0.1464 pi(P,E')=0.1464".
    #[arg(long)]
    pub bound: Option<String>,
    /// Scenario for --bound.
    #[arg(long, default_value = "three-vector")]
    pub preset: String,
    #[arg(long, value_enum, default_value = "linf")]
    pub metric: MetricArg,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Predict(a) => commands::predict(&a),
        Command::Check(a) => commands::check(&a),
        Command::Scan(a) => commands::scan(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Fit(a) => commands::fit(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
