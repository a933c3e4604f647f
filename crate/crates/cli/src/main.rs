//! `tarstop`: plan, tabulate and simulate stopping rules for one-phase TAR.

mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tarstop::RecallLevel;

#[derive(Parser)]
#[command(
    name = "tarstop",
    version,
    about = "Stopping rules for one-phase technology-assisted review"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// QBCB stopping point and recall bounds for one sample size.
    Plan(PlanArgs),
    /// Table of stopping points over sample sizes or UCB ceilings.
    Table(TableArgs),
    /// PET sequential bias on an all-relevant collection.
    BiasDemo(BiasArgs),
    /// Replicate a stopping rule on a rank record.
    Simulate(SimulateArgs),
    /// Write a synthetic rank record.
    Gen(GenArgs),
    /// Per-batch cost curve with worst-case QBCB stopping points.
    CostDynamics(DynamicsArgs),
}

#[derive(Args, Clone, Copy)]
struct GoalArgs {
    /// Recall goal t, as a decimal or ratio.
    #[arg(long, default_value = "0.8")]
    recall: RecallLevel,
    /// One minus the confidence level.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

#[derive(Args)]
struct PlanArgs {
    /// Number of sampled positives.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    r: u64,
    #[command(flatten)]
    goal: GoalArgs,
}

#[derive(Args)]
struct TableArgs {
    #[command(flatten)]
    goal: GoalArgs,
    /// Comma-separated sample sizes.
    #[arg(long, conflicts_with = "ceilings")]
    sizes: Option<String>,
    /// Comma-separated UCB ceilings; each yields its smallest sample size.
    /// Default: 0.99 down to 0.86 in steps of 0.01.
    #[arg(long)]
    ceilings: Option<String>,
    /// Sizes that also get a relaxed `j - 1` row.
    #[arg(long, default_value = "")]
    relaxed: String,
    /// Also write the table to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BiasArgs {
    /// Collection size (all documents relevant).
    #[arg(long = "N", value_parser = clap::value_parser!(u64).range(1..))]
    big_n: u64,
    /// Sample size.
    #[arg(long = "n", value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    Uniform,
    Geometric,
    AllRelevant,
}

/// Rank-record source: a JSON file or a synthetic model.
#[derive(Args)]
struct SourceArgs {
    /// JSON rank record.
    #[arg(long, conflicts_with = "model", required_unless_present = "model")]
    record: Option<PathBuf>,
    /// Synthetic record family.
    #[arg(long, value_enum)]
    model: Option<ModelKind>,
    /// Collection size for a synthetic record.
    #[arg(long = "N", requires = "model")]
    big_n: Option<u64>,
    #[arg(long, requires = "model")]
    prevalence: Option<f64>,
    #[arg(long, requires = "model")]
    decay: Option<f64>,
    /// Review batch size; overrides the record's own.
    #[arg(long)]
    batch_size: Option<u64>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum RuleKind {
    Pet,
    Qpet,
    Qbcb,
    Target,
    Countdown,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, value_enum, default_value = "qbcb")]
    rule: RuleKind,
    /// Number of sampled positives (fixed at 10 for target).
    #[arg(long)]
    r: Option<u64>,
    #[command(flatten)]
    goal: GoalArgs,
    /// Countdown only: documents drawn to obtain the sample. Defaults to
    /// each replication's actual draw count.
    #[arg(long)]
    sample_total: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-replication rows; a summary and a manifest are written beside it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    model: ModelKind,
    #[arg(long = "N", value_parser = clap::value_parser!(u64).range(1..))]
    big_n: u64,
    #[arg(long)]
    prevalence: Option<f64>,
    #[arg(long)]
    decay: Option<f64>,
    #[arg(long, default_value_t = 0)]
    batch_size: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DynamicsArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    goal: GoalArgs,
    /// Comma-separated QBCB sample sizes for the worst-case markers.
    #[arg(long, default_value = "14,30,50,158")]
    sizes: String,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cost curve; markers and a manifest are written beside it.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Plan(a) => commands::plan(a),
        Command::Table(a) => commands::table(a),
        Command::BiasDemo(a) => commands::bias_demo(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Gen(a) => commands::gen(a),
        Command::CostDynamics(a) => commands::cost_dynamics(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
