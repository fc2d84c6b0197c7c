use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "sketchsynth", version, about = "Synthesize and evaluate programmatic Can't Stop strategies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search for a strategy program.
    Synth(Box<SynthArgs>),
    /// Play two strategies against each other and print the first one's win rate.
    Eval(EvalArgs),
    /// Record demonstration matches played by a built-in or program strategy.
    Dataset(DatasetArgs),
    /// Play matches from the terminal and save them as a dataset.
    Record(RecordArgs),
    /// Check that a trace or dataset file replays under the game rules.
    Replay(ReplayArgs),
    /// Merge trajectory files into a best-win-rate-over-time table.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sa,
    Uct,
}

/// Every option is optional here: unset flags fall back to the config file,
/// then to the built-in defaults.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthArgs {
    /// TOML file with any of the options below (snake_case keys).
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Resolve the configuration, write the manifest, and stop.
    #[arg(long)]
    #[serde(skip)]
    pub dry_run: bool,

    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// baseline, sketch-a, sketch-o, bc-only[-a|-o] or lexi[-a|-o].
    #[arg(long)]
    pub mode: Option<String>,
    /// Demonstration dataset (JSON lines). Defaults to three GA self-play matches.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// `ga`, `random`, or a program file.
    #[arg(long)]
    pub opponent: Option<String>,
    /// Matches behind each win-rate evaluation.
    #[arg(long)]
    pub matches: Option<u64>,
    /// Matches behind the win-rate check of each new cloning incumbent.
    #[arg(long)]
    pub sketch_matches: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Base seed of the evaluation matches.
    #[arg(long)]
    pub psi_seed: Option<u64>,
    /// Total wall-clock budget.
    #[arg(long, conflicts_with = "budget_iterations")]
    pub budget_seconds: Option<f64>,
    /// Total iteration budget; makes the run reproducible.
    #[arg(long)]
    pub budget_iterations: Option<u64>,
    /// Share of the total budget given to the cloning phase, in the same unit.
    #[arg(long)]
    pub sketch_budget: Option<f64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Write the incumbent every this many iterations.
    #[arg(long)]
    pub checkpoint_every: Option<u64>,

    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub t_initial: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub depth_limit: Option<u32>,
    /// UCT exploration constant.
    #[arg(long, allow_negative_numbers = true)]
    pub k: Option<f64>,
    /// Iteration cap of each UCT simulation.
    #[arg(long)]
    pub rollout_iterations: Option<u64>,
    /// Difficulty rule behind f5: `evolved` or `standard`.
    #[arg(long)]
    pub difficulty: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Candidate: `ga`, `random`, or a program file.
    #[arg(long)]
    pub a: String,
    /// Opponent: `ga`, `random`, or a program file.
    #[arg(long, default_value = "ga")]
    pub b: String,
    #[arg(long, short = 'n', alias = "matches", default_value_t = 1000)]
    pub n: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, default_value = "evolved")]
    pub difficulty: String,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    /// `ga`, `random`, or a program file.
    #[arg(long, default_value = "ga")]
    pub demonstrator: String,
    /// Keep the demonstrator's side of matches against this opponent instead
    /// of the winner's side of self-play.
    #[arg(long)]
    pub versus: Option<String>,
    #[arg(long, default_value_t = 3)]
    pub matches: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the full match traces here.
    #[arg(long)]
    pub traces: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, default_value = "evolved")]
    pub difficulty: String,
}

#[derive(Debug, Args)]
pub struct RecordArgs {
    #[arg(long, default_value = "ga")]
    pub opponent: String,
    #[arg(long, default_value_t = 3)]
    pub matches: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "evolved")]
    pub difficulty: String,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub file: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Trajectory CSV files; each becomes one run in the table.
    #[arg(required = true)]
    pub trajectories: Vec<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
