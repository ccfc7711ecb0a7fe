//! `abp`: batch experiments over adaptive values.
//!
//! Each subcommand runs one experiment, prints a short summary on stdout and,
//! when `--out` is given, writes a trace or report. Exit codes: 0 success,
//! 1 run failure, 2 bad configuration, 3 unwritable output.

mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use output::{CliError, CliResult, Format};

#[derive(Parser, Debug)]
#[command(name = "abp", version, about = "Experiments with adaptive values")]
struct Cli {
    #[command(flatten)]
    global: Global,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Seed for every random stream of the run; required by stochastic subcommands.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output file for the trace or report.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Output format; inferred from the `--out` extension when omitted.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

impl Global {
    pub fn require_seed(&self, why: &str) -> CliResult<u64> {
        self.seed
            .ok_or_else(|| CliError::config("--seed", format!("required because {why}")))
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a line by stochastic gradient steps until consecutive fits are close.
    Regress(RegressArgs),
    /// Rock-Paper-Scissors tournament between two players.
    Rps(RpsArgs),
    /// UCB bandit on Bernoulli arms.
    Bandit(BanditArgs),
    /// Convergence trials of the stability-gated Q-table.
    Principled(PrincipledArgs),
    /// Learn a merge/insertion sort hybrid and compare it with fixed cutoffs.
    Sortbench(SortbenchArgs),
    /// Train or evaluate a learned damping controller for Levenberg-Marquardt.
    Lmopt {
        #[command(subcommand)]
        command: LmCommand,
    },
}

#[derive(Args, Debug)]
pub struct RegressArgs {
    /// CSV of x,y points, header optional. Without it, points come from y = 2x + 1 with x uniform in [0, 1).
    #[arg(long)]
    pub points: Option<PathBuf>,
    #[arg(long, default_value_t = 0.01)]
    pub eta: f64,
    /// Stop once the last two lines differ by at most this much.
    #[arg(long, default_value_t = 0.001)]
    pub until_close: f64,
    /// Upper bound on generated points.
    #[arg(long, default_value_t = 1_000_000)]
    pub max_points: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PlayerKind {
    Bandit,
    Beatlast,
    Maxfreq,
    Rock,
    Paper,
    Scissors,
}

#[derive(Args, Debug)]
pub struct RpsArgs {
    #[arg(long)]
    pub a: PlayerKind,
    #[arg(long)]
    pub b: PlayerKind,
    #[arg(long, default_value_t = 1000)]
    pub rounds: usize,
}

#[derive(Args, Debug)]
pub struct BanditArgs {
    /// Success probability of each arm.
    #[arg(long, value_delimiter = ',', default_value = "0.9,0.5,0.1")]
    pub means: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,
    /// Multiplier on the UCB exploration bonus.
    #[arg(long, default_value_t = 1.0)]
    pub exploration_scale: f64,
}

#[derive(Args, Debug)]
pub struct PrincipledArgs {
    #[arg(long, default_value_t = 4)]
    pub contexts: usize,
    #[arg(long, default_value_t = 2)]
    pub actions: usize,
    #[arg(long, default_value_t = 0.2)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// Give up on a trial after this many inputs.
    #[arg(long, default_value_t = 1_000_000)]
    pub max_inputs: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CostModelKind {
    Wall,
    Cmp,
    Synthetic,
}

#[derive(Args, Debug)]
pub struct SortbenchArgs {
    #[arg(long, default_value_t = 2048)]
    pub max_len: usize,
    #[arg(long, default_value_t = 5000)]
    pub episodes: usize,
    #[arg(long, value_enum, default_value_t = CostModelKind::Cmp)]
    pub cost_model: CostModelKind,
    /// Context at which insertion sort stops being cheaper under the synthetic model.
    #[arg(long, default_value_t = 4)]
    pub crossover: u64,
    /// Number of random lists the policies are scored on.
    #[arg(long, default_value_t = 100)]
    pub eval_lists: usize,
}

#[derive(Subcommand, Debug)]
pub enum LmCommand {
    /// Learn a controller and save it as JSON.
    Train {
        #[arg(long, default_value_t = 100_000)]
        episodes: usize,
        /// Residual evaluations per run.
        #[arg(long, default_value_t = 5)]
        budget: usize,
    },
    /// Compare a saved controller with standard LM by average scaled loss reduction.
    Eval {
        #[arg(long)]
        table: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    let g = &cli.global;
    match cli.command {
        Command::Regress(args) => experiments::regress(g, &args),
        Command::Rps(args) => experiments::rps(g, &args),
        Command::Bandit(args) => experiments::bandit(g, &args),
        Command::Principled(args) => experiments::principled(g, &args),
        Command::Sortbench(args) => experiments::sortbench(g, &args),
        Command::Lmopt { command } => match command {
            LmCommand::Train { episodes, budget } => experiments::lm_train(g, episodes, budget),
            LmCommand::Eval { table, trials } => experiments::lm_eval(g, &table, trials),
        },
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on unknown flags and malformed values
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("abp: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
