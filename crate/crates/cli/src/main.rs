use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rulebox::{BinarizationPolicy, Error, ExtractionConfig};

mod commands;
mod demo;
mod provenance;

#[derive(Parser, Debug)]
#[command(
    name = "rulebox",
    version,
    about = "Extract, prune and evaluate box-rule models of a black-box classifier"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a rule model from data, black-box predictions and attributions.
    Extract(ExtractCmd),
    /// Remove low-win terms while reference accuracy stays within tolerance.
    Prune(PruneCmd),
    /// Score a model on an evaluation set (CSV plus a Markdown table).
    Eval(EvalCmd),
    /// Relative change between two evaluation reports.
    Compare(CompareCmd),
    /// Run the whole pipeline on a generated task.
    Demo(DemoCmd),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Binarize {
    TopK,
    AbsThreshold,
    Positive,
}

#[derive(Args, Debug, Clone)]
struct RuleArgs {
    /// How attribution rows become item sets.
    #[arg(long, value_enum, default_value_t = Binarize::TopK)]
    binarize: Binarize,
    /// Number of dimensions kept per sample with `--binarize top-k`.
    #[arg(long, default_value_t = 3)]
    top_k: usize,
    /// Magnitude cut-off with `--binarize abs-threshold`.
    #[arg(long, default_value_t = 0.0)]
    tau: f64,
    /// Minimum itemset support as a fraction of a class's samples.
    #[arg(long, default_value_t = 0.05)]
    min_support: f64,
    #[arg(long, default_value_t = 0.5)]
    min_precision: f64,
    /// Fraction of each class the greedy cover aims for.
    #[arg(long, default_value_t = 1.0)]
    cover_target: f64,
}

impl RuleArgs {
    fn config(&self) -> ExtractionConfig {
        let policy = match self.binarize {
            Binarize::TopK => BinarizationPolicy::TopK { k: self.top_k },
            Binarize::AbsThreshold => BinarizationPolicy::AbsThreshold { tau: self.tau },
            Binarize::Positive => BinarizationPolicy::Positive,
        };
        ExtractionConfig {
            policy,
            min_support_fraction: self.min_support,
            min_precision: self.min_precision,
            cover_target: self.cover_target,
        }
    }
}

#[derive(Args, Debug)]
struct ExtractCmd {
    /// Feature CSV of the extraction set.
    #[arg(long)]
    data: PathBuf,
    /// Black-box predictions for `--data` (single-column CSV).
    #[arg(long)]
    preds: PathBuf,
    /// Attribution CSV aligned with `--data`.
    #[arg(long)]
    attr: PathBuf,
    /// Output model file.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    rules: RuleArgs,
}

#[derive(Args, Debug)]
struct PruneCmd {
    #[arg(long)]
    model: PathBuf,
    /// Reference feature CSV (usually the extraction set).
    #[arg(long)]
    data: PathBuf,
    /// Black-box predictions for `--data`.
    #[arg(long)]
    preds: PathBuf,
    /// Relative accuracy tolerance in [0, 1]; 0 only keeps
    /// prediction-preserving removals.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    theta: f64,
    /// Output model file. The trace, win counts and change summary are
    /// written next to it as `<stem>.trace.csv`, `<stem>.wins.csv` and
    /// `<stem>.changes.csv`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum F1Target {
    Fidelity,
    #[value(name = "ground_truth", alias = "ground-truth")]
    GroundTruth,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum AveragingArg {
    Macro,
    Weighted,
}

#[derive(Args, Debug)]
struct EvalCmd {
    #[arg(long)]
    model: PathBuf,
    /// Evaluation feature CSV.
    #[arg(long)]
    data: PathBuf,
    /// Black-box predictions for `--data`; required for fidelity F1.
    #[arg(long)]
    preds: Option<PathBuf>,
    /// Ground-truth labels for `--data`.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Which labels the headline F1 is computed against.
    #[arg(long, value_enum, default_value_t = F1Target::Fidelity)]
    f1_target: F1Target,
    #[arg(long, value_enum, default_value_t = AveragingArg::Macro)]
    averaging: AveragingArg,
    /// Report CSV; a Markdown table is written alongside with extension `.md`.
    #[arg(long)]
    out: PathBuf,
    /// Row label used in the Markdown table.
    #[arg(long, default_value = "model")]
    name: String,
}

#[derive(Args, Debug)]
struct CompareCmd {
    /// Report of the model before pruning.
    #[arg(long)]
    before: PathBuf,
    #[arg(long)]
    after: PathBuf,
    /// Optional reference-set reports, added as `f1_reference`.
    #[arg(long, requires = "ref_after")]
    ref_before: Option<PathBuf>,
    #[arg(long, requires = "ref_before")]
    ref_after: Option<PathBuf>,
    /// Output change CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct DemoCmd {
    /// Output directory for all artifacts.
    #[arg(long, default_value = "rulebox-demo")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Tolerance of the second pruning run (the first always uses 0).
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    theta: f64,
    #[arg(long, default_value_t = 600)]
    n_train: usize,
    #[arg(long, default_value_t = 300)]
    n_test: usize,
    /// Gradient-descent epochs for the black box.
    #[arg(long, default_value_t = 300)]
    epochs: usize,
    #[command(flatten)]
    rules: RuleArgs,
}

fn exit_code(e: &Error) -> u8 {
    if e.is_user_error() {
        2
    } else {
        3
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Extract(c) => commands::extract(&c),
        Command::Prune(c) => commands::prune(&c),
        Command::Eval(c) => commands::eval(&c),
        Command::Compare(c) => commands::compare(&c),
        Command::Demo(c) => demo::run(&c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
