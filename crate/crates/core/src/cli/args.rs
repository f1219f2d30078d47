//! Command-line grammar.

use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "agentprint", version, about = "Fingerprint web-browsing agents from UI event traces")]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus from a preset suite or a profile file.
    Simulate(SimulateArgs),
    /// Validate a corpus and summarize what parsed.
    Ingest(IngestArgs),
    /// Extract features for every split into CSV files.
    Featurize(FeaturizeArgs),
    /// Fit a classifier on the training features.
    Train(TrainArgs),
    /// Closed-set macro F1 of a saved model.
    EvalClosed(EvalClosedArgs),
    /// Leave-one-agent-out open-set AUROC.
    EvalOpen(EvalOpenArgs),
    /// Permutation importance of a saved model.
    Importance(ImportanceArgs),
    /// Training-fraction, truncation and delay curves.
    Curves(CurvesArgs),
    /// Write a copy of a corpus with random delays injected.
    Perturb(PerturbArgs),
    /// Collect the reports of finished runs.
    Report(ReportArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Ingest(_) => "ingest",
            Command::Featurize(_) => "featurize",
            Command::Train(_) => "train",
            Command::EvalClosed(_) => "eval-closed",
            Command::EvalOpen(_) => "eval-open",
            Command::Importance(_) => "importance",
            Command::Curves(_) => "curves",
            Command::Perturb(_) => "perturb",
            Command::Report(_) => "report",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatArg {
    Native,
    Released,
}

#[derive(Debug, Args, Serialize)]
pub struct OutputArgs {
    /// Run directory; created if missing.
    #[arg(long)]
    pub out: PathBuf,

    /// Also write the report table as plot.csv.
    #[arg(long)]
    pub emit_plot_data: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct CorpusArgs {
    /// Corpus root in the agent/dataset/timestamp/episode layout.
    #[arg(long)]
    pub corpus: PathBuf,

    /// Only read episodes of this dataset.
    #[arg(long)]
    pub dataset: Option<String>,

    /// Split manifest (defaults to splits.json at the corpus root).
    #[arg(long)]
    pub splits: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = FormatArg::Native)]
    pub format: FormatArg,
}

#[derive(Debug, Args, Serialize)]
pub struct TuningArgs {
    /// Model family: gbt, forest, lr-l2 or lr-l1.
    #[arg(long, default_value = "gbt")]
    pub model: String,

    /// Pick hyperparameters by stratified cross-validated search.
    #[arg(long, conflicts_with = "config")]
    pub search: bool,

    #[arg(long, default_value_t = 3)]
    pub folds: usize,

    /// Hyperparameters as JSON, e.g. from a previous train report.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("source").required(true).args(["suite", "profiles"])))]
pub struct SimulateArgs {
    /// Preset suite name.
    #[arg(long)]
    pub suite: Option<String>,

    /// Profile file in TOML.
    #[arg(long)]
    pub profiles: Option<PathBuf>,

    #[arg(long, default_value_t = 50)]
    pub train: usize,

    #[arg(long, default_value_t = 25)]
    pub val: usize,

    #[arg(long, default_value_t = 25)]
    pub test: usize,

    #[arg(long)]
    pub seed: u64,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    #[arg(long)]
    pub corpus: PathBuf,

    #[arg(long)]
    pub dataset: Option<String>,

    #[arg(long, value_enum, default_value_t = FormatArg::Native)]
    pub format: FormatArg,

    /// Rewrite parsed episodes in the native format under <out>/corpus.
    #[arg(long)]
    pub normalize: bool,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct FeaturizeArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// Featurize run directory or a directory holding train.csv.
    #[arg(long)]
    pub features: PathBuf,

    #[command(flatten)]
    pub tuning: TuningArgs,

    #[arg(long)]
    pub seed: u64,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalClosedArgs {
    /// Saved model file.
    #[arg(long)]
    pub model_file: PathBuf,

    #[arg(long)]
    pub features: PathBuf,

    #[arg(long, default_value = "test")]
    pub split: String,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalOpenArgs {
    #[arg(long)]
    pub features: PathBuf,

    /// Agent to hold out; repeat for several. All agents when omitted.
    #[arg(long)]
    pub heldout: Vec<String>,

    #[command(flatten)]
    pub tuning: TuningArgs,

    #[arg(long)]
    pub seed: u64,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ImportanceArgs {
    #[arg(long)]
    pub model_file: PathBuf,

    #[arg(long)]
    pub features: PathBuf,

    #[arg(long, default_value = "test")]
    pub split: String,

    #[arg(long, default_value_t = 5)]
    pub repeats: usize,

    #[arg(long)]
    pub seed: u64,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    Fraction,
    TruncationTest,
    TruncationTrain,
    Delay,
}

#[derive(Debug, Args, Serialize)]
pub struct CurvesArgs {
    #[arg(long, value_enum)]
    pub kind: CurveKind,

    /// Feature directory (fraction curves).
    #[arg(long)]
    pub features: Option<PathBuf>,

    /// Corpus root (truncation and delay curves).
    #[arg(long)]
    pub corpus: Option<PathBuf>,

    #[arg(long)]
    pub dataset: Option<String>,

    #[arg(long)]
    pub splits: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = FormatArg::Native)]
    pub format: FormatArg,

    /// Saved model for test-side truncation; trained from the corpus when omitted.
    #[arg(long)]
    pub model_file: Option<PathBuf>,

    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.25, 0.5, 0.75, 1.0])]
    pub fractions: Vec<f64>,

    /// Prefix lengths in events. Defaults to fractions of the mean test trace length.
    #[arg(long, value_delimiter = ',')]
    pub ks: Vec<usize>,

    #[arg(long, value_delimiter = ',', default_values_t = [500, 1000, 2000, 5000])]
    pub budgets: Vec<u64>,

    #[command(flatten)]
    pub tuning: TuningArgs,

    #[arg(long)]
    pub seed: u64,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct PerturbArgs {
    #[arg(long)]
    pub corpus: PathBuf,

    #[arg(long)]
    pub dataset: Option<String>,

    #[arg(long, value_enum, default_value_t = FormatArg::Native)]
    pub format: FormatArg,

    /// Upper bound of each uniform delay, in milliseconds.
    #[arg(long)]
    pub max_delay_ms: u64,

    #[arg(long)]
    pub seed: u64,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// Run directories holding report.json.
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,

    /// Write summary.json and summary.txt here as well as printing.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
