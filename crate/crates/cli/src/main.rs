//! `attrex`: build distant-supervision labels, train, extract and evaluate.

mod commands;
mod config;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use failure::Failure;

#[derive(Parser, Debug)]
#[command(name = "attrex", version, about = "User-attribute extraction from dialogue")]
struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a seeded synthetic corpus with planted labels.
    Synth(SynthArgs),
    /// Label user turns by entailment against persona sentences.
    BuildData(BuildDataArgs),
    /// Train an extractor on a labeled corpus.
    Train(Box<TrainArgs>),
    /// Extract triplets from utterances.
    Extract(ExtractArgs),
    /// Score a model (or a predictions file) against a labeled corpus.
    Evaluate(EvaluateArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub dialogues: usize,
    #[arg(long, default_value_t = 10)]
    pub predicates: usize,
    #[arg(long, default_value_t = 5)]
    pub user_turns: usize,
    #[arg(long, default_value_t = 4)]
    pub persona_size: usize,
    #[arg(long, default_value_t = 0.3)]
    pub none_ratio: f64,
    #[arg(long, default_value_t = 0.15)]
    pub multi_ratio: f64,
    #[arg(long, value_enum, default_value_t = SplitArg::Train)]
    pub split: SplitArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SplitArg {
    Train,
    HeldOut,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ScorerArg {
    /// Content-word overlap with the persona sentence.
    Lexical,
    /// Persona object appears verbatim in the utterance.
    Substring,
    /// Precomputed scores from --scores.
    File,
}

#[derive(Args, Debug)]
pub struct BuildDataArgs {
    #[arg(long)]
    pub dialogues: PathBuf,
    #[arg(long)]
    pub personas: PathBuf,
    #[arg(long, value_enum, default_value_t = ScorerArg::Lexical)]
    pub scorer: ScorerArg,
    /// Score file for `--scorer file`.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long, default_value_t = 0.9)]
    pub threshold: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Build report path (default: `<out>.report.json`).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Labeled corpus.
    #[arg(long)]
    pub train: PathBuf,
    /// Directory for checkpoints and the metrics log.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override any configuration key, e.g. `--set hops=2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Continue from a checkpoint written by an earlier run.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Pretrained word vectors, one `token v1 v2 ...` per line.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Record wall-clock seconds per epoch (logs are then not reproducible).
    #[arg(long)]
    pub timing: bool,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Stop after this many epochs in this invocation (resume later).
    #[arg(long)]
    pub stop_after: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr_start: Option<f64>,
    #[arg(long)]
    pub lr_end: Option<f64>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub word_dropout: Option<f64>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub hops: Option<usize>,
    #[arg(long)]
    pub word_dim: Option<usize>,
    #[arg(long)]
    pub char_dim: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub freeze_embeddings: bool,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["text", "input"]))]
pub struct ExtractArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// A single utterance.
    #[arg(long)]
    pub text: Option<String>,
    /// One utterance per line.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum OracleArg {
    Classifier,
    Generator,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Model checkpoint; optional with --predictions.
    #[arg(long, required_unless_present = "predictions")]
    pub checkpoint: Option<PathBuf>,
    /// Labeled test corpus.
    #[arg(long)]
    pub test: PathBuf,
    /// Also score one stage in isolation.
    #[arg(long, value_enum)]
    pub oracle: Option<OracleArg>,
    /// Score these predictions instead of running the model.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Report path (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { failure::USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    let result: Result<(), Failure> = match &cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::BuildData(a) => commands::build_data(a),
        Command::Train(a) => commands::train(a),
        Command::Extract(a) => commands::extract(a),
        Command::Evaluate(a) => commands::evaluate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code as u8)
        }
    }
}
