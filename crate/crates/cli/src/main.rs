//! `tqa`: normalize tables, execute step programs, build training sets,
//! evaluate runs and select between candidate answers.
//!
//! Exit status is 0 on success and 2 for I/O, configuration or input schema
//! problems. Per-example failures are written to the outputs and do not
//! change the exit status.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tqa_core::eval::Metric;

#[derive(Parser)]
#[command(name = "tqa", version, about = "Step-program table question answering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize one table file, or every table file in a directory.
    Normalize(NormalizeArgs),
    /// Run step programs over their tables.
    Execute(ExecuteArgs),
    /// Score predictions against golds, optionally with corrections and a second run.
    Evaluate(EvaluateArgs),
    /// Choose between code-executed and end-to-end answers.
    Select(SelectArgs),
    /// Generate, check and refine programs into a training set.
    Generate(GenerateArgs),
    /// normalize, generate, execute, refine and evaluate in one run.
    Pipeline(PipelineArgs),
}

#[derive(Args, Clone, Default)]
pub struct NormalizeFlags {
    /// Keep thousands separators in numbers.
    #[arg(long)]
    pub keep_thousands: bool,
    /// Skip unicode folding.
    #[arg(long)]
    pub keep_unicode: bool,
    /// Leave column names as they are.
    #[arg(long)]
    pub keep_names: bool,
    /// Keep annotations such as `922 (est.)` on numbers.
    #[arg(long)]
    pub keep_annotations: bool,
}

#[derive(Args)]
pub struct NormalizeArgs {
    /// Table file or directory of table files.
    pub input: PathBuf,
    /// Output file, or output directory when the input is a directory.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub flags: NormalizeFlags,
}

#[derive(Args)]
pub struct ExecuteArgs {
    /// JSONL with one `{id, table_ref, program}` per line.
    #[arg(long)]
    pub programs: PathBuf,
    #[arg(long)]
    pub tables: PathBuf,
    /// JSONL with `{id, values}` or `{id, values: [], error}` per line.
    #[arg(long)]
    pub out: PathBuf,
    /// Include the per-step trace in each output line.
    #[arg(long)]
    pub trace: bool,
    #[command(flatten)]
    pub normalize: NormalizeFlags,
}

#[derive(Args)]
pub struct EvaluateArgs {
    /// Predictions, JSONL `{id, values}`.
    #[arg(long)]
    pub pred: PathBuf,
    /// A second run; adds its rates and the two-run breakdown.
    #[arg(long)]
    pub pred_b: Option<PathBuf>,
    /// Golds as JSONL `{id, values}`.
    #[arg(long, required_unless_present = "dataset", conflicts_with = "dataset")]
    pub gold: Option<PathBuf>,
    /// Golds from a dataset TSV.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// JSONL overlay of corrected golds.
    #[arg(long)]
    pub corrections: Option<PathBuf>,
    #[arg(long, default_value = "fm")]
    pub metric: Metric,
    /// JSON report path; the markdown report goes next to it with `.md`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ScorerKind {
    /// Prefer a non-empty answer over an empty one, else keep code.
    Heuristic,
    /// Always keep the code answer when the candidates differ.
    Code,
    /// Always take the end-to-end answer when the candidates differ.
    E2e,
    /// Ask a model which candidate is right.
    Prompted,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ModelFlags {
    /// Chat-completion base URL [env: TQA_LLM_BASE_URL].
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Model name [env: TQA_LLM_MODEL].
    #[arg(long)]
    pub model: Option<String>,
    /// Serve completions from a JSONL script instead of an endpoint.
    #[arg(long, value_name = "FILE")]
    pub scripted_client: Option<PathBuf>,
}

#[derive(Args)]
pub struct SelectArgs {
    /// JSONL candidate pairs `{id, question, table_ref, code_answer, e2e_answer, e2e_trace?}`.
    #[arg(long)]
    pub pairs: PathBuf,
    /// JSONL selections.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "heuristic")]
    pub scorer: ScorerKind,
    /// Table directory, used by the prompted scorer.
    #[arg(long)]
    pub tables: Option<PathBuf>,
    /// Golds; enables the selection error report.
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// JSON selection report (needs --gold); markdown goes next to it.
    #[arg(long, requires = "gold")]
    pub report: Option<PathBuf>,
    /// Write the labelled selector training set here (needs --gold).
    #[arg(long, requires = "gold")]
    pub training_out: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    pub max_table_rows: usize,
    #[command(flatten)]
    pub model: ModelFlags,
}

#[derive(Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub tables: PathBuf,
    /// Training set JSONL.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-example outcomes JSONL.
    #[arg(long)]
    pub outcomes: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub max_refine_rounds: usize,
    #[arg(long, default_value_t = 30)]
    pub max_table_rows: usize,
    #[arg(long, default_value_t = 1)]
    pub concurrency: usize,
    #[command(flatten)]
    pub model: ModelFlags,
    #[command(flatten)]
    pub normalize: NormalizeFlags,
}

#[derive(Args)]
pub struct PipelineArgs {
    /// TOML run configuration. Paths in it are relative to its directory.
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub tables: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub max_refine_rounds: Option<usize>,
    #[arg(long)]
    pub metric: Option<Metric>,
    #[arg(long)]
    pub corrections: Option<PathBuf>,
    #[arg(long)]
    pub max_table_rows: Option<usize>,
    #[arg(long)]
    pub concurrency: Option<usize>,
    /// Keep outcomes already in the output directory and only process the rest.
    #[arg(long)]
    pub resume: bool,
    #[command(flatten)]
    pub model: ModelFlags,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Normalize(a) => commands::normalize(a),
        Command::Execute(a) => commands::execute(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Select(a) => commands::select(a),
        Command::Generate(a) => commands::generate(a),
        Command::Pipeline(a) => commands::pipeline(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
