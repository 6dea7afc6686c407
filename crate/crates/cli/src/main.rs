//! `attrilens` command-line tool.

mod commands;
mod data;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use attrilens::grpo::Algorithm;
use attrilens::response::Task;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "attrilens",
    version,
    about = "Attribute-guided reward scoring, descriptors, GRPO simulation and scaffold-split forests"
)]
pub struct Cli {
    /// Output style for results printed to stdout.
    #[arg(long, value_enum, global = true, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score a JSON-lines corpus of model responses.
    Score(ScoreArgs),
    /// Compute molecular descriptors for SMILES strings.
    Descriptors(DescriptorArgs),
    /// Run the policy simulator and write per-step reward curves.
    TrainSim(TrainSimArgs),
    /// Scaffold-split a CSV dataset into train, valid and test files.
    Split(SplitArgs),
    /// Train a random forest on descriptor features and report test AUC.
    Dtree(DtreeArgs),
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Corpus file: one JSON object per line with id, smiles, task, target,
    /// response_text and label.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Range table: a file path or a bundled name.
    #[arg(long, default_value = "gpt4o-default")]
    pub table: String,
    /// Accepted attribute count as `lo,hi`.
    #[arg(long, default_value = "3,10")]
    pub count_range: String,
    /// Also write per-record breakdowns as JSON lines to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DescriptorArgs {
    /// Molecules to describe.
    #[arg(required = true)]
    pub smiles: Vec<String>,
    /// Every implemented descriptor (the default).
    #[arg(long, conflicts_with = "ids")]
    pub all: bool,
    /// Comma-separated descriptor names or aliases.
    #[arg(long)]
    pub ids: Option<String>,
}

#[derive(Debug, Args)]
pub struct TrainSimArgs {
    /// TOML file with simulator settings; missing keys keep their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, value_parser = parse_algorithm)]
    pub algorithm: Option<Algorithm>,
    /// Output directory for curves.csv and the run manifest.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    /// Bundled dataset name (bbbp or bace); sets input and columns.
    #[arg(long, conflicts_with = "input")]
    pub dataset: Option<String>,
    /// CSV file to read.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "smiles")]
    pub smiles_column: String,
    #[arg(long, default_value = "label")]
    pub label_column: String,
    #[arg(long, value_parser = parse_task, default_value = "classification")]
    pub task: Task,
    /// Train, valid and test fractions.
    #[arg(long, default_value = "0.8,0.1,0.1")]
    pub fractions: String,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    /// Output directory for train.csv, valid.csv and test.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DtreeArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    /// `top10` (most claimed attributes in --corpus), `all`, or a
    /// comma-separated list of descriptor names.
    #[arg(long, default_value = "top10")]
    pub features: String,
    /// Response corpus ranked for `top10`; defaults to the bundled case studies.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    pub trees: usize,
    #[arg(long, default_value_t = 8)]
    pub max_depth: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Label shuffles for the permutation-null AUC; 0 skips it.
    #[arg(long, default_value_t = 50)]
    pub null_repeats: usize,
    /// Output directory for metrics.json, model.txt and the run manifest.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse()
}

fn parse_task(s: &str) -> Result<Task, String> {
    s.parse()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Score(a) => commands::score(a, cli.format),
        Command::Descriptors(a) => commands::descriptors(a, cli.format),
        Command::TrainSim(a) => commands::train_sim(a, cli.format),
        Command::Split(a) => commands::split(a, cli.format),
        Command::Dtree(a) => commands::dtree(a, cli.format),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
