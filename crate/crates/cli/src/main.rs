mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tinyml_core::DatasetKind;

/// Offline TinyML workflow: synthesize or ingest recordings, train a small
/// classifier, quantize it to int8, export a blob and stream data through it.
#[derive(Debug, Parser)]
#[command(name = "tinyml", version)]
pub struct Cli {
    /// Project file
    #[arg(long, global = true, default_value = "project.toml")]
    pub config: PathBuf,
    /// Overrides every seed in the project (and the synth seed)
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Debug logging; `run` also prints smoothed probabilities per window
    #[arg(long, short, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset or stream
    Synth(SynthArgs),
    /// Load the project's dataset and summarize it
    Ingest,
    /// Split windows into train and test sets
    Split,
    /// Extract train and test feature matrices
    Features,
    /// Train the float model and evaluate it on the test split
    Train,
    /// Evaluate a trained model on the test split
    Test(TestArgs),
    /// Calibrate, quantize and export; checks the memory budget and accuracy drop
    Quantize(ModelArgs),
    /// Quantize a trained model and write the blob only
    Export(ModelArgs),
    /// Stream a recording (or stdin) through an exported blob
    Run(RunArgs),
    /// Budget report and timings for a blob or a hypothetical topology
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    pub kind: DatasetKind,
    /// Dataset directory to create
    #[arg(long, required_unless_present = "stream")]
    pub out: Option<PathBuf>,
    /// Recordings per class
    #[arg(long, default_value_t = 40)]
    pub count: usize,
    /// Also write a default project file pointing at the dataset
    #[arg(long, requires = "out")]
    pub project: Option<PathBuf>,
    /// Write one continuous stream recording instead of a dataset
    #[arg(long, conflicts_with_all = ["out", "project"])]
    pub stream: Option<PathBuf>,
    /// Stream length in seconds
    #[arg(long, default_value_t = 10.0, requires = "stream")]
    pub seconds: f64,
    /// Mix a fresh recording of LABEL into the stream at SECONDS, e.g. red@2
    #[arg(long = "insert", value_name = "LABEL@SECONDS", requires = "stream")]
    pub inserts: Vec<String>,
    /// Background RMS per channel [default: sensor/noise floor of the corpus]
    #[arg(long, requires = "stream")]
    pub background: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// Float model [default: <artifacts>/model.json]
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Overrides runtime.min_confidence
    #[arg(long)]
    pub min_confidence: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Float model [default: <artifacts>/model.json]
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Blob path [default: <artifacts>/model.tnym]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub blob: PathBuf,
    /// WAV or CSV recording; `-` or absent reads CSV rows from stdin
    pub input: Option<PathBuf>,
    /// Samples per push
    #[arg(long, default_value_t = 1)]
    pub chunk: usize,
    /// Overrides the blob's min_confidence
    #[arg(long)]
    pub min_confidence: Option<f32>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Blob to measure [default: <artifacts>/model.tnym]
    #[arg(long, conflicts_with = "dims")]
    pub blob: Option<PathBuf>,
    /// Random model with these layer widths, input first, e.g. 600,600,600,4
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// DSP front end assumed with --dims
    #[arg(long, default_value = "gesture")]
    pub kind: DatasetKind,
    /// Timed repetitions
    #[arg(long, default_value_t = 200)]
    pub iterations: usize,
}

/// A run that completed but missed an accuracy or budget bar.
#[derive(Debug)]
pub struct BarFailure(pub String);

impl std::fmt::Display for BarFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for BarFailure {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    env_logger::Builder::new()
        .filter_level(if cli.verbose {
            log::LevelFilter::Debug
        } else {
            log::LevelFilter::Warn
        })
        .parse_default_env()
        .init();
    match commands::dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<BarFailure>().is_some() => {
            eprintln!("FAIL: {e}");
            ExitCode::from(2)
        }
        Err(e)
            if e
                .downcast_ref::<std::io::Error>()
                .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe) =>
        {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
