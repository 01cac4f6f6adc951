//! `mcdf`: create models, score sequences, and evaluate inference-time
//! Monte-Carlo dropout on DMS-style benchmarks.
//!
//! Exit codes: 0 success, 2 usage/config, 3 I/O, 4 data validation,
//! 5 nothing evaluable. Results go to stdout, diagnostics to stderr.

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "mcdf",
    version,
    about = "Monte-Carlo dropout fitness scoring for protein LMs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a randomly initialized model to a weight file.
    InitModel(InitModelArgs),
    /// Score one sequence.
    Score(ScoreArgs),
    /// Evaluate families at one dropout rate (plus the 0.0 baseline).
    Eval(EvalArgs),
    /// Evaluate families over a grid of dropout rates.
    Sweep(SweepArgs),
    /// Generate teacher-labelled synthetic families.
    GenSynthetic(GenSyntheticArgs),
}

#[derive(Args, Debug)]
struct InitModelArgs {
    /// Model config as a JSON file path or inline JSON object. Defaults to
    /// the desk-scale config.
    #[arg(long)]
    config: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct McArgs {
    /// Dropout injection depth: fraction of the earliest transformer layers
    /// that also receive dropout (0 = embedding only).
    #[arg(long, default_value_t = 0.0)]
    depth_fraction: f64,
    /// Monte-Carlo samples per sequence.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    #[arg(long)]
    model: PathBuf,
    /// Amino-acid string, or path to a FASTA file (first record is used).
    #[arg(long)]
    seq: String,
    /// Dropout rate; 0 gives the deterministic score and ignores --samples.
    #[arg(long, default_value_t = 0.1)]
    dropout: f64,
    #[command(flatten)]
    mc: McArgs,
}

#[derive(Args, Debug, Clone)]
struct FamilyArgs {
    #[arg(long)]
    model: PathBuf,
    /// Directory of `<family>.csv` files with `mutant,DMS_score` columns.
    #[arg(long)]
    families: PathBuf,
    /// Wildtype FASTA applied to every family. Without it each family uses
    /// its `#wildtype=` line or companion `<family>.fasta`.
    #[arg(long)]
    wildtype: Option<PathBuf>,
    /// Skip rows that do not parse or do not match the wildtype.
    #[arg(long)]
    lenient: bool,
    /// Report path; `.csv` writes the flat table, anything else JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Additional flat CSV report path.
    #[arg(long)]
    csv_out: Option<PathBuf>,
    #[command(flatten)]
    mc: McArgs,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long, default_value_t = 0.1)]
    dropout: f64,
    #[command(flatten)]
    common: FamilyArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Comma-separated dropout rates; 0.0 is always included.
    #[arg(long, value_delimiter = ',')]
    rates: Option<Vec<f64>>,
    #[command(flatten)]
    common: FamilyArgs,
}

#[derive(Args, Debug)]
struct GenSyntheticArgs {
    #[arg(long)]
    teacher: PathBuf,
    #[arg(long, default_value_t = 10)]
    families: usize,
    #[arg(long, default_value_t = 100)]
    mutants: usize,
    /// Standard deviation of Gaussian label noise.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("MCDF_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::usage(format!("MCDF_THREADS must be an integer, got {raw:?}")))?;
    // 0 keeps rayon's default (one worker per core).
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::usage(format!("cannot configure thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::InitModel(a) => commands::init_model(a),
        Command::Score(a) => commands::score(a),
        Command::Eval(a) => commands::eval(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::GenSynthetic(a) => commands::gen_synthetic(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
