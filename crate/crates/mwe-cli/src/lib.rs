//! `mwe`: train and evaluate multiplex word embeddings from dependency
//! tuple corpora.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "mwe", version, about = "Multiplex word embeddings toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract relation tuples from a CoNLL-U file
    Extract(ExtractArgs),
    /// Build vocabulary and relation registry from a tuple file
    BuildVocab(BuildVocabArgs),
    /// Train a model on a tuple file and write a checkpoint
    Train(TrainArgs),
    /// Score a selectional-preference dataset against a checkpoint
    EvalSp(EvalSpArgs),
    /// Score a word-similarity dataset against a checkpoint
    EvalWs(EvalWsArgs),
    /// Export embeddings as text vectors
    Export(ExportArgs),
    /// Print checkpoint header and size accounting
    Info(InfoArgs),
    /// Run the gradient verification suite
    Verify(VerifyArgs),
    /// Train across a grid of one hyperparameter and tabulate the metric
    Sweep(SweepArgs),
    /// Generate a planted-preference corpus with its gold table
    Synth(SynthArgs),
}

#[derive(Args)]
struct ExtractArgs {
    /// CoNLL-U input file
    #[arg(long)]
    input: PathBuf,
    /// Tuple file to write
    #[arg(long)]
    output: PathBuf,
    /// Comma-separated dependency relations to keep
    #[arg(long, default_value = "nsubj,dobj,amod")]
    relations: String,
    /// Lowercase all forms during extraction
    #[arg(long)]
    lowercase: bool,
}

#[derive(Args)]
struct BuildVocabArgs {
    /// Tuple file to read
    #[arg(long)]
    input: PathBuf,
    /// Vocabulary file to write
    #[arg(long)]
    output: PathBuf,
    /// Relation registry file to write
    #[arg(long)]
    relations_output: PathBuf,
    /// Keep words whose total frequency reaches this threshold
    #[arg(long, default_value_t = 5)]
    min_count: u64,
}

/// Hyperparameter flags shared by `train` and `sweep`; unset flags fall
/// back to the config file, then the preset, then built-in defaults.
#[derive(Args, Clone, Default)]
struct TrainFlags {
    /// Flat key=value settings file (flags override it)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset: `desk` (d=32, s=4)
    #[arg(long)]
    preset: Option<String>,
    /// Center embedding dimension d
    #[arg(long)]
    dim: Option<usize>,
    /// Local relational dimension s
    #[arg(long)]
    local_dim: Option<usize>,
    /// Maximum semantic drifting range a
    #[arg(long)]
    drift: Option<f64>,
    /// Projection rescale target k
    #[arg(long)]
    scale_k: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Initial learning rate
    #[arg(long)]
    eta0: Option<f64>,
    /// `alt` or `fixed:<x>`
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Parallel lock-free workers (MWE_THREADS is the fallback)
    #[arg(long)]
    workers: Option<usize>,
    /// Vocabulary frequency threshold when building from the tuple file
    #[arg(long)]
    min_count: Option<u64>,
    /// Uniform negative sampling over the slot support
    #[arg(long)]
    neg_uniform: bool,
    /// Rescale only the local vector on drift overflow
    #[arg(long)]
    project_u_only: bool,
    /// Cap per-epoch visits of one record
    #[arg(long)]
    count_cap: Option<u64>,
}

#[derive(Args)]
struct TrainArgs {
    /// Tuple file to train on
    #[arg(long)]
    input: PathBuf,
    /// Checkpoint path to write
    #[arg(long)]
    output: PathBuf,
    /// Load a previously built vocabulary instead of rebuilding
    #[arg(long, requires = "rels")]
    vocab: Option<PathBuf>,
    /// Load a previously built relation registry
    #[arg(long, requires = "vocab")]
    rels: Option<PathBuf>,
    /// Also write the training report as JSON
    #[arg(long)]
    json: Option<PathBuf>,
    #[command(flatten)]
    flags: TrainFlags,
}

#[derive(Args)]
struct EvalSpArgs {
    #[arg(long)]
    model: PathBuf,
    /// Dataset: generic TSV (`head relation tail score`) or JSON lines
    #[arg(long)]
    data: PathBuf,
    /// `tsv`, `jsonl`, or `auto` (by extension)
    #[arg(long, default_value = "auto")]
    format: String,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct EvalWsArgs {
    #[arg(long)]
    model: PathBuf,
    /// Dataset: SimLex-999 layout or generic `word1 word2 pos score` TSV
    #[arg(long)]
    data: PathBuf,
    /// `center` or a relation name
    #[arg(long, default_value = "center")]
    source: String,
    /// `h`, `t`, `h+t`, or `concat`
    #[arg(long, default_value = "h")]
    combiner: String,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    model: PathBuf,
    /// Text vector file to write
    #[arg(long)]
    output: PathBuf,
    /// `center` or a relation name
    #[arg(long, default_value = "center")]
    source: String,
    /// `h`, `t`, `h+t`, or `concat`
    #[arg(long, default_value = "h")]
    role: String,
}

#[derive(Args)]
struct InfoArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Random gradient-check cases to run
    #[arg(long, default_value_t = 100)]
    trials: u64,
    /// Finite-difference step
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
}

#[derive(Args)]
struct SweepArgs {
    /// Tuple file to train on
    #[arg(long)]
    input: PathBuf,
    /// Selectional-preference gold TSV to score each run against
    #[arg(long)]
    gold: PathBuf,
    /// Hyperparameter to vary: `s` (local dimension) or `a` (drift range)
    #[arg(long)]
    param: String,
    /// Comma-separated grid values
    #[arg(long)]
    values: String,
    /// Comma-separated seeds; the reported metric is their median
    #[arg(long, default_value = "11,12,13")]
    seeds: String,
    /// Also write the table to this TSV file
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    flags: TrainFlags,
}

#[derive(Args)]
struct SynthArgs {
    /// Tuple file to write
    #[arg(long)]
    output: PathBuf,
    /// Gold selectional-preference TSV to write
    #[arg(long)]
    gold: PathBuf,
    #[arg(long, default_value_t = 4)]
    groups: usize,
    #[arg(long, default_value_t = 50)]
    words_per_group: usize,
    #[arg(long, default_value_t = 3)]
    relations: usize,
    #[arg(long, default_value_t = 50_000)]
    tuples_per_relation: usize,
    #[arg(long, default_value_t = 777)]
    seed: u64,
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    eprint!("{e}");
                    1
                }
            }
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}
