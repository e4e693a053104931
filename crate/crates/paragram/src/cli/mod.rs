//! Command-line front end: train / filter / score / evaluate / analyze /
//! grid-search workflows over the library, with reproducible seeded runs.
//!
//! Exit codes: 0 success, 1 usage error (bad flags, unknown config key),
//! 2 data error (unreadable or malformed inputs).

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Errors split by exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl From<paragram::Error> for CliError {
    fn from(e: paragram::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "paragram",
    version,
    about = "Train, curate, and evaluate paraphrase embeddings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fine-tune word vectors on word paraphrase pairs
    TrainWords(TrainWordsArgs),
    /// Train the recursive composition network on phrase pairs
    TrainPhrases(TrainPhrasesArgs),
    /// Filter, extract, and sample phrase-pair data
    Filter(FilterArgs),
    /// Print one model similarity per input pair
    Score(ScoreArgs),
    /// Correlate model similarities with gold ratings
    Evaluate(EvaluateArgs),
    /// Compare two models with binned error tables
    Analyze(AnalyzeArgs),
    /// Train one model per grid point and keep the best
    GridSearch(GridSearchArgs),
}

/// Hyperparameter flags shared by the training commands; unset values fall
/// back to the config file, then to the built-in defaults.
#[derive(Args, Debug, Clone)]
struct HyperFlags {
    /// Margin of the ranking objective
    #[arg(long)]
    delta: Option<f64>,
    /// Pull of the word matrix toward its initialization
    #[arg(long)]
    lambda_ww: Option<f64>,
    /// Word-vector learning rate
    #[arg(long)]
    lr_words: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// dot | cosine
    #[arg(long)]
    similarity: Option<String>,
    /// max | rand | mix | least
    #[arg(long)]
    sampler: Option<String>,
    /// Negative candidate pool: first | both
    #[arg(long)]
    neg_pool: Option<String>,
    /// Seed for every random choice of the run
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (PARAGRAM_THREADS is the fallback)
    #[arg(long)]
    threads: Option<usize>,
    /// key=value configuration file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainWordsArgs {
    #[command(flatten)]
    hyper: HyperFlags,
    /// TSV of `word1 TAB word2` training pairs
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// Initial embeddings (text format)
    #[arg(long)]
    init: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Forbid negatives that were paired with the word (or their lemmas)
    #[arg(long)]
    use_constraints: bool,
    /// TSV `word TAB lemma` map used by the constraints
    #[arg(long)]
    lemmas: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainPhrasesArgs {
    #[command(flatten)]
    hyper: HyperFlags,
    #[arg(long)]
    pairs: Option<PathBuf>,
    #[arg(long)]
    init: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Weight decay on the composition parameters
    #[arg(long)]
    lambda_w: Option<f64>,
    /// Composition learning rate
    #[arg(long)]
    lr_comp: Option<f64>,
    /// Composition parameters to start from (otherwise seeded random)
    #[arg(long)]
    init_params: Option<PathBuf>,
    /// tokens | trees
    #[arg(long)]
    input_format: Option<String>,
    #[arg(long)]
    use_constraints: bool,
    #[arg(long)]
    lemmas: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FilterArgs {
    /// Input records TSV
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Output records TSV
    #[arg(long)]
    out: Option<PathBuf>,
    /// Vocabulary file, one token per line
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Drop pairs with overlap score at or above this (default 0.5)
    #[arg(long)]
    max_overlap: Option<f64>,
    /// Skip the overlap stage entirely
    #[arg(long)]
    no_overlap_filter: bool,
    /// Keep digit-bearing tokens
    #[arg(long)]
    keep_digits: bool,
    /// Drop pairs whose whole phrases are within edit distance 1
    #[arg(long)]
    lev1_filter: bool,
    /// Replace filtering with bigram extraction: jn | nn | vn
    #[arg(long)]
    extract_bigrams: Option<String>,
    /// Draw this many records per effective-size bin
    #[arg(long)]
    bin_sample: Option<usize>,
    /// Effective-size bins, e.g. `3,4,5+`
    #[arg(long)]
    bins: Option<String>,
    /// Split input into chunks of this many records before sampling
    #[arg(long)]
    chunk_size: Option<usize>,
    /// Records drawn per chunk
    #[arg(long)]
    chunk_sample: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    /// additive | rnn | overlap-strict | overlap-lemma
    #[arg(long)]
    model: Option<String>,
    /// Input pairs TSV (`text1 TAB text2`)
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    lemmas: Option<PathBuf>,
    /// tokens | trees
    #[arg(long)]
    input_format: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// additive | rnn | overlap-strict | overlap-lemma
    #[arg(long)]
    model: Option<String>,
    /// Scored dataset TSV (`text1 TAB text2 TAB gold`)
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// word | bigram | phrase
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    lemmas: Option<PathBuf>,
    /// Parallel `tree1 TAB tree2` file for the dataset
    #[arg(long)]
    trees: Option<PathBuf>,
    /// Merge gold ratings of 4-5 and of 1-2 before correlating
    #[arg(long)]
    collapse_scale: bool,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Baseline system
    #[arg(long)]
    model_a: Option<String>,
    /// Comparison system
    #[arg(long)]
    model_b: Option<String>,
    /// gold | length | overlap
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    lemmas: Option<PathBuf>,
    /// Word-pair resource for overlap-ratio bins
    #[arg(long)]
    paired_words: Option<PathBuf>,
    /// Cosine-to-rating mapping: affine | minmax
    #[arg(long)]
    scale: Option<String>,
    #[arg(long)]
    trees: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GridSearchArgs {
    #[command(flatten)]
    hyper: HyperFlags,
    /// words | phrases
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    pairs: Option<PathBuf>,
    #[arg(long)]
    init: Option<PathBuf>,
    #[arg(long)]
    init_params: Option<PathBuf>,
    #[arg(long)]
    input_format: Option<String>,
    #[arg(long)]
    lambda_w: Option<f64>,
    #[arg(long)]
    lr_comp: Option<f64>,
    /// Grid preset: word | phrase | phrase-shifted
    #[arg(long)]
    grid: Option<String>,
    /// Comma-separated candidates overriding the preset
    #[arg(long)]
    lambda_ww_grid: Option<String>,
    #[arg(long)]
    lambda_w_grid: Option<String>,
    #[arg(long)]
    batch_grid: Option<String>,
    /// Scored dataset scored with plain correlation
    #[arg(long)]
    tune: Option<PathBuf>,
    /// Similarity partition for the 2*sim - rel criterion
    #[arg(long)]
    tune_s: Option<PathBuf>,
    /// Relatedness partition for the 2*sim - rel criterion
    #[arg(long)]
    tune_r: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parse and run; returns the process exit code.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::TrainWords(args) => commands::train_words(args),
        Command::TrainPhrases(args) => commands::train_phrases(args),
        Command::Filter(args) => commands::filter(args),
        Command::Score(args) => commands::score(args),
        Command::Evaluate(args) => commands::evaluate(args),
        Command::Analyze(args) => commands::analyze(args),
        Command::GridSearch(args) => commands::grid_search(args),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}
