//! The `kgsum` command line. Every subcommand is a pure function of its
//! inputs, config and seed; data goes to files or stdout, diagnostics to
//! stderr. Exit codes: 0 success, 1 invalid input or usage, 2 internal error.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;

pub use config::{PathsConfig, ReportHeader, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "kgsum", version, about = "Knowledge-graph summarization toolkit")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Random seed (overrides the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for corpus-level parallelism (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build full graphs (and target graphs from abstract annotations).
    Build(BuildArgs),
    /// Align predicted graphs to target graphs.
    Align(AlignArgs),
    /// Score predicted graphs against target graphs.
    Eval(EvalArgs),
    /// Predict summary graphs with a non-learned selector.
    Baseline(BaselineArgs),
    /// Train the graph attention salience classifier.
    Train(TrainArgs),
    /// Predict summary graphs with a trained classifier.
    Predict(PredictArgs),
    /// Compare analytic and finite-difference gradients of the classifier.
    Gradcheck(GradcheckArgs),
    /// Report the generic/non-generic mention split at candidate IDF thresholds.
    CalibrateTau(CalibrateArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Documents file (line-delimited JSON).
    #[arg(long)]
    pub docs: Option<PathBuf>,
    /// Full-graph output file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Target-graph output file, for documents with an abstract annotation or graph.
    #[arg(long)]
    pub targets_out: Option<PathBuf>,
    /// IDF threshold for generic unigram mentions.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Cross-window merge policy.
    #[arg(long, value_parser = ["transitive", "unique-pair"])]
    pub merge_policy: Option<String>,
    /// Drop documents whose target has fewer than 5 relations or whose abstract exceeds 500 tokens.
    #[arg(long)]
    pub filter: bool,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    /// Predicted graphs.
    #[arg(long)]
    pub pred: Option<PathBuf>,
    /// Target graphs.
    #[arg(long)]
    pub targets: Option<PathBuf>,
    /// Alignment output file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Similarity threshold.
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AverageArg {
    Macro,
    Micro,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TypeMatchArg {
    Any,
    All,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted graphs.
    #[arg(long)]
    pub pred: Option<PathBuf>,
    /// Target graphs.
    #[arg(long)]
    pub targets: Option<PathBuf>,
    /// Precomputed alignments; computed on the fly when absent.
    #[arg(long)]
    pub alignments: Option<PathBuf>,
    /// Report file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Similarity threshold.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Corpus averaging.
    #[arg(long, value_enum)]
    pub average: Option<AverageArg>,
    /// Typed entity matching for collapsed predictions.
    #[arg(long, value_enum)]
    pub type_match: Option<TypeMatchArg>,
    /// Include per-document scores in the report.
    #[arg(long)]
    pub per_doc: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Pagerank,
    Topkfreq,
    Goldentity,
    SummaryInduced,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long, value_enum)]
    pub method: Method,
    /// Full graphs (all methods except summary-induced).
    #[arg(long)]
    pub graphs: Option<PathBuf>,
    /// Target graphs (goldentity).
    #[arg(long)]
    pub targets: Option<PathBuf>,
    /// Documents file (summary-induced).
    #[arg(long)]
    pub docs: Option<PathBuf>,
    /// Sentence selections, one `{doc_id, sentences: [[section, sentence], ...]}` per line (summary-induced).
    #[arg(long)]
    pub selections: Option<PathBuf>,
    /// Predicted-graph output file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of entities kept by pagerank and topkfreq.
    #[arg(long)]
    pub k: Option<usize>,
    /// PageRank damping factor.
    #[arg(long)]
    pub damping: Option<f64>,
    /// Walk PageRank along edge direction only.
    #[arg(long)]
    pub directed: bool,
    /// Similarity threshold for goldentity.
    #[arg(long)]
    pub ge_threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Documents file; full and target graphs are built from it.
    #[arg(long)]
    pub docs: Option<PathBuf>,
    /// Full graphs (instead of --docs).
    #[arg(long)]
    pub graphs: Option<PathBuf>,
    /// Target graphs (instead of --docs).
    #[arg(long)]
    pub targets: Option<PathBuf>,
    /// Development full graphs for checkpoint selection.
    #[arg(long, requires = "dev_targets")]
    pub dev_graphs: Option<PathBuf>,
    /// Development target graphs.
    #[arg(long, requires = "dev_graphs")]
    pub dev_targets: Option<PathBuf>,
    /// Embedding table; hash embeddings when absent.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Model output file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Training log output file (line-delimited JSON).
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Attend over out-neighbors only.
    #[arg(long)]
    pub directed_attention: bool,
    /// Use ln(1 + count) as the count feature.
    #[arg(long)]
    pub log_count: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Trained model file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Full graphs.
    #[arg(long)]
    pub graphs: Option<PathBuf>,
    /// Embedding table; hash embeddings when absent.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Predicted-graph output file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Salience probability threshold.
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Model to check; a seeded initialization from the config when absent.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Graphs to check on; random 6-node graphs when absent.
    #[arg(long)]
    pub graphs: Option<PathBuf>,
    /// Targets that label --graphs; random labels when absent.
    #[arg(long)]
    pub targets: Option<PathBuf>,
    /// Number of random graphs when --graphs is absent.
    #[arg(long, default_value_t = 20)]
    pub random_graphs: usize,
    /// Parameters sampled per graph.
    #[arg(long, default_value_t = crate::gat::DEFAULT_SAMPLES)]
    pub samples: usize,
    /// Largest accepted relative error.
    #[arg(long, default_value_t = 1e-3)]
    pub tolerance: f64,
    /// Flat index of a parameter to perturb in the backward pass only.
    #[arg(long, requires = "fault_delta")]
    pub fault_param: Option<usize>,
    /// Size of that perturbation.
    #[arg(long, requires = "fault_param")]
    pub fault_delta: Option<f64>,
    /// Report file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Documents file.
    #[arg(long)]
    pub docs: Option<PathBuf>,
    /// Candidate thresholds.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0])]
    pub taus: Vec<f64>,
    /// Report file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match commands::dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::NonFiniteLoss(_)) || !e.is_validation() {
                2
            } else {
                1
            }
        }
    }
}
