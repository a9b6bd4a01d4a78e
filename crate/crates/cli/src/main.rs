use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod settings;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    File { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] acs_core::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(acs_core::Error::Integrity(_)) => 3,
            CliError::File { .. } | CliError::Core(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "acs", version, about = "Attributed community search")]
struct Cli {
    /// `key = value` settings file; a flag with the same name wins.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Generate a planted-partition benchmark.
    Gen(GenArgs),
    /// Extract the candidate subgraph of a query.
    Extract(ExtractArgs),
    /// Train a model on generated or supplied queries.
    Train(TrainArgs),
    /// Answer a query with a trained model.
    Query(QueryArgs),
    /// Score a trained model on test queries.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Edge list, two node tokens per line.
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// Attribute list, `node<TAB>attr,attr`.
    #[arg(long)]
    pub attrs: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QueryInput {
    /// File of `nodes<TAB>attrs` lines.
    #[arg(long)]
    pub query_file: Option<PathBuf>,
    /// Query node tokens, space- or comma-separated.
    #[arg(long)]
    pub query_nodes: Option<String>,
    /// Query attribute tokens, comma-separated.
    #[arg(long)]
    pub query_attrs: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExtractionFlags {
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub max_hops: Option<usize>,
    /// Hop cap of the attribute branch; 0 removes it.
    #[arg(long)]
    pub attr_max_hops: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub communities: Option<usize>,
    #[arg(long)]
    pub p_in: Option<f64>,
    #[arg(long)]
    pub p_out: Option<f64>,
    #[arg(long)]
    pub signature_attrs: Option<usize>,
    #[arg(long)]
    pub signature_rate: Option<f64>,
    #[arg(long)]
    pub noise_vocab: Option<usize>,
    #[arg(long)]
    pub noise_per_node: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub query: QueryInput,
    #[command(flatten)]
    pub extraction: ExtractionFlags,
    /// Candidate node tokens, one per line; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `branch,hop,modularity` CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Ground-truth communities, one per line.
    #[arg(long)]
    pub communities: Option<PathBuf>,
    /// Training queries with truth; generated when absent.
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Validation queries with truth; generated when absent.
    #[arg(long)]
    pub val_queries: Option<PathBuf>,
    /// Where to write the model.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// `epoch,loss,val_f1` CSV; defaults to the model path plus `.loss.csv`.
    #[arg(long)]
    pub loss_csv: Option<PathBuf>,
    #[command(flatten)]
    pub extraction: ExtractionFlags,
    #[command(flatten)]
    pub hyper: HyperFlags,
}

#[derive(Debug, Args)]
pub struct HyperFlags {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub clip: Option<f64>,
    #[arg(long)]
    pub latent_dim: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Early-stopping patience in epochs; 0 disables it.
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub lr_decay: Option<f64>,
    #[arg(long)]
    pub decay_epochs: Option<usize>,
    #[arg(long)]
    pub critic_lr: Option<f64>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub struct_width: Option<usize>,
    /// Comma-separated ascending thresholds.
    #[arg(long)]
    pub threshold_grid: Option<String>,
    /// Query attribute mode: EmA, AFC or AFN.
    #[arg(long)]
    pub mode: Option<String>,
    /// Generated training queries.
    #[arg(long)]
    pub train_count: Option<usize>,
    /// Generated validation queries.
    #[arg(long)]
    pub val_count: Option<usize>,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub query: QueryInput,
    #[command(flatten)]
    pub extraction: ExtractionFlags,
    /// JSON output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub communities: Option<PathBuf>,
    /// Test queries with truth; generated when absent.
    #[arg(long)]
    pub test_queries: Option<PathBuf>,
    /// Directory for `metrics.csv`, `metrics.json` and `per_query.csv`.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Generated test queries.
    #[arg(long)]
    pub test_count: Option<usize>,
    #[command(flatten)]
    pub extraction: ExtractionFlags,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = settings::Settings::load(cli.config.as_deref()).and_then(|mut s| {
        let out = match cli.command {
            Command::Gen(a) => commands::gen(a, &mut s),
            Command::Extract(a) => commands::extract(a, &mut s),
            Command::Train(a) => commands::train(a, &mut s),
            Command::Query(a) => commands::query(a, &mut s),
            Command::Evaluate(a) => commands::evaluate(a, &mut s),
        };
        s.warn_unused();
        out
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
