//! `arga` command line: reproducible training, evaluation, sweep, and export
//! runs on attributed graphs. Every run leaves its artifacts plus a checksummed
//! manifest under `--out`.

mod artifacts;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use arga_core::eval::EvalSide;
use arga_core::model::Variant;

#[derive(Parser)]
#[command(
    name = "arga",
    version,
    about = "Adversarially regularized graph autoencoders"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Hyperparameter overrides: a JSON object (inline or a file path).
    /// Unknown keys are rejected.
    #[arg(long, global = true, value_name = "JSON|FILE")]
    pub config: Option<String>,

    /// Base random seed; overrides the config file and the built-in default.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Directory all artifacts are written to.
    #[arg(long, global = true, default_value = "out", value_name = "DIR")]
    pub out: PathBuf,

    /// Dataset: a name under the data root (env ARGA_DATA_ROOT, default
    /// `data`), a directory holding nodes.tsv and edges.tsv, or explicit
    /// `<nodes.tsv>,<edges.tsv>` paths.
    #[arg(long, global = true, value_name = "NAME|PATHS")]
    pub dataset: Option<String>,

    /// Model variant: arga, arvga, gae, or vgae.
    #[arg(long, global = true)]
    pub variant: Option<Variant>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Validate a dataset and write a reusable edge split.
    Prepare {
        /// Fraction of edges held out for validation.
        #[arg(long, default_value_t = 0.05)]
        val_frac: f64,
        /// Fraction of edges held out for testing.
        #[arg(long, default_value_t = 0.10)]
        test_frac: f64,
    },
    /// Train on the split graph and score the held-out test edges.
    Train {
        /// Number of consecutive seeds to run (seed, seed+1, ...); means and
        /// standard deviations land in aggregate.json when above one.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        /// Reuse a split.json instead of sampling a split per seed.
        #[arg(long, value_name = "FILE")]
        split: Option<PathBuf>,
        #[arg(long, default_value_t = 0.05)]
        val_frac: f64,
        #[arg(long, default_value_t = 0.10)]
        test_frac: f64,
    },
    /// Score a stored embedding against a stored split.
    EvalLink {
        /// Embedding TSV; defaults to <out>/embedding.tsv.
        #[arg(long, value_name = "FILE")]
        embedding: Option<PathBuf>,
        /// Split JSON; defaults to <out>/split.json.
        #[arg(long, value_name = "FILE")]
        split: Option<PathBuf>,
        /// Which held-out side to score.
        #[arg(long, default_value = "test")]
        side: Side,
    },
    /// K-means a stored embedding and score it against the dataset labels.
    EvalCluster {
        /// Embedding TSV; defaults to <out>/embedding.tsv.
        #[arg(long, value_name = "FILE")]
        embedding: Option<PathBuf>,
        /// Number of clusters; defaults to the dataset's class count.
        #[arg(long)]
        k: Option<usize>,
        /// K-means restarts; the lowest-inertia run wins.
        #[arg(long, default_value_t = 10)]
        restarts: usize,
    },
    /// Encode a dataset with a trained checkpoint (no edges held out).
    Embed {
        /// Checkpoint; defaults to <out>/checkpoint.bin.
        #[arg(long, value_name = "FILE")]
        checkpoint: Option<PathBuf>,
    },
    /// Project a stored embedding to 2-D by PCA for plotting.
    Project {
        /// Embedding TSV; defaults to <out>/embedding.tsv.
        #[arg(long, value_name = "FILE")]
        embedding: Option<PathBuf>,
    },
    /// Train across embedding dimensions and tabulate mean test metrics.
    SweepDim {
        /// Embedding widths to sweep.
        #[arg(long, value_delimiter = ',', default_values_t = vec![8usize, 16, 32, 64, 128, 1024])]
        dims: Vec<usize>,
        /// Seeds per dimension.
        #[arg(long, default_value_t = 10)]
        runs: u64,
        #[arg(long, default_value_t = 0.05)]
        val_frac: f64,
        #[arg(long, default_value_t = 0.10)]
        test_frac: f64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Side {
    Val,
    Test,
}

impl From<Side> for EvalSide {
    fn from(s: Side) -> EvalSide {
        match s {
            Side::Val => EvalSide::Val,
            Side::Test => EvalSide::Test,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage errors exit 2; --help and --version exit 0.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                arga_core::Error::Numeric(_) => 3,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}
