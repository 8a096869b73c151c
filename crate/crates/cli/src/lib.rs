//! The `synattn` command-line tool.
//!
//! Every subcommand computes its whole output in memory and writes it only
//! after all inputs validated, so a failed run leaves no partial files.

mod commands;
mod config;
mod error;
mod input;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

pub use config::{RunConfig, ToyConfig};
pub use error::{exit, CliError, CliResult};
pub use input::TreeFormat;

#[derive(Debug, Parser)]
#[command(
    name = "synattn",
    version,
    about = "Syntax-tree attention masks, attention maps, probes and toy ablations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse CoNLL-U or bracketed trees into canonical tree JSON.
    Parse(ParseArgs),
    /// Build the sub-network masks of one sentence or sentence pair.
    Masks(MasksArgs),
    /// Run one syntax block and dump its attention maps as JSON.
    Attend(AttendArgs),
    /// Train a structural probe and report UUAS and Spearman.
    Probe(ProbeArgs),
    /// Train toy-task models under several mask sources.
    Toytrain(ToytrainArgs),
    /// Time dense against sparse masked attention.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the result here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TreeSelection {
    /// Tree files (`-` for stdin). The k-th tree of each file is sentence k.
    pub inputs: Vec<PathBuf>,
    /// Tree format; guessed from the file extension when absent.
    #[arg(long, value_enum)]
    pub format: Option<TreeFormat>,
    /// 1-based sentence to use.
    #[arg(long, default_value_t = 1)]
    pub sentence: usize,
    /// Use sentences k and k+1 as a pair.
    #[arg(long)]
    pub pair: bool,
    #[arg(long)]
    pub max_dist: Option<usize>,
    /// Comma-separated tree kinds, in mask-set order.
    #[arg(long, value_delimiter = ',')]
    pub kinds: Option<Vec<String>>,
    /// Leave the diagonal out of every mask.
    #[arg(long)]
    pub no_self_loops: bool,
    /// Exclude ancestor/descendant pairs from sibling masks.
    #[arg(long)]
    pub strict_sibling: bool,
    /// Drop masks with no off-diagonal entries.
    #[arg(long)]
    pub prune_empty: bool,
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    #[arg(long, value_enum)]
    pub format: TreeFormat,
    /// Input file, `-` for stdin.
    #[arg(default_value = "-")]
    pub input: PathBuf,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MasksArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub trees: TreeSelection,
}

#[derive(Debug, Args)]
pub struct AttendArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub trees: TreeSelection,
    /// Parameter checkpoint; parameters are initialized from the seed when absent.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Token embeddings (JSON, one n × d_model array per sentence); random when absent.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Dump one head instead of the head average.
    #[arg(long)]
    pub head: Option<usize>,
    /// additive or multiplicative.
    #[arg(long)]
    pub masking: Option<String>,
    /// Also write the parameters used to this checkpoint file.
    #[arg(long)]
    pub save_params: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Token embeddings, one n × d array per sentence.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Dependency trees aligned with the embeddings.
    #[arg(long)]
    pub trees: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<TreeFormat>,
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ToytrainArgs {
    #[command(flatten)]
    pub common: Common,
    /// `root_distance_parity` or `within_k_of_root:K`.
    #[arg(long)]
    pub task: Option<String>,
    /// Comma-separated mask sources (syntax, random, full).
    #[arg(long, value_delimiter = ',')]
    pub modes: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub dataset_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    /// Fraction of allowed pairs, in (0, 1].
    #[arg(long, default_value_t = 0.05)]
    pub density: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Timed repetitions per path; the minimum is reported.
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
}

fn command() -> clap::Command {
    let defaults = format!(
        "Configuration keys and defaults (--config FILE):\n{}",
        RunConfig::defaults_json()
    );
    Cli::command().after_long_help(defaults)
}

/// Runs the tool on `args` (including the program name) and returns the
/// exit code.
pub fn run(
    args: impl IntoIterator<Item = impl Into<OsString> + Clone>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return exit::USAGE;
        }
    };
    match commands::dispatch(cli.command, stdout, stderr) {
        Ok(()) => exit::OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.code
        }
    }
}
