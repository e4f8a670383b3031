//! Command-line flags and their resolution against config files.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use dualmem_core::{PathChoice, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "dualmem",
    version,
    about = "Entropy-gated dual-path memory retrieval"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a corpus file and report its size and normalization statistics.
    Index(Shared),
    /// Retrieve for every query line; one JSON result per line.
    Query(Shared),
    /// Score retrieval against a gold set.
    Eval(Shared),
    /// Evaluate every cell of a parameter grid.
    Sweep(SweepArgs),
    /// Generate a synthetic corpus, queries and gold set.
    Synth(SynthArgs),
    /// Report per-query familiarity signals and their quartiles.
    GateStats(Shared),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Index(_) => "index",
            Command::Query(_) => "query",
            Command::Eval(_) => "eval",
            Command::Sweep(_) => "sweep",
            Command::Synth(_) => "synth",
            Command::GateStats(_) => "gate-stats",
        }
    }
}

/// Flags accepted by every run command. Unset flags fall back to the config
/// file, then to the built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Shared {
    /// Corpus JSON Lines file.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Query JSON Lines file.
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Gold set JSON file (query id -> relevant ids).
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// `key = value` config file; flags take precedence over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file (`query`) or directory (other commands).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Include the recollection trace and softmax distribution in results.
    #[arg(long)]
    pub trace: bool,
    /// Worker threads for batch retrieval.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Final result count K.
    #[arg(long)]
    pub k: Option<usize>,
    /// Probe depth for the gate (defaults to K).
    #[arg(long)]
    pub probe_k: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta_high: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta_low: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Beam width B.
    #[arg(long)]
    pub beam: Option<usize>,
    /// Fanout F.
    #[arg(long)]
    pub fanout: Option<usize>,
    /// Round limit R.
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Recall cutoffs, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub recall_at: Option<Vec<usize>>,
    /// gated, familiarity or recollection.
    #[arg(long)]
    pub force_path: Option<PathChoice>,
    /// Leave wall-clock timings out of every output so reruns are byte-identical.
    #[arg(long)]
    pub no_timing: bool,
}

impl Shared {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> dualmem_core::Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    cfg.$field = v.clone();
                }
            )*};
        }
        set!(
            k, lambda, theta_high, theta_low, tau, beam, fanout, rounds, alpha, seed, recall_at,
            force_path
        );
        if self.probe_k.is_some() {
            cfg.probe_k = self.probe_k;
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        for (slot, flag) in [
            (&mut cfg.corpus, &self.corpus),
            (&mut cfg.queries, &self.queries),
            (&mut cfg.gold, &self.gold),
            (&mut cfg.out, &self.out),
        ] {
            if flag.is_some() {
                *slot = flag.clone();
            }
        }
        cfg.trace |= self.trace;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub shared: Shared,
    /// Grid file: `axis = v1, v2, ...` for alpha, tau, beam, fanout, lambda, theta_high, theta_low.
    #[arg(long)]
    pub grid: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// `key = value` generator spec; unset keys keep their defaults.
    #[arg(long, alias = "config")]
    pub spec: Option<PathBuf>,
    /// Overrides the spec's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}
