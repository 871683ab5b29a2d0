//! `cthge` command-line front end.
//!
//! Every subcommand resolves defaults, an optional `--config` TOML file and
//! flags (in that order of precedence) into one [`RunConfig`], writes it to
//! `<out>/config.lock`, and produces its artifacts from that value alone.
//! Re-running with `--config <out>/config.lock` reproduces the outputs.

mod commands;
pub mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cthge::cthge::Tau;
use cthge::{Error, Result};
use log::warn;

pub use config::{RunConfig, LOCK_FILE};

pub const THREADS_ENV: &str = "CTHGE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "cthge", version, about = "Cross-type homophily measurement and graph editing")]
pub struct Cli {
    /// Seed for every random choice of the run.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// TOML run configuration, e.g. a previous `config.lock`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (overrides CTHGE_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cross-type homophily ratio of a graph.
    Chr {
        #[command(subcommand)]
        action: ChrCommand,
    },
    /// Prune and refine cross-type edges, writing the edited graph.
    Edit(EditArgs),
    /// CHR sweep on synthetic graphs, optionally comparing against the editor.
    Bench(BenchArgs),
    /// Complexity lower-bound sweep.
    Theory {
        #[command(subcommand)]
        action: TheoryCommand,
    },
    /// Synthetic graph generation.
    Synth {
        #[command(subcommand)]
        action: SynthCommand,
    },
    /// Node-classification evaluation.
    Eval {
        #[command(subcommand)]
        action: EvalCommand,
    },
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Directory with nodes.tsv and edges.tsv.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Name of the target node type.
    #[arg(long)]
    pub target: Option<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub fine_tune_epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub hidden: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum ChrCommand {
    /// Compute CHR and per-edge similarities.
    Report {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        train: TrainArgs,
        /// `train` (fit a model), `none` (uniform rows), or a logits TSV.
        #[arg(long)]
        logits: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct EditArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    /// Pruning threshold in [0, 1], or `auto` to search the grid.
    #[arg(long)]
    pub tau: Option<Tau>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub offset: Option<f64>,
    #[arg(long)]
    pub iters: Option<usize>,
    /// Skip the before/after F1 comparison.
    #[arg(long)]
    pub no_eval: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub train: TrainArgs,
    /// Target CHR values, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub chr_grid: Option<Vec<f64>>,
    /// Number of seeds per grid point.
    #[arg(long)]
    pub seeds: Option<u64>,
    /// Also edit each graph and compare F1 (adds ARI lines).
    #[arg(long)]
    pub compare: bool,
    /// Pruning threshold used when comparing.
    #[arg(long)]
    pub tau: Option<Tau>,
}

#[derive(Debug, Subcommand)]
pub enum TheoryCommand {
    /// Empirical complexity vs the lower bound over a grid of q_c.
    Sweep {
        #[arg(long)]
        qs: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        qc_grid: Option<Vec<f64>>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        dim: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// Generate a graph from the `[synth]` section of the config.
    Gen {
        #[arg(long)]
        target_chr: Option<f64>,
        #[arg(long)]
        noise: Option<f64>,
    },
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Train and score the built-in model on a graph's test split.
    Run {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long)]
        seeds: Option<u64>,
    },
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl GraphArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(p) = &self.graph {
            cfg.graph.path = Some(p.clone());
        }
        set(&mut cfg.graph.target, self.target.clone());
    }
}

impl TrainArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.train.epochs, self.epochs);
        set(&mut cfg.train.fine_tune_epochs, self.fine_tune_epochs);
        set(&mut cfg.train.learning_rate, self.lr);
        set(&mut cfg.train.weight_decay, self.weight_decay);
        set(&mut cfg.train.hidden_units, self.hidden);
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Chr { .. } => "chr report",
            Command::Edit(_) => "edit",
            Command::Bench(_) => "bench",
            Command::Theory { .. } => "theory sweep",
            Command::Synth { .. } => "synth gen",
            Command::Eval { .. } => "eval run",
        }
    }

    fn apply(&self, cfg: &mut RunConfig) {
        match self {
            Command::Chr {
                action: ChrCommand::Report { graph, train, logits },
            } => {
                graph.apply(cfg);
                train.apply(cfg);
                set(&mut cfg.chr.logits, logits.clone());
            }
            Command::Edit(a) => {
                a.graph.apply(cfg);
                a.train.apply(cfg);
                set(&mut cfg.prune.tau, a.tau);
                set(&mut cfg.refine.alpha, a.alpha);
                set(&mut cfg.refine.gamma, a.gamma);
                set(&mut cfg.refine.offset, a.offset);
                set(&mut cfg.refine.iterations, a.iters);
                if a.no_eval {
                    cfg.edit.evaluate = false;
                }
            }
            Command::Bench(a) => {
                a.train.apply(cfg);
                set(&mut cfg.bench.chr_grid, a.chr_grid.clone());
                set(&mut cfg.bench.seeds, a.seeds);
                set(&mut cfg.prune.tau, a.tau);
                if a.compare {
                    cfg.bench.compare = true;
                }
            }
            Command::Theory {
                action: TheoryCommand::Sweep { qs, qc_grid, samples, dim },
            } => {
                set(&mut cfg.theory.q_s, *qs);
                set(&mut cfg.theory.q_c_grid, qc_grid.clone());
                set(&mut cfg.theory.samples, *samples);
                set(&mut cfg.theory.dim, *dim);
            }
            Command::Synth {
                action: SynthCommand::Gen { target_chr, noise },
            } => {
                set(&mut cfg.synth.target_chr, *target_chr);
                set(&mut cfg.synth.noise_fraction, *noise);
            }
            Command::Eval {
                action: EvalCommand::Run { graph, train, seeds },
            } => {
                graph.apply(cfg);
                train.apply(cfg);
                set(&mut cfg.eval.seeds, *seeds);
            }
        }
    }
}

/// Merges defaults, the config file, the environment and flags.
pub fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let name = cli.command.name();
    if !cfg.command.is_empty() && cfg.command != name {
        warn!("config was written by `{}`; running `{name}`", cfg.command);
    }
    cfg.command = name.to_string();
    set(&mut cfg.seed, cli.seed);
    if let Ok(v) = std::env::var(THREADS_ENV) {
        cfg.threads = v
            .parse()
            .map_err(|_| Error::Config(format!("{THREADS_ENV}={v} is not a thread count")))?;
    }
    set(&mut cfg.threads, cli.threads);
    cli.command.apply(&mut cfg);
    cfg.finalize()?;
    Ok(cfg)
}

/// Runs a parsed command line; errors are logged and mapped to exit codes
/// (0 success, 1 pipeline failure, 2 usage or configuration error).
pub fn main_with(cli: Cli) -> ExitCode {
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve(cli)?;
    let out = cli
        .out
        .clone()
        .ok_or_else(|| Error::Config("--out <dir> is required".into()))?;
    if cfg.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global() {
            warn!("thread pool already configured: {e}");
        }
    }
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    commands::write(&out.join(LOCK_FILE), &cfg.to_toml()?)?;
    match &cli.command {
        Command::Chr { .. } => commands::chr_report(&cfg, &out),
        Command::Edit(_) => commands::edit(&cfg, &out),
        Command::Bench(_) => commands::bench(&cfg, &out),
        Command::Theory { .. } => commands::theory_sweep(&cfg, &out),
        Command::Synth { .. } => commands::synth_gen(&cfg, &out),
        Command::Eval { .. } => commands::eval_run(&cfg, &out),
    }
}
