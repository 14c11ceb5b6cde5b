//! `hpfold`: train, enumerate, benchmark and export conformations.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 runtime failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

#[derive(Parser)]
#[command(name = "hpfold", version, about = "HP-model lattice folding with deep Q-learning")]
struct Cli {
    /// Worker threads for enumeration and benchmark trials.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent (or run the random baseline) on one sequence.
    Train(TrainArgs),
    /// Random-search baseline: `train` with the mode fixed to rand.
    Baseline(TrainArgs),
    /// Exhaustive enumeration of complete walks.
    Enumerate(EnumerateArgs),
    /// Run benchmark entries over modes and seeds.
    Bench(BenchArgs),
    /// Moving-minimum curves and seed bands from stored training curves.
    Plotdata(PlotArgs),
    /// Build, check and export the conformation database.
    Confdb(ConfdbArgs),
}

#[derive(Args, Clone)]
pub struct TrainArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Raw H/P sequence.
    #[arg(long)]
    seq: Option<String>,
    #[arg(long)]
    benchmark_id: Option<String>,
    #[arg(long)]
    episodes: Option<usize>,
    /// One or more seeds (comma separated); one trial each.
    #[arg(long, value_delimiter = ',')]
    seed: Vec<u64>,
    #[arg(long, value_parser = ["drl", "rand"])]
    mode: Option<String>,
    /// lstm2x256, lstm3x512, fcn, or lstm<L>x<H> / fcn<L>x<H>.
    #[arg(long)]
    arch: Option<String>,
    /// Enable the forward-run and futile-branch pruning heuristics.
    #[arg(long)]
    prune_heuristics: bool,
    /// Pay the partial energy on trapped walks instead of 0.
    #[arg(long)]
    reward_trapped: bool,
    #[arg(long)]
    checkpoint_every: Option<usize>,
    /// Continue a trial from a checkpoint file.
    #[arg(long, conflicts_with_all = ["config", "seq", "benchmark_id", "episodes", "seed", "mode", "arch"])]
    resume: Option<PathBuf>,
    /// Output root; defaults to $HPFOLD_OUT, then ./runs.
    #[arg(long, env = "HPFOLD_OUT")]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct EnumerateArgs {
    #[arg(long, conflicts_with = "n")]
    seq: Option<String>,
    #[arg(long, conflicts_with_all = ["seq", "n"])]
    benchmark_id: Option<String>,
    /// Chain length (walk counting only).
    #[arg(long)]
    n: Option<usize>,
    /// Compare walk counts against the known values.
    #[arg(long)]
    verify_counts: bool,
    /// With --verify-counts and no --n: include the 24-mer count.
    #[arg(long)]
    include_heavy: bool,
    /// Keep up to --cap optimal action strings.
    #[arg(long)]
    collect: bool,
    #[arg(long, default_value_t = 1000)]
    cap: usize,
    /// Lift the default length bound.
    #[arg(long)]
    allow_large: bool,
    /// Write every complete walk with its score as JSON lines.
    #[arg(long)]
    landscape: Option<PathBuf>,
}

#[derive(Args)]
pub struct BenchArgs {
    /// JSON suite configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    entries: Vec<String>,
    #[arg(long, value_delimiter = ',', value_parser = ["drl", "rand"])]
    modes: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long)]
    episodes_override: Option<usize>,
    #[arg(long)]
    arch: Option<String>,
    #[arg(long)]
    prune_heuristics: bool,
    #[arg(long)]
    reward_trapped: bool,
    #[arg(long, env = "HPFOLD_OUT")]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct PlotArgs {
    /// A trial directory or a directory of trial directories.
    #[arg(long)]
    curves: PathBuf,
    #[arg(long, default_value_t = 200)]
    window: usize,
    /// Destination; defaults to <curves>/plotdata.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ConfdbArgs {
    /// best.jsonl files, trial directories, or suite directories.
    #[arg(long, num_args = 1..)]
    import: Vec<PathBuf>,
    /// Previously exported records.jsonl files to merge.
    #[arg(long, num_args = 1..)]
    records: Vec<PathBuf>,
    #[arg(long)]
    export: Option<PathBuf>,
    /// Print database statistics as JSON.
    #[arg(long)]
    stats: bool,
    /// Write one SVG drawing per conformation into the export directory.
    #[arg(long, requires = "export")]
    draw: bool,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Usage>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<hpfold::Error>() {
            return if e.is_config() { 2 } else { 3 };
        }
    }
    3
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = cli
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        eprintln!("error: --workers must be at least 1");
        return ExitCode::from(2);
    }
    // Ignored if a pool already exists; only fails in that case.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();

    let result = match cli.command {
        Command::Train(a) => commands::train(a, None, workers),
        Command::Baseline(a) => commands::train(a, Some(hpfold::dqn::Mode::Rand), workers),
        Command::Enumerate(a) => commands::enumerate(a),
        Command::Bench(a) => commands::bench(a, workers),
        Command::Plotdata(a) => commands::plotdata(a),
        Command::Confdb(a) => commands::confdb(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
