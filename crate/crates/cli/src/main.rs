//! `streamsubiso`: replay an update stream against pattern queries.
//!
//! Exit status: 0 on success, 1 for unreadable or malformed input files,
//! 2 for stream constraint violations, 3 when `--oracle-check` finds a
//! mismatch.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use streamsubiso::gen::{self, QueryGenConfig, StreamGenConfig};
use streamsubiso::stream::replay::{self, Batching, RunConfig, RunError, StatsRow};
use streamsubiso::stream::wire::{format_record, format_result, parse_stream};
use streamsubiso::{dsl, AdaptMode, QueryGraph, StreamUpdate};

#[derive(Parser)]
#[command(name = "streamsubiso", version, about = "Continuous subgraph matching over edge streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a stream and print every match as it completes.
    Run(RunArgs),
    /// Print the matches present as of a timestamp, found from scratch.
    Backfill(BackfillArgs),
    /// Write a random stream (and optionally random queries).
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Gates {
    Off,
    Auto,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Adapt {
    Off,
    Advisory,
    Auto,
}

#[derive(Args)]
struct Inputs {
    #[arg(long, value_name = "FILE")]
    queries: PathBuf,
    #[arg(long, value_name = "FILE")]
    stream: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Batch boundary after every N updates.
    #[arg(long, value_name = "N", conflicts_with = "epoch", value_parser = clap::value_parser!(u64).range(1..))]
    batch_size: Option<u64>,
    /// Batch boundary whenever floor(timestamp / T) changes.
    #[arg(long, value_name = "T", value_parser = clap::value_parser!(u64).range(1..))]
    epoch: Option<u64>,
    #[arg(long, value_enum, default_value = "on")]
    ordered_pruning: Toggle,
    #[arg(long, value_enum, default_value = "off")]
    gates: Gates,
    #[arg(long, value_enum, default_value = "off")]
    adapt: Adapt,
    /// Quantile of observed gaps used by --adapt.
    #[arg(long, value_name = "Q", default_value_t = 0.95)]
    adapt_quantile: f64,
    #[arg(long, value_enum, default_value = "on")]
    dedup: Toggle,
    /// Time units an update may arrive behind the newest one.
    #[arg(long, value_name = "K", default_value_t = 0)]
    reorder_slack: u64,
    /// Compare emissions against a from-scratch search of the final graph.
    #[arg(long)]
    oracle_check: bool,
    /// Write tab-separated counters per batch.
    #[arg(long, value_name = "FILE")]
    stats_out: Option<PathBuf>,
}

#[derive(Args)]
struct BackfillArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, value_name = "T")]
    as_of: u64,
}

#[derive(Args)]
struct GenerateArgs {
    /// Defaults to $STREAMSUBISO_SEED, else 0.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 50)]
    vertices: usize,
    #[arg(long, default_value_t = 200)]
    updates: usize,
    #[arg(long, default_value_t = 4)]
    labels: usize,
    #[arg(long, default_value_t = 2)]
    edge_types: usize,
    #[arg(long, default_value_t = 2)]
    max_step: u64,
    #[arg(long, default_value_t = 0.0)]
    delete_prob: f64,
    /// Also write this many random queries to --queries-out.
    #[arg(long, default_value_t = 0, requires = "queries_out")]
    queries: usize,
    #[arg(long, value_name = "FILE")]
    queries_out: Option<PathBuf>,
}

/// A failure with its exit status already decided.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::input(format!("{e:#}"))
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    String::from_utf8(bytes).map_err(|e| {
        let prefix = &e.as_bytes()[..e.utf8_error().valid_up_to()];
        let line = prefix.iter().filter(|&&b| b == b'\n').count() + 1;
        let column = prefix.iter().rev().take_while(|&&b| b != b'\n').count() + 1;
        Failure::input(format!("{}:{line}:{column}: invalid UTF-8", path.display()))
    })
}

fn load(inputs: &Inputs) -> Result<(Vec<QueryGraph>, Vec<(usize, StreamUpdate)>), Failure> {
    let text = read(&inputs.queries)?;
    let queries =
        dsl::parse_queries(&text).map_err(|e| Failure::input(format!("{}:{e}", inputs.queries.display())))?;
    let text = read(&inputs.stream)?;
    let updates = parse_stream(&text).map_err(|e| Failure::input(format!("{}:{e}", inputs.stream.display())))?;
    Ok((queries, updates))
}

fn stream_failure(path: &Path, e: RunError) -> Failure {
    match e {
        RunError::Stream { line, source } => Failure {
            code: 2,
            message: format!("{}:{line}: {source}", path.display()),
        },
        other => Failure::input(other.to_string()),
    }
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let (queries, updates) = load(&args.inputs)?;
    let cfg = RunConfig {
        batching: match (args.batch_size, args.epoch) {
            (Some(n), _) => Batching::Size(n),
            (None, Some(t)) => Batching::Epoch(t),
            (None, None) => Batching::Whole,
        },
        ordered_pruning: args.ordered_pruning == Toggle::On,
        gates: args.gates == Gates::Auto,
        adapt: match args.adapt {
            Adapt::Off => None,
            Adapt::Advisory => Some(AdaptMode::Advisory),
            Adapt::Auto => Some(AdaptMode::Auto),
        },
        adapt_quantile: args.adapt_quantile,
        dedup: args.dedup == Toggle::On,
        reorder_slack: args.reorder_slack,
        oracle_check: args.oracle_check,
    };
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let result = replay::run(&queries, &updates, &cfg, &mut out);
    out.flush().context("writing results")?;
    let summary = result.map_err(|e| stream_failure(&args.inputs.stream, e))?;
    for line in &summary.adaptations {
        eprintln!("{line}");
    }
    if let Some(path) = &args.stats_out {
        let mut text = format!("{}\n", StatsRow::HEADER);
        for row in &summary.stats {
            text.push_str(&row.to_line());
            text.push('\n');
        }
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(report) = &summary.oracle {
        if !report.is_clean() {
            let mut message = format!(
                "oracle mismatch: {} missing, {} unexpected",
                report.missing.len(),
                report.unexpected.len()
            );
            for e in &report.missing {
                message.push_str(&format!("\n  missing\t{}", format_result(e, 0)));
            }
            for e in &report.unexpected {
                message.push_str(&format!("\n  unexpected\t{}", format_result(e, 0)));
            }
            return Err(Failure { code: 3, message });
        }
    }
    Ok(())
}

fn backfill(args: BackfillArgs) -> Result<(), Failure> {
    let (queries, updates) = load(&args.inputs)?;
    let found = replay::backfill(&queries, &updates, args.as_of).map_err(|e| stream_failure(&args.inputs.stream, e))?;
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    for e in &found {
        writeln!(out, "{}", format_result(e, 0)).context("writing results")?;
    }
    out.flush().context("writing results")?;
    Ok(())
}

fn generate(args: GenerateArgs) -> Result<(), Failure> {
    let seed = args.seed.unwrap_or_else(|| gen::seed_from_env(0));
    let mut rng = gen::rng(seed);
    let cfg = StreamGenConfig {
        vertices: args.vertices.max(2),
        updates: args.updates,
        labels: args.labels,
        edge_types: args.edge_types,
        max_step: args.max_step,
        delete_prob: args.delete_prob,
        ..StreamGenConfig::default()
    };
    let qcfg = QueryGenConfig {
        labels: args.labels,
        edge_types: args.edge_types,
        ..QueryGenConfig::default()
    };
    if let Some(path) = &args.queries_out {
        let text: String = (0..args.queries)
            .map(|i| dsl::unparse(&gen::random_query(&mut rng, &format!("q{i}"), &qcfg)))
            .collect::<Vec<_>>()
            .join("\n");
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    for u in gen::random_stream(&mut rng, &cfg) {
        writeln!(out, "{}", format_record(&u)).context("writing stream")?;
    }
    out.flush().context("writing stream")?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Backfill(a) => backfill(a),
        Command::Generate(a) => generate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("streamsubiso: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
