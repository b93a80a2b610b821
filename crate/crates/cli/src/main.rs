//! `softconform`: learn descriptive models and check conformance offline or online.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use softconform::{Rate, ReplayMode, UnknownPolicy};

#[derive(Debug, Parser)]
#[command(
    name = "softconform",
    version,
    about = "Soft conformance checking over event logs and streams"
)]
struct Cli {
    /// Only report errors.
    #[arg(long, global = true)]
    quiet: bool,
    /// error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "info")]
    log_level: log::LevelFilter,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a descriptive model from an event log.
    Learn {
        log: PathBuf,
        #[command(flatten)]
        input: LogInput,
        /// Write the model here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Merge with the flower model before writing.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Merge a descriptive model with the flower model.
    Prepare {
        model: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Final soft conformance of every case of an offline log, as CSV.
    Check {
        model: PathBuf,
        log: PathBuf,
        #[command(flatten)]
        input: LogInput,
        #[arg(long, value_enum, default_value_t = Unknown::Zero)]
        unknown: Unknown,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a live or replayed stream; one notification line per event.
    Monitor {
        model: PathBuf,
        #[command(flatten)]
        source: MonitorSource,
        #[command(flatten)]
        input: LogInput,
        #[arg(long, default_value = "round-robin")]
        schedule: ReplayMode,
        /// Maximum number of cases kept in memory.
        #[arg(long = "m", default_value_t = 1000)]
        capacity: usize,
        #[arg(long, value_enum, default_value_t = Unknown::Zero)]
        unknown: Unknown,
        /// Stop listening after this many connections have closed.
        #[arg(long)]
        connections: Option<usize>,
        /// Flush stdout every this many lines.
        #[arg(long, default_value_t = softconform::checker::DEFAULT_BATCH)]
        batch: usize,
    },
    /// Replay a log as a stream to a remote monitor.
    Emit {
        log: PathBuf,
        #[command(flatten)]
        input: LogInput,
        #[arg(long)]
        to: String,
        /// Events per second, or `unthrottled`.
        #[arg(long, default_value = "unthrottled")]
        rate: Rate,
        #[arg(long, default_value = "round-robin")]
        schedule: ReplayMode,
    },
    /// Throughput stress test; writes the per-second series as CSV.
    Bench {
        model: PathBuf,
        /// `synthetic`, `replay:<log>` or `listen:<addr>`.
        #[arg(long, default_value = "synthetic")]
        source: BenchSource,
        /// Seconds to run.
        #[arg(long, default_value_t = 60)]
        duration: u64,
        #[arg(long = "m", default_value_t = 1000)]
        capacity: usize,
        #[arg(long, value_enum, default_value_t = Unknown::Zero)]
        unknown: Unknown,
        #[command(flatten)]
        synthetic: SyntheticArgs,
        #[command(flatten)]
        input: LogInput,
        #[arg(long, default_value = "round-robin")]
        schedule: ReplayMode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pearson correlation between final scores and an external metric.
    Correlate {
        scores: PathBuf,
        metrics: PathBuf,
        #[arg(long, default_value = "metric")]
        metric_column: String,
    },
}

#[derive(Debug, Args)]
struct LogInput {
    /// Event attribute used as accomplishment.
    #[arg(long, default_value = "name")]
    attribute: String,
    /// Defaults to the file extension (`.xes` or CSV).
    #[arg(long, value_enum)]
    format: Option<LogFormat>,
    #[arg(long, default_value = "case_id")]
    case_column: String,
    /// Sort each trace by this CSV column.
    #[arg(long)]
    timestamp_column: Option<String>,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct MonitorSource {
    /// Accept wire-protocol connections on this address.
    #[arg(long)]
    listen: Option<String>,
    /// Replay an offline log.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Read wire-protocol lines from stdin.
    #[arg(long)]
    stdin: bool,
}

#[derive(Debug, Args)]
struct SyntheticArgs {
    /// Open cases in the synthetic stream.
    #[arg(long, default_value_t = 2000)]
    concurrency: usize,
    #[arg(long, default_value_t = 40)]
    max_len: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LogFormat {
    Csv,
    Xes,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Unknown {
    Zero,
    UniformFloor,
}

impl From<Unknown> for UnknownPolicy {
    fn from(u: Unknown) -> Self {
        match u {
            Unknown::Zero => UnknownPolicy::Zero,
            Unknown::UniformFloor => UnknownPolicy::UniformFloor,
        }
    }
}

#[derive(Debug, Clone)]
enum BenchSource {
    Synthetic,
    Replay(PathBuf),
    Listen(String),
}

impl std::str::FromStr for BenchSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "synthetic" => Ok(BenchSource::Synthetic),
            Some(("replay", path)) if !path.is_empty() => Ok(BenchSource::Replay(path.into())),
            Some(("listen", addr)) if !addr.is_empty() => Ok(BenchSource::Listen(addr.to_string())),
            _ => Err(format!(
                "unknown source `{s}` (synthetic, replay:<log>, listen:<addr>)"
            )),
        }
    }
}

/// Failure classes map to exit codes: bad input is 2, everything else 1.
#[derive(Debug)]
enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.into())
    }
}

type CmdResult = Result<(), Failure>;

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(anyhow::anyhow!("{msg}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet {
        log::LevelFilter::Error
    } else {
        cli.log_level
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .format_target(false)
        .target(env_logger::Target::Stderr)
        .init();

    let result = match cli.command {
        Command::Learn {
            log,
            input,
            out,
            alpha,
        } => commands::learn(&log, &input, out.as_deref(), alpha),
        Command::Prepare { model, alpha, out } => commands::prepare(&model, alpha, out.as_deref()),
        Command::Check {
            model,
            log,
            input,
            unknown,
            out,
        } => commands::check(&model, &log, &input, unknown.into(), out.as_deref()),
        Command::Monitor {
            model,
            source,
            input,
            schedule,
            capacity,
            unknown,
            connections,
            batch,
        } => commands::monitor(&commands::MonitorArgs {
            model: &model,
            source: &source,
            input: &input,
            schedule,
            capacity,
            unknown: unknown.into(),
            connections,
            batch,
        }),
        Command::Emit {
            log,
            input,
            to,
            rate,
            schedule,
        } => commands::emit(&log, &input, &to, rate, schedule),
        Command::Bench {
            model,
            source,
            duration,
            capacity,
            unknown,
            synthetic,
            input,
            schedule,
            out,
        } => commands::bench(&commands::BenchArgs {
            model: &model,
            source: &source,
            duration: Duration::from_secs(duration),
            capacity,
            unknown: unknown.into(),
            synthetic: &synthetic,
            input: &input,
            schedule,
            out: out.as_deref(),
        }),
        Command::Correlate {
            scores,
            metrics,
            metric_column,
        } => commands::correlate(&scores, &metrics, &metric_column),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
