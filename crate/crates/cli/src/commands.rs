use std::fs::File;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::Path;
use std::time::Duration;

use anyhow::Context;
use log::{info, warn};
use softconform::eval::synthetic::SyntheticStream;
use softconform::eval::{
    correlate_pairs, join_scores, read_metric_csv, read_scores_csv, stress, write_scores_csv,
    EvalError, StressOptions,
};
use softconform::log_io::{read_xes_log, Ordering};
use softconform::model::{write_model_to, ModelFile};
use softconform::stream::{emit_tcp, parse_wire_line, EmitOptions, ListenOptions, TcpEventSource};
use softconform::{
    check_log, count_directly_follows, normalize_counts, prepare_for_conformance, read_csv_log,
    read_model, replay_log, CheckerConfig, CheckerError, CsvLogSchema, EventLog, ModelError,
    NotificationWriter, OnlineChecker, PreparedModel, Rate, ReplayMode, ReplaySchedule,
    StreamEvent, TransitionMatrix, UnknownPolicy,
};

use crate::{
    usage, BenchSource, CmdResult, Failure, LogFormat, LogInput, MonitorSource, SyntheticArgs,
};

fn load_log(path: &Path, input: &LogInput) -> Result<EventLog, Failure> {
    let format = input.format.unwrap_or_else(|| {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
        {
            Some(ext) if ext == "xes" => LogFormat::Xes,
            _ => LogFormat::Csv,
        }
    });
    let log = match format {
        LogFormat::Xes => read_xes_log(path)?,
        LogFormat::Csv => {
            if !input.delimiter.is_ascii() {
                return Err(usage(format!(
                    "delimiter `{}` is not a single ASCII character",
                    input.delimiter
                )));
            }
            let schema = CsvLogSchema {
                case_column: input.case_column.clone(),
                ordering: match &input.timestamp_column {
                    Some(c) => Ordering::TimestampColumn(c.clone()),
                    None => Ordering::FileOrder,
                },
                delimiter: input.delimiter as u8,
                ..CsvLogSchema::default()
            };
            read_csv_log(path, &schema)?
        }
    };
    log::debug!(
        "{}: {} traces, {} events",
        path.display(),
        log.len(),
        log.event_count()
    );
    Ok(log)
}

fn check_alpha(alpha: f64) -> Result<(), Failure> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(usage(ModelError::AlphaOutOfRange(alpha)))
    }
}

fn load_prepared(path: &Path) -> Result<PreparedModel, Failure> {
    match read_model(path)? {
        ModelFile::Prepared(m) => Ok(m),
        ModelFile::Descriptive(_) => Err(usage(format!(
            "{} is not prepared; run `softconform prepare` first",
            path.display()
        ))),
    }
}

fn open_out(out: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_model_out(model: &ModelFile, out: Option<&Path>) -> CmdResult {
    let mut w = open_out(out)?;
    write_model_to(model, &mut w)?;
    w.flush()?;
    Ok(())
}

fn checker(
    model: PreparedModel,
    capacity: usize,
    unknown: UnknownPolicy,
) -> Result<OnlineChecker, Failure> {
    OnlineChecker::new(CheckerConfig::new(model, capacity).with_unknown_policy(unknown)).map_err(
        |e| match e {
            CheckerError::ZeroCapacity => usage(e),
        },
    )
}

pub fn learn(path: &Path, input: &LogInput, out: Option<&Path>, alpha: Option<f64>) -> CmdResult {
    if let Some(a) = alpha {
        check_alpha(a)?;
    }
    let log = load_log(path, input)?;
    let model = normalize_counts(&count_directly_follows(&log, &input.attribute)?);
    info!(
        "{} accomplishments, {} traces, {} events",
        model.index().len(),
        log.len(),
        log.event_count()
    );
    let file: ModelFile = match alpha {
        Some(a) => prepare_for_conformance(&model, a)?.into(),
        None => model.into(),
    };
    write_model_out(&file, out)
}

pub fn prepare(path: &Path, alpha: f64, out: Option<&Path>) -> CmdResult {
    check_alpha(alpha)?;
    let model = match read_model(path)? {
        ModelFile::Descriptive(m) => m,
        ModelFile::Prepared(_) => {
            return Err(usage(format!(
                "{} is already prepared; merging twice is not idempotent",
                path.display()
            )))
        }
    };
    write_model_out(&prepare_for_conformance(&model, alpha)?.into(), out)
}

pub fn check(
    model: &Path,
    log: &Path,
    input: &LogInput,
    unknown: UnknownPolicy,
    out: Option<&Path>,
) -> CmdResult {
    let model = load_prepared(model)?;
    let log = load_log(log, input)?;
    let scores = check_log(&model, &log, &input.attribute, unknown)?;
    let mut w = open_out(out)?;
    write_scores_csv(&scores, &mut w)?;
    w.flush()?;
    Ok(())
}

pub struct MonitorArgs<'a> {
    pub model: &'a Path,
    pub source: &'a MonitorSource,
    pub input: &'a LogInput,
    pub schedule: ReplayMode,
    pub capacity: usize,
    pub unknown: UnknownPolicy,
    pub connections: Option<usize>,
    pub batch: usize,
}

pub fn monitor(args: &MonitorArgs) -> CmdResult {
    let model = load_prepared(args.model)?;
    let alpha = model.alpha();
    let mut checker = checker(model, args.capacity, args.unknown)?;
    let mut out = NotificationWriter::new(io::stdout().lock(), args.batch);
    let mut sink = |ev: &StreamEvent| -> io::Result<()> { out.write(&checker.process_event(ev)) };

    let fed = if let Some(path) = &args.source.replay {
        info!(
            "monitor: replay {} schedule={} m={} alpha={alpha}",
            path.display(),
            args.schedule,
            args.capacity
        );
        let log = load_log(path, args.input)?;
        let events = replay_log(
            &log,
            &args.input.attribute,
            &ReplaySchedule::new(args.schedule),
        )?;
        feed(events, &mut sink)
    } else if let Some(addr) = &args.source.listen {
        let source = TcpEventSource::bind(addr.as_str())?;
        info!(
            "monitor: listening on {} m={} alpha={alpha}",
            source.local_addr()?,
            args.capacity
        );
        let options = ListenOptions {
            max_connections: args.connections,
            ..ListenOptions::default()
        };
        let mut rx = source.events(options)?;
        let r = feed(rx.by_ref(), &mut sink);
        let stats = rx.stats();
        info!(
            "{} connections, {} events, {} malformed lines",
            stats.connections, stats.events, stats.malformed
        );
        r
    } else {
        info!("monitor: stdin m={} alpha={alpha}", args.capacity);
        feed(stdin_events(), &mut sink)
    };
    match fed.and_then(|()| out.finish().map(drop)) {
        Ok(()) => {}
        // a closed pipe downstream just ends the run
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => return Ok(()),
        Err(e) => return Err(e.into()),
    }
    info!(
        "{} events, {} cases open, peak {}, {} evictions",
        checker.events_processed(),
        checker.len(),
        checker.peak_len(),
        checker.evictions()
    );
    Ok(())
}

fn feed<I, F>(events: I, sink: &mut F) -> io::Result<()>
where
    I: IntoIterator<Item = StreamEvent>,
    F: FnMut(&StreamEvent) -> io::Result<()>,
{
    for ev in events {
        sink(&ev)?;
    }
    Ok(())
}

fn stdin_events() -> impl Iterator<Item = StreamEvent> {
    let mut index = 0u64;
    io::stdin()
        .lock()
        .lines()
        .enumerate()
        .filter_map(move |(k, line)| {
            let line = match line {
                Ok(l) => l,
                Err(e) => {
                    warn!("stdin: {e}");
                    return None;
                }
            };
            match parse_wire_line(&line) {
                Ok(Some(w)) => {
                    index += 1;
                    Some(StreamEvent::new(w.case_id, w.accomplishment, index))
                }
                Ok(None) => None,
                Err(e) => {
                    warn!("stdin line {}: {}", k + 1, e.reason);
                    None
                }
            }
        })
}

pub fn emit(
    path: &Path,
    input: &LogInput,
    to: &str,
    rate: Rate,
    schedule: ReplayMode,
) -> CmdResult {
    let log = load_log(path, input)?;
    let mut sched = ReplaySchedule::new(schedule);
    sched.rate = rate;
    let events = replay_log(&log, &input.attribute, &sched)?;
    info!(
        "emit: {} events to {to} schedule={schedule} rate={rate}",
        events.len()
    );
    let opts = EmitOptions {
        rate,
        ..EmitOptions::default()
    };
    let report = emit_tcp(&events, to, &opts)?;
    info!(
        "sent {} events in {:.3}s ({:.1} events/s, {} reconnects)",
        report.sent,
        report.elapsed.as_secs_f64(),
        report.achieved_rate(),
        report.reconnects
    );
    Ok(())
}

pub struct BenchArgs<'a> {
    pub model: &'a Path,
    pub source: &'a BenchSource,
    pub duration: Duration,
    pub capacity: usize,
    pub unknown: UnknownPolicy,
    pub synthetic: &'a SyntheticArgs,
    pub input: &'a LogInput,
    pub schedule: ReplayMode,
    pub out: Option<&'a Path>,
}

pub fn bench(args: &BenchArgs) -> CmdResult {
    if args.capacity == 0 {
        return Err(usage(CheckerError::ZeroCapacity));
    }
    if args.duration.is_zero() {
        return Err(usage("duration must be at least 1 second"));
    }
    let model = load_prepared(args.model)?;
    let opts = StressOptions {
        unknown_policy: args.unknown,
        ..StressOptions::new(args.duration, args.capacity)
    };
    let report = match args.source {
        BenchSource::Synthetic => {
            let s = args.synthetic;
            info!(
                "bench: synthetic concurrency={} max_len={} seed={} m={} duration={}s",
                s.concurrency,
                s.max_len,
                s.seed,
                args.capacity,
                args.duration.as_secs()
            );
            let stream = SyntheticStream::new(model.clone(), s.concurrency, s.max_len, s.seed);
            stress(&model, stream, &opts)?
        }
        BenchSource::Replay(path) => {
            info!(
                "bench: replay {} schedule={} m={}",
                path.display(),
                args.schedule,
                args.capacity
            );
            let log = load_log(path, args.input)?;
            let events = replay_log(
                &log,
                &args.input.attribute,
                &ReplaySchedule::new(args.schedule),
            )?;
            stress(&model, events, &opts)?
        }
        BenchSource::Listen(addr) => {
            let source = TcpEventSource::bind(addr.as_str())?;
            info!(
                "bench: listening on {} m={}",
                source.local_addr()?,
                args.capacity
            );
            stress(&model, source.events(ListenOptions::default())?, &opts)?
        }
    };
    info!("{}", report.summary_line());
    let mut w = open_out(args.out)?;
    report.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn correlate(scores: &Path, metrics: &Path, column: &str) -> CmdResult {
    let scores = read_scores_csv(scores)?;
    let metrics = read_metric_csv(metrics, column).map_err(validation)?;
    let joined = join_scores(&scores, &metrics);
    info!(
        "{} pairs; {} pending, {} scores and {} metrics unmatched",
        joined.pairs.len(),
        joined.pending.len(),
        joined.unmatched_scores.len(),
        joined.unmatched_metrics.len()
    );
    let c = correlate_pairs(&joined.pairs).map_err(validation)?;
    println!("r={} p_value={} n={}", c.r, c.p_value, c.n);
    Ok(())
}

fn validation(e: EvalError) -> Failure {
    match e {
        EvalError::TooFewPairs(_) | EvalError::ZeroVariance | EvalError::MissingColumn(_) => {
            Failure::Usage(e.into())
        }
        other => Failure::Runtime(other.into()),
    }
}
