use std::io::{self, Write};
use std::time::{Duration, Instant};

use crate::checker::{CheckerConfig, CheckerError, OnlineChecker};
use crate::event::StreamEvent;
use crate::model::{PreparedModel, UnknownPolicy};

#[derive(Debug, Clone)]
pub struct StressOptions {
    pub duration: Duration,
    pub capacity: usize,
    pub unknown_policy: UnknownPolicy,
    /// Check `|M| <= capacity` after every `check_every` events; 1 checks them all.
    pub check_every: u64,
}

impl StressOptions {
    pub fn new(duration: Duration, capacity: usize) -> Self {
        Self {
            duration,
            capacity,
            unknown_policy: UnknownPolicy::Zero,
            check_every: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputReport {
    pub events_processed: u64,
    /// Events processed in each 1 s bucket since the start.
    pub events_per_second: Vec<u64>,
    pub peak_case_map_size: usize,
    pub capacity: usize,
    pub elapsed: Duration,
    /// False if any check saw more than `capacity` tracked cases.
    pub bound_respected: bool,
}

impl ThroughputReport {
    pub fn mean_rate(&self) -> f64 {
        let secs = self.elapsed.as_secs_f64();
        if secs > 0.0 {
            self.events_processed as f64 / secs
        } else {
            0.0
        }
    }

    /// Mean events per bucket over the first and the last tenth of the series.
    pub fn decile_rates(&self) -> Option<(f64, f64)> {
        let n = self.events_per_second.len();
        if n == 0 {
            return None;
        }
        let k = n.div_ceil(10);
        let mean = |s: &[u64]| s.iter().sum::<u64>() as f64 / s.len() as f64;
        Some((
            mean(&self.events_per_second[..k]),
            mean(&self.events_per_second[n - k..]),
        ))
    }

    /// CSV `bucket_start_s,events`, then a `#`-prefixed summary line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "bucket_start_s,events")?;
        for (s, n) in self.events_per_second.iter().enumerate() {
            writeln!(out, "{s},{n}")?;
        }
        writeln!(out, "# {}", self.summary_line())
    }

    pub fn summary_line(&self) -> String {
        format!(
            "events_processed={} elapsed_s={:.3} mean_events_per_second={:.1} peak_case_map_size={} capacity={} bound_respected={}",
            self.events_processed,
            self.elapsed.as_secs_f64(),
            self.mean_rate(),
            self.peak_case_map_size,
            self.capacity,
            self.bound_respected
        )
    }
}

/// Feeds `source` through a fresh checker as fast as it yields events, until
/// `duration` elapses or the source is exhausted.
pub fn stress<I>(
    model: &PreparedModel,
    source: I,
    options: &StressOptions,
) -> Result<ThroughputReport, CheckerError>
where
    I: IntoIterator<Item = StreamEvent>,
{
    let config = CheckerConfig::new(model.clone(), options.capacity)
        .with_unknown_policy(options.unknown_policy);
    let mut checker = OnlineChecker::new(config)?;
    let check_every = options.check_every.max(1);
    let buckets = options.duration.as_secs().max(1) as usize;
    let mut series = vec![0u64; buckets];
    let mut bound_respected = true;
    let mut processed = 0u64;
    let start = Instant::now();
    let mut elapsed = Duration::ZERO;

    for ev in source {
        // the clock is read every 64 events
        if processed.is_multiple_of(64) {
            elapsed = start.elapsed();
            if elapsed >= options.duration {
                break;
            }
        }
        let n = checker.process_event(&ev);
        std::hint::black_box(n);
        processed += 1;
        let bucket = (elapsed.as_secs() as usize).min(buckets - 1);
        series[bucket] += 1;
        if processed.is_multiple_of(check_every) && checker.len() > options.capacity {
            bound_respected = false;
        }
    }
    let elapsed = start.elapsed();
    series.truncate((elapsed.as_secs_f64().ceil() as usize).clamp(1, buckets));

    Ok(ThroughputReport {
        events_processed: processed,
        events_per_second: series,
        peak_case_map_size: checker.peak_len(),
        capacity: options.capacity,
        elapsed,
        bound_respected: bound_respected && checker.peak_len() <= options.capacity,
    })
}
