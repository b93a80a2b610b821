use std::io::{self, BufWriter, Write};

use super::ConformanceNotification;

pub const DEFAULT_BATCH: usize = 100;

/// `<event_index>\t<case_id>\t<score|pending>\t<observations>`, no newline.
pub fn format_notification(n: &ConformanceNotification) -> String {
    format!(
        "{}\t{}\t{}\t{}",
        n.event_index, n.case_id, n.score, n.observations
    )
}

/// Writes one notification line per event and flushes every `batch` lines.
pub struct NotificationWriter<W: Write> {
    out: BufWriter<W>,
    batch: usize,
    unflushed: usize,
    written: u64,
}

impl<W: Write> NotificationWriter<W> {
    pub fn new(out: W, batch: usize) -> Self {
        Self {
            out: BufWriter::with_capacity(64 * 1024, out),
            batch: batch.max(1),
            unflushed: 0,
            written: 0,
        }
    }

    pub fn write(&mut self, n: &ConformanceNotification) -> io::Result<()> {
        writeln!(
            self.out,
            "{}\t{}\t{}\t{}",
            n.event_index, n.case_id, n.score, n.observations
        )?;
        self.written += 1;
        self.unflushed += 1;
        if self.unflushed >= self.batch {
            self.out.flush()?;
            self.unflushed = 0;
        }
        Ok(())
    }

    pub fn lines_written(&self) -> u64 {
        self.written
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        self.out.into_inner().map_err(|e| e.into_error())
    }
}
