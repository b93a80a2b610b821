//! TCP ingestion and emission of wire-protocol lines.
//!
//! Each accepted connection gets a reader thread; readers parse lines and push
//! them through one bounded channel, so the consumer sees a single, totally
//! ordered stream and a slow consumer blocks producers instead of losing events.

use std::io::{self, BufRead, BufReader, BufWriter, ErrorKind, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, SyncSender};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use super::wire::{is_wire_safe, parse_wire_line, WireEvent};
use super::{Rate, StreamError};
use crate::event::StreamEvent;

const POLL: Duration = Duration::from_millis(5);
const READ_TIMEOUT: Duration = Duration::from_millis(100);
/// Lines a reader forwards per hand-off when input is already buffered.
const READER_BATCH: usize = 512;

#[derive(Debug, Clone)]
pub struct ListenOptions {
    /// Stop accepting after this many connections; the stream ends once they all close.
    pub max_connections: Option<usize>,
    /// Capacity of the hand-off channel, in batches.
    pub channel_capacity: usize,
}

impl Default for ListenOptions {
    fn default() -> Self {
        Self {
            max_connections: None,
            channel_capacity: 64,
        }
    }
}

impl ListenOptions {
    pub fn connections(n: usize) -> Self {
        Self {
            max_connections: Some(n),
            ..Self::default()
        }
    }
}

/// Stops a running listener: no new connections, open readers stop at the next
/// line boundary or read timeout.
#[derive(Debug, Clone, Default)]
pub struct ShutdownHandle(Arc<AtomicBool>);

impl ShutdownHandle {
    pub fn shutdown(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_shutdown(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ListenStats {
    pub events: u64,
    pub malformed: u64,
    pub connections: u64,
}

pub struct TcpEventSource {
    listener: TcpListener,
    shutdown: ShutdownHandle,
}

impl TcpEventSource {
    pub fn bind(addr: impl ToSocketAddrs + std::fmt::Debug) -> Result<Self, StreamError> {
        let label = format!("{addr:?}");
        let listener = TcpListener::bind(addr).map_err(|source| StreamError::Bind {
            addr: label.trim_matches('"').to_string(),
            source,
        })?;
        Ok(Self {
            listener,
            shutdown: ShutdownHandle::default(),
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    pub fn shutdown_handle(&self) -> ShutdownHandle {
        self.shutdown.clone()
    }

    /// Starts accepting and returns the merged event stream.
    pub fn events(self, options: ListenOptions) -> io::Result<EventReceiver> {
        self.listener.set_nonblocking(true)?;
        let (tx, rx) = mpsc::sync_channel(options.channel_capacity.max(1));
        let malformed = Arc::new(AtomicU64::new(0));
        let connections = Arc::new(AtomicU64::new(0));
        let acceptor = {
            let malformed = Arc::clone(&malformed);
            let connections = Arc::clone(&connections);
            let shutdown = self.shutdown.clone();
            let listener = self.listener;
            let max = options.max_connections;
            thread::Builder::new()
                .name("softconform-accept".into())
                .spawn(move || accept_loop(listener, tx, shutdown, max, malformed, connections))?
        };
        Ok(EventReceiver {
            rx,
            batch: Vec::new().into_iter(),
            next_index: 1,
            malformed,
            connections,
            acceptor: Some(acceptor),
            shutdown: self.shutdown,
        })
    }
}

fn accept_loop(
    listener: TcpListener,
    tx: SyncSender<Vec<WireEvent>>,
    shutdown: ShutdownHandle,
    max: Option<usize>,
    malformed: Arc<AtomicU64>,
    connections: Arc<AtomicU64>,
) {
    let mut accepted = 0usize;
    let mut readers = Vec::new();
    while !shutdown.is_shutdown() && max.is_none_or(|m| accepted < m) {
        match listener.accept() {
            Ok((stream, peer)) => {
                accepted += 1;
                connections.fetch_add(1, Ordering::Relaxed);
                log::debug!("producer connected from {peer}");
                let tx = tx.clone();
                let shutdown = shutdown.clone();
                let malformed = Arc::clone(&malformed);
                let spawned = thread::Builder::new()
                    .name(format!("softconform-read-{accepted}"))
                    .spawn(move || read_connection(stream, tx, shutdown, malformed));
                match spawned {
                    Ok(h) => readers.push(h),
                    Err(e) => log::error!("cannot spawn reader for {peer}: {e}"),
                }
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => thread::sleep(POLL),
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => {
                log::error!("accept failed: {e}");
                thread::sleep(POLL);
            }
        }
    }
    drop(tx);
    for r in readers {
        let _ = r.join();
    }
}

fn read_connection(
    stream: TcpStream,
    tx: SyncSender<Vec<WireEvent>>,
    shutdown: ShutdownHandle,
    malformed: Arc<AtomicU64>,
) {
    if stream.set_nonblocking(false).is_err()
        || stream.set_read_timeout(Some(READ_TIMEOUT)).is_err()
    {
        log::error!("cannot configure producer socket");
        return;
    }
    let mut reader = BufReader::with_capacity(64 * 1024, stream);
    let mut line = Vec::new();
    let mut batch = Vec::with_capacity(READER_BATCH);
    loop {
        match reader.read_until(b'\n', &mut line) {
            Ok(0) => break,
            Ok(_) => {
                match std::str::from_utf8(&line) {
                    Ok(text) => match parse_wire_line(text) {
                        Ok(Some(ev)) => batch.push(ev),
                        Ok(None) => {}
                        Err(e) => {
                            malformed.fetch_add(1, Ordering::Relaxed);
                            log::warn!("{e}");
                        }
                    },
                    Err(_) => {
                        malformed.fetch_add(1, Ordering::Relaxed);
                        log::warn!(
                            "malformed line `{}`: not UTF-8",
                            String::from_utf8_lossy(&line).trim()
                        );
                    }
                }
                line.clear();
                if batch.len() >= READER_BATCH || reader.buffer().is_empty() {
                    if !batch.is_empty() && tx.send(std::mem::take(&mut batch)).is_err() {
                        return;
                    }
                    if shutdown.is_shutdown() {
                        return;
                    }
                }
            }
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {
                // partial line bytes stay in `line`
                if !batch.is_empty() && tx.send(std::mem::take(&mut batch)).is_err() {
                    return;
                }
                if shutdown.is_shutdown() {
                    return;
                }
            }
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => {
                log::warn!("producer connection failed: {e}");
                break;
            }
        }
    }
    if !line.is_empty() {
        // final line without a terminating newline
        match std::str::from_utf8(&line).ok().map(parse_wire_line) {
            Some(Ok(Some(ev))) => batch.push(ev),
            Some(Ok(None)) => {}
            _ => {
                malformed.fetch_add(1, Ordering::Relaxed);
                log::warn!(
                    "malformed trailing line `{}`",
                    String::from_utf8_lossy(&line).trim()
                );
            }
        }
    }
    if !batch.is_empty() {
        let _ = tx.send(batch);
    }
}

/// The merged stream of all producers; assigns arrival indices `1, 2, ...`.
///
/// Iteration ends once the listener is shut down (or has accepted its maximum
/// number of connections) and every producer has disconnected.
pub struct EventReceiver {
    rx: Receiver<Vec<WireEvent>>,
    batch: std::vec::IntoIter<WireEvent>,
    next_index: u64,
    malformed: Arc<AtomicU64>,
    connections: Arc<AtomicU64>,
    acceptor: Option<JoinHandle<()>>,
    shutdown: ShutdownHandle,
}

impl EventReceiver {
    pub fn stats(&self) -> ListenStats {
        ListenStats {
            events: self.next_index - 1,
            malformed: self.malformed.load(Ordering::Relaxed),
            connections: self.connections.load(Ordering::Relaxed),
        }
    }

    pub fn shutdown_handle(&self) -> ShutdownHandle {
        self.shutdown.clone()
    }
}

impl Iterator for EventReceiver {
    type Item = StreamEvent;

    fn next(&mut self) -> Option<StreamEvent> {
        loop {
            if let Some(w) = self.batch.next() {
                let ev = StreamEvent {
                    case_id: w.case_id,
                    accomplishment: w.accomplishment,
                    arrival_index: self.next_index,
                };
                self.next_index += 1;
                return Some(ev);
            }
            match self.rx.recv() {
                Ok(batch) => self.batch = batch.into_iter(),
                Err(_) => {
                    if let Some(h) = self.acceptor.take() {
                        let _ = h.join();
                    }
                    return None;
                }
            }
        }
    }
}

impl Drop for EventReceiver {
    fn drop(&mut self) {
        self.shutdown.shutdown();
    }
}

/// Binds, then hands every event to `on_event` until the stream ends.
pub fn listen_tcp<F>(
    addr: impl ToSocketAddrs + std::fmt::Debug,
    options: ListenOptions,
    mut on_event: F,
) -> Result<ListenStats, StreamError>
where
    F: FnMut(StreamEvent),
{
    let source = TcpEventSource::bind(addr)?;
    let mut events = source.events(options)?;
    for ev in events.by_ref() {
        on_event(ev);
    }
    Ok(events.stats())
}

#[derive(Debug, Clone)]
pub struct EmitOptions {
    pub rate: Rate,
    /// Stop after this long even if events remain.
    pub duration: Option<Duration>,
    /// Reconnection attempts after the first failure, per outage.
    pub max_retries: u32,
    pub retry_delay: Duration,
}

impl Default for EmitOptions {
    fn default() -> Self {
        Self {
            rate: Rate::Unthrottled,
            duration: None,
            max_retries: 5,
            retry_delay: Duration::from_millis(200),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmitReport {
    pub sent: u64,
    pub elapsed: Duration,
    pub reconnects: u32,
}

impl EmitReport {
    pub fn achieved_rate(&self) -> f64 {
        let secs = self.elapsed.as_secs_f64();
        if secs > 0.0 {
            self.sent as f64 / secs
        } else {
            0.0
        }
    }
}

fn connect(addr: &str, options: &EmitOptions) -> Result<BufWriter<TcpStream>, StreamError> {
    let mut attempt = 0;
    loop {
        attempt += 1;
        match TcpStream::connect(addr) {
            Ok(s) => {
                let _ = s.set_nodelay(true);
                return Ok(BufWriter::with_capacity(64 * 1024, s));
            }
            Err(source) if attempt > options.max_retries => {
                return Err(StreamError::Connect {
                    addr: addr.to_string(),
                    attempts: attempt,
                    source,
                })
            }
            Err(e) => {
                log::warn!("connect to {addr} failed ({e}); retrying");
                thread::sleep(options.retry_delay);
            }
        }
    }
}

/// Writes events as wire lines to `addr`, pacing them at `options.rate`.
///
/// On a write failure the connection is re-established (bounded retries) and
/// the failed line resent; lines still buffered at the failure may be lost.
pub fn emit_tcp<I, E>(
    events: I,
    addr: &str,
    options: &EmitOptions,
) -> Result<EmitReport, StreamError>
where
    I: IntoIterator<Item = E>,
    E: std::borrow::Borrow<StreamEvent>,
{
    let mut out = connect(addr, options)?;
    let start = Instant::now();
    let mut sent = 0u64;
    let mut reconnects = 0u32;
    let mut line = String::with_capacity(64);
    let interval = match options.rate {
        Rate::PerSecond(r) => Some(1.0 / r),
        Rate::Unthrottled => None,
    };
    for ev in events {
        let ev = ev.borrow();
        if options.duration.is_some_and(|d| start.elapsed() >= d) {
            break;
        }
        for field in [&ev.case_id, &ev.accomplishment] {
            if !is_wire_safe(field) {
                return Err(StreamError::Unsendable {
                    index: ev.arrival_index,
                    field: field.clone(),
                });
            }
        }
        if let Some(step) = interval {
            let due = start + Duration::from_secs_f64(step * sent as f64);
            if let Some(d) = options.duration {
                if due >= start + d {
                    break;
                }
            }
            let now = Instant::now();
            if due > now {
                thread::sleep(due - now);
            }
        }
        line.clear();
        line.push_str(&ev.case_id);
        line.push(',');
        line.push_str(&ev.accomplishment);
        line.push('\n');
        let mut result = out.write_all(line.as_bytes());
        if result.is_ok() && interval.is_some() {
            result = out.flush();
        }
        if let Err(e) = result {
            log::warn!("write to {addr} failed ({e}); reconnecting");
            reconnects += 1;
            out = connect(addr, options)?;
            out.write_all(line.as_bytes())?;
        }
        sent += 1;
    }
    out.flush()?;
    let elapsed = start.elapsed();
    drop(out);
    Ok(EmitReport {
        sent,
        elapsed,
        reconnects,
    })
}
