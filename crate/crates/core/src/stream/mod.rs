//! Event stream sources and sinks: TCP line protocol, log replay.

mod replay;
mod tcp;
mod wire;

use std::fmt;
use std::io;
use std::str::FromStr;

use thiserror::Error;

use crate::event::EventError;

pub use replay::{replay_log, ReplayMode, ReplaySchedule};
pub use tcp::{
    emit_tcp, listen_tcp, EmitOptions, EmitReport, EventReceiver, ListenOptions, ListenStats,
    ShutdownHandle, TcpEventSource,
};
pub use wire::{is_wire_safe, parse_wire_line, MalformedLine, WireEvent};

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: io::Error,
    },
    #[error("cannot reach {addr} after {attempts} attempts: {source}")]
    Connect {
        addr: String,
        attempts: u32,
        #[source]
        source: io::Error,
    },
    #[error("event {index}: field `{field}` cannot be sent on the wire")]
    Unsendable { index: u64, field: String },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Projection(#[from] EventError),
    #[error("invalid rate `{0}`")]
    InvalidRate(String),
    #[error("invalid schedule `{0}` (expected round-robin, sequential or shuffle:<seed>)")]
    InvalidSchedule(String),
}

/// Emission rate in events per second.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Rate {
    #[default]
    Unthrottled,
    PerSecond(f64),
}

impl FromStr for Rate {
    type Err = StreamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "unthrottled" {
            return Ok(Rate::Unthrottled);
        }
        match s.parse::<f64>() {
            Ok(r) if r.is_finite() && r > 0.0 => Ok(Rate::PerSecond(r)),
            _ => Err(StreamError::InvalidRate(s.to_string())),
        }
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rate::Unthrottled => f.write_str("unthrottled"),
            Rate::PerSecond(r) => write!(f, "{r}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_parsing() {
        assert_eq!("unthrottled".parse::<Rate>().unwrap(), Rate::Unthrottled);
        assert_eq!("100".parse::<Rate>().unwrap(), Rate::PerSecond(100.0));
        assert!("0".parse::<Rate>().is_err());
        assert!("fast".parse::<Rate>().is_err());
    }
}
