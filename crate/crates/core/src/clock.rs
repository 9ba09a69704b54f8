//! Timestamps in the `YYYY-MM-DD HH:MM:SS.ffffff` style shared by manifests and records.

use std::sync::atomic::{AtomicU64, Ordering};

use chrono::{NaiveDateTime, Utc};

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S%.6f";

pub fn format_timestamp(t: NaiveDateTime) -> String {
    t.format(TIMESTAMP_FORMAT).to_string()
}

pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT).ok()
}

/// Source of presentation timestamps.
pub trait Clock: Send + Sync {
    fn now(&self) -> NaiveDateTime;

    fn timestamp(&self) -> String {
        format_timestamp(self.now())
    }
}

/// Wall-clock time in UTC.
#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> NaiveDateTime {
        Utc::now().naive_utc()
    }
}

/// Deterministic clock that advances by a fixed step on every reading.
#[derive(Debug)]
pub struct SteppingClock {
    start: NaiveDateTime,
    step_micros: i64,
    ticks: AtomicU64,
}

impl SteppingClock {
    pub fn new(start: NaiveDateTime, step_micros: i64) -> Self {
        SteppingClock {
            start,
            step_micros,
            ticks: AtomicU64::new(0),
        }
    }

    /// Starts at 2000-01-01 00:00:00 and ticks one second per reading.
    pub fn epoch() -> Self {
        let start = parse_timestamp("2000-01-01 00:00:00.000000").expect("valid literal");
        SteppingClock::new(start, 1_000_000)
    }
}

impl Clock for SteppingClock {
    fn now(&self) -> NaiveDateTime {
        let n = self.ticks.fetch_add(1, Ordering::SeqCst) as i64;
        self.start + chrono::Duration::microseconds(n * self.step_micros)
    }
}
