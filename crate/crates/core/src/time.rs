//! UTC timestamps and half-open time windows.

use chrono::{DateTime, NaiveDateTime, Utc};

use crate::error::{Error, Result};

const ISO_FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

/// Formats a timestamp as ISO-8601 UTC with seconds resolution.
pub fn format_time(t: &DateTime<Utc>) -> String {
    t.format(ISO_FORMAT).to_string()
}

/// Parses `YYYY-MM-DDTHH:MM:SSZ`.
pub fn parse_time(s: &str) -> Option<DateTime<Utc>> {
    NaiveDateTime::parse_from_str(s, ISO_FORMAT)
        .ok()
        .map(|n| n.and_utc())
}

/// The window `(start, end]`. A frame stamped `t` covers the interval ending at `t`,
/// so adjacent windows never share a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeWindow {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl TimeWindow {
    pub fn new(start: DateTime<Utc>, end: DateTime<Utc>) -> Result<Self> {
        if start >= end {
            return Err(Error::EmptyWindow);
        }
        Ok(Self { start, end })
    }

    /// Window of `length_s` seconds ending at `end`.
    pub fn trailing(end: DateTime<Utc>, length_s: i64) -> Result<Self> {
        Self::new(end - chrono::Duration::seconds(length_s), end)
    }

    pub fn contains(&self, t: &DateTime<Utc>) -> bool {
        self.start < *t && *t <= self.end
    }

    pub fn length_s(&self) -> i64 {
        (self.end - self.start).num_seconds()
    }
}
