use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate, SecondsFormat, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A UTC instant with one-second resolution, stored as seconds since the Unix epoch.
///
/// Serialized as an RFC 3339 string with a `Z` suffix (`2025-08-27T10:00:00Z`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Timestamp(pub i64);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid timestamp {raw:?}: {reason}")]
pub struct TimestampError {
    pub raw: String,
    pub reason: String,
}

impl Timestamp {
    pub const fn from_epoch_seconds(secs: i64) -> Self {
        Timestamp(secs)
    }

    pub fn now() -> Self {
        Timestamp(Utc::now().timestamp())
    }

    pub const fn epoch_seconds(self) -> i64 {
        self.0
    }

    /// Parses RFC 3339 (any offset, normalized to UTC). Sub-second parts are truncated.
    pub fn parse_rfc3339(raw: &str) -> Result<Self, TimestampError> {
        DateTime::parse_from_rfc3339(raw.trim())
            .map(|dt| Timestamp(dt.with_timezone(&Utc).timestamp()))
            .map_err(|e| TimestampError {
                raw: raw.to_string(),
                reason: e.to_string(),
            })
    }

    /// Lenient parser used for flat tables: RFC 3339, `YYYY-MM-DD HH:MM:SS` (assumed UTC)
    /// or a bare `YYYY-MM-DD` date.
    pub fn parse_lenient(raw: &str) -> Result<Self, TimestampError> {
        let trimmed = raw.trim();
        if let Ok(ts) = Self::parse_rfc3339(trimmed) {
            return Ok(ts);
        }
        if let Ok(ndt) = chrono::NaiveDateTime::parse_from_str(trimmed, "%Y-%m-%d %H:%M:%S") {
            return Ok(Timestamp(ndt.and_utc().timestamp()));
        }
        if let Ok(date) = NaiveDate::parse_from_str(trimmed, "%Y-%m-%d") {
            if let Some(ndt) = date.and_hms_opt(0, 0, 0) {
                return Ok(Timestamp(ndt.and_utc().timestamp()));
            }
        }
        Err(TimestampError {
            raw: raw.to_string(),
            reason: "expected RFC 3339, 'YYYY-MM-DD HH:MM:SS' or 'YYYY-MM-DD'".into(),
        })
    }

    pub fn to_datetime(self) -> DateTime<Utc> {
        DateTime::from_timestamp(self.0, 0).unwrap_or(DateTime::<Utc>::MIN_UTC)
    }

    /// ISO-8601 UTC with seconds, e.g. `2025-08-27T10:00:00Z`.
    pub fn to_rfc3339(self) -> String {
        self.to_datetime()
            .to_rfc3339_opts(SecondsFormat::Secs, true)
    }

    /// `YYYY-MM` bucket key.
    pub fn month_key(self) -> String {
        let dt = self.to_datetime();
        format!("{:04}-{:02}", dt.year(), dt.month())
    }

    pub fn seconds_until(self, later: Timestamp) -> i64 {
        later.0 - self.0
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_rfc3339())
    }
}

impl FromStr for Timestamp {
    type Err = TimestampError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse_rfc3339(s)
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_rfc3339())
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        Timestamp::parse_rfc3339(&raw).map_err(serde::de::Error::custom)
    }
}
