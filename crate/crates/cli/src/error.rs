use std::fmt;
use std::path::Path;

use codesight_core::config::ConfigError;
use codesight_core::eventlog::{CsvError, EventLogError, TableError};
use codesight_core::features::{ExportError, FeatureError};
use codesight_core::ingestion::{IngestError, SnapshotError, TransportError};
use codesight_core::synth::SynthError;

/// A failed command, printed as one JSON line on stderr.
#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(kind: &'static str, message: impl Into<String>) -> Self {
        CliError {
            kind,
            message: message.into(),
        }
    }

    pub fn missing_input(path: &Path) -> Self {
        Self::new(
            "missing_input",
            format!("input file not found: {}", path.display()),
        )
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::new("io", format!("{}: {e}", path.display()))
    }

    pub fn to_json_line(&self) -> String {
        serde_json::json!({ "error": { "kind": self.kind, "message": self.message } }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

macro_rules! kind {
    ($($ty:ty => $kind:literal),* $(,)?) => {
        $(impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::new($kind, e.to_string())
            }
        })*
    };
}

kind! {
    ConfigError => "config",
    SnapshotError => "snapshot",
    IngestError => "ingest",
    TransportError => "transport",
    EventLogError => "event_log",
    CsvError => "csv",
    TableError => "table",
    FeatureError => "features",
    ExportError => "export",
    SynthError => "synth",
}
