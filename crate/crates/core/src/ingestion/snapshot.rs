use std::fs;
use std::path::Path;

use serde::Serialize;

use super::{FetchSnapshot, SnapshotInvariantError};
use crate::fsutil::write_atomic;

pub const SNAPSHOT_SCHEMA_VERSION: u64 = 1;

#[derive(Debug, thiserror::Error)]
pub enum SnapshotError {
    #[error("snapshot I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("snapshot parse error at `{field}`: {message}")]
    Parse { field: String, message: String },
    #[error(
        "snapshot schema_version {found:?} is not supported (expected {SNAPSHOT_SCHEMA_VERSION})"
    )]
    Version { found: Option<serde_json::Value> },
    #[error("snapshot violates invariants: {0}")]
    Invariant(#[from] SnapshotInvariantError),
}

#[derive(Serialize)]
struct Document<'a> {
    schema_version: u64,
    #[serde(flatten)]
    snapshot: &'a FetchSnapshot,
}

/// Serializes a snapshot to its JSON document form.
pub fn snapshot_to_json(snapshot: &FetchSnapshot) -> Vec<u8> {
    let doc = Document {
        schema_version: SNAPSHOT_SCHEMA_VERSION,
        snapshot,
    };
    let mut bytes = serde_json::to_vec_pretty(&doc).expect("snapshot serialization is infallible");
    bytes.push(b'\n');
    bytes
}

/// Parses and validates a snapshot document. The version check runs before the body is decoded.
pub fn snapshot_from_json(bytes: &[u8]) -> Result<FetchSnapshot, SnapshotError> {
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| SnapshotError::Parse {
            field: ".".into(),
            message: e.to_string(),
        })?;
    let version = value.get("schema_version");
    if version.and_then(serde_json::Value::as_u64) != Some(SNAPSHOT_SCHEMA_VERSION) {
        return Err(SnapshotError::Version {
            found: version.cloned(),
        });
    }
    let snapshot: FetchSnapshot =
        serde_path_to_error::deserialize(value).map_err(|e| SnapshotError::Parse {
            field: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    snapshot.validate()?;
    Ok(snapshot)
}

pub fn save_snapshot(snapshot: &FetchSnapshot, path: &Path) -> Result<(), SnapshotError> {
    write_atomic(path, &snapshot_to_json(snapshot)).map_err(|source| SnapshotError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_snapshot(path: &Path) -> Result<FetchSnapshot, SnapshotError> {
    let bytes = fs::read(path).map_err(|source| SnapshotError::Io {
        path: path.display().to_string(),
        source,
    })?;
    snapshot_from_json(&bytes)
}
