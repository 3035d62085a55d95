use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EncodedDataset, EncodedSplit, PreprocessParams, SampleSet};
use crate::fsutil::write_atomic;

pub const DATASET_SCHEMA_VERSION: u64 = 1;
pub const SPLIT_NAMES: [&str; 3] = ["train", "val", "test"];
pub const TARGET_HEADER: [&str; 5] = [
    "pr_id",
    "y_log",
    "y_seconds",
    "elapsed_seconds",
    "deadline_seconds",
];

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("meta.json parse error at `{field}`: {message}")]
    Parse { field: String, message: String },
    #[error(
        "meta.json schema_version {found:?} is not supported (expected {DATASET_SCHEMA_VERSION})"
    )]
    Version { found: Option<serde_json::Value> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipCounts {
    pub single_event: usize,
    pub open: usize,
    pub no_detail: usize,
}

/// Contents of `meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub schema_version: u64,
    pub seed: u64,
    pub padding_id: u32,
    pub max_len: usize,
    pub static_columns: Vec<String>,
    pub rows: SplitCounts,
    pub skipped: SkipCounts,
    pub params: PreprocessParams,
}

impl DatasetMeta {
    pub fn new(dataset: &EncodedDataset, set: &SampleSet, seed: u64) -> Self {
        DatasetMeta {
            schema_version: DATASET_SCHEMA_VERSION,
            seed,
            padding_id: super::ActivityVocab::PADDING_ID,
            max_len: dataset.params.max_len,
            static_columns: dataset.params.static_columns(),
            rows: SplitCounts {
                train: dataset.train.len(),
                val: dataset.val.len(),
                test: dataset.test.len(),
            },
            skipped: SkipCounts {
                single_event: set.skipped_short,
                open: set.skipped_open,
                no_detail: set.skipped_no_detail,
            },
            params: dataset.params.clone(),
        }
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("meta serialization is infallible");
        bytes.push(b'\n');
        bytes
    }
}

fn csv_bytes<R, I>(header: Option<&[String]>, rows: R) -> Result<Vec<u8>, ExportError>
where
    R: IntoIterator<Item = I>,
    I: IntoIterator<Item = String>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .flexible(true)
        .from_writer(Vec::new());
    if let Some(h) = header {
        w.write_record(h)?;
    }
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>())?;
    }
    w.into_inner().map_err(|e| ExportError::Io {
        path: "<buffer>".into(),
        source: e.into_error(),
    })
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), ExportError> {
    write_atomic(path, bytes).map_err(|source| ExportError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn export_split(split: &EncodedSplit, columns: &[String], dir: &Path) -> Result<(), ExportError> {
    let seq = csv_bytes(None, split.seq.iter().map(|r| r.iter().map(u32::to_string)))?;
    write(&dir.join("seq.csv"), &seq)?;
    let dt = csv_bytes(None, split.dt.iter().map(|r| r.iter().map(f64::to_string)))?;
    write(&dir.join("dt.csv"), &dt)?;
    let st = csv_bytes(
        Some(columns),
        split
            .static_matrix
            .iter()
            .map(|r| r.iter().map(f64::to_string)),
    )?;
    write(&dir.join("static.csv"), &st)?;
    let header: Vec<String> = TARGET_HEADER.iter().map(|s| s.to_string()).collect();
    let rows = (0..split.len()).map(|i| {
        vec![
            split.pr_ids[i].to_string(),
            split.y_log[i].to_string(),
            split.y_seconds[i].to_string(),
            split.elapsed_seconds[i].to_string(),
            split.deadline_seconds[i].to_string(),
        ]
    });
    let target = csv_bytes(Some(&header), rows)?;
    write(&dir.join("target.csv"), &target)
}

/// Writes `<dir>/{train,val,test}/{seq,dt,static,target}.csv` and `<dir>/meta.json`.
///
/// `seq.csv` and `dt.csv` are headerless matrices with one row per sample; `static.csv` and
/// `target.csv` carry a header row.
pub fn export_dataset(
    dataset: &EncodedDataset,
    meta: &DatasetMeta,
    dir: &Path,
) -> Result<(), ExportError> {
    let columns = &meta.static_columns;
    for (name, split) in SPLIT_NAMES
        .iter()
        .zip([&dataset.train, &dataset.val, &dataset.test])
    {
        export_split(split, columns, &dir.join(name))?;
    }
    write(&dir.join("meta.json"), &meta.to_json())
}

/// Parses `meta.json`, checking the schema version before the body.
pub fn meta_from_json(bytes: &[u8]) -> Result<DatasetMeta, ExportError> {
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| ExportError::Parse {
            field: ".".into(),
            message: e.to_string(),
        })?;
    let version = value.get("schema_version");
    if version.and_then(serde_json::Value::as_u64) != Some(DATASET_SCHEMA_VERSION) {
        return Err(ExportError::Version {
            found: version.cloned(),
        });
    }
    serde_path_to_error::deserialize(value).map_err(|e| ExportError::Parse {
        field: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

pub fn load_meta(path: &Path) -> Result<DatasetMeta, ExportError> {
    let bytes = fs::read(path).map_err(|source| ExportError::Io {
        path: path.display().to_string(),
        source,
    })?;
    meta_from_json(&bytes)
}
