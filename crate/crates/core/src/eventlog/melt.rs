//! Wide-to-long conversion of flat tables whose date columns carry the `Fch` prefix.
//!
//! Every non-null date cell becomes one event that duplicates the row's metadata columns.
//! Cells that do not parse as timestamps are reported as rejects and never coerced.

use std::collections::BTreeMap;
use std::io::{self, Read, Write};
use std::path::Path;

use serde::Serialize;

use super::{ActivityTranslator, EventLog, EventLogError, EventRecord, UnknownActivity};
use crate::fsutil::write_atomic;
use crate::Timestamp;

pub const DATE_COLUMN_PREFIX: &str = "Fch";
pub const CASE_COLUMN: &str = "pr_id";

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("table has no `{CASE_COLUMN}` column")]
    MissingCaseColumn,
    #[error("row {row} has {found} cells, header has {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("duplicate column {0:?}")]
    DuplicateColumn(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Activity(#[from] UnknownActivity),
    #[error(transparent)]
    Log(#[from] EventLogError),
}

/// A rectangular table of optional string cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatTable {
    columns: Vec<String>,
    rows: Vec<Vec<Option<String>>>,
}

impl FlatTable {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<Option<String>>>) -> Result<Self, TableError> {
        let mut seen = std::collections::HashSet::new();
        for c in &columns {
            if !seen.insert(c.as_str()) {
                return Err(TableError::DuplicateColumn(c.clone()));
            }
        }
        if let Some((row, r)) = rows
            .iter()
            .enumerate()
            .find(|(_, r)| r.len() != columns.len())
        {
            return Err(TableError::RaggedRow {
                row,
                found: r.len(),
                expected: columns.len(),
            });
        }
        Ok(FlatTable { columns, rows })
    }

    /// Reads a headed CSV; empty cells become nulls.
    pub fn from_csv_reader(reader: impl Read) -> Result<Self, TableError> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
        let columns: Vec<String> = rdr
            .headers()?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record?;
            rows.push(
                record
                    .iter()
                    .map(|c| (!c.is_empty()).then(|| c.to_string()))
                    .collect(),
            );
        }
        FlatTable::new(columns, rows)
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Option<String>>] {
        &self.rows
    }

    pub fn is_date_column(name: &str) -> bool {
        name.starts_with(DATE_COLUMN_PREFIX)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Reject {
    pub pr_id: String,
    pub column: String,
    pub raw_value: String,
    pub reason: String,
}

/// One melted cell: the raw column label is kept until translation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeltedEvent {
    pub pr_id: u64,
    pub raw_activity: String,
    pub date: Timestamp,
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MeltOutput {
    pub events: Vec<MeltedEvent>,
    pub rejects: Vec<Reject>,
}

/// Emits one event per non-null `Fch*` cell, in row-major order.
pub fn melt_date_columns(table: &FlatTable) -> Result<MeltOutput, TableError> {
    let case_col = table
        .columns
        .iter()
        .position(|c| c == CASE_COLUMN)
        .ok_or(TableError::MissingCaseColumn)?;
    let date_cols: Vec<usize> = (0..table.columns.len())
        .filter(|&i| FlatTable::is_date_column(&table.columns[i]))
        .collect();
    let meta_cols: Vec<usize> = (0..table.columns.len())
        .filter(|&i| i != case_col && !FlatTable::is_date_column(&table.columns[i]))
        .collect();

    let mut out = MeltOutput::default();
    for row in &table.rows {
        let raw_id = row[case_col].as_deref().unwrap_or("").trim();
        let Ok(pr_id) = raw_id.parse::<u64>() else {
            out.rejects.push(Reject {
                pr_id: raw_id.to_string(),
                column: CASE_COLUMN.to_string(),
                raw_value: raw_id.to_string(),
                reason: "missing or non-integer case id".into(),
            });
            continue;
        };
        let metadata: BTreeMap<String, String> = meta_cols
            .iter()
            .filter_map(|&i| Some((table.columns[i].clone(), row[i].clone()?)))
            .collect();
        for &col in &date_cols {
            let Some(raw) = row[col].as_deref().filter(|v| !v.trim().is_empty()) else {
                continue;
            };
            match Timestamp::parse_lenient(raw) {
                Ok(date) => out.events.push(MeltedEvent {
                    pr_id,
                    raw_activity: table.columns[col].clone(),
                    date,
                    metadata: metadata.clone(),
                }),
                Err(e) => out.rejects.push(Reject {
                    pr_id: pr_id.to_string(),
                    column: table.columns[col].clone(),
                    raw_value: raw.to_string(),
                    reason: e.reason,
                }),
            }
        }
    }
    Ok(out)
}

/// Melts, translates labels and sorts into an [`EventLog`]. Metadata columns become attributes.
pub fn event_log_from_table(
    table: &FlatTable,
    translator: &ActivityTranslator,
) -> Result<(EventLog, Vec<Reject>), TableError> {
    let MeltOutput { events, rejects } = melt_date_columns(table)?;
    let records = events
        .into_iter()
        .map(|m| {
            Ok(EventRecord {
                pr_id: m.pr_id,
                activity: translator.translate(&m.raw_activity)?,
                date: m.date,
                attributes: m.metadata,
            })
        })
        .collect::<Result<Vec<_>, UnknownActivity>>()?;
    Ok((EventLog::new(records)?, rejects))
}

/// Rejects report as JSON lines `{pr_id, column, raw_value, reason}`.
pub fn write_rejects_jsonl(rejects: &[Reject], mut out: impl Write) -> io::Result<()> {
    for r in rejects {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_rejects(rejects: &[Reject], path: &Path) -> io::Result<()> {
    let mut buf = Vec::new();
    write_rejects_jsonl(rejects, &mut buf)?;
    write_atomic(path, &buf)
}
