//! Unified, case-keyed event log built from raw snapshots or flat "Fch"-column tables.

mod build;
mod csv_io;
mod melt;
mod translate;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::Timestamp;

pub use build::{build_event_log, link_runs, unlinked_runs, RunLinks};
pub use csv_io::{export_csv, read_csv, write_csv, CsvError, CSV_HEADER};
pub use melt::{
    event_log_from_table, melt_date_columns, save_rejects, write_rejects_jsonl, FlatTable,
    MeltOutput, MeltedEvent, Reject, TableError, CASE_COLUMN, DATE_COLUMN_PREFIX,
};
pub use translate::{ActivityTranslator, UnknownActivity};

/// Attribute keys carried by event records.
pub mod attr {
    pub const COMMIT_AUTHOR: &str = "commit_author";
    pub const COMMIT_SHA: &str = "commit_sha";
    pub const PR_AUTHOR: &str = "pr_author";
    pub const PR_NUMBER: &str = "pr_number";
    pub const MERGED_BY: &str = "merged_by";
    pub const FROM_BRANCH: &str = "from_branch";
    pub const INTO_BRANCH: &str = "into_branch";
    pub const FILETYPES: &str = "filetypes";
    pub const STATE: &str = "state";
    pub const CONCLUSION: &str = "conclusion";
    pub const RUN_ID: &str = "run_id";
    pub const RUN_NAME: &str = "run_name";
    pub const RUN_ATTEMPT: &str = "run_attempt";
    pub const EVENT_TRIGGER: &str = "event_trigger";

    /// Separator used when a set-valued attribute is flattened into a string.
    pub const LIST_SEPARATOR: char = ';';
}

/// The closed activity vocabulary. Declaration order is the same-timestamp tie-break rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActivityKind {
    PROpening,
    Commit,
    WorkflowRun,
    PRMerge,
    PRClosure,
}

impl ActivityKind {
    pub const ALL: [ActivityKind; 5] = [
        ActivityKind::PROpening,
        ActivityKind::Commit,
        ActivityKind::WorkflowRun,
        ActivityKind::PRMerge,
        ActivityKind::PRClosure,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActivityKind::PROpening => "PR Opening",
            ActivityKind::Commit => "Commit",
            ActivityKind::WorkflowRun => "Workflow Run",
            ActivityKind::PRMerge => "PR Merge",
            ActivityKind::PRClosure => "PR Closure",
        }
    }

    /// Whether the activity terminates a pull request's lifecycle.
    pub fn is_terminal(self) -> bool {
        matches!(self, ActivityKind::PRMerge | ActivityKind::PRClosure)
    }
}

impl fmt::Display for ActivityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown activity name {0:?}")]
pub struct UnknownActivityName(pub String);

impl FromStr for ActivityKind {
    type Err = UnknownActivityName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ActivityKind::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| UnknownActivityName(s.to_string()))
    }
}

impl Serialize for ActivityKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ActivityKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub pr_id: u64,
    pub activity: ActivityKind,
    pub date: Timestamp,
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
}

impl EventRecord {
    pub fn new(pr_id: u64, activity: ActivityKind, date: Timestamp) -> Self {
        EventRecord {
            pr_id,
            activity,
            date,
            attributes: BTreeMap::new(),
        }
    }

    pub fn with_attr(mut self, key: &str, value: impl Into<String>) -> Self {
        self.attributes.insert(key.to_string(), value.into());
        self
    }

    pub fn attr(&self, key: &str) -> Option<&str> {
        self.attributes.get(key).map(String::as_str)
    }

    fn sort_key(&self) -> (u64, Timestamp, ActivityKind) {
        (self.pr_id, self.date, self.activity)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EventLogError {
    #[error("case {pr_id} has more than one {activity} event")]
    DuplicateSingleton { pr_id: u64, activity: ActivityKind },
    #[error("event log document: {0}")]
    Document(String),
}

/// Events sorted by `(pr_id, date, activity rank)`; each case occupies a contiguous range.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EventLog {
    events: Vec<EventRecord>,
    case_index: BTreeMap<u64, Range<usize>>,
}

impl EventLog {
    /// Sorts (stably) and indexes `events`, rejecting cases with more than one opening,
    /// merge or closure.
    pub fn new(mut events: Vec<EventRecord>) -> Result<Self, EventLogError> {
        events.sort_by_key(EventRecord::sort_key);
        let mut case_index = BTreeMap::new();
        let mut start = 0;
        while start < events.len() {
            let pr_id = events[start].pr_id;
            let end = start
                + events[start..]
                    .iter()
                    .take_while(|e| e.pr_id == pr_id)
                    .count();
            for singleton in [
                ActivityKind::PROpening,
                ActivityKind::PRMerge,
                ActivityKind::PRClosure,
            ] {
                let n = events[start..end]
                    .iter()
                    .filter(|e| e.activity == singleton)
                    .count();
                if n > 1 {
                    return Err(EventLogError::DuplicateSingleton {
                        pr_id,
                        activity: singleton,
                    });
                }
            }
            case_index.insert(pr_id, start..end);
            start = end;
        }
        Ok(EventLog { events, case_index })
    }

    pub fn events(&self) -> &[EventRecord] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn n_cases(&self) -> usize {
        self.case_index.len()
    }

    pub fn case(&self, pr_id: u64) -> Option<&[EventRecord]> {
        self.case_index.get(&pr_id).map(|r| &self.events[r.clone()])
    }

    pub fn case_positions(&self, pr_id: u64) -> Option<Range<usize>> {
        self.case_index.get(&pr_id).cloned()
    }

    /// Cases in ascending `pr_id` order.
    pub fn cases(&self) -> impl Iterator<Item = (u64, &[EventRecord])> {
        self.case_index
            .iter()
            .map(|(id, r)| (*id, &self.events[r.clone()]))
    }

    pub fn into_events(self) -> Vec<EventRecord> {
        self.events
    }
}

pub const EVENT_LOG_SCHEMA_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
struct EventLogDocument {
    schema_version: u64,
    events: Vec<EventRecord>,
}

impl EventLog {
    /// Full-fidelity JSON artifact (all attributes), consumed by downstream stages.
    pub fn to_json(&self) -> Vec<u8> {
        let doc = EventLogDocument {
            schema_version: EVENT_LOG_SCHEMA_VERSION,
            events: self.events.clone(),
        };
        let mut bytes = serde_json::to_vec(&doc).expect("event log serialization is infallible");
        bytes.push(b'\n');
        bytes
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, EventLogError> {
        let doc: EventLogDocument =
            serde_json::from_slice(bytes).map_err(|e| EventLogError::Document(e.to_string()))?;
        if doc.schema_version != EVENT_LOG_SCHEMA_VERSION {
            return Err(EventLogError::Document(format!(
                "unsupported schema_version {}",
                doc.schema_version
            )));
        }
        EventLog::new(doc.events)
    }
}
