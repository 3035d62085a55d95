//! Process mining and remaining-time dataset preparation for GitHub pull requests.
//!
//! The crate is organised as a pipeline:
//!
//! 1. [`ingestion`] pulls pull requests, commits and workflow runs from the GitHub REST API
//!    (or a recorded fixture directory) into an immutable [`ingestion::FetchSnapshot`].
//! 2. [`eventlog`] turns a snapshot into a case-keyed event log and exports it as CSV.
//! 3. [`mining`] rebuilds traces, groups variants, computes duration/transition statistics,
//!    DORA metrics, and renders the analysis report.
//! 4. [`features`] truncates traces into prefix samples and encodes the padded, standardized
//!    dataset consumed by the remaining-time model.
//! 5. [`synth`] generates synthetic snapshots with a known remaining-time law.

pub mod config;
pub mod eventlog;
pub mod features;
pub mod fsutil;
pub mod ingestion;
pub mod mining;
pub mod stats;
pub mod synth;
pub mod timestamp;

pub use timestamp::Timestamp;
