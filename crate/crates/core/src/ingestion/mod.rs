//! GitHub REST ingestion: pull requests, PR details, PR commits, per-commit file types and
//! workflow runs, captured into an immutable [`FetchSnapshot`].
//!
//! All network access goes through the [`Transport`] trait. [`FixtureTransport`] replays a
//! recorded fixture directory and is what every test runs against; [`HttpTransport`] talks to
//! `api.github.com`.

mod client;
pub mod decode;
mod snapshot;
mod transport;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::Timestamp;

pub use client::{GitHubClient, IngestError, RetryPolicy, DEFAULT_WINDOW, PER_PAGE};
pub use decode::DecodeError;
pub use snapshot::{
    load_snapshot, save_snapshot, snapshot_from_json, snapshot_to_json, SnapshotError,
    SNAPSHOT_SCHEMA_VERSION,
};
pub use transport::{
    ApiResponse, FixtureRecorder, FixtureTransport, HttpTransport, Transport, TransportError,
};

/// Environment variable consulted for the API token.
pub const TOKEN_ENV_VAR: &str = "CODESIGHT_GITHUB_TOKEN";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoRef {
    pub owner: String,
    pub repo: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid repository reference {0:?}: expected non-empty owner/repo without extra '/'")]
pub struct InvalidRepoRef(pub String);

impl RepoRef {
    pub fn new(owner: &str, repo: &str) -> Result<Self, InvalidRepoRef> {
        let valid =
            |s: &str| !s.is_empty() && !s.contains('/') && !s.chars().any(char::is_whitespace);
        if !valid(owner) || !valid(repo) {
            return Err(InvalidRepoRef(format!("{owner}/{repo}")));
        }
        Ok(RepoRef {
            owner: owner.to_string(),
            repo: repo.to_string(),
            branch: None,
        })
    }

    /// Parses `owner/repo`.
    pub fn parse(slug: &str) -> Result<Self, InvalidRepoRef> {
        match slug.split_once('/') {
            Some((owner, repo)) => Self::new(owner, repo).map_err(|_| InvalidRepoRef(slug.into())),
            None => Err(InvalidRepoRef(slug.into())),
        }
    }

    pub fn with_branch(mut self, branch: Option<String>) -> Self {
        self.branch = branch.filter(|b| !b.is_empty());
        self
    }

    pub fn validate(&self) -> Result<(), InvalidRepoRef> {
        Self::new(&self.owner, &self.repo).map(|_| ())
    }
}

impl fmt::Display for RepoRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.owner, self.repo)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrState {
    Open,
    Closed,
}

impl PrState {
    pub fn as_str(self) -> &'static str {
        match self {
            PrState::Open => "open",
            PrState::Closed => "closed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPullRequest {
    pub pr_id: u64,
    pub pr_number: u64,
    pub pr_title: String,
    pub pr_author: String,
    pub from_branch: String,
    pub head_sha: String,
    pub merge_commit_sha: Option<String>,
    pub into_branch: String,
    pub created_at: Timestamp,
    pub merged_at: Option<Timestamp>,
    pub closed_at: Option<Timestamp>,
    pub state: PrState,
    pub is_draft: bool,
    pub assignees: Vec<String>,
    pub reviewers: Vec<String>,
    pub commits_url: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPullRequestDetail {
    pub pr_number: u64,
    pub labels: Vec<String>,
    pub merged_by: Option<String>,
    pub commits: u64,
    pub additions: u64,
    pub deletions: u64,
    pub changed_files: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCommit {
    pub pr_id: u64,
    pub commit_sha: String,
    pub committed_at: Timestamp,
    pub message: String,
    pub author: Option<String>,
    /// Lowercase, dot-prefixed extensions; `<none>` for extensionless files.
    pub filetypes: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawWorkflowRun {
    pub run_id: u64,
    pub run_name: String,
    pub head_sha: String,
    pub event_trigger: String,
    pub status: String,
    pub conclusion: Option<String>,
    pub run_attempt: u32,
    pub run_started_at: Timestamp,
    pub updated_at: Timestamp,
    pub created_at: Timestamp,
    pub actor_trigger: String,
    pub duration_ms: u64,
}

impl RawWorkflowRun {
    /// `updated_at − run_started_at` in milliseconds, floored at zero.
    pub fn compute_duration_ms(run_started_at: Timestamp, updated_at: Timestamp) -> u64 {
        (run_started_at.seconds_until(updated_at).max(0) as u64) * 1000
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchSnapshot {
    pub repo: RepoRef,
    pub fetched_at: Timestamp,
    pub pulls: Vec<RawPullRequest>,
    pub details: Vec<RawPullRequestDetail>,
    pub commits: Vec<RawCommit>,
    pub runs: Vec<RawWorkflowRun>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SnapshotInvariantError {
    #[error(transparent)]
    Repo(#[from] InvalidRepoRef),
    #[error("duplicate pr_id {0}")]
    DuplicatePullRequest(u64),
    #[error("pull request {pr_id}: {field} precedes created_at")]
    TimestampOrder { pr_id: u64, field: &'static str },
    #[error("duplicate commit sha {0}")]
    DuplicateCommit(String),
    #[error("commit {sha} references unknown pr_id {pr_id}")]
    DanglingCommit { sha: String, pr_id: u64 },
    #[error("detail references unknown pr_number {0}")]
    DanglingDetail(u64),
    #[error("commit {sha} has malformed file type {ext:?}")]
    BadExtension { sha: String, ext: String },
    #[error("workflow run {0} has run_attempt 0")]
    BadRunAttempt(u64),
}

impl FetchSnapshot {
    pub fn empty(repo: RepoRef, fetched_at: Timestamp) -> Self {
        FetchSnapshot {
            repo,
            fetched_at,
            pulls: Vec::new(),
            details: Vec::new(),
            commits: Vec::new(),
            runs: Vec::new(),
        }
    }

    /// Checks the referential-closure and per-record invariants.
    pub fn validate(&self) -> Result<(), SnapshotInvariantError> {
        self.repo.validate()?;
        let mut pr_ids = BTreeSet::new();
        let mut pr_numbers = BTreeSet::new();
        for pr in &self.pulls {
            if !pr_ids.insert(pr.pr_id) {
                return Err(SnapshotInvariantError::DuplicatePullRequest(pr.pr_id));
            }
            pr_numbers.insert(pr.pr_number);
            if pr.merged_at.is_some_and(|m| m < pr.created_at) {
                return Err(SnapshotInvariantError::TimestampOrder {
                    pr_id: pr.pr_id,
                    field: "merged_at",
                });
            }
            if pr.closed_at.is_some_and(|c| c < pr.created_at) {
                return Err(SnapshotInvariantError::TimestampOrder {
                    pr_id: pr.pr_id,
                    field: "closed_at",
                });
            }
        }
        let mut shas = BTreeSet::new();
        for commit in &self.commits {
            if !shas.insert(commit.commit_sha.as_str()) {
                return Err(SnapshotInvariantError::DuplicateCommit(
                    commit.commit_sha.clone(),
                ));
            }
            if !pr_ids.contains(&commit.pr_id) {
                return Err(SnapshotInvariantError::DanglingCommit {
                    sha: commit.commit_sha.clone(),
                    pr_id: commit.pr_id,
                });
            }
            if let Some(bad) = commit
                .filetypes
                .iter()
                .find(|e| !is_valid_extension_token(e))
            {
                return Err(SnapshotInvariantError::BadExtension {
                    sha: commit.commit_sha.clone(),
                    ext: bad.clone(),
                });
            }
        }
        for detail in &self.details {
            if !pr_numbers.contains(&detail.pr_number) {
                return Err(SnapshotInvariantError::DanglingDetail(detail.pr_number));
            }
        }
        if let Some(run) = self.runs.iter().find(|r| r.run_attempt == 0) {
            return Err(SnapshotInvariantError::BadRunAttempt(run.run_id));
        }
        Ok(())
    }

    pub fn detail_for(&self, pr_number: u64) -> Option<&RawPullRequestDetail> {
        self.details.iter().find(|d| d.pr_number == pr_number)
    }
}

pub const NO_EXTENSION: &str = "<none>";

/// Maps a repository path to its extension token: lowercase and dot-prefixed, or
/// [`NO_EXTENSION`] when the basename has none (dotfiles included).
pub fn extension_token(filename: &str) -> String {
    let base = filename.rsplit('/').next().unwrap_or(filename);
    match std::path::Path::new(base)
        .extension()
        .and_then(|e| e.to_str())
    {
        Some(ext) if !ext.is_empty() => format!(".{}", ext.to_lowercase()),
        _ => NO_EXTENSION.to_string(),
    }
}

fn is_valid_extension_token(ext: &str) -> bool {
    ext == NO_EXTENSION
        || (ext.len() > 1 && ext.starts_with('.') && ext[1..].chars().all(|c| !c.is_uppercase()))
}
