//! Decoders from GitHub REST JSON payloads into raw records.
//!
//! Each decoder takes the raw response body so it can be fuzzed independently of any transport.
//! Errors carry the JSON path of the offending field.

use std::collections::BTreeSet;

use serde::de::DeserializeOwned;
use serde::Deserialize;

use super::{
    extension_token, PrState, RawCommit, RawPullRequest, RawPullRequestDetail, RawWorkflowRun,
};
use crate::Timestamp;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed payload at `{field}`: {message}")]
pub struct DecodeError {
    /// JSON path of the field that failed, `.` for the document root.
    pub field: String,
    pub message: String,
}

impl DecodeError {
    fn at(field: &str, message: impl Into<String>) -> Self {
        DecodeError {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

fn decode<T: DeserializeOwned>(body: &[u8]) -> Result<T, DecodeError> {
    let mut de = serde_json::Deserializer::from_slice(body);
    let value: T = serde_path_to_error::deserialize(&mut de).map_err(|e| DecodeError {
        field: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    de.end().map_err(|e| DecodeError::at(".", e.to_string()))?;
    Ok(value)
}

#[derive(Deserialize)]
struct GhUser {
    login: String,
}

#[derive(Deserialize)]
struct GhRef {
    #[serde(rename = "ref")]
    name: String,
    sha: String,
}

#[derive(Deserialize)]
struct GhPull {
    id: u64,
    number: u64,
    #[serde(default)]
    title: Option<String>,
    user: Option<GhUser>,
    head: GhRef,
    base: GhRef,
    merge_commit_sha: Option<String>,
    created_at: Timestamp,
    merged_at: Option<Timestamp>,
    closed_at: Option<Timestamp>,
    state: PrState,
    #[serde(default)]
    draft: Option<bool>,
    #[serde(default)]
    assignees: Option<Vec<GhUser>>,
    #[serde(default)]
    requested_reviewers: Option<Vec<GhUser>>,
    #[serde(default)]
    commits_url: Option<String>,
}

fn logins(users: Option<Vec<GhUser>>) -> Vec<String> {
    users
        .unwrap_or_default()
        .into_iter()
        .map(|u| u.login)
        .collect()
}

fn convert_pull(index: usize, p: GhPull) -> Result<RawPullRequest, DecodeError> {
    if p.merged_at.is_some_and(|m| m < p.created_at) {
        return Err(DecodeError::at(
            &format!("[{index}].merged_at"),
            "precedes created_at",
        ));
    }
    if p.closed_at.is_some_and(|c| c < p.created_at) {
        return Err(DecodeError::at(
            &format!("[{index}].closed_at"),
            "precedes created_at",
        ));
    }
    Ok(RawPullRequest {
        pr_id: p.id,
        pr_number: p.number,
        pr_title: p.title.unwrap_or_default(),
        // GitHub renders deleted accounts as "ghost".
        pr_author: p.user.map(|u| u.login).unwrap_or_else(|| "ghost".into()),
        from_branch: p.head.name,
        head_sha: p.head.sha,
        merge_commit_sha: p.merge_commit_sha.filter(|s| !s.is_empty()),
        into_branch: p.base.name,
        created_at: p.created_at,
        merged_at: p.merged_at,
        closed_at: p.closed_at,
        state: p.state,
        is_draft: p.draft.unwrap_or(false),
        assignees: logins(p.assignees),
        reviewers: logins(p.requested_reviewers),
        commits_url: p.commits_url.unwrap_or_default(),
    })
}

/// One page of `GET /repos/{owner}/{repo}/pulls`.
pub fn decode_pull_page(body: &[u8]) -> Result<Vec<RawPullRequest>, DecodeError> {
    let raw: Vec<GhPull> = decode(body)?;
    raw.into_iter()
        .enumerate()
        .map(|(i, p)| convert_pull(i, p))
        .collect()
}

#[derive(Deserialize)]
struct GhLabel {
    name: String,
}

#[derive(Deserialize)]
struct GhPullDetail {
    number: u64,
    #[serde(default)]
    labels: Option<Vec<GhLabel>>,
    merged_by: Option<GhUser>,
    commits: u64,
    additions: u64,
    deletions: u64,
    changed_files: u64,
}

/// `GET /repos/{owner}/{repo}/pulls/{pr_number}`.
pub fn decode_pull_detail(body: &[u8]) -> Result<RawPullRequestDetail, DecodeError> {
    let d: GhPullDetail = decode(body)?;
    Ok(RawPullRequestDetail {
        pr_number: d.number,
        labels: d
            .labels
            .unwrap_or_default()
            .into_iter()
            .map(|l| l.name)
            .collect(),
        merged_by: d.merged_by.map(|u| u.login).filter(|l| !l.is_empty()),
        commits: d.commits,
        additions: d.additions,
        deletions: d.deletions,
        changed_files: d.changed_files,
    })
}

#[derive(Deserialize)]
struct GhGitSignature {
    date: Option<Timestamp>,
}

#[derive(Deserialize)]
struct GhGitCommit {
    #[serde(default)]
    message: Option<String>,
    author: Option<GhGitSignature>,
    committer: Option<GhGitSignature>,
}

#[derive(Deserialize)]
struct GhCommitItem {
    sha: String,
    commit: GhGitCommit,
    author: Option<GhUser>,
}

/// One page of `GET /repos/{owner}/{repo}/pulls/{pr_number}/commits`, attributed to `pr_id`.
/// File types are left empty; they come from the per-commit endpoint.
pub fn decode_commit_page(body: &[u8], pr_id: u64) -> Result<Vec<RawCommit>, DecodeError> {
    let raw: Vec<GhCommitItem> = decode(body)?;
    raw.into_iter()
        .enumerate()
        .map(|(i, c)| {
            let committed_at = c
                .commit
                .committer
                .and_then(|s| s.date)
                .or_else(|| c.commit.author.and_then(|s| s.date))
                .ok_or_else(|| {
                    DecodeError::at(
                        &format!("[{i}].commit.committer.date"),
                        "missing commit date",
                    )
                })?;
            Ok(RawCommit {
                pr_id,
                commit_sha: c.sha,
                committed_at,
                message: c.commit.message.unwrap_or_default(),
                author: c.author.map(|u| u.login),
                filetypes: BTreeSet::new(),
            })
        })
        .collect()
}

#[derive(Deserialize)]
struct GhFile {
    filename: String,
}

#[derive(Deserialize)]
struct GhCommitDetail {
    #[serde(default)]
    files: Option<Vec<GhFile>>,
}

/// `GET /repos/{owner}/{repo}/commits/{sha}` reduced to the set of touched extensions.
pub fn decode_commit_files(body: &[u8]) -> Result<BTreeSet<String>, DecodeError> {
    let d: GhCommitDetail = decode(body)?;
    Ok(d.files
        .unwrap_or_default()
        .iter()
        .map(|f| extension_token(&f.filename))
        .collect())
}

#[derive(Deserialize)]
struct GhRun {
    id: u64,
    #[serde(default)]
    name: Option<String>,
    head_sha: String,
    event: String,
    #[serde(default)]
    status: Option<String>,
    conclusion: Option<String>,
    #[serde(default)]
    run_attempt: Option<u32>,
    #[serde(default)]
    run_started_at: Option<Timestamp>,
    updated_at: Timestamp,
    created_at: Timestamp,
    #[serde(default)]
    triggering_actor: Option<GhUser>,
    #[serde(default)]
    actor: Option<GhUser>,
}

#[derive(Deserialize)]
struct GhRunsPage {
    workflow_runs: Vec<GhRun>,
}

/// One page of `GET /repos/{owner}/{repo}/actions/runs`.
pub fn decode_runs_page(body: &[u8]) -> Result<Vec<RawWorkflowRun>, DecodeError> {
    let page: GhRunsPage = decode(body)?;
    page.workflow_runs
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let run_attempt = r.run_attempt.unwrap_or(1);
            if run_attempt == 0 {
                return Err(DecodeError::at(
                    &format!("workflow_runs[{i}].run_attempt"),
                    "must be >= 1",
                ));
            }
            let run_started_at = r.run_started_at.unwrap_or(r.created_at);
            Ok(RawWorkflowRun {
                run_id: r.id,
                run_name: r.name.unwrap_or_default(),
                head_sha: r.head_sha,
                event_trigger: r.event,
                status: r.status.unwrap_or_default(),
                conclusion: r.conclusion.filter(|c| !c.is_empty()),
                run_attempt,
                run_started_at,
                updated_at: r.updated_at,
                created_at: r.created_at,
                actor_trigger: r
                    .triggering_actor
                    .or(r.actor)
                    .map(|u| u.login)
                    .unwrap_or_default(),
                duration_ms: RawWorkflowRun::compute_duration_ms(run_started_at, r.updated_at),
            })
        })
        .collect()
}

#[derive(Deserialize)]
struct GhMessage {
    #[serde(default)]
    message: Option<String>,
}

/// Best-effort extraction of the `message` field of an API error body.
pub fn error_message(body: &[u8]) -> String {
    serde_json::from_slice::<GhMessage>(body)
        .ok()
        .and_then(|m| m.message)
        .unwrap_or_else(|| String::from_utf8_lossy(&body[..body.len().min(200)]).into_owned())
}
