use std::collections::{BTreeSet, HashSet};
use std::thread;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use log::{debug, info, warn};

use super::decode::{self, DecodeError};
use super::transport::{ApiResponse, Transport, TransportError};
use super::{
    FetchSnapshot, RawCommit, RawPullRequest, RawPullRequestDetail, RawWorkflowRun, RepoRef,
    SnapshotInvariantError,
};
use crate::Timestamp;

pub const PER_PAGE: usize = 100;
/// Default number of concurrent per-item requests.
pub const DEFAULT_WINDOW: usize = 4;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("credential error (HTTP {status}): {message}")]
    Credential { status: u16, message: String },
    #[error("rate limit exhausted after {attempts} attempt(s); resets at {}",
        .reset_at.map(|t| t.to_rfc3339()).unwrap_or_else(|| "unknown".into()))]
    RateLimited {
        reset_at: Option<Timestamp>,
        attempts: u32,
    },
    #[error("unknown pull request #{0}")]
    UnknownPullRequest(u64),
    #[error("unknown commit {0}")]
    UnknownCommit(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("decode error from {endpoint}: {source}")]
    Decode {
        endpoint: String,
        #[source]
        source: DecodeError,
    },
    #[error("unexpected HTTP {status} from {path}: {message}")]
    Http {
        status: u16,
        path: String,
        message: String,
    },
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("fetched data violates snapshot invariants: {0}")]
    Invariant(#[from] SnapshotInvariantError),
}

/// Bounded retry with exponential backoff for rate limits and 5xx responses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    /// Longest wait for a rate-limit reset before giving up with [`IngestError::RateLimited`].
    pub max_reset_wait: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            base_delay: Duration::from_secs(1),
            max_reset_wait: Duration::from_secs(15 * 60),
        }
    }
}

impl RetryPolicy {
    /// Three attempts, no sleeping. Used for fixture replay.
    pub fn immediate() -> Self {
        RetryPolicy {
            max_attempts: 3,
            base_delay: Duration::ZERO,
            max_reset_wait: Duration::ZERO,
        }
    }

    fn backoff(&self, attempt: u32) -> Duration {
        self.base_delay * 2u32.saturating_pow(attempt.saturating_sub(1))
    }
}

enum Outcome {
    Ok(Vec<u8>),
    RateLimited {
        reset_at: Option<Timestamp>,
        wait: Option<Duration>,
    },
    Retryable(u16, String),
    Fatal(IngestError),
    NotFound,
}

fn now_epoch() -> i64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs() as i64)
        .unwrap_or(0)
}

fn classify(path: &str, resp: ApiResponse) -> Outcome {
    let reset_at = resp
        .header("x-ratelimit-reset")
        .and_then(|v| v.trim().parse::<i64>().ok())
        .map(Timestamp);
    let retry_after = resp
        .header("retry-after")
        .and_then(|v| v.trim().parse::<u64>().ok())
        .map(Duration::from_secs);
    let exhausted = resp.header("x-ratelimit-remaining").map(str::trim) == Some("0");
    match resp.status {
        200..=299 => Outcome::Ok(resp.body),
        429 => Outcome::RateLimited {
            reset_at,
            wait: retry_after,
        },
        403 if exhausted || retry_after.is_some() => Outcome::RateLimited {
            reset_at,
            wait: retry_after,
        },
        401 | 403 => Outcome::Fatal(IngestError::Credential {
            status: resp.status,
            message: decode::error_message(&resp.body),
        }),
        404 => Outcome::NotFound,
        s @ 500..=599 => Outcome::Retryable(s, decode::error_message(&resp.body)),
        s => Outcome::Fatal(IngestError::Http {
            status: s,
            path: path.to_string(),
            message: decode::error_message(&resp.body),
        }),
    }
}

/// Runs `f` over `items` with at most `window` requests in flight, preserving input order.
fn windowed_map<I, R, F>(items: &[I], window: usize, f: F) -> Result<Vec<R>, IngestError>
where
    I: Sync,
    R: Send,
    F: Fn(&I) -> Result<R, IngestError> + Sync,
{
    let f = &f;
    let mut out = Vec::with_capacity(items.len());
    for chunk in items.chunks(window.max(1)) {
        let results: Vec<Result<R, IngestError>> = thread::scope(|s| {
            let handles: Vec<_> = chunk.iter().map(|item| s.spawn(move || f(item))).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("fetch worker panicked"))
                .collect()
        });
        for r in results {
            out.push(r?);
        }
    }
    Ok(out)
}

pub struct GitHubClient<T> {
    transport: T,
    token: Option<String>,
    retry: RetryPolicy,
    window: usize,
}

impl<T: Transport> GitHubClient<T> {
    pub fn new(transport: T, token: Option<String>) -> Self {
        GitHubClient {
            transport,
            token: token.filter(|t| !t.is_empty()),
            retry: RetryPolicy::default(),
            window: DEFAULT_WINDOW,
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window.max(1);
        self
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    fn get(&self, path: &str) -> Result<Option<Vec<u8>>, IngestError> {
        let mut last_reset = None;
        for attempt in 1..=self.retry.max_attempts {
            let resp = self.transport.get(path, self.token.as_deref())?;
            match classify(path, resp) {
                Outcome::Ok(body) => return Ok(Some(body)),
                Outcome::NotFound => return Ok(None),
                Outcome::Fatal(e) => return Err(e),
                Outcome::Retryable(status, message) => {
                    if attempt == self.retry.max_attempts {
                        return Err(IngestError::Http {
                            status,
                            path: path.to_string(),
                            message,
                        });
                    }
                    warn!("HTTP {status} from {path}, retrying (attempt {attempt})");
                    thread::sleep(self.retry.backoff(attempt));
                }
                Outcome::RateLimited { reset_at, wait } => {
                    last_reset = reset_at;
                    if attempt == self.retry.max_attempts {
                        break;
                    }
                    let until_reset =
                        reset_at.map(|r| Duration::from_secs((r.0 - now_epoch()).max(0) as u64));
                    let wait = wait.or(until_reset).unwrap_or_default();
                    if wait > self.retry.max_reset_wait {
                        return Err(IngestError::RateLimited {
                            reset_at,
                            attempts: attempt,
                        });
                    }
                    let backoff = self.retry.backoff(attempt);
                    warn!("rate limited on {path}; waiting {:?}", wait.max(backoff));
                    thread::sleep(wait.max(backoff));
                }
            }
        }
        Err(IngestError::RateLimited {
            reset_at: last_reset,
            attempts: self.retry.max_attempts,
        })
    }

    fn get_required(&self, path: &str) -> Result<Vec<u8>, IngestError> {
        self.get(path)?
            .ok_or_else(|| IngestError::NotFound(path.to_string()))
    }

    /// Requests `page=1,2,…` until a page comes back shorter than [`PER_PAGE`].
    fn paginate<R>(
        &self,
        base: &str,
        decode: impl Fn(&[u8]) -> Result<Vec<R>, DecodeError>,
    ) -> Result<Vec<R>, IngestError> {
        let sep = if base.contains('?') { '&' } else { '?' };
        let mut out = Vec::new();
        for page in 1.. {
            let path = format!("{base}{sep}per_page={PER_PAGE}&page={page}");
            let body = self.get_required(&path)?;
            let items = decode(&body).map_err(|source| IngestError::Decode {
                endpoint: path.clone(),
                source,
            })?;
            let n = items.len();
            debug!("{path}: {n} records");
            out.extend(items);
            if n < PER_PAGE {
                break;
            }
        }
        Ok(out)
    }

    /// All pull requests (`state=all`), deduplicated by `pr_id`, filtered to the target branch
    /// when `repo.branch` is set.
    pub fn fetch_pull_requests(&self, repo: &RepoRef) -> Result<Vec<RawPullRequest>, IngestError> {
        let base = format!("/repos/{}/{}/pulls?state=all", repo.owner, repo.repo);
        let pulls = self.paginate(&base, decode::decode_pull_page)?;
        let mut seen = HashSet::new();
        Ok(pulls
            .into_iter()
            .filter(|p| seen.insert(p.pr_id))
            .filter(|p| repo.branch.as_ref().is_none_or(|b| &p.into_branch == b))
            .collect())
    }

    pub fn fetch_pull_request_detail(
        &self,
        repo: &RepoRef,
        pr_number: u64,
    ) -> Result<RawPullRequestDetail, IngestError> {
        let path = format!("/repos/{}/{}/pulls/{pr_number}", repo.owner, repo.repo);
        let body = self
            .get(&path)?
            .ok_or(IngestError::UnknownPullRequest(pr_number))?;
        decode::decode_pull_detail(&body).map_err(|source| IngestError::Decode {
            endpoint: path,
            source,
        })
    }

    /// Commits of one PR, ordered by `committed_at` (stable for ties). File types are empty.
    pub fn fetch_pr_commits(
        &self,
        repo: &RepoRef,
        pr_number: u64,
        pr_id: u64,
    ) -> Result<Vec<RawCommit>, IngestError> {
        let base = format!(
            "/repos/{}/{}/pulls/{pr_number}/commits",
            repo.owner, repo.repo
        );
        let mut commits = match self.paginate(&base, |b| decode::decode_commit_page(b, pr_id)) {
            Err(IngestError::NotFound(_)) => {
                return Err(IngestError::UnknownPullRequest(pr_number))
            }
            other => other?,
        };
        commits.sort_by_key(|c| c.committed_at);
        Ok(commits)
    }

    pub fn fetch_commit_filetypes(
        &self,
        repo: &RepoRef,
        commit_sha: &str,
    ) -> Result<BTreeSet<String>, IngestError> {
        let path = format!("/repos/{}/{}/commits/{commit_sha}", repo.owner, repo.repo);
        let body = self
            .get(&path)?
            .ok_or_else(|| IngestError::UnknownCommit(commit_sha.to_string()))?;
        decode::decode_commit_files(&body).map_err(|source| IngestError::Decode {
            endpoint: path,
            source,
        })
    }

    pub fn fetch_workflow_runs(&self, repo: &RepoRef) -> Result<Vec<RawWorkflowRun>, IngestError> {
        let base = format!("/repos/{}/{}/actions/runs", repo.owner, repo.repo);
        let runs = self.paginate(&base, decode::decode_runs_page)?;
        let mut seen = HashSet::new();
        Ok(runs.into_iter().filter(|r| seen.insert(r.run_id)).collect())
    }

    /// Full fetch of one repository into a validated snapshot.
    pub fn fetch_snapshot(
        &self,
        repo: &RepoRef,
        fetched_at: Timestamp,
    ) -> Result<FetchSnapshot, IngestError> {
        repo.validate().map_err(SnapshotInvariantError::from)?;
        let pulls = self.fetch_pull_requests(repo)?;
        info!("{repo}: {} pull requests", pulls.len());

        let details = windowed_map(&pulls, self.window, |p| {
            self.fetch_pull_request_detail(repo, p.pr_number)
        })?;

        let per_pr = windowed_map(&pulls, self.window, |p| {
            self.fetch_pr_commits(repo, p.pr_number, p.pr_id)
        })?;
        // A sha shared by several PRs (stacked branches) is attributed to the first PR only.
        let mut seen = HashSet::new();
        let mut commits: Vec<RawCommit> = per_pr
            .into_iter()
            .flatten()
            .filter(|c| seen.insert(c.commit_sha.clone()))
            .collect();
        info!("{repo}: {} commits", commits.len());

        let filetypes = windowed_map(&commits, self.window, |c| {
            self.fetch_commit_filetypes(repo, &c.commit_sha)
        })?;
        for (commit, types) in commits.iter_mut().zip(filetypes) {
            commit.filetypes = types;
        }

        let runs = self.fetch_workflow_runs(repo)?;
        info!("{repo}: {} workflow runs", runs.len());

        let snapshot = FetchSnapshot {
            repo: repo.clone(),
            fetched_at,
            pulls,
            details,
            commits,
            runs,
        };
        snapshot.validate()?;
        Ok(snapshot)
    }
}
