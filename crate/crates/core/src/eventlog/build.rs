use std::collections::{BTreeMap, BTreeSet};

use super::{attr, ActivityKind, EventLog, EventLogError, EventRecord};
use crate::ingestion::{FetchSnapshot, RawPullRequest, RawWorkflowRun};

/// Run-to-PR association: `linked[i]` lists the PRs matched by `snapshot.runs[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunLinks {
    pub linked: Vec<Vec<u64>>,
}

/// A run belongs to every PR whose head sha, merge commit sha, or any commit sha equals the
/// run's `head_sha`.
pub fn link_runs(snapshot: &FetchSnapshot) -> RunLinks {
    let mut by_sha: BTreeMap<&str, BTreeSet<u64>> = BTreeMap::new();
    for pr in &snapshot.pulls {
        by_sha
            .entry(pr.head_sha.as_str())
            .or_default()
            .insert(pr.pr_id);
        if let Some(sha) = &pr.merge_commit_sha {
            by_sha.entry(sha.as_str()).or_default().insert(pr.pr_id);
        }
    }
    for c in &snapshot.commits {
        by_sha
            .entry(c.commit_sha.as_str())
            .or_default()
            .insert(c.pr_id);
    }
    RunLinks {
        linked: snapshot
            .runs
            .iter()
            .map(|r| {
                by_sha
                    .get(r.head_sha.as_str())
                    .map(|ids| ids.iter().copied().collect())
                    .unwrap_or_default()
            })
            .collect(),
    }
}

/// Runs that match no pull request. They stay out of the event log but count towards
/// repository-level deployment metrics.
pub fn unlinked_runs(snapshot: &FetchSnapshot) -> Vec<&RawWorkflowRun> {
    let links = link_runs(snapshot);
    snapshot
        .runs
        .iter()
        .zip(&links.linked)
        .filter(|(_, ids)| ids.is_empty())
        .map(|(r, _)| r)
        .collect()
}

fn case_event(pr: &RawPullRequest, activity: ActivityKind, date: crate::Timestamp) -> EventRecord {
    EventRecord::new(pr.pr_id, activity, date)
        .with_attr(attr::PR_NUMBER, pr.pr_number.to_string())
        .with_attr(attr::PR_AUTHOR, pr.pr_author.clone())
        .with_attr(attr::FROM_BRANCH, pr.from_branch.clone())
        .with_attr(attr::INTO_BRANCH, pr.into_branch.clone())
        .with_attr(attr::STATE, pr.state.as_str())
}

pub(crate) fn run_event(pr: &RawPullRequest, run: &RawWorkflowRun) -> EventRecord {
    let mut e = case_event(pr, ActivityKind::WorkflowRun, run.run_started_at)
        .with_attr(attr::RUN_ID, run.run_id.to_string())
        .with_attr(attr::RUN_NAME, run.run_name.clone())
        .with_attr(attr::EVENT_TRIGGER, run.event_trigger.clone())
        .with_attr(attr::RUN_ATTEMPT, run.run_attempt.to_string());
    if let Some(c) = &run.conclusion {
        e = e.with_attr(attr::CONCLUSION, c.clone());
    }
    e
}

/// Builds the unified event log: per PR an opening, its commits, its linked workflow runs
/// (at `run_started_at`), and merge/closure when present.
pub fn build_event_log(snapshot: &FetchSnapshot) -> Result<EventLog, EventLogError> {
    let pulls: BTreeMap<u64, &RawPullRequest> =
        snapshot.pulls.iter().map(|p| (p.pr_id, p)).collect();
    let mut events =
        Vec::with_capacity(snapshot.pulls.len() * 3 + snapshot.commits.len() + snapshot.runs.len());

    for pr in &snapshot.pulls {
        events.push(case_event(pr, ActivityKind::PROpening, pr.created_at));
        if let Some(merged_at) = pr.merged_at {
            let mut e = case_event(pr, ActivityKind::PRMerge, merged_at);
            if let Some(by) = snapshot
                .detail_for(pr.pr_number)
                .and_then(|d| d.merged_by.clone())
            {
                e = e.with_attr(attr::MERGED_BY, by);
            }
            events.push(e);
        }
        if let Some(closed_at) = pr.closed_at {
            events.push(case_event(pr, ActivityKind::PRClosure, closed_at));
        }
    }

    for c in &snapshot.commits {
        let Some(pr) = pulls.get(&c.pr_id) else {
            continue;
        };
        let mut e = case_event(pr, ActivityKind::Commit, c.committed_at)
            .with_attr(attr::COMMIT_SHA, c.commit_sha.clone());
        if let Some(author) = &c.author {
            e = e.with_attr(attr::COMMIT_AUTHOR, author.clone());
        }
        if !c.filetypes.is_empty() {
            let joined: Vec<&str> = c.filetypes.iter().map(String::as_str).collect();
            e = e.with_attr(
                attr::FILETYPES,
                joined.join(&attr::LIST_SEPARATOR.to_string()),
            );
        }
        events.push(e);
    }

    let links = link_runs(snapshot);
    for (run, ids) in snapshot.runs.iter().zip(&links.linked) {
        for id in ids {
            if let Some(pr) = pulls.get(id) {
                events.push(run_event(pr, run));
            }
        }
    }

    EventLog::new(events)
}
