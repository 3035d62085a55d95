//! Pull request, contributor, monthly and CI/CD breakdowns.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::Trace;
use crate::eventlog::{attr, ActivityKind, EventLog};
use crate::ingestion::RawPullRequestDetail;
use crate::stats;

const UNKNOWN_USER: &str = "<unknown>";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthorActivity {
    pub pr_count: usize,
    /// Seconds from opening to closure, or to the last event for PRs not yet closed.
    pub mean_lifetime: Option<f64>,
    pub merges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrActivityReport {
    pub prs_created: usize,
    pub prs_merged: usize,
    /// Mean opening→merge gap over merged PRs.
    pub mean_review_time: Option<f64>,
    pub median_review_time: Option<f64>,
    pub per_author: BTreeMap<String, AuthorActivity>,
    /// Merges per merging user, from PR details.
    pub merges_by_merger: BTreeMap<String, usize>,
}

fn lifetime(t: &Trace) -> Option<i64> {
    let open = t.first_of(ActivityKind::PROpening).or(t.start())?;
    let end = t.first_of(ActivityKind::PRClosure).or(t.end())?;
    Some(open.seconds_until(end))
}

fn review_time(t: &Trace) -> Option<i64> {
    let open = t.first_of(ActivityKind::PROpening)?;
    let merge = t.first_of(ActivityKind::PRMerge)?;
    Some(open.seconds_until(merge))
}

pub fn pr_activity_report(traces: &[Trace], details: &[RawPullRequestDetail]) -> PrActivityReport {
    let reviews: Vec<f64> = traces
        .iter()
        .filter_map(review_time)
        .map(|s| s as f64)
        .collect();

    let mut lifetimes: BTreeMap<String, (usize, Vec<f64>, usize)> = BTreeMap::new();
    for t in traces {
        let author = t.attr(attr::PR_AUTHOR).unwrap_or(UNKNOWN_USER).to_string();
        let entry = lifetimes.entry(author).or_default();
        entry.0 += 1;
        if let Some(l) = lifetime(t) {
            entry.1.push(l as f64);
        }
        if t.first_of(ActivityKind::PRMerge).is_some() {
            entry.2 += 1;
        }
    }
    let per_author = lifetimes
        .into_iter()
        .map(|(author, (pr_count, l, merges))| {
            let a = AuthorActivity {
                pr_count,
                mean_lifetime: stats::mean(&l),
                merges,
            };
            (author, a)
        })
        .collect();

    let numbers: BTreeSet<u64> = traces
        .iter()
        .filter_map(|t| t.attr(attr::PR_NUMBER)?.parse().ok())
        .collect();
    let mut merges_by_merger = BTreeMap::new();
    for d in details.iter().filter(|d| numbers.contains(&d.pr_number)) {
        if let Some(m) = &d.merged_by {
            *merges_by_merger.entry(m.clone()).or_insert(0) += 1;
        }
    }

    PrActivityReport {
        prs_created: traces
            .iter()
            .filter(|t| t.first_of(ActivityKind::PROpening).is_some())
            .count(),
        prs_merged: reviews.len(),
        mean_review_time: stats::mean(&reviews),
        median_review_time: stats::median(&reviews),
        per_author,
        merges_by_merger,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserActivity {
    pub prs_opened: usize,
    pub commits: usize,
    pub merges_performed: usize,
}

/// Per-user counts of opened PRs, authored commits and merges performed.
pub fn user_activity(log: &EventLog) -> BTreeMap<String, UserActivity> {
    let mut users: BTreeMap<String, UserActivity> = BTreeMap::new();
    for e in log.events() {
        let (key, field): (Option<&str>, fn(&mut UserActivity)) = match e.activity {
            ActivityKind::PROpening => (e.attr(attr::PR_AUTHOR), |u| u.prs_opened += 1),
            ActivityKind::Commit => (e.attr(attr::COMMIT_AUTHOR), |u| u.commits += 1),
            ActivityKind::PRMerge => match e.attr(attr::MERGED_BY) {
                Some(m) => (Some(m), |u| u.merges_performed += 1),
                None => continue,
            },
            _ => continue,
        };
        field(
            users
                .entry(key.unwrap_or(UNKNOWN_USER).to_string())
                .or_default(),
        );
    }
    users
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MonthlyActivity {
    pub opened: usize,
    pub merged: usize,
    pub closed: usize,
    pub commits: usize,
    /// Mean lifetime of the PRs opened that month.
    pub mean_lifetime: Option<f64>,
}

/// `YYYY-MM` buckets (UTC) of PR lifecycle events.
pub fn temporal_evolution(traces: &[Trace]) -> BTreeMap<String, MonthlyActivity> {
    let mut months: BTreeMap<String, (MonthlyActivity, Vec<f64>)> = BTreeMap::new();
    for t in traces {
        for s in &t.steps {
            let (m, _) = months.entry(s.at.month_key()).or_default();
            match s.activity {
                ActivityKind::PROpening => m.opened += 1,
                ActivityKind::PRMerge => m.merged += 1,
                ActivityKind::PRClosure => m.closed += 1,
                ActivityKind::Commit => m.commits += 1,
                ActivityKind::WorkflowRun => {}
            }
        }
        if let (Some(open), Some(l)) = (t.first_of(ActivityKind::PROpening), lifetime(t)) {
            months.entry(open.month_key()).or_default().1.push(l as f64);
        }
    }
    months
        .into_iter()
        .map(|(k, (mut m, l))| {
            m.mean_lifetime = stats::mean(&l);
            (k, m)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DevelopmentIndicators {
    pub pull_requests: usize,
    pub commits: usize,
    pub workflow_runs: usize,
    pub mean_commits_per_pr: Option<f64>,
    pub target_branches: BTreeMap<String, usize>,
    /// Commits touching each file extension.
    pub filetypes: BTreeMap<String, usize>,
    pub additions: u64,
    pub deletions: u64,
    pub changed_files: u64,
}

pub fn development_indicators(
    traces: &[Trace],
    details: &[RawPullRequestDetail],
) -> DevelopmentIndicators {
    let mut filetypes = BTreeMap::new();
    let mut target_branches = BTreeMap::new();
    let mut commits_per_pr = Vec::with_capacity(traces.len());
    let mut workflow_runs = 0;
    for t in traces {
        if let Some(b) = t.attr(attr::INTO_BRANCH) {
            *target_branches.entry(b.to_string()).or_insert(0) += 1;
        }
        let mut commits = 0usize;
        for s in &t.steps {
            match s.activity {
                ActivityKind::Commit => {
                    commits += 1;
                    for f in &s.filetypes {
                        *filetypes.entry(f.clone()).or_insert(0) += 1;
                    }
                }
                ActivityKind::WorkflowRun => workflow_runs += 1,
                _ => {}
            }
        }
        commits_per_pr.push(commits as f64);
    }
    let numbers: BTreeSet<u64> = traces
        .iter()
        .filter_map(|t| t.attr(attr::PR_NUMBER)?.parse().ok())
        .collect();
    let relevant = details.iter().filter(|d| numbers.contains(&d.pr_number));
    let (mut additions, mut deletions, mut changed_files) = (0, 0, 0);
    for d in relevant {
        additions += d.additions;
        deletions += d.deletions;
        changed_files += d.changed_files;
    }
    DevelopmentIndicators {
        pull_requests: traces.len(),
        commits: commits_per_pr.iter().sum::<f64>() as usize,
        workflow_runs,
        mean_commits_per_pr: stats::mean(&commits_per_pr),
        target_branches,
        filetypes,
        additions,
        deletions,
        changed_files,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WorkflowOutcomes {
    pub runs: usize,
    /// Runs per conclusion; runs without one are counted under `pending`.
    pub by_conclusion: BTreeMap<String, usize>,
    pub failure_rate: Option<f64>,
}

/// Outcome counts per workflow name, each run counted once even when linked to several PRs.
pub fn workflow_outcomes(log: &EventLog) -> BTreeMap<String, WorkflowOutcomes> {
    let mut seen = BTreeSet::new();
    let mut out: BTreeMap<String, WorkflowOutcomes> = BTreeMap::new();
    for e in log
        .events()
        .iter()
        .filter(|e| e.activity == ActivityKind::WorkflowRun)
    {
        if let Some(id) = e.attr(attr::RUN_ID) {
            if !seen.insert(id) {
                continue;
            }
        }
        let w = out
            .entry(e.attr(attr::RUN_NAME).unwrap_or(UNKNOWN_USER).to_string())
            .or_default();
        w.runs += 1;
        let c = e.attr(attr::CONCLUSION).unwrap_or("pending");
        *w.by_conclusion.entry(c.to_string()).or_insert(0) += 1;
    }
    for w in out.values_mut() {
        let failed: usize = super::dora::FAILED_CONCLUSIONS
            .iter()
            .filter_map(|c| w.by_conclusion.get(*c))
            .sum();
        w.failure_rate = Some(failed as f64 / w.runs as f64);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eventlog::EventRecord;
    use crate::mining::test_support::trace;
    use crate::Timestamp;
    use ActivityKind::*;

    fn authored(mut t: Trace, author: &str, number: u64) -> Trace {
        t.attributes.insert(attr::PR_AUTHOR.into(), author.into());
        t.attributes
            .insert(attr::PR_NUMBER.into(), number.to_string());
        t
    }

    #[test]
    fn review_time_one_day() {
        let t = trace(1, &[(PROpening, 0), (PRMerge, 86_400), (PRClosure, 86_400)]);
        let r = pr_activity_report(&[t], &[]);
        assert_eq!(r.mean_review_time, Some(86_400.0));
        assert_eq!(r.prs_merged, 1);
    }

    #[test]
    fn per_author_counts() {
        let traces = vec![
            authored(trace(1, &[(PROpening, 0), (PRClosure, 10)]), "A", 1),
            authored(trace(2, &[(PROpening, 0), (Commit, 30)]), "A", 2),
            authored(
                trace(3, &[(PROpening, 0), (PRMerge, 5), (PRClosure, 5)]),
                "B",
                3,
            ),
        ];
        let details = vec![RawPullRequestDetail {
            pr_number: 3,
            labels: vec![],
            merged_by: Some("bot".into()),
            commits: 0,
            additions: 0,
            deletions: 0,
            changed_files: 0,
        }];
        let r = pr_activity_report(&traces, &details);
        assert_eq!(r.per_author["A"].pr_count, 2);
        assert_eq!(r.per_author["A"].mean_lifetime, Some(20.0));
        assert_eq!(r.per_author["B"].pr_count, 1);
        assert_eq!(r.per_author["B"].merges, 1);
        assert_eq!(r.merges_by_merger["bot"], 1);
    }

    #[test]
    fn no_merges_no_review_time() {
        let t = trace(1, &[(PROpening, 0), (PRClosure, 10)]);
        assert_eq!(pr_activity_report(&[t], &[]).mean_review_time, None);
    }

    #[test]
    fn monthly_buckets() {
        let jan = Timestamp::parse_rfc3339("2024-01-31T23:00:00Z").unwrap().0;
        let t = trace(
            1,
            &[
                (PROpening, jan),
                (Commit, jan + 1800),
                (PRMerge, jan + 7200),
            ],
        );
        let m = temporal_evolution(&[t]);
        assert_eq!(m["2024-01"].opened, 1);
        assert_eq!(m["2024-01"].mean_lifetime, Some(7200.0));
        assert_eq!(m["2024-02"].merged, 1);
    }

    #[test]
    fn users_and_workflows() {
        let log = EventLog::new(vec![
            EventRecord::new(1, PROpening, Timestamp(0)).with_attr(attr::PR_AUTHOR, "ana"),
            EventRecord::new(1, Commit, Timestamp(1)).with_attr(attr::COMMIT_AUTHOR, "ana"),
            EventRecord::new(1, Commit, Timestamp(2)),
            EventRecord::new(1, WorkflowRun, Timestamp(3))
                .with_attr(attr::RUN_ID, "5")
                .with_attr(attr::RUN_NAME, "CI")
                .with_attr(attr::CONCLUSION, "failure"),
            EventRecord::new(2, WorkflowRun, Timestamp(3))
                .with_attr(attr::RUN_ID, "5")
                .with_attr(attr::RUN_NAME, "CI")
                .with_attr(attr::CONCLUSION, "failure"),
            EventRecord::new(1, PRMerge, Timestamp(4)).with_attr(attr::MERGED_BY, "bo"),
        ])
        .unwrap();
        let u = user_activity(&log);
        assert_eq!(u["ana"].commits, 1);
        assert_eq!(u["ana"].prs_opened, 1);
        assert_eq!(u[UNKNOWN_USER].commits, 1);
        assert_eq!(u["bo"].merges_performed, 1);
        let w = workflow_outcomes(&log);
        assert_eq!(w["CI"].runs, 1);
        assert_eq!(w["CI"].failure_rate, Some(1.0));
    }
}
