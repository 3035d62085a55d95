//! Brute-force reference computations used to check the pipeline stages.

use std::collections::{BTreeMap, BTreeSet};

use codesight_core::eventlog::{attr, ActivityKind, EventLog, EventRecord, FlatTable};
use codesight_core::ingestion::FetchSnapshot;
use codesight_core::mining::{build_traces, case_duration, discover_variants, transition_stats};
use rand::Rng;

pub const LABELS: [(&str, ActivityKind); 5] = [
    ("Fch apertura PR", ActivityKind::PROpening),
    ("Fch commit", ActivityKind::Commit),
    ("Fch workflow", ActivityKind::WorkflowRun),
    ("Fch merge", ActivityKind::PRMerge),
    ("Fch cierre PR", ActivityKind::PRClosure),
];

/// `(pr_id, activity, epoch seconds, metadata)` of one melted cell.
pub type CellEvent = (u64, ActivityKind, i64, Vec<(String, String)>);

/// A generated flat table with the events and rejects it must melt into.
pub struct TableCase {
    pub table: FlatTable,
    pub expected: BTreeSet<CellEvent>,
    pub expected_rejects: BTreeSet<(String, String)>,
}

fn format_date(epoch: i64, style: u8) -> String {
    let dt = chrono::DateTime::from_timestamp(epoch, 0).unwrap();
    match style {
        0 => dt.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
        1 => dt.format("%Y-%m-%d %H:%M:%S").to_string(),
        2 => (dt + chrono::Duration::hours(2))
            .format("%Y-%m-%dT%H:%M:%S+02:00")
            .to_string(),
        _ => dt.format("%Y-%m-%d").to_string(),
    }
}

pub fn random_table<R: Rng>(rng: &mut R) -> TableCase {
    let n_meta = rng.random_range(0..3);
    let mut columns = vec!["pr_id".to_string()];
    columns.extend((0..n_meta).map(|i| format!("meta{i}")));
    let mut labels: Vec<(&str, ActivityKind)> = LABELS.to_vec();
    labels.retain(|_| rng.random_bool(0.85));
    columns.extend(labels.iter().map(|(l, _)| l.to_string()));

    let n_rows = rng.random_range(0..25);
    let mut rows = Vec::new();
    let mut expected = BTreeSet::new();
    let mut expected_rejects = BTreeSet::new();
    for r in 0..n_rows {
        let pr_id = 1000 + r as u64;
        let mut row = vec![Some(pr_id.to_string())];
        let mut meta = Vec::new();
        for i in 0..n_meta {
            if rng.random_bool(0.8) {
                let v = format!("v{}", rng.random_range(0..5));
                meta.push((format!("meta{i}"), v.clone()));
                row.push(Some(v));
            } else {
                row.push(None);
            }
        }
        for (label, kind) in &labels {
            match rng.random_range(0..10) {
                0..=1 => row.push(None),
                2 => row.push(Some("  ".into())),
                3 => {
                    let junk = ["not a date", "2024-13-45", "31/12/2024", "yesterday"]
                        [rng.random_range(0..4)];
                    expected_rejects.insert((pr_id.to_string(), label.to_string()));
                    row.push(Some(junk.into()));
                }
                _ => {
                    let style = rng.random_range(0..4u8);
                    let mut epoch = 1_700_000_000 + rng.random_range(0..10_000_000i64);
                    if style == 3 {
                        epoch -= epoch.rem_euclid(86_400);
                    }
                    expected.insert((pr_id, *kind, epoch, meta.clone()));
                    row.push(Some(format_date(epoch, style)));
                }
            }
        }
        rows.push(row);
    }
    TableCase {
        table: FlatTable::new(columns, rows).unwrap(),
        expected,
        expected_rejects,
    }
}

/// Checks a melted log and its rejects against the generated expectation.
pub fn check_melt(
    case: &TableCase,
    log: &EventLog,
    rejects: &[(String, String)],
) -> Result<(), String> {
    let got: BTreeSet<CellEvent> = log
        .events()
        .iter()
        .map(|e| {
            let meta = e
                .attributes
                .iter()
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect();
            (e.pr_id, e.activity, e.date.0, meta)
        })
        .collect();
    if log.len() != case.expected.len() {
        return Err(format!(
            "{} events, expected {}",
            log.len(),
            case.expected.len()
        ));
    }
    if got != case.expected {
        return Err("melted events differ from the table cells".into());
    }
    let got_rejects: BTreeSet<(String, String)> = rejects.iter().cloned().collect();
    if got_rejects != case.expected_rejects || rejects.len() != case.expected_rejects.len() {
        return Err(format!(
            "{} rejects, expected {}",
            rejects.len(),
            case.expected_rejects.len()
        ));
    }
    check_sorted(log)
}

fn check_sorted(log: &EventLog) -> Result<(), String> {
    let keys: Vec<(u64, i64, ActivityKind)> = log
        .events()
        .iter()
        .map(|e| (e.pr_id, e.date.0, e.activity))
        .collect();
    if keys.windows(2).any(|w| w[0] > w[1]) {
        return Err("events are not ordered by (pr_id, date, activity)".into());
    }
    Ok(())
}

/// Checks a snapshot-built log against the snapshot it came from.
pub fn check_log_invariants(snapshot: &FetchSnapshot, log: &EventLog) -> Result<(), String> {
    check_sorted(log)?;
    let mut seen_cases = BTreeSet::new();
    let mut previous = None;
    for e in log.events() {
        if previous != Some(e.pr_id) && !seen_cases.insert(e.pr_id) {
            return Err(format!("case {} is not contiguous", e.pr_id));
        }
        previous = Some(e.pr_id);
    }
    let expected_cases: BTreeSet<u64> = snapshot.pulls.iter().map(|p| p.pr_id).collect();
    if seen_cases != expected_cases {
        return Err("case ids differ from the snapshot's pull requests".into());
    }

    for pr in &snapshot.pulls {
        let events: Vec<&EventRecord> = log
            .events()
            .iter()
            .filter(|e| e.pr_id == pr.pr_id)
            .collect();
        let of = |k: ActivityKind| {
            events
                .iter()
                .filter(|e| e.activity == k)
                .map(|e| e.date.0)
                .collect::<Vec<_>>()
        };
        if of(ActivityKind::PROpening) != vec![pr.created_at.0] {
            return Err(format!("case {}: opening mismatch", pr.pr_id));
        }
        if of(ActivityKind::PRMerge) != pr.merged_at.map(|t| t.0).into_iter().collect::<Vec<_>>() {
            return Err(format!("case {}: merge mismatch", pr.pr_id));
        }
        if of(ActivityKind::PRClosure) != pr.closed_at.map(|t| t.0).into_iter().collect::<Vec<_>>()
        {
            return Err(format!("case {}: closure mismatch", pr.pr_id));
        }
        let mut commit_dates: Vec<i64> = snapshot
            .commits
            .iter()
            .filter(|c| c.pr_id == pr.pr_id)
            .map(|c| c.committed_at.0)
            .collect();
        commit_dates.sort();
        if of(ActivityKind::Commit) != commit_dates {
            return Err(format!("case {}: commit events mismatch", pr.pr_id));
        }
        let shas: BTreeSet<&str> = snapshot
            .commits
            .iter()
            .filter(|c| c.pr_id == pr.pr_id)
            .map(|c| c.commit_sha.as_str())
            .chain(std::iter::once(pr.head_sha.as_str()))
            .chain(pr.merge_commit_sha.as_deref())
            .collect();
        let mut linked: Vec<String> = snapshot
            .runs
            .iter()
            .filter(|r| shas.contains(r.head_sha.as_str()))
            .map(|r| r.run_id.to_string())
            .collect();
        linked.sort();
        let mut run_ids: Vec<String> = events
            .iter()
            .filter(|e| e.activity == ActivityKind::WorkflowRun)
            .filter_map(|e| e.attr(attr::RUN_ID).map(str::to_string))
            .collect();
        run_ids.sort();
        if run_ids != linked {
            return Err(format!("case {}: linked runs mismatch", pr.pr_id));
        }
        for e in &events {
            let expected = [
                (attr::PR_NUMBER, pr.pr_number.to_string()),
                (attr::PR_AUTHOR, pr.pr_author.clone()),
                (attr::FROM_BRANCH, pr.from_branch.clone()),
                (attr::INTO_BRANCH, pr.into_branch.clone()),
                (attr::STATE, pr.state.as_str().to_string()),
            ];
            if expected.iter().any(|(k, v)| e.attr(k) != Some(v.as_str())) {
                return Err(format!(
                    "case {}: case attributes not copied onto every event",
                    pr.pr_id
                ));
            }
        }
    }
    Ok(())
}

fn sorted_median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Rebuilds variants, case durations and directly-follows gaps straight from the events and
/// compares them with the mining functions.
pub fn check_mining(log: &EventLog) -> Result<(), String> {
    let mut by_case: BTreeMap<u64, Vec<&EventRecord>> = BTreeMap::new();
    for e in log.events() {
        by_case.entry(e.pr_id).or_default().push(e);
    }
    let mut variants: BTreeMap<Vec<ActivityKind>, Vec<u64>> = BTreeMap::new();
    let mut durations: BTreeMap<u64, i64> = BTreeMap::new();
    let mut gaps: BTreeMap<(ActivityKind, ActivityKind), Vec<i64>> = BTreeMap::new();
    for (id, events) in &by_case {
        variants
            .entry(events.iter().map(|e| e.activity).collect())
            .or_default()
            .push(*id);
        let first = events.iter().map(|e| e.date.0).min().unwrap();
        let last = events.iter().map(|e| e.date.0).max().unwrap();
        durations.insert(*id, last - first);
        for w in events.windows(2) {
            gaps.entry((w[0].activity, w[1].activity))
                .or_default()
                .push(w[1].date.0 - w[0].date.0);
        }
    }

    let traces = build_traces(log);
    let found = discover_variants(&traces);
    if found.iter().map(|v| v.case_count).sum::<usize>() != by_case.len() {
        return Err("variant counts do not sum to the number of cases".into());
    }
    let found_map: BTreeMap<Vec<ActivityKind>, Vec<u64>> = found
        .iter()
        .map(|v| (v.sequence.clone(), v.case_ids.clone()))
        .collect();
    if found_map != variants || found.len() != variants.len() {
        return Err("variants differ from the brute-force grouping".into());
    }
    if found.windows(2).any(|w| w[0].case_count < w[1].case_count) {
        return Err("variants are not sorted by frequency".into());
    }
    for t in &traces {
        if case_duration(t) != durations[&t.pr_id] {
            return Err(format!("case {}: duration mismatch", t.pr_id));
        }
    }

    let stats = transition_stats(&traces);
    let total_pairs: usize = by_case.values().map(|e| e.len() - 1).sum();
    if stats.values().map(|s| s.count).sum::<usize>() != total_pairs {
        return Err("transition counts do not sum to the number of directly-follows pairs".into());
    }
    if stats.len() != gaps.len() {
        return Err("transition pairs differ".into());
    }
    for (pair, g) in &gaps {
        let s = stats
            .get(pair)
            .ok_or_else(|| format!("missing transition {pair:?}"))?;
        let mean = g.iter().sum::<i64>() as f64 / g.len() as f64;
        let median = sorted_median(g.iter().map(|&x| x as f64).collect());
        if s.count != g.len()
            || (s.mean - mean).abs() > 1e-6
            || (s.median - median).abs() > 1e-6
            || s.max != *g.iter().max().unwrap()
        {
            return Err(format!("transition {pair:?}: statistics mismatch"));
        }
    }
    Ok(())
}

/// A random log of `n_cases` cases: an opening, then a mix of commits and runs, then a
/// merge or closure for most cases.
pub fn random_log<R: Rng>(rng: &mut R, n_cases: usize) -> EventLog {
    let middle = [ActivityKind::Commit, ActivityKind::WorkflowRun];
    let mut events = Vec::new();
    for i in 0..n_cases {
        let pr_id = 1 + i as u64;
        let mut t = 1_700_000_000 + rng.random_range(0..1_000_000i64);
        events.push(EventRecord::new(
            pr_id,
            ActivityKind::PROpening,
            codesight_core::Timestamp(t),
        ));
        for _ in 0..rng.random_range(0..6) {
            t += rng.random_range(1..50_000);
            events.push(EventRecord::new(
                pr_id,
                middle[rng.random_range(0..2)],
                codesight_core::Timestamp(t),
            ));
        }
        t += rng.random_range(1..50_000);
        match rng.random_range(0..4) {
            0 => {}
            1 => events.push(EventRecord::new(
                pr_id,
                ActivityKind::PRClosure,
                codesight_core::Timestamp(t),
            )),
            _ => {
                events.push(EventRecord::new(
                    pr_id,
                    ActivityKind::PRMerge,
                    codesight_core::Timestamp(t),
                ));
                events.push(EventRecord::new(
                    pr_id,
                    ActivityKind::PRClosure,
                    codesight_core::Timestamp(t),
                ));
            }
        }
    }
    EventLog::new(events).unwrap()
}
