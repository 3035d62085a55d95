mod common;

use std::fs;

use codesight_core::eventlog::{
    build_event_log, unlinked_runs, ActivityKind, EventLog, EventRecord,
};
use codesight_core::ingestion::{FetchSnapshot, FixtureTransport, GitHubClient, RepoRef};
use codesight_core::mining::{
    build_report, build_traces, detect_rework, dora_metrics_with_unlinked, render_json,
    render_markdown, summary, DeployFilter, DoraWindow, MiningReport, ReportOptions,
    SECTION_HEADINGS,
};
use codesight_core::Timestamp;
use common::oracle;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn acme_snapshot() -> FetchSnapshot {
    GitHubClient::new(
        FixtureTransport::open(common::fixture_dir("acme-shop")).unwrap(),
        None,
    )
    .fetch_snapshot(
        &RepoRef::parse("acme/shop").unwrap(),
        Timestamp(1_710_028_800),
    )
    .unwrap()
}

fn acme_report() -> MiningReport {
    let snapshot = acme_snapshot();
    let log = build_event_log(&snapshot).unwrap();
    build_report(
        &log,
        &snapshot.details,
        &unlinked_runs(&snapshot),
        &ReportOptions::default(),
    )
}

fn ts(raw: &str) -> Timestamp {
    Timestamp::parse_rfc3339(raw).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn mining_matches_brute_force(seed in any::<u64>(), n in 0usize..60) {
        let log = oracle::random_log(&mut ChaCha8Rng::seed_from_u64(seed), n);
        prop_assert_eq!(oracle::check_mining(&log), Ok(()));
    }

    #[test]
    fn summary_partitions_cases(seed in any::<u64>(), n in 0usize..60) {
        let log = oracle::random_log(&mut ChaCha8Rng::seed_from_u64(seed), n);
        let traces = build_traces(&log);
        let s = summary(&traces);
        prop_assert_eq!(s.n_cases, n);
        prop_assert_eq!(s.completed_cases + s.open_cases, n);
        prop_assert_eq!(s.n_events, log.len());
        prop_assert_eq!(s.mean_case_duration.is_some(), s.completed_cases > 0);
    }
}

#[test]
fn recorded_fixture_dora_metrics() {
    let snapshot = acme_snapshot();
    let log = build_event_log(&snapshot).unwrap();
    let window = DoraWindow::covering(&log).unwrap();
    let dora = dora_metrics_with_unlinked(
        &log,
        &unlinked_runs(&snapshot),
        window,
        &DeployFilter::default(),
    );
    assert_eq!(
        (
            dora.deployments,
            dora.successful_deployments,
            dora.failed_deployments
        ),
        (3, 2, 1)
    );
    assert!((dora.change_failure_rate.unwrap() - 1.0 / 3.0).abs() < 1e-12);
    let restore = ts("2024-03-03T09:00:20Z").seconds_until(ts("2024-03-03T10:00:00Z")) as f64;
    assert_eq!(dora.mttr, Some(restore));
    let lead = ts("2024-03-02T10:05:00Z").seconds_until(ts("2024-03-02T16:00:30Z")) as f64;
    assert_eq!(dora.lead_time_for_changes, Some(lead));
    let span = ts("2024-03-01T09:00:00Z").seconds_until(ts("2024-03-06T12:00:00Z")) + 1;
    assert!((dora.deployment_frequency - 3.0 / (span as f64 / 604_800.0)).abs() < 1e-9);
    assert_eq!(dora.unresolved_incidents, 0);
}

#[test]
fn deploy_filter_can_require_a_trigger() {
    let snapshot = acme_snapshot();
    let log = build_event_log(&snapshot).unwrap();
    let window = DoraWindow::covering(&log).unwrap();
    let filter = DeployFilter::new("^Deploy$", Some("workflow_dispatch".into())).unwrap();
    let dora = dora_metrics_with_unlinked(&log, &unlinked_runs(&snapshot), window, &filter);
    assert_eq!(dora.deployments, 0);
    assert_eq!(dora.deployment_frequency, 0.0);
    assert_eq!(dora.change_failure_rate, None);
    assert_eq!(dora.mttr, None);
}

#[test]
fn rework_flags_repeated_non_commit_activities() {
    use ActivityKind::*;
    let log = EventLog::new(vec![
        EventRecord::new(1, PROpening, Timestamp(0)),
        EventRecord::new(1, Commit, Timestamp(10)),
        EventRecord::new(1, Commit, Timestamp(20)),
        EventRecord::new(2, PROpening, Timestamp(0)),
        EventRecord::new(2, WorkflowRun, Timestamp(10)),
        EventRecord::new(2, WorkflowRun, Timestamp(20)),
    ])
    .unwrap();
    let traces = build_traces(&log);
    assert!(!detect_rework(&traces[0]).has_rework);
    let r = detect_rework(&traces[1]);
    assert!(r.has_rework);
    assert_eq!(r.repeats.get(&WorkflowRun), Some(&1));
}

#[test]
fn report_json_matches_golden_file() {
    let golden_path = common::fixture_dir("acme-shop.report.json");
    let rendered = render_json(&acme_report());
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&golden_path, &rendered).unwrap();
    }
    let golden = fs::read(&golden_path).expect("golden report missing; rerun with UPDATE_GOLDEN=1");
    assert_eq!(
        String::from_utf8(rendered).unwrap(),
        String::from_utf8(golden).unwrap()
    );
}

#[test]
fn report_json_round_trips() {
    let report = acme_report();
    let back: MiningReport = serde_json::from_slice(&render_json(&report)).unwrap();
    assert_eq!(render_json(&back), render_json(&report));
}

#[test]
fn markdown_sections_appear_in_order() {
    let md = render_markdown(&acme_report());
    let mut last = 0;
    for heading in SECTION_HEADINGS {
        let at = md
            .find(&format!("## {heading}"))
            .unwrap_or_else(|| panic!("missing section {heading}"));
        assert!(at >= last, "section {heading} out of order");
        last = at;
    }
    assert!(md.contains("github-actions[bot]"));
}
