mod common;

use std::collections::BTreeSet;

use codesight_core::ingestion::{
    load_snapshot, save_snapshot, snapshot_from_json, snapshot_to_json, FixtureRecorder,
    FixtureTransport, GitHubClient, IngestError, PrState, RepoRef,
};
use codesight_core::Timestamp;

fn fetched_at() -> Timestamp {
    Timestamp::parse_rfc3339("2024-03-10T00:00:00Z").unwrap()
}

fn acme() -> GitHubClient<FixtureTransport> {
    GitHubClient::new(
        FixtureTransport::open(common::fixture_dir("acme-shop")).unwrap(),
        None,
    )
}

fn repo() -> RepoRef {
    RepoRef::parse("acme/shop").unwrap()
}

#[test]
fn recorded_fixture_round_trips_into_a_valid_snapshot() {
    let snap = acme().fetch_snapshot(&repo(), fetched_at()).unwrap();
    snap.validate().unwrap();
    assert_eq!(snap.pulls.len(), 4);
    assert_eq!(snap.details.len(), 4);
    assert_eq!(snap.commits.len(), 8);
    assert_eq!(snap.runs.len(), 7);

    let draft = snap.pulls.iter().find(|p| p.pr_number == 5).unwrap();
    assert!(draft.is_draft);
    assert_eq!(draft.state, PrState::Open);
    assert_eq!(draft.reviewers, vec!["li".to_string()]);
    assert!(draft.merged_at.is_none() && draft.closed_at.is_none());

    let ghost = snap.pulls.iter().find(|p| p.pr_number == 9).unwrap();
    assert_eq!(ghost.pr_author, "ghost");
    assert!(ghost.merged_at.is_none());
    assert!(ghost.closed_at.is_some());

    let d7 = snap.detail_for(7).unwrap();
    assert_eq!(
        (d7.additions, d7.deletions, d7.changed_files, d7.commits),
        (10, 2, 2, 5)
    );
    assert_eq!(d7.labels, vec!["bug".to_string()]);
    assert_eq!(
        snap.detail_for(8).unwrap().merged_by.as_deref(),
        Some("github-actions[bot]")
    );
}

#[test]
fn commits_are_ordered_and_carry_extensions() {
    let snap = acme().fetch_snapshot(&repo(), fetched_at()).unwrap();
    let pr7 = snap.pulls.iter().find(|p| p.pr_number == 7).unwrap();
    let commits: Vec<_> = snap
        .commits
        .iter()
        .filter(|c| c.pr_id == pr7.pr_id)
        .collect();
    assert_eq!(commits.len(), 5);
    assert!(commits
        .windows(2)
        .all(|w| w[0].committed_at <= w[1].committed_at));
    assert_eq!(commits.iter().filter(|c| c.author.is_none()).count(), 1);

    let all: BTreeSet<&str> = commits
        .iter()
        .flat_map(|c| c.filetypes.iter().map(String::as_str))
        .collect();
    assert_eq!(all, BTreeSet::from([".js", ".vue", ".yaml", "<none>"]));
    assert_eq!(pr7.head_sha, commits.last().unwrap().commit_sha);
}

#[test]
fn workflow_runs_keep_conclusions_and_durations() {
    let snap = acme().fetch_snapshot(&repo(), fetched_at()).unwrap();
    let conclusions: Vec<Option<&str>> =
        snap.runs.iter().map(|r| r.conclusion.as_deref()).collect();
    assert!(conclusions.contains(&Some("success")));
    assert!(conclusions.contains(&Some("failure")));
    assert!(conclusions.contains(&None));
    let failed_ci = snap
        .runs
        .iter()
        .find(|r| r.run_name == "CI" && r.conclusion.as_deref() == Some("failure"))
        .unwrap();
    assert_eq!(failed_ci.duration_ms, 300_000);
    assert_eq!(failed_ci.event_trigger, "pull_request");
    assert!(snap.runs.iter().any(|r| r.run_attempt == 2));
}

#[test]
fn pagination_reads_every_full_page_and_stops_on_the_empty_one() {
    let dir = tempfile::tempdir().unwrap();
    common::write_paged_fixture(dir.path(), "o", "r", 200);
    let client = GitHubClient::new(FixtureTransport::open(dir.path()).unwrap(), None);
    let repo = RepoRef::parse("o/r").unwrap();
    let pulls = client.fetch_pull_requests(&repo).unwrap();
    assert_eq!(pulls.len(), 200);
    let numbers: BTreeSet<u64> = pulls.iter().map(|p| p.pr_number).collect();
    assert_eq!(numbers, (1..=200).collect());

    let snap = client.fetch_snapshot(&repo, fetched_at()).unwrap();
    assert_eq!(snap.commits.len(), 400);
    assert_eq!(
        snap.pulls.iter().filter(|p| p.merged_at.is_some()).count(),
        100
    );
}

#[test]
fn branch_filter_keeps_only_matching_targets() {
    let repo = repo().with_branch(Some("develop".into()));
    let pulls = acme().fetch_pull_requests(&repo).unwrap();
    let numbers: Vec<u64> = pulls.iter().map(|p| p.pr_number).collect();
    assert_eq!(numbers, vec![5, 9]);
}

#[test]
fn missing_resources_surface_as_typed_errors() {
    let client = acme();
    assert!(matches!(
        client.fetch_pull_request_detail(&repo(), 999),
        Err(IngestError::UnknownPullRequest(999))
    ));
    assert!(matches!(
        client.fetch_pr_commits(&repo(), 999, 1),
        Err(IngestError::UnknownPullRequest(999))
    ));
    assert!(matches!(
        client.fetch_commit_filetypes(&repo(), "deadbeef"),
        Err(IngestError::UnknownCommit(_))
    ));
    let other = RepoRef::parse("acme/elsewhere").unwrap();
    assert!(matches!(
        client.fetch_snapshot(&other, fetched_at()),
        Err(IngestError::NotFound(_))
    ));
}

#[test]
fn refetching_is_idempotent() {
    let a = acme().fetch_snapshot(&repo(), fetched_at()).unwrap();
    let b = acme()
        .with_window(1)
        .fetch_snapshot(&repo(), fetched_at())
        .unwrap();
    assert_eq!(snapshot_to_json(&a), snapshot_to_json(&b));
}

#[test]
fn snapshot_file_round_trip() {
    let snap = acme().fetch_snapshot(&repo(), fetched_at()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/snapshot.json");
    save_snapshot(&snap, &path).unwrap();
    assert_eq!(load_snapshot(&path).unwrap(), snap);
    assert_eq!(snapshot_from_json(&snapshot_to_json(&snap)).unwrap(), snap);
}

#[test]
fn recorder_output_replays_identically() {
    let dir = tempfile::tempdir().unwrap();
    let recorder = FixtureRecorder::new(
        FixtureTransport::open(common::fixture_dir("acme-shop")).unwrap(),
        dir.path(),
    )
    .unwrap();
    let client = GitHubClient::new(recorder, None);
    let original = client.fetch_snapshot(&repo(), fetched_at()).unwrap();
    client.transport().finish().unwrap();

    let replay = GitHubClient::new(FixtureTransport::open(dir.path()).unwrap(), None)
        .fetch_snapshot(&repo(), fetched_at())
        .unwrap();
    assert_eq!(original, replay);
}
