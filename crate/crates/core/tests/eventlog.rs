mod common;

use codesight_core::eventlog::{
    attr, build_event_log, event_log_from_table, read_csv, unlinked_runs, write_csv,
    write_rejects_jsonl, ActivityKind, ActivityTranslator, EventLog, FlatTable, TableError,
    CSV_HEADER,
};
use codesight_core::ingestion::{FetchSnapshot, FixtureTransport, GitHubClient, RepoRef};
use codesight_core::synth::{generate, SynthSpec};
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

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn melting_matches_the_cell_oracle(seed in any::<u64>()) {
        let case = oracle::random_table(&mut ChaCha8Rng::seed_from_u64(seed));
        let (log, rejects) = event_log_from_table(&case.table, &ActivityTranslator::default()).unwrap();
        let rejects: Vec<(String, String)> = rejects.into_iter().map(|r| (r.pr_id, r.column)).collect();
        prop_assert_eq!(oracle::check_melt(&case, &log, &rejects), Ok(()));
    }

    #[test]
    fn synthetic_snapshots_satisfy_log_invariants(seed in any::<u64>(), n in 1usize..40) {
        let (snapshot, _) = generate(&SynthSpec { n_cases: n, seed, ..SynthSpec::default() }).unwrap();
        let log = build_event_log(&snapshot).unwrap();
        prop_assert_eq!(oracle::check_log_invariants(&snapshot, &log), Ok(()));
        prop_assert_eq!(EventLog::from_json(&log.to_json()).unwrap(), log);
    }

    #[test]
    fn csv_round_trip_keeps_exported_columns(seed in any::<u64>()) {
        let (snapshot, _) = generate(&SynthSpec { n_cases: 15, seed, ..SynthSpec::default() }).unwrap();
        let log = build_event_log(&snapshot).unwrap();
        let mut buf = Vec::new();
        write_csv(&log, &mut buf).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), log.len());
        for (a, b) in log.events().iter().zip(back.events()) {
            prop_assert_eq!((a.pr_id, a.activity, a.date), (b.pr_id, b.activity, b.date));
            for key in &CSV_HEADER[3..] {
                prop_assert_eq!(a.attr(key), b.attr(key));
            }
        }
    }
}

#[test]
fn recorded_fixture_builds_expected_cases() {
    let snapshot = acme_snapshot();
    let log = build_event_log(&snapshot).unwrap();
    oracle::check_log_invariants(&snapshot, &log).unwrap();
    assert_eq!(log.n_cases(), 4);

    let pr7 = log.case(5007).unwrap();
    let acts: Vec<ActivityKind> = pr7.iter().map(|e| e.activity).collect();
    use ActivityKind::*;
    assert_eq!(
        acts,
        [
            PROpening,
            Commit,
            Commit,
            Commit,
            WorkflowRun,
            Commit,
            Commit,
            WorkflowRun,
            PRMerge,
            PRClosure,
            WorkflowRun
        ]
    );
    let merge = pr7.iter().find(|e| e.activity == PRMerge).unwrap();
    assert_eq!(merge.attr(attr::MERGED_BY), Some("maria"));
    let deploy = pr7
        .iter()
        .find(|e| e.attr(attr::RUN_NAME) == Some("Deploy"))
        .unwrap();
    assert_eq!(deploy.attr(attr::CONCLUSION), Some("success"));
    let filetypes: Vec<&str> = pr7.iter().filter_map(|e| e.attr(attr::FILETYPES)).collect();
    assert!(filetypes.contains(&".js"));
    assert!(filetypes.contains(&".vue"));
    assert!(filetypes.contains(&".yaml"));

    let ghost = log.case(5009).unwrap();
    assert!(ghost
        .iter()
        .all(|e| e.attr(attr::PR_AUTHOR) == Some("ghost")));
    assert!(ghost.iter().all(|e| e.activity != PRMerge));

    let unlinked: Vec<&str> = unlinked_runs(&snapshot)
        .iter()
        .map(|r| r.run_name.as_str())
        .collect();
    assert_eq!(unlinked, ["Deploy", "Nightly"]);
}

#[test]
fn pending_runs_have_no_conclusion_attribute() {
    let log = build_event_log(&acme_snapshot()).unwrap();
    let run = log
        .case(5005)
        .unwrap()
        .iter()
        .find(|e| e.activity == ActivityKind::WorkflowRun)
        .unwrap();
    assert_eq!(run.attr(attr::CONCLUSION), None);
    assert_eq!(run.attr(attr::RUN_NAME), Some("CI"));
}

fn table(columns: &[&str], rows: &[&[Option<&str>]]) -> FlatTable {
    FlatTable::new(
        columns.iter().map(|s| s.to_string()).collect(),
        rows.iter()
            .map(|r| r.iter().map(|c| c.map(str::to_string)).collect())
            .collect(),
    )
    .unwrap()
}

#[test]
fn unknown_date_column_label_is_rejected() {
    let t = table(
        &["pr_id", "Fch revision"],
        &[&[Some("1"), Some("2024-01-01")]],
    );
    assert!(matches!(
        event_log_from_table(&t, &ActivityTranslator::default()),
        Err(TableError::Activity(_))
    ));
    let custom = ActivityTranslator::default().with_label("Fch revision", ActivityKind::Commit);
    let (log, _) = event_log_from_table(&t, &custom).unwrap();
    assert_eq!(log.events()[0].activity, ActivityKind::Commit);
}

#[test]
fn duplicate_openings_in_one_case_are_an_error() {
    let t = table(
        &["pr_id", "Fch apertura PR"],
        &[
            &[Some("1"), Some("2024-01-01")],
            &[Some("1"), Some("2024-01-02")],
        ],
    );
    assert!(matches!(
        event_log_from_table(&t, &ActivityTranslator::default()),
        Err(TableError::Log(_))
    ));
}

#[test]
fn rejects_are_written_as_json_lines() {
    let t = table(
        &["pr_id", "author", "Fch commit", "Fch merge"],
        &[
            &[
                Some("4"),
                Some("a, b"),
                Some("garbage"),
                Some("2024-02-01 10:00:00"),
            ],
            &[Some("x"), None, None, None],
        ],
    );
    let (log, rejects) = event_log_from_table(&t, &ActivityTranslator::default()).unwrap();
    assert_eq!(log.len(), 1);
    assert_eq!(log.events()[0].attr("author"), Some("a, b"));
    let mut out = Vec::new();
    write_rejects_jsonl(&rejects, &mut out).unwrap();
    let lines: Vec<serde_json::Value> = String::from_utf8(out)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["raw_value"], "garbage");
    assert_eq!(lines[0]["column"], "Fch commit");
    assert_eq!(lines[1]["column"], "pr_id");
}

#[test]
fn csv_table_input_melts_like_in_memory_table() {
    let csv = "pr_id,team,Fch apertura PR,Fch commit,Fch cierre PR\r\n\
               7,core,2024-01-01T08:00:00Z,2024-01-01 09:30:00,2024-01-02\r\n\
               8,,2024-01-03T08:00:00+01:00,,\r\n";
    let table = FlatTable::from_csv_reader(csv.as_bytes()).unwrap();
    let (log, rejects) = event_log_from_table(&table, &ActivityTranslator::default()).unwrap();
    assert!(rejects.is_empty());
    assert_eq!(log.len(), 4);
    assert_eq!(
        log.case(8).unwrap()[0].date,
        Timestamp::parse_rfc3339("2024-01-03T07:00:00Z").unwrap()
    );
    assert_eq!(log.case(8).unwrap()[0].attr("team"), None);
    assert_eq!(
        log.case(7).unwrap()[2].date,
        Timestamp::parse_rfc3339("2024-01-02T00:00:00Z").unwrap()
    );
}
