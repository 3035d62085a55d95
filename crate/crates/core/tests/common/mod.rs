#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

pub fn fixture_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// Writes a replayable fixture directory for `owner/repo` with `n_pulls` pull requests,
/// paginated 100 per page. Every PR has two commits; even PRs are merged, odd ones stay open.
pub fn write_paged_fixture(dir: &Path, owner: &str, repo: &str, n_pulls: usize) {
    fs::create_dir_all(dir).unwrap();
    let base = format!("/repos/{owner}/{repo}");
    let mut index = BTreeMap::new();
    let mut put = |key: String, file: String, body: Value| {
        fs::write(dir.join(&file), serde_json::to_vec(&body).unwrap()).unwrap();
        index.insert(format!("GET {key}"), json!({ "status": 200, "body": file }));
    };

    let mut pulls = Vec::new();
    for i in 0..n_pulls {
        let number = i as u64 + 1;
        let created = 1_704_067_200 + i as i64 * 3600;
        let merged = (i % 2 == 0).then(|| ts(created + 7200));
        let shas = [
            format!("{number:040x}"),
            format!("{:040x}", number + 1_000_000),
        ];
        pulls.push(json!({
            "id": 10_000 + number,
            "number": number,
            "title": format!("change {number}"),
            "user": { "login": format!("dev{}", i % 3) },
            "head": { "ref": format!("feature/item-{number}"), "sha": shas[1] },
            "base": { "ref": "main", "sha": "0".repeat(40) },
            "merge_commit_sha": merged.as_ref().map(|_| format!("{:040x}", number + 2_000_000)),
            "created_at": ts(created),
            "merged_at": merged,
            "closed_at": merged,
            "state": if merged.is_some() { "closed" } else { "open" },
            "draft": false,
        }));
        put(
            format!("{base}/pulls/{number}"),
            format!("detail_{number}.json"),
            json!({ "number": number, "labels": [], "merged_by": null, "commits": 2,
                    "additions": 5, "deletions": 1, "changed_files": 1 }),
        );
        let commits: Vec<Value> = shas
            .iter()
            .enumerate()
            .map(|(k, sha)| {
                let at = ts(created + 600 * (k as i64 + 1));
                json!({ "sha": sha, "commit": { "message": "wip", "author": { "date": at }, "committer": { "date": at } },
                        "author": { "login": format!("dev{}", i % 3) } })
            })
            .collect();
        put(
            format!("{base}/pulls/{number}/commits?per_page=100&page=1"),
            format!("commits_{number}.json"),
            Value::Array(commits),
        );
        for sha in &shas {
            put(
                format!("{base}/commits/{sha}"),
                format!("files_{sha}.json"),
                json!({ "files": [{ "filename": "src/lib.rs" }] }),
            );
        }
    }
    let pages = n_pulls / 100 + 1;
    for page in 0..pages {
        let chunk: Vec<Value> = pulls.iter().skip(page * 100).take(100).cloned().collect();
        put(
            format!("{base}/pulls?state=all&per_page=100&page={}", page + 1),
            format!("pulls_{}.json", page + 1),
            Value::Array(chunk),
        );
    }
    put(
        format!("{base}/actions/runs?per_page=100&page=1"),
        "runs_1.json".into(),
        json!({ "total_count": 0, "workflow_runs": [] }),
    );
    let index = json!({ "responses": index });
    fs::write(
        dir.join("index.json"),
        serde_json::to_vec_pretty(&index).unwrap(),
    )
    .unwrap();
}

fn ts(epoch: i64) -> String {
    chrono::DateTime::from_timestamp(epoch, 0)
        .unwrap()
        .format("%Y-%m-%dT%H:%M:%SZ")
        .to_string()
}
pub mod oracle;

use codesight_core::eventlog::build_event_log;
use codesight_core::features::{build_samples, SampleOptions, SampleSet};
use codesight_core::mining::{build_traces, Trace};
use codesight_core::synth::{generate, SynthLaw, SynthSpec};

/// Synthetic traces and their prefix samples.
pub fn synth_samples(n_cases: usize, seed: u64) -> (Vec<Trace>, SampleSet, SynthLaw) {
    let (snapshot, law) = generate(&SynthSpec {
        n_cases,
        seed,
        ..SynthSpec::default()
    })
    .unwrap();
    let traces = build_traces(&build_event_log(&snapshot).unwrap());
    let set = build_samples(
        &traces,
        &snapshot.details,
        &SampleOptions {
            seed,
            ..SampleOptions::default()
        },
    )
    .unwrap();
    (traces, set, law)
}
