//! Synthetic repositories with a known remaining-time law.
//!
//! Each case draws a size class (visible through its source branch prefix and its diff size) and
//! a pace (visible through its target branch). Its total duration is
//! `pace × deadline × case_noise`, with bounded case noise. Commits, CI runs and deploy runs are
//! laid out inside that span, so the remaining time at any cut is the total minus the elapsed
//! time.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::features::ComplexityLabel;
use crate::ingestion::{
    FetchSnapshot, PrState, RawCommit, RawPullRequest, RawPullRequestDetail, RawWorkflowRun,
    RepoRef,
};
use crate::Timestamp;

pub const LAW_SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_cases: usize,
    pub seed: u64,
    /// Probability that a case is paced to finish inside its deadline.
    pub compliance_target: f64,
    pub start: Timestamp,
    /// PR openings are spread uniformly over this many days after `start`.
    pub span_days: u32,
    /// Total-duration multiplier for on-time and late cases.
    pub fast_pace: f64,
    pub slow_pace: f64,
    /// Lognormal sigma of the per-case duration factor, clamped to `case_noise_bounds`.
    pub case_noise_sigma: f64,
    pub case_noise_bounds: (f64, f64),
    /// Lognormal sigma of the per-transition weights before the commit phase is rescaled.
    pub transition_noise_sigma: f64,
    /// Share of the total duration spent before the last commit.
    pub commit_phase: f64,
    pub merge_probability: f64,
    pub ci_failure_rate: f64,
    pub deploy_failure_rate: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_cases: 100,
            seed: 0,
            compliance_target: 0.7,
            start: Timestamp(1_704_067_200), // 2024-01-01T00:00:00Z
            span_days: 180,
            fast_pace: 0.6,
            slow_pace: 1.6,
            case_noise_sigma: 0.08,
            case_noise_bounds: (0.8, 1.25),
            transition_noise_sigma: 0.3,
            commit_phase: 0.35,
            merge_probability: 0.85,
            ci_failure_rate: 0.1,
            deploy_failure_rate: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("n_cases must be at least 1")]
    NoCases,
    #[error("{name} must be in [0, 1], got {value}")]
    Probability { name: &'static str, value: f64 },
    #[error("{0}")]
    Parameter(String),
}

/// Ground truth for one generated case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseLaw {
    pub pr_id: u64,
    pub pr_number: u64,
    pub label: ComplexityLabel,
    pub on_time: bool,
    pub case_noise: f64,
    pub opened_at: Timestamp,
    pub total_seconds: i64,
}

/// Everything needed to recompute the generator's expected remaining time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthLaw {
    pub schema_version: u64,
    pub description: String,
    pub spec: SynthSpec,
    /// Size class by source-branch prefix.
    pub branch_prefixes: Vec<(ComplexityLabel, String)>,
    /// Target branch for on-time and for late cases.
    pub fast_branch: String,
    pub slow_branch: String,
    pub cases: Vec<CaseLaw>,
}

impl SynthLaw {
    pub fn to_json(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("law serialization is infallible");
        bytes.push(b'\n');
        bytes
    }

    /// Expected total duration from observable case attributes (noise-free).
    pub fn expected_total(&self, label: ComplexityLabel, on_time: bool) -> f64 {
        let pace = if on_time {
            self.spec.fast_pace
        } else {
            self.spec.slow_pace
        };
        pace * label.deadline_seconds() as f64
    }
}

const FAST_BRANCH: &str = "develop";
const SLOW_BRANCH: &str = "release";
const AUTHORS: [&str; 6] = ["alice", "bruno", "chen", "dana", "emeka", "farah"];
const MAINTAINERS: [&str; 2] = ["lead-dev", "release-bot"];
const EXTENSIONS: [&str; 7] = [".rs", ".js", ".vue", ".yaml", ".md", ".py", ".css"];

fn branch_prefix(label: ComplexityLabel) -> &'static str {
    match label {
        ComplexityLabel::S => "hotfix",
        ComplexityLabel::M => "fix",
        ComplexityLabel::L => "bug",
        ComplexityLabel::XL => "feature",
    }
}

/// Inclusive ranges for changed files and changed lines, inside the default size rule.
fn size_ranges(label: ComplexityLabel) -> ((u64, u64), (u64, u64)) {
    match label {
        ComplexityLabel::S => ((1, 2), (1, 50)),
        ComplexityLabel::M => ((3, 5), (51, 200)),
        ComplexityLabel::L => ((6, 15), (201, 1000)),
        ComplexityLabel::XL => ((16, 40), (1001, 5000)),
    }
}

/// Inclusive commit-count range per size class.
fn commit_range(label: ComplexityLabel) -> (usize, usize) {
    match label {
        ComplexityLabel::S => (1, 2),
        ComplexityLabel::M => (1, 3),
        ComplexityLabel::L => (2, 5),
        ComplexityLabel::XL => (3, 7),
    }
}

fn sha<R: Rng>(rng: &mut R) -> String {
    (0..40)
        .map(|_| char::from_digit(rng.random_range(0..16), 16).unwrap_or('0'))
        .collect()
}

fn validate(spec: &SynthSpec) -> Result<(), SynthError> {
    if spec.n_cases == 0 {
        return Err(SynthError::NoCases);
    }
    for (name, value) in [
        ("compliance_target", spec.compliance_target),
        ("merge_probability", spec.merge_probability),
        ("ci_failure_rate", spec.ci_failure_rate),
        ("deploy_failure_rate", spec.deploy_failure_rate),
        ("commit_phase", spec.commit_phase),
    ] {
        if !(0.0..=1.0).contains(&value) {
            return Err(SynthError::Probability { name, value });
        }
    }
    let (lo, hi) = spec.case_noise_bounds;
    if !(lo > 0.0 && lo <= hi) {
        return Err(SynthError::Parameter(format!(
            "case_noise_bounds {lo}..{hi} is empty"
        )));
    }
    if !(spec.fast_pace > 0.0 && spec.slow_pace > 0.0) {
        return Err(SynthError::Parameter("paces must be positive".into()));
    }
    if spec.case_noise_sigma < 0.0 || spec.transition_noise_sigma < 0.0 {
        return Err(SynthError::Parameter(
            "noise sigmas must be non-negative".into(),
        ));
    }
    Ok(())
}

struct CaseOutput {
    law: CaseLaw,
    pull: RawPullRequest,
    detail: RawPullRequestDetail,
    commits: Vec<RawCommit>,
    runs: Vec<RawWorkflowRun>,
}

struct RunDraft<'a> {
    run_id: u64,
    name: &'a str,
    head_sha: &'a str,
    trigger: &'a str,
    at: Timestamp,
    seconds: i64,
    failed: bool,
    actor: &'a str,
}

impl RunDraft<'_> {
    fn build(self) -> RawWorkflowRun {
        let updated_at = Timestamp(self.at.0 + self.seconds);
        RawWorkflowRun {
            run_id: self.run_id,
            run_name: self.name.to_string(),
            head_sha: self.head_sha.to_string(),
            event_trigger: self.trigger.to_string(),
            status: "completed".into(),
            conclusion: Some(if self.failed { "failure" } else { "success" }.into()),
            run_attempt: 1,
            run_started_at: self.at,
            updated_at,
            created_at: self.at,
            actor_trigger: self.actor.to_string(),
            duration_ms: RawWorkflowRun::compute_duration_ms(self.at, updated_at),
        }
    }
}

fn generate_case(spec: &SynthSpec, index: usize) -> CaseOutput {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64);
    let number = index as u64 + 1;
    let pr_id = 1_000_000 + number;

    let label = *[
        ComplexityLabel::S,
        ComplexityLabel::S,
        ComplexityLabel::M,
        ComplexityLabel::M,
        ComplexityLabel::L,
        ComplexityLabel::XL,
    ]
    .choose(&mut rng)
    .unwrap_or(&ComplexityLabel::M);
    let on_time = rng.random_bool(spec.compliance_target);
    let case_noise = {
        let (lo, hi) = spec.case_noise_bounds;
        let d = LogNormal::new(0.0, spec.case_noise_sigma).expect("sigma validated");
        d.sample(&mut rng).clamp(lo, hi)
    };
    let pace = if on_time {
        spec.fast_pace
    } else {
        spec.slow_pace
    };
    let total_seconds =
        ((pace * label.deadline_seconds() as f64 * case_noise).round() as i64).max(1);

    let opened_at =
        Timestamp(spec.start.0 + rng.random_range(0..i64::from(spec.span_days.max(1)) * 86_400));
    let closed_at = Timestamp(opened_at.0 + total_seconds);
    let author = *AUTHORS.choose(&mut rng).unwrap_or(&AUTHORS[0]);

    let (lo, hi) = commit_range(label);
    let n_commits = rng.random_range(lo..=hi);
    let weight = LogNormal::new(0.0, spec.transition_noise_sigma).expect("sigma validated");
    let weights: Vec<f64> = (0..n_commits)
        .map(|_| weight.sample(&mut rng).clamp(0.25, 4.0))
        .collect();
    let phase = spec.commit_phase * total_seconds as f64;
    let weight_sum: f64 = weights.iter().sum();
    let mut elapsed = 0.0;
    let mut commits = Vec::with_capacity(n_commits);
    let mut runs = Vec::new();
    for (j, w) in weights.iter().enumerate() {
        elapsed += phase * w / weight_sum;
        let at = Timestamp(opened_at.0 + (elapsed.round() as i64).min(total_seconds));
        let commit_sha = sha(&mut rng);
        let n_ext = rng.random_range(1..=2);
        let filetypes: BTreeSet<String> = EXTENSIONS
            .choose_multiple(&mut rng, n_ext)
            .map(|s| s.to_string())
            .collect();
        if rng.random_bool(0.7) {
            let delay = rng
                .random_range(30..=300)
                .min((total_seconds - (at.0 - opened_at.0)).max(0));
            let failed = rng.random_bool(spec.ci_failure_rate);
            let seconds = rng.random_range(60..=600);
            runs.push(
                RunDraft {
                    run_id: number * 100 + j as u64,
                    name: "CI",
                    head_sha: &commit_sha,
                    trigger: "pull_request",
                    at: Timestamp(at.0 + delay),
                    seconds,
                    failed,
                    actor: author,
                }
                .build(),
            );
        }
        commits.push(RawCommit {
            pr_id,
            commit_sha,
            committed_at: at,
            message: format!("Work on #{number} ({})", j + 1),
            author: Some(author.to_string()),
            filetypes,
        });
    }

    let merged = rng.random_bool(spec.merge_probability);
    let merger = *MAINTAINERS.choose(&mut rng).unwrap_or(&MAINTAINERS[0]);
    let merge_commit_sha = merged.then(|| sha(&mut rng));
    if let Some(merge_sha) = &merge_commit_sha {
        let failed = rng.random_bool(spec.deploy_failure_rate);
        let seconds = rng.random_range(120..=900);
        runs.push(
            RunDraft {
                run_id: number * 100 + 99,
                name: "Deploy",
                head_sha: merge_sha,
                trigger: "push",
                at: closed_at,
                seconds,
                failed,
                actor: merger,
            }
            .build(),
        );
    }

    let ((f_lo, f_hi), (l_lo, l_hi)) = size_ranges(label);
    let changed_files = rng.random_range(f_lo..=f_hi);
    let lines = rng.random_range(l_lo..=l_hi);
    let additions = rng.random_range(lines / 2..=lines);
    let head_sha = commits
        .last()
        .map(|c| c.commit_sha.clone())
        .unwrap_or_default();
    let into_branch = if on_time { FAST_BRANCH } else { SLOW_BRANCH };

    CaseOutput {
        law: CaseLaw {
            pr_id,
            pr_number: number,
            label,
            on_time,
            case_noise,
            opened_at,
            total_seconds,
        },
        pull: RawPullRequest {
            pr_id,
            pr_number: number,
            pr_title: format!("{} change {number}", branch_prefix(label)),
            pr_author: author.to_string(),
            from_branch: format!("{}/change-{number}", branch_prefix(label)),
            head_sha,
            merge_commit_sha,
            into_branch: into_branch.to_string(),
            created_at: opened_at,
            merged_at: merged.then_some(closed_at),
            closed_at: Some(closed_at),
            state: PrState::Closed,
            is_draft: false,
            assignees: vec![],
            reviewers: vec![merger.to_string()],
            commits_url: format!("https://api.github.com/repos/synth/demo/pulls/{number}/commits"),
        },
        detail: RawPullRequestDetail {
            pr_number: number,
            labels: vec![],
            merged_by: merged.then(|| merger.to_string()),
            commits: n_commits as u64,
            additions,
            deletions: lines - additions,
            changed_files,
        },
        commits,
        runs,
    }
}

/// Generates a snapshot and its ground truth. Each case draws from its own stream of the seeded
/// generator, so a case does not depend on how many cases precede it.
pub fn generate(spec: &SynthSpec) -> Result<(FetchSnapshot, SynthLaw), SynthError> {
    validate(spec)?;
    let cases: Vec<CaseOutput> = (0..spec.n_cases).map(|i| generate_case(spec, i)).collect();
    let last = cases
        .iter()
        .flat_map(|c| c.runs.iter().map(|r| r.updated_at).chain([c.law.opened_at]))
        .max()
        .unwrap_or(spec.start);
    let mut snapshot = FetchSnapshot::empty(
        RepoRef::new("synth", "demo").expect("static repo name is valid"),
        Timestamp(last.0 + 86_400),
    );
    let mut laws = Vec::with_capacity(cases.len());
    for c in cases {
        snapshot.pulls.push(c.pull);
        snapshot.details.push(c.detail);
        snapshot.commits.extend(c.commits);
        snapshot.runs.extend(c.runs);
        laws.push(c.law);
    }
    let law = SynthLaw {
        schema_version: LAW_SCHEMA_VERSION,
        description: "total_seconds = pace(on_time) * deadline_seconds(label) * case_noise; \
                      remaining_seconds(cut) = opened_at + total_seconds - time of the last observed event"
            .into(),
        spec: spec.clone(),
        branch_prefixes: ComplexityLabel::ALL
            .iter()
            .map(|&l| (l, branch_prefix(l).to_string()))
            .collect(),
        fast_branch: FAST_BRANCH.into(),
        slow_branch: SLOW_BRANCH.into(),
        cases: laws,
    };
    Ok((snapshot, law))
}
