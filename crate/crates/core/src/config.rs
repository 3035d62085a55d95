//! Pipeline configuration, read from a TOML file. Command-line flags override it.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::features::{LabelRule, SplitFractions};
use crate::ingestion::{HttpTransport, RepoRef, TOKEN_ENV_VAR};
use crate::mining::DeployFilter;
use crate::Timestamp;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub snapshot: PathBuf,
    /// Directory receiving `events.csv`, `events.json` and `rejects.jsonl`.
    pub events: PathBuf,
    pub report: PathBuf,
    pub dataset: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            snapshot: "data/snapshot.json".into(),
            events: "data/events".into(),
            report: "data/report".into(),
            dataset: "data/dataset".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeployConfig {
    /// Regex matched against workflow run names.
    pub run_name: String,
    pub event_trigger: Option<String>,
    /// Optional fixed analysis window; the log's own span otherwise.
    pub window_start: Option<Timestamp>,
    pub window_end: Option<Timestamp>,
}

impl Default for DeployConfig {
    fn default() -> Self {
        DeployConfig {
            run_name: DeployFilter::DEFAULT_PATTERN.into(),
            event_trigger: None,
            window_start: None,
            window_end: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// `owner/name`.
    pub repo: Option<String>,
    pub branch: Option<String>,
    pub seed: u64,
    /// Value of the `process` feature, e.g. `backend` or `frontend`.
    pub process: String,
    pub api_url: String,
    /// Environment variable holding the API token.
    pub token_env: String,
    pub samples_per_trace: usize,
    pub paths: Paths,
    pub deploy: DeployConfig,
    pub labels: LabelRule,
    pub split: SplitFractions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            repo: None,
            branch: None,
            seed: 42,
            process: "backend".into(),
            api_url: HttpTransport::DEFAULT_BASE_URL.into(),
            token_env: TOKEN_ENV_VAR.into(),
            samples_per_trace: 1,
            paths: Paths::default(),
            deploy: DeployConfig::default(),
            labels: LabelRule::default(),
            split: SplitFractions::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: PipelineConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if let Some(repo) = &self.repo {
            RepoRef::parse(repo).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        let s = self.split;
        SplitFractions::new(s.train, s.val, s.test)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.deploy_filter()?;
        if let (Some(a), Some(b)) = (self.deploy.window_start, self.deploy.window_end) {
            if a >= b {
                return Err(ConfigError::Invalid(format!(
                    "deploy window start {a} is not before end {b}"
                )));
            }
        }
        if self.samples_per_trace == 0 {
            return Err(ConfigError::Invalid(
                "samples_per_trace must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn deploy_filter(&self) -> Result<DeployFilter, ConfigError> {
        DeployFilter::new(&self.deploy.run_name, self.deploy.event_trigger.clone())
            .map_err(|e| ConfigError::Invalid(format!("deploy.run_name: {e}")))
    }
}
