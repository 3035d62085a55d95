use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::fsutil::write_atomic;

/// Response as seen by the ingestion client. Header names are lowercase.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ApiResponse {
    pub status: u16,
    pub headers: BTreeMap<String, String>,
    pub body: Vec<u8>,
}

impl ApiResponse {
    pub fn ok(body: impl Into<Vec<u8>>) -> Self {
        ApiResponse {
            status: 200,
            headers: BTreeMap::new(),
            body: body.into(),
        }
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.get(name).map(String::as_str)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TransportError {
    #[error("network error requesting {path}: {message}")]
    Network { path: String, message: String },
    #[error("fixture error: {0}")]
    Fixture(String),
}

/// A GET-only view of the GitHub REST API.
///
/// `path_and_query` is relative to the API root, e.g. `/repos/o/r/pulls?state=all&page=1`.
/// The query string is built by the client in a fixed parameter order, so it doubles as the
/// fixture lookup key.
pub trait Transport: Send + Sync {
    fn get(&self, path_and_query: &str, token: Option<&str>)
        -> Result<ApiResponse, TransportError>;
}

impl<T: Transport + ?Sized> Transport for &T {
    fn get(
        &self,
        path_and_query: &str,
        token: Option<&str>,
    ) -> Result<ApiResponse, TransportError> {
        (**self).get(path_and_query, token)
    }
}

impl<T: Transport + ?Sized> Transport for Box<T> {
    fn get(
        &self,
        path_and_query: &str,
        token: Option<&str>,
    ) -> Result<ApiResponse, TransportError> {
        (**self).get(path_and_query, token)
    }
}

pub struct HttpTransport {
    agent: ureq::Agent,
    base_url: String,
}

impl HttpTransport {
    pub const DEFAULT_BASE_URL: &'static str = "https://api.github.com";

    pub fn new(base_url: &str) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(60)))
            .user_agent("codesight")
            .build();
        HttpTransport {
            agent: config.into(),
            base_url: base_url.trim_end_matches('/').to_string(),
        }
    }
}

impl Default for HttpTransport {
    fn default() -> Self {
        Self::new(Self::DEFAULT_BASE_URL)
    }
}

impl Transport for HttpTransport {
    fn get(
        &self,
        path_and_query: &str,
        token: Option<&str>,
    ) -> Result<ApiResponse, TransportError> {
        let url = format!("{}{}", self.base_url, path_and_query);
        let mut request = self
            .agent
            .get(&url)
            .header("Accept", "application/vnd.github+json")
            .header("X-GitHub-Api-Version", "2022-11-28");
        if let Some(token) = token {
            request = request.header("Authorization", &format!("Bearer {token}"));
        }
        let network = |e: ureq::Error| TransportError::Network {
            path: path_and_query.to_string(),
            message: e.to_string(),
        };
        let mut response = request.call().map_err(network)?;
        let headers = response
            .headers()
            .iter()
            .filter_map(|(k, v)| {
                Some((
                    k.as_str().to_ascii_lowercase(),
                    v.to_str().ok()?.to_string(),
                ))
            })
            .collect();
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .with_config()
            .limit(64 * 1024 * 1024)
            .read_to_vec()
            .map_err(network)?;
        Ok(ApiResponse {
            status,
            headers,
            body,
        })
    }
}

/// File name of the fixture index inside a fixture directory.
pub const FIXTURE_INDEX: &str = "index.json";

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct FixtureIndex {
    responses: BTreeMap<String, FixtureEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FixtureEntry {
    #[serde(default = "default_status")]
    status: u16,
    #[serde(default)]
    headers: BTreeMap<String, String>,
    /// Body file, relative to the fixture directory.
    body: String,
}

fn default_status() -> u16 {
    200
}

/// Replays a recorded fixture directory.
///
/// The directory holds `index.json` mapping request keys (`GET <path_and_query>`) to a status,
/// optional headers, and a body file. Unknown keys answer 404.
#[derive(Debug, Clone)]
pub struct FixtureTransport {
    dir: PathBuf,
    index: FixtureIndex,
}

impl FixtureTransport {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, TransportError> {
        let dir = dir.as_ref().to_path_buf();
        let index_path = dir.join(FIXTURE_INDEX);
        let raw = fs::read(&index_path)
            .map_err(|e| TransportError::Fixture(format!("{}: {e}", index_path.display())))?;
        let index: FixtureIndex = serde_json::from_slice(&raw)
            .map_err(|e| TransportError::Fixture(format!("{}: {e}", index_path.display())))?;
        Ok(FixtureTransport { dir, index })
    }

    pub fn request_key(path_and_query: &str) -> String {
        format!("GET {path_and_query}")
    }
}

impl Transport for FixtureTransport {
    fn get(
        &self,
        path_and_query: &str,
        _token: Option<&str>,
    ) -> Result<ApiResponse, TransportError> {
        let Some(entry) = self.index.responses.get(&Self::request_key(path_and_query)) else {
            return Ok(ApiResponse {
                status: 404,
                headers: BTreeMap::new(),
                body: br#"{"message":"Not Found"}"#.to_vec(),
            });
        };
        let body_path = self.dir.join(&entry.body);
        let body = fs::read(&body_path)
            .map_err(|e| TransportError::Fixture(format!("{}: {e}", body_path.display())))?;
        Ok(ApiResponse {
            status: entry.status,
            headers: entry
                .headers
                .iter()
                .map(|(k, v)| (k.to_ascii_lowercase(), v.clone()))
                .collect(),
            body,
        })
    }
}

/// Wraps another transport and records every exchange as a replayable fixture directory.
pub struct FixtureRecorder<T> {
    inner: T,
    dir: PathBuf,
    index: Mutex<FixtureIndex>,
}

impl<T: Transport> FixtureRecorder<T> {
    pub fn new(inner: T, dir: impl AsRef<Path>) -> std::io::Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        Ok(FixtureRecorder {
            inner,
            dir,
            index: Mutex::new(FixtureIndex::default()),
        })
    }

    /// Writes `index.json`. Bodies are written as they arrive.
    pub fn finish(&self) -> std::io::Result<()> {
        let index = self.index.lock().unwrap_or_else(|p| p.into_inner());
        let json = serde_json::to_vec_pretty(&*index).map_err(std::io::Error::other)?;
        write_atomic(&self.dir.join(FIXTURE_INDEX), &json)
    }
}

fn body_file_name(path_and_query: &str) -> String {
    let mut name: String = path_and_query
        .trim_start_matches('/')
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect();
    name.push_str(".json");
    name
}

impl<T: Transport> Transport for FixtureRecorder<T> {
    fn get(
        &self,
        path_and_query: &str,
        token: Option<&str>,
    ) -> Result<ApiResponse, TransportError> {
        let response = self.inner.get(path_and_query, token)?;
        let file = body_file_name(path_and_query);
        write_atomic(&self.dir.join(&file), &response.body)
            .map_err(|e| TransportError::Fixture(e.to_string()))?;
        let headers = response
            .headers
            .iter()
            .filter(|(k, _)| k.starts_with("x-ratelimit") || k.as_str() == "retry-after")
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        self.index
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .responses
            .insert(
                FixtureTransport::request_key(path_and_query),
                FixtureEntry {
                    status: response.status,
                    headers,
                    body: file,
                },
            );
        Ok(response)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Canned;

    impl Transport for Canned {
        fn get(&self, path: &str, _: Option<&str>) -> Result<ApiResponse, TransportError> {
            Ok(ApiResponse::ok(format!("{{\"path\":\"{path}\"}}")))
        }
    }

    #[test]
    fn recorder_output_replays() {
        let dir = tempfile::tempdir().unwrap();
        let recorder = FixtureRecorder::new(Canned, dir.path()).unwrap();
        let live = recorder
            .get("/repos/o/r/pulls?state=all&page=1", None)
            .unwrap();
        recorder.finish().unwrap();

        let replay = FixtureTransport::open(dir.path()).unwrap();
        let again = replay
            .get("/repos/o/r/pulls?state=all&page=1", None)
            .unwrap();
        assert_eq!(again.body, live.body);
        assert_eq!(again.status, 200);
        assert_eq!(replay.get("/nope", None).unwrap().status, 404);
    }

    #[test]
    fn missing_index_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            FixtureTransport::open(dir.path()),
            Err(TransportError::Fixture(_))
        ));
    }
}
