//! HTTP embedding client with a persistent exact-match cache.
//!
//! Request: `POST <endpoint>` with body `{"model": "<name>", "input": "<text>"}`
//! and `Authorization: Bearer $BANDITLAB_API_KEY`. The response must hold
//! exactly one embedding, in any of these shapes:
//!
//! - a bare array `[0.1, ...]`
//! - `{"embedding": [0.1, ...]}`
//! - `{"data": [{"embedding": [0.1, ...]}]}`
//!
//! A response of the wrong length is a schema error; it is never padded or
//! truncated. Cache lines use the table format plus `model` and
//! `fetched_at`.

use super::{Encoder, EncoderError};
use crate::types::EmbeddingVector;
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};
use std::time::Duration;

/// Environment variable holding the service credential.
pub const API_KEY_ENV: &str = "BANDITLAB_API_KEY";

const MAX_BACKOFF_MS: u64 = 30_000;

fn default_timeout_ms() -> u64 {
    10_000
}

fn default_max_retries() -> u32 {
    3
}

fn default_backoff_ms() -> u64 {
    250
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub model: String,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    /// Retries after the first attempt.
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    /// First retry delay; doubles on each further retry.
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_path: Option<PathBuf>,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            timeout_ms: default_timeout_ms(),
            max_retries: default_max_retries(),
            backoff_ms: default_backoff_ms(),
            cache_path: None,
        }
    }

    pub fn validate(&self) -> Result<(), EncoderError> {
        if self.endpoint.is_empty() {
            return Err(EncoderError::InvalidConfig(
                "remote endpoint is empty".into(),
            ));
        }
        if self.model.is_empty() {
            return Err(EncoderError::InvalidConfig("remote model is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportError {
    pub retryable: bool,
    pub message: String,
}

impl TransportError {
    pub fn retryable(message: impl Into<String>) -> Self {
        Self {
            retryable: true,
            message: message.into(),
        }
    }

    pub fn fatal(message: impl Into<String>) -> Self {
        Self {
            retryable: false,
            message: message.into(),
        }
    }
}

/// The network edge. Swapped for a stub in tests.
pub trait Transport: Send + Sync {
    fn post_json(
        &self,
        endpoint: &str,
        body: &Value,
        timeout: Duration,
    ) -> Result<Value, TransportError>;
}

/// Blocking HTTP transport. The credential is read on every request and
/// never logged.
#[derive(Debug, Default)]
pub struct HttpTransport;

impl HttpTransport {
    pub fn new() -> Self {
        Self
    }
}

impl Transport for HttpTransport {
    fn post_json(
        &self,
        endpoint: &str,
        body: &Value,
        timeout: Duration,
    ) -> Result<Value, TransportError> {
        let key = std::env::var(API_KEY_ENV)
            .map_err(|_| TransportError::fatal(format!("{API_KEY_ENV} is not set")))?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        let mut response = agent
            .post(endpoint)
            .header("Authorization", &format!("Bearer {key}"))
            .send_json(body)
            .map_err(|e| match e {
                ureq::Error::StatusCode(code) if code == 429 || code >= 500 => {
                    TransportError::retryable(format!("HTTP {code}"))
                }
                ureq::Error::StatusCode(code) => TransportError::fatal(format!("HTTP {code}")),
                other => TransportError::retryable(other.to_string()),
            })?;
        response
            .body_mut()
            .read_json::<Value>()
            .map_err(|e| TransportError::retryable(format!("unreadable response body: {e}")))
    }
}

/// Pulls the single embedding array out of a response.
pub fn extract_embedding(response: &Value, dim: usize) -> Result<EmbeddingVector, EncoderError> {
    let array = match response {
        Value::Array(items) => items,
        Value::Object(map) => match (map.get("embedding"), map.get("data")) {
            (Some(Value::Array(items)), _) => items,
            (None, Some(Value::Array(data))) if data.len() == 1 => match data[0].get("embedding") {
                Some(Value::Array(items)) => items,
                _ => {
                    return Err(EncoderError::Schema(
                        "data[0].embedding is not an array".into(),
                    ))
                }
            },
            (None, Some(Value::Array(data))) => {
                return Err(EncoderError::Schema(format!(
                    "expected one embedding in data, got {}",
                    data.len()
                )))
            }
            _ => {
                return Err(EncoderError::Schema(
                    "no embedding array in response".into(),
                ))
            }
        },
        _ => {
            return Err(EncoderError::Schema(
                "response is not an array or object".into(),
            ))
        }
    };
    if array.len() != dim {
        return Err(EncoderError::Schema(format!(
            "expected {dim} components, got {}",
            array.len()
        )));
    }
    let values = array
        .iter()
        .enumerate()
        .map(|(i, v)| {
            v.as_f64()
                .ok_or_else(|| EncoderError::Schema(format!("component {i} is not a number")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    EmbeddingVector::new(values).map_err(|e| EncoderError::Schema(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub model: String,
    pub text: String,
    pub vector: EmbeddingVector,
    pub fetched_at: DateTime<Utc>,
}

/// Exact-match `(model, text)` cache. Reads are shared; appends to the
/// backing file are serialized in-process and under an exclusive file lock
/// across processes.
#[derive(Debug, Default)]
pub struct EmbeddingCache {
    path: Option<PathBuf>,
    entries: RwLock<HashMap<(String, String), EmbeddingVector>>,
    writer: Mutex<()>,
}

impl EmbeddingCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens the cache file, loading existing lines. A missing file is an
    /// empty cache. Entries for `model` must have length `dim`.
    pub fn open(path: &Path, model: &str, dim: usize) -> Result<Self, EncoderError> {
        let io_err = |source| EncoderError::Io {
            path: path.to_owned(),
            source,
        };
        let mut entries = HashMap::new();
        match File::open(path) {
            Ok(file) => {
                file.lock_shared().map_err(io_err)?;
                for (idx, line) in BufReader::new(&file).lines().enumerate() {
                    let line = line.map_err(io_err)?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let entry: CacheEntry = serde_json::from_str(&line).map_err(|e| {
                        EncoderError::Cache(format!("{}:{}: {e}", path.display(), idx + 1))
                    })?;
                    if entry.model == model && entry.vector.dim() != dim {
                        return Err(EncoderError::DimensionMismatch {
                            source_name: format!("{}:{}", path.display(), idx + 1),
                            expected: dim,
                            actual: entry.vector.dim(),
                        });
                    }
                    entries.insert((entry.model, entry.text), entry.vector);
                }
                file.unlock().map_err(io_err)?;
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(io_err(e)),
        }
        Ok(Self {
            path: Some(path.to_owned()),
            entries: RwLock::new(entries),
            writer: Mutex::new(()),
        })
    }

    pub fn get(&self, model: &str, text: &str) -> Option<EmbeddingVector> {
        self.entries
            .read()
            .expect("cache lock poisoned")
            .get(&(model.to_owned(), text.to_owned()))
            .cloned()
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Persists the entry (if file-backed), then makes it visible.
    pub fn insert(&self, entry: CacheEntry) -> Result<(), EncoderError> {
        let _guard = self.writer.lock().expect("cache writer poisoned");
        if let Some(path) = &self.path {
            let io_err = |source| EncoderError::Io {
                path: path.clone(),
                source,
            };
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(io_err)?;
            }
            let mut line =
                serde_json::to_string(&entry).map_err(|e| EncoderError::Cache(e.to_string()))?;
            line.push('\n');
            let mut file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(io_err)?;
            file.lock().map_err(io_err)?;
            file.write_all(line.as_bytes()).map_err(io_err)?;
            file.flush().map_err(io_err)?;
            file.unlock().map_err(io_err)?;
        }
        self.entries
            .write()
            .expect("cache lock poisoned")
            .insert((entry.model, entry.text), entry.vector);
        Ok(())
    }
}

pub struct RemoteEncoder {
    config: RemoteConfig,
    dim: usize,
    transport: Box<dyn Transport>,
    cache: EmbeddingCache,
    fetch: Mutex<()>,
}

impl RemoteEncoder {
    pub fn new(
        config: RemoteConfig,
        dim: usize,
        transport: Box<dyn Transport>,
    ) -> Result<Self, EncoderError> {
        config.validate()?;
        let cache = match &config.cache_path {
            Some(path) => EmbeddingCache::open(path, &config.model, dim)?,
            None => EmbeddingCache::in_memory(),
        };
        Ok(Self {
            config,
            dim,
            transport,
            cache,
            fetch: Mutex::new(()),
        })
    }

    pub fn cache(&self) -> &EmbeddingCache {
        &self.cache
    }

    fn backoff(&self, retry: u32) -> Duration {
        let factor = 1u64.checked_shl(retry).unwrap_or(u64::MAX);
        Duration::from_millis(
            self.config
                .backoff_ms
                .saturating_mul(factor)
                .min(MAX_BACKOFF_MS),
        )
    }

    /// Cache lookup, then at most `1 + max_retries` requests.
    pub fn remote_encode(&self, text: &str) -> Result<EmbeddingVector, EncoderError> {
        if text.is_empty() {
            return Err(EncoderError::EmptyText);
        }
        if let Some(hit) = self.cache.get(&self.config.model, text) {
            return Ok(hit);
        }
        let _fetching = self.fetch.lock().expect("fetch lock poisoned");
        if let Some(hit) = self.cache.get(&self.config.model, text) {
            return Ok(hit);
        }

        let body = json!({ "model": self.config.model, "input": text });
        let timeout = Duration::from_millis(self.config.timeout_ms);
        let mut attempts = 0;
        let response = loop {
            attempts += 1;
            match self
                .transport
                .post_json(&self.config.endpoint, &body, timeout)
            {
                Ok(value) => break value,
                Err(err) if err.retryable && attempts <= self.config.max_retries => {
                    log::warn!(
                        "embedding request attempt {attempts} failed: {}; retrying",
                        err.message
                    );
                    std::thread::sleep(self.backoff(attempts - 1));
                }
                Err(err) => {
                    return Err(EncoderError::RemoteUnavailable {
                        attempts,
                        reason: err.message,
                    })
                }
            }
        };

        let vector = extract_embedding(&response, self.dim)?;
        self.cache.insert(CacheEntry {
            model: self.config.model.clone(),
            text: text.to_owned(),
            vector: vector.clone(),
            fetched_at: Utc::now(),
        })?;
        Ok(vector)
    }
}

impl Encoder for RemoteEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode_text(&self, text: &str) -> Result<EmbeddingVector, EncoderError> {
        self.remote_encode(text)
    }
}
