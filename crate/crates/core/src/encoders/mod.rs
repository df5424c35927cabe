//! Context encoders: text in, fixed-dimension real vector out.
//!
//! Three interchangeable implementations sit behind [`Encoder`]:
//!
//! - [`HashEncoder`]: a reproducible, offline stand-in built from token
//!   hashes. Texts that share tokens get correlated vectors.
//! - [`TableEncoder`]: exact lookup in a JSON-lines file of precomputed
//!   embeddings.
//! - [`RemoteEncoder`]: an HTTP embedding service behind a persistent,
//!   exact-match on-disk cache.

mod hash;
mod remote;
mod table;

pub use hash::{hash_encode, HashEncoder, DEFAULT_SALT};
pub use remote::{
    extract_embedding, CacheEntry, EmbeddingCache, HttpTransport, RemoteConfig, RemoteEncoder,
    Transport, TransportError, API_KEY_ENV,
};
pub use table::{load_table, TableEncoder};

use crate::types::{Context, EmbeddingVector};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use thiserror::Error;

pub const DEFAULT_EMBEDDING_DIM: usize = 64;

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("context text must be nonempty")]
    EmptyText,
    #[error("context {0:?} is not in the embedding table")]
    UnknownContext(String),
    #[error("embedding table parse error: {0}")]
    Parse(String),
    #[error("{source_name}: expected dimension {expected}, got {actual}")]
    DimensionMismatch {
        source_name: String,
        expected: usize,
        actual: usize,
    },
    #[error("remote encoder unavailable after {attempts} attempt(s): {reason}")]
    RemoteUnavailable { attempts: u32, reason: String },
    #[error("remote response schema error: {0}")]
    Schema(String),
    #[error("embedding cache error: {0}")]
    Cache(String),
    #[error("invalid encoder config: {0}")]
    InvalidConfig(String),
    #[error("cannot access {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Maps context text to a vector in R^n.
pub trait Encoder: Send + Sync {
    /// Output dimension n.
    fn dim(&self) -> usize;

    fn encode_text(&self, text: &str) -> Result<EmbeddingVector, EncoderError>;

    fn encode(&self, context: &Context) -> Result<EmbeddingVector, EncoderError> {
        self.encode_text(&context.text)
    }
}

impl<E: Encoder + ?Sized> Encoder for Arc<E> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn encode_text(&self, text: &str) -> Result<EmbeddingVector, EncoderError> {
        (**self).encode_text(text)
    }
}

impl<E: Encoder + ?Sized> Encoder for Box<E> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn encode_text(&self, text: &str) -> Result<EmbeddingVector, EncoderError> {
        (**self).encode_text(text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderKind {
    Hash,
    Table,
    Remote,
}

impl std::str::FromStr for EncoderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hash" => Ok(Self::Hash),
            "table" => Ok(Self::Table),
            "remote" => Ok(Self::Remote),
            other => Err(format!(
                "unknown encoder kind {other:?} (hash, table, remote)"
            )),
        }
    }
}

fn default_dim() -> usize {
    DEFAULT_EMBEDDING_DIM
}

fn default_salt() -> u64 {
    DEFAULT_SALT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderConfig {
    pub kind: EncoderKind,
    #[serde(default = "default_dim")]
    pub embedding_dim: usize,
    /// Hash kind only.
    #[serde(default = "default_salt")]
    pub salt: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remote: Option<RemoteConfig>,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            kind: EncoderKind::Hash,
            embedding_dim: DEFAULT_EMBEDDING_DIM,
            salt: DEFAULT_SALT,
            table_path: None,
            remote: None,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<(), EncoderError> {
        if self.embedding_dim < 2 {
            return Err(EncoderError::InvalidConfig(format!(
                "embedding_dim must be at least 2, got {}",
                self.embedding_dim
            )));
        }
        match self.kind {
            EncoderKind::Hash => Ok(()),
            EncoderKind::Table if self.table_path.is_none() => Err(EncoderError::InvalidConfig(
                "table encoder needs table_path".into(),
            )),
            EncoderKind::Table => Ok(()),
            EncoderKind::Remote => match &self.remote {
                None => Err(EncoderError::InvalidConfig(
                    "remote encoder needs a remote section".into(),
                )),
                Some(r) => r.validate(),
            },
        }
    }

    /// Builds the encoder. Relative paths resolve against `base_dir`.
    pub fn build(&self, base_dir: &Path) -> Result<Arc<dyn Encoder>, EncoderError> {
        self.validate()?;
        Ok(match self.kind {
            EncoderKind::Hash => Arc::new(HashEncoder::new(self.embedding_dim, self.salt)?),
            EncoderKind::Table => {
                let path = resolve(base_dir, self.table_path.as_deref().expect("validated"));
                Arc::new(load_table(&path, self.embedding_dim)?)
            }
            EncoderKind::Remote => {
                let mut remote = self.remote.clone().expect("validated");
                remote.cache_path = remote.cache_path.map(|p| resolve(base_dir, &p));
                let transport = HttpTransport::new();
                Arc::new(RemoteEncoder::new(
                    remote,
                    self.embedding_dim,
                    Box::new(transport),
                )?)
            }
        })
    }
}

pub(crate) fn resolve(base_dir: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_owned()
    } else {
        base_dir.join(path)
    }
}
