//! Precomputed embeddings read from a JSON-lines file.
//!
//! Each nonblank line is `{"text": "<context>", "vector": [reals]}`. Extra
//! fields are ignored, so an embedding cache file doubles as a table.

use super::{Encoder, EncoderError};
use crate::types::EmbeddingVector;
use serde::Deserialize;
use std::collections::HashMap;
use std::path::Path;

#[derive(Deserialize)]
struct TableRow {
    text: String,
    vector: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TableEncoder {
    dim: usize,
    entries: HashMap<String, EmbeddingVector>,
}

impl TableEncoder {
    /// Parses table contents. `source_name` only labels errors.
    pub fn parse(contents: &str, dim: usize, source_name: &str) -> Result<Self, EncoderError> {
        let mut entries = HashMap::new();
        for (idx, line) in contents.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let row: TableRow = serde_json::from_str(line)
                .map_err(|e| EncoderError::Parse(format!("{source_name}:{line_no}: {e}")))?;
            if row.text.is_empty() {
                return Err(EncoderError::Parse(format!(
                    "{source_name}:{line_no}: empty text"
                )));
            }
            if row.vector.len() != dim {
                return Err(EncoderError::DimensionMismatch {
                    source_name: format!("{source_name}:{line_no}"),
                    expected: dim,
                    actual: row.vector.len(),
                });
            }
            let vector = EmbeddingVector::new(row.vector)
                .map_err(|e| EncoderError::Parse(format!("{source_name}:{line_no}: {e}")))?;
            if entries.insert(row.text.clone(), vector).is_some() {
                return Err(EncoderError::Parse(format!(
                    "{source_name}:{line_no}: duplicate text {:?}",
                    row.text
                )));
            }
        }
        if entries.is_empty() {
            return Err(EncoderError::Parse(format!("{source_name}: no entries")));
        }
        Ok(Self { dim, entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Loads a table file whose vectors must all have length `dim`.
pub fn load_table(path: &Path, dim: usize) -> Result<TableEncoder, EncoderError> {
    let contents = std::fs::read_to_string(path).map_err(|source| EncoderError::Io {
        path: path.to_owned(),
        source,
    })?;
    TableEncoder::parse(&contents, dim, &path.display().to_string())
}

impl Encoder for TableEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode_text(&self, text: &str) -> Result<EmbeddingVector, EncoderError> {
        if text.is_empty() {
            return Err(EncoderError::EmptyText);
        }
        self.entries
            .get(text)
            .cloned()
            .ok_or_else(|| EncoderError::UnknownContext(text.to_owned()))
    }
}
