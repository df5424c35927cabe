//! Token-hash embedding.
//!
//! Construction, for text `s`, dimension `n` and salt `k`:
//!
//! 1. Tokens are the distinct words of `s.to_lowercase()` split on Unicode
//!    whitespace. A text with no words is treated as one token, itself.
//! 2. For each token `w` and component `i`, let
//!    `x = splitmix64(fnv1a64(w) ^ splitmix64(k * φ64 ^ i))`, with
//!    `φ64 = 0x9E3779B97F4A7C15`. The top 53 bits of `x` give
//!    `u ∈ [0, 1)`, and the token's contribution is `2u − 1 ∈ [−1, 1)`.
//! 3. Component `i` is the mean of the contributions over the token set.
//! 4. The vector is scaled to unit Euclidean norm.
//!
//! Shared tokens contribute identical terms, so "sunny and windy" lands
//! closer to "sunny" than an unrelated word does.

use super::{Encoder, EncoderError};
use crate::rng::fnv1a64;
use crate::types::EmbeddingVector;
use std::collections::BTreeSet;

pub const DEFAULT_SALT: u64 = 0;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn token_component(token_hash: u64, salt: u64, i: usize) -> f64 {
    let key = splitmix64(salt.wrapping_mul(GOLDEN) ^ i as u64);
    let x = splitmix64(token_hash ^ key);
    let unit = (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    2.0 * unit - 1.0
}

/// Unit-norm hash embedding of `text`. Requires `n >= 2`.
pub fn hash_encode(text: &str, n: usize, salt: u64) -> Result<EmbeddingVector, EncoderError> {
    if n < 2 {
        return Err(EncoderError::InvalidConfig(format!(
            "embedding_dim must be at least 2, got {n}"
        )));
    }
    let lowered = text.to_lowercase();
    let mut tokens: BTreeSet<&str> = lowered.split_whitespace().collect();
    if tokens.is_empty() {
        tokens.insert(text);
    }
    let hashes: Vec<u64> = tokens.iter().map(|t| fnv1a64(t.as_bytes())).collect();
    let count = hashes.len() as f64;

    let mut values: Vec<f64> = (0..n)
        .map(|i| {
            hashes
                .iter()
                .map(|&h| token_component(h, salt, i))
                .sum::<f64>()
                / count
        })
        .collect();
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        values.iter_mut().for_each(|v| *v /= norm);
    } else {
        // Every component cancelled exactly; fall back to the first axis.
        values[0] = 1.0;
    }
    EmbeddingVector::new(values).map_err(|e| EncoderError::Schema(e.to_string()))
}

#[derive(Debug, Clone)]
pub struct HashEncoder {
    dim: usize,
    salt: u64,
}

impl HashEncoder {
    pub fn new(dim: usize, salt: u64) -> Result<Self, EncoderError> {
        if dim < 2 {
            return Err(EncoderError::InvalidConfig(format!(
                "embedding_dim must be at least 2, got {dim}"
            )));
        }
        Ok(Self { dim, salt })
    }
}

impl Encoder for HashEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode_text(&self, text: &str) -> Result<EmbeddingVector, EncoderError> {
        if text.is_empty() {
            return Err(EncoderError::EmptyText);
        }
        hash_encode(text, self.dim, self.salt)
    }
}
