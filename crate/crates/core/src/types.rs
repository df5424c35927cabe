//! Domain types shared by every module.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::Deref;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TypeError {
    #[error("context text must be nonempty")]
    EmptyContext,
    #[error("action set needs at least two actions, got {0}")]
    TooFewActions(usize),
    #[error("duplicate action label {0:?}")]
    DuplicateAction(String),
    #[error("embedding component {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
    #[error("embedding must have at least one component")]
    EmptyEmbedding,
}

/// A textual scenario description and its index in the environment's list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Context {
    pub id: usize,
    pub text: String,
}

impl Context {
    pub fn new(id: usize, text: impl Into<String>) -> Result<Self, TypeError> {
        let text = text.into();
        if text.is_empty() {
            return Err(TypeError::EmptyContext);
        }
        Ok(Self { id, text })
    }
}

/// Index into an [`ActionSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(pub usize);

impl ActionId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Ordered, unique action labels. Always holds at least two actions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct ActionSet(Vec<String>);

impl ActionSet {
    pub fn new(labels: Vec<String>) -> Result<Self, TypeError> {
        if labels.len() < 2 {
            return Err(TypeError::TooFewActions(labels.len()));
        }
        for (i, label) in labels.iter().enumerate() {
            if labels[..i].contains(label) {
                return Err(TypeError::DuplicateAction(label.clone()));
            }
        }
        Ok(Self(labels))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn label(&self, id: ActionId) -> Option<&str> {
        self.0.get(id.0).map(String::as_str)
    }

    pub fn labels(&self) -> &[String] {
        &self.0
    }

    pub fn ids(&self) -> impl Iterator<Item = ActionId> {
        (0..self.0.len()).map(ActionId)
    }
}

/// An encoded context: a finite real vector of the run's embedding dimension.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self, TypeError> {
        if values.is_empty() {
            return Err(TypeError::EmptyEmbedding);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(TypeError::NonFinite { index, value });
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    pub fn cosine(&self, other: &EmbeddingVector) -> f64 {
        self.dot(&other.0) / (self.norm() * other.norm())
    }

    pub fn distance(&self, other: &EmbeddingVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl Deref for EmbeddingVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl<'de> Deserialize<'de> for EmbeddingVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let values = Vec::<f64>::deserialize(d)?;
        EmbeddingVector::new(values).map_err(serde::de::Error::custom)
    }
}

/// Rewards are plain unbounded reals; Gaussian draws may leave [0, 1].
pub type Reward = f64;

/// One round of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// 1-based round index.
    pub t: usize,
    pub context_id: usize,
    pub action_id: usize,
    #[serde(rename = "reward")]
    pub sampled_reward: f64,
    /// μ(a*) for this round's context.
    pub oracle_mean: f64,
    /// μ(a_t).
    pub chosen_mean: f64,
    pub instant_regret: f64,
    pub cum_reward: f64,
    pub cum_regret: f64,
}

/// Append-only per-round log. `push` maintains the running sums.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrialLog {
    records: Vec<TrialRecord>,
}

impl TrialLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(rounds: usize) -> Self {
        Self {
            records: Vec::with_capacity(rounds),
        }
    }

    /// Appends the next round and returns the stored record.
    pub fn push(
        &mut self,
        context_id: usize,
        action_id: usize,
        sampled_reward: f64,
        oracle_mean: f64,
        chosen_mean: f64,
    ) -> &TrialRecord {
        let (prev_reward, prev_regret) = self
            .records
            .last()
            .map_or((0.0, 0.0), |r| (r.cum_reward, r.cum_regret));
        let instant_regret = oracle_mean - chosen_mean;
        self.records.push(TrialRecord {
            t: self.records.len() + 1,
            context_id,
            action_id,
            sampled_reward,
            oracle_mean,
            chosen_mean,
            instant_regret,
            cum_reward: prev_reward + sampled_reward,
            cum_regret: prev_regret + instant_regret,
        });
        self.records.last().expect("just pushed")
    }

    /// Wraps records read back from disk without recomputing them.
    pub fn from_records(records: Vec<TrialRecord>) -> Self {
        Self { records }
    }

    pub fn records(&self) -> &[TrialRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TrialRecord> {
        self.records.last()
    }

    pub fn context_ids(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.context_id).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn context_rejects_empty_text() {
        assert_eq!(Context::new(0, ""), Err(TypeError::EmptyContext));
        assert!(Context::new(3, "sunny").is_ok());
    }

    #[test]
    fn action_set_validation() {
        assert_eq!(
            ActionSet::new(vec!["a".into()]),
            Err(TypeError::TooFewActions(1))
        );
        assert_eq!(
            ActionSet::new(vec!["a".into(), "b".into(), "a".into()]),
            Err(TypeError::DuplicateAction("a".into()))
        );
        let set = ActionSet::new(vec!["a".into(), "b".into()]).unwrap();
        assert_eq!(set.label(ActionId(1)), Some("b"));
        assert_eq!(set.label(ActionId(2)), None);
    }

    #[test]
    fn embedding_rejects_non_finite() {
        assert!(matches!(
            EmbeddingVector::new(vec![0.0, f64::NAN]),
            Err(TypeError::NonFinite { index: 1, .. })
        ));
        assert!(EmbeddingVector::new(vec![f64::INFINITY]).is_err());
        assert_eq!(EmbeddingVector::new(vec![]), Err(TypeError::EmptyEmbedding));
        assert!(serde_json::from_str::<EmbeddingVector>("[1.0, 2.0]").is_ok());
        assert!(serde_json::from_str::<EmbeddingVector>("[]").is_err());
    }

    #[test]
    fn log_keeps_running_sums() {
        let mut log = TrialLog::new();
        log.push(0, 0, 0.95, 0.9, 0.9);
        log.push(1, 3, 0.12, 0.9, 0.1);
        let last = log.push(0, 2, 0.48, 0.9, 0.5).clone();
        assert_eq!(last.t, 3);
        assert!((last.cum_regret - 1.2).abs() < 1e-12);
        assert!((last.cum_reward - (0.95 + 0.12 + 0.48)).abs() < 1e-12);
        assert_eq!(log.context_ids(), vec![0, 1, 0]);
    }
}
