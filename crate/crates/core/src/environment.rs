//! Synthetic weather world: context arrivals, Gaussian rewards, and the
//! per-context oracle used for regret.
//!
//! The bundled `default_weather.json` pins two cells from the original
//! experimental description (`sunny`/`go to the beach` ~ N(0.9, 0.05²) and
//! `sunny`/`wear a coat` with mean 0.1). Every other cell is configuration
//! chosen to give each context a distinct best action.

use crate::rng::{RngStream, ENV_CONTEXT, ENV_REWARD};
use crate::types::{ActionId, ActionSet, Context, Reward};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Contents of the bundled default model.
pub const DEFAULT_WEATHER_JSON: &str = include_str!("../data/default_weather.json");

const WEIGHT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum EnvironmentError {
    #[error("cannot read reward model {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed reward model: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("reward model shape error: {0}")]
    Shape(String),
    #[error("invalid reward model value: {0}")]
    InvalidValue(String),
    #[error("context {context:?} has tied best actions {first} and {second}")]
    NonUniqueOptimum {
        context: String,
        first: usize,
        second: usize,
    },
    #[error("bad context weights: {0}")]
    BadWeights(String),
    #[error("context index {0} out of range")]
    UnknownContext(usize),
    #[error("action index {0} out of range")]
    UnknownAction(usize),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RewardModelFile {
    contexts: Vec<String>,
    actions: Vec<String>,
    means: Vec<Vec<f64>>,
    stds: Vec<Vec<f64>>,
    #[serde(default)]
    context_weights: Option<Vec<f64>>,
}

/// Validated, immutable reward table.
#[derive(Debug, Clone, Serialize)]
pub struct RewardModel {
    contexts: Vec<String>,
    actions: ActionSet,
    means: Vec<Vec<f64>>,
    stds: Vec<Vec<f64>>,
    context_weights: Vec<f64>,
    #[serde(skip)]
    optimum: Vec<(ActionId, f64)>,
    #[serde(skip)]
    arrivals: WeightedIndex<f64>,
}

/// Index of the strict maximum, or the first two tied indices.
pub fn row_argmax(row: &[f64]) -> Result<usize, (usize, usize)> {
    let mut best = 0;
    let mut tie: Option<usize> = None;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
            tie = None;
        } else if v == row[best] && tie.is_none() {
            tie = Some(i);
        }
    }
    match tie {
        Some(other) => Err((best, other)),
        None => Ok(best),
    }
}

impl RewardModel {
    pub fn new(
        contexts: Vec<String>,
        actions: Vec<String>,
        means: Vec<Vec<f64>>,
        stds: Vec<Vec<f64>>,
        context_weights: Option<Vec<f64>>,
    ) -> Result<Self, EnvironmentError> {
        if contexts.is_empty() {
            return Err(EnvironmentError::Shape("no contexts".into()));
        }
        if let Some(i) = contexts.iter().position(String::is_empty) {
            return Err(EnvironmentError::Shape(format!(
                "context {i} has empty text"
            )));
        }
        for (i, c) in contexts.iter().enumerate() {
            if contexts[..i].contains(c) {
                return Err(EnvironmentError::Shape(format!("duplicate context {c:?}")));
            }
        }
        let actions =
            ActionSet::new(actions).map_err(|e| EnvironmentError::Shape(e.to_string()))?;
        let (rows, cols) = (contexts.len(), actions.len());
        for (name, m) in [("means", &means), ("stds", &stds)] {
            if m.len() != rows {
                return Err(EnvironmentError::Shape(format!(
                    "{name} has {} rows, expected {rows}",
                    m.len()
                )));
            }
            if let Some((i, row)) = m.iter().enumerate().find(|(_, r)| r.len() != cols) {
                return Err(EnvironmentError::Shape(format!(
                    "{name} row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
        }
        if means.iter().flatten().any(|m| !m.is_finite()) {
            return Err(EnvironmentError::InvalidValue(
                "means must be finite".into(),
            ));
        }
        if stds.iter().flatten().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(EnvironmentError::InvalidValue(
                "stds must be finite and nonnegative".into(),
            ));
        }

        let context_weights = context_weights.unwrap_or_else(|| vec![1.0 / rows as f64; rows]);
        if context_weights.len() != rows {
            return Err(EnvironmentError::BadWeights(format!(
                "{} weights for {rows} contexts",
                context_weights.len()
            )));
        }
        if context_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(EnvironmentError::BadWeights(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = context_weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(EnvironmentError::BadWeights(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        let arrivals = WeightedIndex::new(&context_weights)
            .map_err(|e| EnvironmentError::BadWeights(e.to_string()))?;

        let mut optimum = Vec::with_capacity(rows);
        for (c, row) in means.iter().enumerate() {
            let best =
                row_argmax(row).map_err(|(first, second)| EnvironmentError::NonUniqueOptimum {
                    context: contexts[c].clone(),
                    first,
                    second,
                })?;
            optimum.push((ActionId(best), row[best]));
        }

        Ok(Self {
            contexts,
            actions,
            means,
            stds,
            context_weights,
            optimum,
            arrivals,
        })
    }

    pub fn from_json(json: &str) -> Result<Self, EnvironmentError> {
        let file: RewardModelFile = serde_json::from_str(json)?;
        Self::new(
            file.contexts,
            file.actions,
            file.means,
            file.stds,
            file.context_weights,
        )
    }

    /// Reads and validates a reward model file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, EnvironmentError> {
        let path = path.as_ref();
        let json = std::fs::read_to_string(path).map_err(|source| EnvironmentError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&json)
    }

    pub fn default_weather() -> Self {
        Self::from_json(DEFAULT_WEATHER_JSON).expect("bundled model is valid")
    }

    pub fn contexts(&self) -> &[String] {
        &self.contexts
    }

    pub fn actions(&self) -> &ActionSet {
        &self.actions
    }

    pub fn num_contexts(&self) -> usize {
        self.contexts.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn context_weights(&self) -> &[f64] {
        &self.context_weights
    }

    pub fn context(&self, id: usize) -> Result<Context, EnvironmentError> {
        let text = self
            .contexts
            .get(id)
            .ok_or(EnvironmentError::UnknownContext(id))?;
        Ok(Context {
            id,
            text: text.clone(),
        })
    }

    pub fn context_id(&self, text: &str) -> Option<usize> {
        self.contexts.iter().position(|c| c == text)
    }

    pub fn action_id(&self, label: &str) -> Option<ActionId> {
        self.actions
            .labels()
            .iter()
            .position(|a| a == label)
            .map(ActionId)
    }

    pub fn mean(&self, context: usize, action: ActionId) -> Result<f64, EnvironmentError> {
        self.cell(&self.means, context, action)
    }

    pub fn std(&self, context: usize, action: ActionId) -> Result<f64, EnvironmentError> {
        self.cell(&self.stds, context, action)
    }

    fn cell(
        &self,
        table: &[Vec<f64>],
        context: usize,
        action: ActionId,
    ) -> Result<f64, EnvironmentError> {
        let row = table
            .get(context)
            .ok_or(EnvironmentError::UnknownContext(context))?;
        row.get(action.0)
            .copied()
            .ok_or(EnvironmentError::UnknownAction(action.0))
    }

    /// Draws the next context from `context_weights`.
    pub fn sample_context(&self, rng: &mut RngStream) -> Context {
        debug_assert_eq!(rng.label(), ENV_CONTEXT);
        let id = self.arrivals.sample(rng);
        Context {
            id,
            text: self.contexts[id].clone(),
        }
    }

    /// One N(mean, std²) draw for the cell. Exactly one standard-normal
    /// draw is consumed per call, whatever the cell.
    pub fn sample_reward(
        &self,
        context: usize,
        action: ActionId,
        rng: &mut RngStream,
    ) -> Result<Reward, EnvironmentError> {
        debug_assert_eq!(rng.label(), ENV_REWARD);
        let mean = self.mean(context, action)?;
        let std = self.std(context, action)?;
        let z: f64 = StandardNormal.sample(rng);
        Ok(mean + std * z)
    }

    /// Best action for a context and its mean reward.
    pub fn oracle(&self, context: usize) -> Result<(ActionId, f64), EnvironmentError> {
        self.optimum
            .get(context)
            .copied()
            .ok_or(EnvironmentError::UnknownContext(context))
    }
}
