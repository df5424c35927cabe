//! Decision algorithms behind one select/update interface.
//!
//! | name             | uses embedding | exploration                       |
//! |------------------|----------------|-----------------------------------|
//! | `softmax`        | yes            | samples from softmax(W·e + b)     |
//! | `linucb`         | yes            | ridge estimate + α·confidence     |
//! | `ucb1`           | no             | μ̂ + sqrt(2 ln t / n)              |
//! | `epsilon_greedy` | no             | uniform with probability ε        |
//!
//! Ties break to the lowest action index everywhere.

mod epsilon;
mod linucb;
mod softmax;
mod ucb;

pub use epsilon::EpsilonGreedy;
pub use linucb::LinUcb;
pub use softmax::{loss, q_values, softmax_gradient, SelectionMode, SoftmaxBandit};
pub use ucb::{ucb1_index, Ucb1};

use crate::rng::RngStream;
use crate::types::{ActionId, Context, EmbeddingVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("non-finite input at index {0}")]
    NonFiniteInput(usize),
    #[error("embedding has dimension {actual}, policy expects {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("action {action} out of range for {num_actions} actions")]
    InvalidAction { action: usize, num_actions: usize },
    #[error("probability {0} is not in (0, 1]")]
    DegenerateProbability(f64),
    #[error("reward {0} is not finite")]
    NonFiniteReward(f64),
    #[error("update produced non-finite parameters")]
    NonFiniteState,
    #[error("matrix for action {0} is not positive definite")]
    NotPositiveDefinite(usize),
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("inconsistent snapshot: {0}")]
    InvalidSnapshot(String),
}

/// A bandit algorithm. `select` and `update` strictly alternate in a run.
pub trait Policy: Send {
    fn name(&self) -> &str;

    fn num_actions(&self) -> usize;

    fn select(
        &self,
        context: &Context,
        embedding: &EmbeddingVector,
        rng: &mut RngStream,
    ) -> Result<ActionId, PolicyError>;

    fn update(
        &mut self,
        context: &Context,
        embedding: &EmbeddingVector,
        action: ActionId,
        reward: f64,
    ) -> Result<(), PolicyError>;

    fn snapshot(&self) -> PolicySnapshot;
}

/// Softmax over `q`, computed as exp(q − max q) / Σ.
///
/// Components that underflow are floored at `f64::MIN_POSITIVE` so every
/// probability stays strictly positive; the floor is far below one ulp
/// of the total and does not move the sum.
pub fn softmax_probabilities(q: &[f64]) -> Result<Vec<f64>, PolicyError> {
    if let Some(i) = q.iter().position(|v| !v.is_finite()) {
        return Err(PolicyError::NonFiniteInput(i));
    }
    let max = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = q.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps
        .into_iter()
        .map(|x| (x / total).max(f64::MIN_POSITIVE))
        .collect())
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn check_dim(expected: usize, e: &EmbeddingVector) -> Result<(), PolicyError> {
    if e.dim() == expected {
        Ok(())
    } else {
        Err(PolicyError::DimensionMismatch {
            expected,
            actual: e.dim(),
        })
    }
}

pub(crate) fn check_action(action: ActionId, num_actions: usize) -> Result<(), PolicyError> {
    if action.0 < num_actions {
        Ok(())
    } else {
        Err(PolicyError::InvalidAction {
            action: action.0,
            num_actions,
        })
    }
}

pub(crate) fn check_reward(reward: f64) -> Result<(), PolicyError> {
    if reward.is_finite() {
        Ok(())
    } else {
        Err(PolicyError::NonFiniteReward(reward))
    }
}

/// Pull counts and exact running means per action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmStats {
    pub counts: Vec<u64>,
    pub means: Vec<f64>,
}

impl ArmStats {
    pub fn new(num_actions: usize) -> Self {
        Self {
            counts: vec![0; num_actions],
            means: vec![0.0; num_actions],
        }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// n_a += 1; μ̂_a += (r − μ̂_a) / n_a.
    pub fn running_mean_update(
        &mut self,
        action: ActionId,
        reward: f64,
    ) -> Result<(), PolicyError> {
        check_action(action, self.len())?;
        check_reward(reward)?;
        let a = action.0;
        self.counts[a] += 1;
        self.means[a] += (reward - self.means[a]) / self.counts[a] as f64;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn validate(&self) -> Result<(), PolicyError> {
        if self.counts.len() != self.means.len() || self.counts.len() < 2 {
            return Err(PolicyError::InvalidSnapshot(
                "counts and means must have the same length (at least 2)".into(),
            ));
        }
        if self.means.iter().any(|m| !m.is_finite()) {
            return Err(PolicyError::InvalidSnapshot("non-finite mean".into()));
        }
        Ok(())
    }
}

/// Algorithm selection plus hyperparameters, as written in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgorithmSpec {
    Softmax {
        #[serde(default = "softmax::default_learning_rate")]
        learning_rate: f64,
        #[serde(default)]
        mode: SelectionMode,
    },
    #[serde(rename = "linucb")]
    LinUcb {
        #[serde(default = "linucb::default_alpha")]
        alpha: f64,
        #[serde(default = "linucb::default_ridge")]
        ridge: f64,
    },
    Ucb1,
    EpsilonGreedy {
        #[serde(default = "epsilon::default_epsilon")]
        epsilon: f64,
    },
}

impl AlgorithmSpec {
    pub fn softmax() -> Self {
        Self::Softmax {
            learning_rate: softmax::default_learning_rate(),
            mode: SelectionMode::default(),
        }
    }

    pub fn linucb() -> Self {
        Self::LinUcb {
            alpha: linucb::default_alpha(),
            ridge: linucb::default_ridge(),
        }
    }

    pub fn epsilon_greedy() -> Self {
        Self::EpsilonGreedy {
            epsilon: epsilon::default_epsilon(),
        }
    }

    /// The four algorithms with default hyperparameters.
    pub fn defaults() -> Vec<Self> {
        vec![
            Self::softmax(),
            Self::linucb(),
            Self::Ucb1,
            Self::epsilon_greedy(),
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Softmax { .. } => softmax::NAME,
            Self::LinUcb { .. } => linucb::NAME,
            Self::Ucb1 => ucb::NAME,
            Self::EpsilonGreedy { .. } => epsilon::NAME,
        }
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        match *self {
            Self::Softmax { learning_rate, .. } => softmax::check_learning_rate(learning_rate),
            Self::LinUcb { alpha, ridge } => linucb::check_hyperparameters(alpha, ridge),
            Self::Ucb1 => Ok(()),
            Self::EpsilonGreedy { epsilon } => epsilon::check_epsilon(epsilon),
        }
    }

    /// Fresh policy for `num_actions` actions and embeddings of length `dim`.
    pub fn build(&self, num_actions: usize, dim: usize) -> Result<Box<dyn Policy>, PolicyError> {
        Ok(match *self {
            Self::Softmax {
                learning_rate,
                mode,
            } => Box::new(SoftmaxBandit::new(num_actions, dim, learning_rate, mode)?),
            Self::LinUcb { alpha, ridge } => Box::new(LinUcb::new(num_actions, dim, alpha, ridge)?),
            Self::Ucb1 => Box::new(Ucb1::new(num_actions)?),
            Self::EpsilonGreedy { epsilon } => Box::new(EpsilonGreedy::new(num_actions, epsilon)?),
        })
    }
}

/// Full policy state for debugging dumps. Serialized as a JSON object
/// tagged by `name`; matrices are row-major nested arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySnapshot {
    Softmax {
        learning_rate: f64,
        mode: SelectionMode,
        /// One row w_a per action.
        weights: Vec<Vec<f64>>,
        biases: Vec<f64>,
    },
    #[serde(rename = "linucb")]
    LinUcb {
        alpha: f64,
        ridge: f64,
        /// Per action, the n×n design matrix A_a.
        design: Vec<Vec<Vec<f64>>>,
        /// Per action, the reward-weighted sum b_a.
        targets: Vec<Vec<f64>>,
    },
    Ucb1 {
        stats: ArmStats,
        total: u64,
    },
    EpsilonGreedy {
        epsilon: f64,
        stats: ArmStats,
    },
}

impl PolicySnapshot {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("snapshot serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }

    /// Rebuilds a live policy from the dump.
    pub fn restore(&self) -> Result<Box<dyn Policy>, PolicyError> {
        Ok(match self {
            Self::Softmax {
                learning_rate,
                mode,
                weights,
                biases,
            } => Box::new(SoftmaxBandit::from_parts(
                weights.clone(),
                biases.clone(),
                *learning_rate,
                *mode,
            )?),
            Self::LinUcb {
                alpha,
                ridge,
                design,
                targets,
            } => Box::new(LinUcb::from_parts(*alpha, *ridge, design, targets)?),
            Self::Ucb1 { stats, total } => Box::new(Ucb1::from_parts(stats.clone(), *total)?),
            Self::EpsilonGreedy { epsilon, stats } => {
                Box::new(EpsilonGreedy::from_parts(*epsilon, stats.clone())?)
            }
        })
    }
}
