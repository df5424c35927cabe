//! Embedding-fed softmax bandit.
//!
//! Q(e, a) = w_a·e + b_a, actions are drawn from P(a|e) = softmax(Q), and
//! each observed reward r for action a triggers one SGD step on the
//! per-decision loss L = −r·ln P(a|e). Its gradient is
//!
//! ```text
//! ∂L/∂w_j = r·(P_j − [j = a])·e
//! ∂L/∂b_j = r·(P_j − [j = a])
//! ```

use super::{
    check_action, check_dim, check_reward, softmax_probabilities, Policy, PolicyError,
    PolicySnapshot,
};
use crate::rng::RngStream;
use crate::types::{ActionId, Context, EmbeddingVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub(crate) const NAME: &str = "softmax";

pub(crate) fn default_learning_rate() -> f64 {
    0.05
}

pub(crate) fn check_learning_rate(lr: f64) -> Result<(), PolicyError> {
    if lr.is_finite() && lr > 0.0 {
        Ok(())
    } else {
        Err(PolicyError::InvalidHyperparameter(format!(
            "learning_rate must be positive, got {lr}"
        )))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMode {
    /// Draw from the softmax distribution.
    #[default]
    Sample,
    /// Highest Q, lowest index on ties.
    Greedy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxBandit {
    num_actions: usize,
    dim: usize,
    /// Row-major, one row per action.
    weights: Vec<f64>,
    biases: Vec<f64>,
    learning_rate: f64,
    mode: SelectionMode,
}

/// W·e + b.
pub fn q_values(
    weights: &[Vec<f64>],
    biases: &[f64],
    e: &EmbeddingVector,
) -> Result<Vec<f64>, PolicyError> {
    weights
        .iter()
        .zip(biases)
        .map(|(row, b)| {
            check_dim(row.len(), e)?;
            Ok(e.dot(row) + b)
        })
        .collect()
}

/// −r·ln p.
pub fn loss(reward: f64, prob: f64) -> Result<f64, PolicyError> {
    if !(prob > 0.0 && prob <= 1.0) {
        return Err(PolicyError::DegenerateProbability(prob));
    }
    Ok(-reward * prob.ln())
}

/// Gradient of −r·ln P(chosen|e) with respect to (W, b). The weight
/// gradient is row-major like the bandit's weights.
pub fn softmax_gradient(
    bandit: &SoftmaxBandit,
    e: &EmbeddingVector,
    chosen: ActionId,
    reward: f64,
) -> Result<(Vec<f64>, Vec<f64>), PolicyError> {
    check_action(chosen, bandit.num_actions)?;
    let probs = bandit.probabilities(e)?;
    let mut grad_w = Vec::with_capacity(bandit.weights.len());
    let mut grad_b = Vec::with_capacity(bandit.num_actions);
    for (j, p) in probs.iter().enumerate() {
        let indicator = if j == chosen.0 { 1.0 } else { 0.0 };
        let coeff = reward * (p - indicator);
        grad_w.extend(e.iter().map(|x| coeff * x));
        grad_b.push(coeff);
    }
    Ok((grad_w, grad_b))
}

impl SoftmaxBandit {
    /// Zero-initialized bandit.
    pub fn new(
        num_actions: usize,
        dim: usize,
        learning_rate: f64,
        mode: SelectionMode,
    ) -> Result<Self, PolicyError> {
        check_learning_rate(learning_rate)?;
        if num_actions < 2 || dim == 0 {
            return Err(PolicyError::InvalidHyperparameter(format!(
                "need at least 2 actions and dimension >= 1, got {num_actions} x {dim}"
            )));
        }
        Ok(Self {
            num_actions,
            dim,
            weights: vec![0.0; num_actions * dim],
            biases: vec![0.0; num_actions],
            learning_rate,
            mode,
        })
    }

    pub fn from_parts(
        weights: Vec<Vec<f64>>,
        biases: Vec<f64>,
        learning_rate: f64,
        mode: SelectionMode,
    ) -> Result<Self, PolicyError> {
        let num_actions = weights.len();
        let dim = weights.first().map_or(0, Vec::len);
        let mut bandit = Self::new(num_actions, dim, learning_rate, mode)?;
        if biases.len() != num_actions || weights.iter().any(|r| r.len() != dim) {
            return Err(PolicyError::InvalidSnapshot(
                "weights must be |A| rows of equal length and biases |A| long".into(),
            ));
        }
        bandit.weights = weights.into_iter().flatten().collect();
        bandit.biases = biases;
        if !bandit.is_finite() {
            return Err(PolicyError::InvalidSnapshot("non-finite parameter".into()));
        }
        Ok(bandit)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn mode(&self) -> SelectionMode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: SelectionMode) {
        self.mode = mode;
    }

    pub fn weight_rows(&self) -> Vec<Vec<f64>> {
        self.weights.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn weights_flat(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_flat_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn biases_mut(&mut self) -> &mut [f64] {
        &mut self.biases
    }

    fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(&self.biases)
            .all(|v| v.is_finite())
    }

    pub fn q_values(&self, e: &EmbeddingVector) -> Result<Vec<f64>, PolicyError> {
        check_dim(self.dim, e)?;
        Ok(self
            .weights
            .chunks(self.dim)
            .zip(&self.biases)
            .map(|(row, b)| e.dot(row) + b)
            .collect())
    }

    pub fn probabilities(&self, e: &EmbeddingVector) -> Result<Vec<f64>, PolicyError> {
        softmax_probabilities(&self.q_values(e)?)
    }

    pub fn select_with(
        &self,
        e: &EmbeddingVector,
        rng: &mut RngStream,
        mode: SelectionMode,
    ) -> Result<ActionId, PolicyError> {
        match mode {
            SelectionMode::Greedy => Ok(ActionId(super::argmax(&self.q_values(e)?))),
            SelectionMode::Sample => {
                let probs = self.probabilities(e)?;
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (i, p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return Ok(ActionId(i));
                    }
                }
                // u fell in the rounding gap above the final partial sum.
                let last = probs
                    .iter()
                    .rposition(|p| *p > f64::MIN_POSITIVE)
                    .unwrap_or_else(|| super::argmax(&probs));
                Ok(ActionId(last))
            }
        }
    }

    /// One gradient-descent step on −r·ln P(chosen|e).
    pub fn softmax_update(
        &mut self,
        e: &EmbeddingVector,
        chosen: ActionId,
        reward: f64,
    ) -> Result<(), PolicyError> {
        check_reward(reward)?;
        let (grad_w, grad_b) = softmax_gradient(self, e, chosen, reward)?;
        let eta = self.learning_rate;
        let new_w: Vec<f64> = self
            .weights
            .iter()
            .zip(&grad_w)
            .map(|(w, g)| w - eta * g)
            .collect();
        let new_b: Vec<f64> = self
            .biases
            .iter()
            .zip(&grad_b)
            .map(|(b, g)| b - eta * g)
            .collect();
        if new_w.iter().chain(&new_b).any(|v| !v.is_finite()) {
            return Err(PolicyError::NonFiniteState);
        }
        self.weights = new_w;
        self.biases = new_b;
        Ok(())
    }
}

impl Policy for SoftmaxBandit {
    fn name(&self) -> &str {
        NAME
    }

    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn select(
        &self,
        _context: &Context,
        embedding: &EmbeddingVector,
        rng: &mut RngStream,
    ) -> Result<ActionId, PolicyError> {
        self.select_with(embedding, rng, self.mode)
    }

    fn update(
        &mut self,
        _context: &Context,
        embedding: &EmbeddingVector,
        action: ActionId,
        reward: f64,
    ) -> Result<(), PolicyError> {
        self.softmax_update(embedding, action, reward)
    }

    fn snapshot(&self) -> PolicySnapshot {
        PolicySnapshot::Softmax {
            learning_rate: self.learning_rate,
            mode: self.mode,
            weights: self.weight_rows(),
            biases: self.biases.clone(),
        }
    }
}
