//! Context-free ε-greedy with a fixed ε.

use super::{ArmStats, Policy, PolicyError, PolicySnapshot};
use crate::rng::RngStream;
use crate::types::{ActionId, Context, EmbeddingVector};
use rand::Rng;

pub(crate) const NAME: &str = "epsilon_greedy";

pub(crate) fn default_epsilon() -> f64 {
    0.1
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<(), PolicyError> {
    if (0.0..=1.0).contains(&epsilon) {
        Ok(())
    } else {
        Err(PolicyError::InvalidHyperparameter(format!(
            "epsilon must lie in [0, 1], got {epsilon}"
        )))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonGreedy {
    epsilon: f64,
    stats: ArmStats,
}

impl EpsilonGreedy {
    pub fn new(num_actions: usize, epsilon: f64) -> Result<Self, PolicyError> {
        check_epsilon(epsilon)?;
        if num_actions < 2 {
            return Err(PolicyError::InvalidHyperparameter(format!(
                "need at least 2 actions, got {num_actions}"
            )));
        }
        Ok(Self {
            epsilon,
            stats: ArmStats::new(num_actions),
        })
    }

    pub fn from_parts(epsilon: f64, stats: ArmStats) -> Result<Self, PolicyError> {
        check_epsilon(epsilon)?;
        stats.validate()?;
        Ok(Self { epsilon, stats })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn stats(&self) -> &ArmStats {
        &self.stats
    }

    /// Current greedy choice (unpulled arms count as mean 0).
    pub fn greedy_action(&self) -> ActionId {
        ActionId(super::argmax(&self.stats.means))
    }

    /// One uniform draw decides explore vs exploit; exploring draws a
    /// second value for the arm, over all arms.
    pub fn eps_select(&self, rng: &mut RngStream) -> ActionId {
        let u: f64 = rng.random();
        if u < self.epsilon {
            ActionId(rng.random_range(0..self.stats.len()))
        } else {
            self.greedy_action()
        }
    }
}

impl Policy for EpsilonGreedy {
    fn name(&self) -> &str {
        NAME
    }

    fn num_actions(&self) -> usize {
        self.stats.len()
    }

    fn select(
        &self,
        _context: &Context,
        _embedding: &EmbeddingVector,
        rng: &mut RngStream,
    ) -> Result<ActionId, PolicyError> {
        Ok(self.eps_select(rng))
    }

    fn update(
        &mut self,
        _context: &Context,
        _embedding: &EmbeddingVector,
        action: ActionId,
        reward: f64,
    ) -> Result<(), PolicyError> {
        self.stats.running_mean_update(action, reward)
    }

    fn snapshot(&self) -> PolicySnapshot {
        PolicySnapshot::EpsilonGreedy {
            epsilon: self.epsilon,
            stats: self.stats.clone(),
        }
    }
}
