//! Context-free UCB1.

use super::{ArmStats, Policy, PolicyError, PolicySnapshot};
use crate::rng::RngStream;
use crate::types::{ActionId, Context, EmbeddingVector};

pub(crate) const NAME: &str = "ucb1";

/// μ̂ + sqrt(2 ln t / n).
pub fn ucb1_index(mean: f64, total: u64, count: u64) -> f64 {
    mean + (2.0 * (total as f64).ln() / count as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ucb1 {
    stats: ArmStats,
    total: u64,
}

impl Ucb1 {
    pub fn new(num_actions: usize) -> Result<Self, PolicyError> {
        if num_actions < 2 {
            return Err(PolicyError::InvalidHyperparameter(format!(
                "need at least 2 actions, got {num_actions}"
            )));
        }
        Ok(Self {
            stats: ArmStats::new(num_actions),
            total: 0,
        })
    }

    pub fn from_parts(stats: ArmStats, total: u64) -> Result<Self, PolicyError> {
        stats.validate()?;
        if stats.total() != total {
            return Err(PolicyError::InvalidSnapshot(format!(
                "total {total} differs from the sum of counts {}",
                stats.total()
            )));
        }
        Ok(Self { stats, total })
    }

    pub fn stats(&self) -> &ArmStats {
        &self.stats
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn ucb_select(&self) -> ActionId {
        if let Some(unpulled) = self.stats.counts.iter().position(|&n| n == 0) {
            return ActionId(unpulled);
        }
        let scores: Vec<f64> = self
            .stats
            .means
            .iter()
            .zip(&self.stats.counts)
            .map(|(&m, &n)| ucb1_index(m, self.total, n))
            .collect();
        ActionId(super::argmax(&scores))
    }

    pub fn record(&mut self, action: ActionId, reward: f64) -> Result<(), PolicyError> {
        self.stats.running_mean_update(action, reward)?;
        self.total += 1;
        Ok(())
    }
}

impl Policy for Ucb1 {
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
        _rng: &mut RngStream,
    ) -> Result<ActionId, PolicyError> {
        Ok(self.ucb_select())
    }

    fn update(
        &mut self,
        _context: &Context,
        _embedding: &EmbeddingVector,
        action: ActionId,
        reward: f64,
    ) -> Result<(), PolicyError> {
        self.record(action, reward)
    }

    fn snapshot(&self) -> PolicySnapshot {
        PolicySnapshot::Ucb1 {
            stats: self.stats.clone(),
            total: self.total,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pulls_every_arm_once_first() {
        let mut ucb = Ucb1::new(4).unwrap();
        for expected in 0..4 {
            let a = ucb.ucb_select();
            assert_eq!(a, ActionId(expected));
            ucb.record(a, 0.5).unwrap();
        }
        assert_eq!(ucb.total(), 4);
    }

    #[test]
    fn index_reference_value() {
        // mpmath: 0.5 + sqrt(2 ln 100 / 10) = 1.45970518243761624...
        assert!((ucb1_index(0.5, 100, 10) - 1.459_705_182_437_616_2).abs() < 1e-12);
    }

    #[test]
    fn dominant_mean_wins_with_equal_counts() {
        let stats = ArmStats {
            counts: vec![500, 500],
            means: vec![0.9, 0.1],
        };
        let ucb = Ucb1::from_parts(stats, 1000).unwrap();
        assert_eq!(ucb.ucb_select(), ActionId(0));
    }

    #[test]
    fn inconsistent_total_is_rejected() {
        let stats = ArmStats {
            counts: vec![1, 2],
            means: vec![0.0, 0.0],
        };
        assert!(Ucb1::from_parts(stats, 4).is_err());
    }
}
