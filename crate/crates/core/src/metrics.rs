//! Reward and regret accounting over trial logs.
//!
//! ```text
//! R_T       = Σ_t r_t(a_t)
//! Regret_T  = Σ_t μ(a*_t) − μ(a_t)
//! ```
//!
//! Regret uses true means, never sampled rewards.

use crate::types::TrialLog;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for cross-checking the log's running sums against a fresh
/// accumulation.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Table-style checkpoint grid.
pub const DEFAULT_CHECKPOINTS: [usize; 4] = [250, 500, 750, 1000];

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("trial log is empty")]
    EmptyLog,
    #[error("checkpoint {checkpoint} outside 1..={trials}")]
    CheckpointOutOfRange { checkpoint: usize, trials: usize },
    #[error("round {t}: action {action} out of range for {num_actions} actions")]
    ActionOutOfRange {
        t: usize,
        action: usize,
        num_actions: usize,
    },
    #[error("round {t}: {field} disagrees with recomputation ({logged} vs {computed})")]
    InconsistentLog {
        t: usize,
        field: &'static str,
        logged: f64,
        computed: f64,
    },
    #[error("need at least two seeds to aggregate, got {0}")]
    InsufficientSeeds(usize),
    #[error("summaries differ in {0}")]
    MixedConfigs(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: usize,
    pub cumulative_reward: f64,
    pub cumulative_regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub algorithm: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub trials: usize,
    pub cumulative_reward: f64,
    pub cumulative_regret: f64,
    /// Σ μ(a*) over the run.
    pub oracle_total: f64,
    /// Σ μ(a_t) over the run.
    pub chosen_total: f64,
    pub checkpoints: Vec<Checkpoint>,
    pub action_counts: Vec<u64>,
    pub action_frequencies: Vec<f64>,
}

/// Recomputes every total from the per-round fields of `log` and checks
/// them against the log's running sums.
pub fn accumulate(
    log: &TrialLog,
    algorithm: &str,
    num_actions: usize,
    checkpoints: &[usize],
) -> Result<RunSummary, MetricsError> {
    let trials = log.len();
    if trials == 0 {
        return Err(MetricsError::EmptyLog);
    }
    if let Some(&checkpoint) = checkpoints.iter().find(|&&c| c == 0 || c > trials) {
        return Err(MetricsError::CheckpointOutOfRange { checkpoint, trials });
    }

    let mut reward = 0.0;
    let mut regret = 0.0;
    let mut oracle_total = 0.0;
    let mut chosen_total = 0.0;
    let mut counts = vec![0u64; num_actions];
    let mut reward_at = vec![0.0; trials];
    let mut regret_at = vec![0.0; trials];

    for (i, row) in log.records().iter().enumerate() {
        if row.action_id >= num_actions {
            return Err(MetricsError::ActionOutOfRange {
                t: row.t,
                action: row.action_id,
                num_actions,
            });
        }
        counts[row.action_id] += 1;
        reward += row.sampled_reward;
        regret += row.oracle_mean - row.chosen_mean;
        oracle_total += row.oracle_mean;
        chosen_total += row.chosen_mean;
        reward_at[i] = reward;
        regret_at[i] = regret;

        for (field, logged, computed) in [
            (
                "instant_regret",
                row.instant_regret,
                row.oracle_mean - row.chosen_mean,
            ),
            ("cum_reward", row.cum_reward, reward),
            ("cum_regret", row.cum_regret, regret),
        ] {
            if (logged - computed).abs() > SUM_TOLERANCE {
                return Err(MetricsError::InconsistentLog {
                    t: row.t,
                    field,
                    logged,
                    computed,
                });
            }
        }
    }

    let action_frequencies = counts.iter().map(|&c| c as f64 / trials as f64).collect();
    Ok(RunSummary {
        algorithm: algorithm.to_owned(),
        seed: None,
        trials,
        cumulative_reward: reward,
        cumulative_regret: regret,
        oracle_total,
        chosen_total,
        checkpoints: checkpoints
            .iter()
            .map(|&t| Checkpoint {
                t,
                cumulative_reward: reward_at[t - 1],
                cumulative_regret: regret_at[t - 1],
            })
            .collect(),
        action_counts: counts,
        action_frequencies,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Unbiased (n − 1) sample standard deviation.
    pub std: f64,
}

/// Mean and sample standard deviation. `std` is 0 for a single value.
pub fn mean_std(values: &[f64]) -> MeanStd {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    MeanStd { mean, std }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointAggregate {
    pub t: usize,
    pub cumulative_reward: MeanStd,
    pub cumulative_regret: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateSummary {
    pub algorithm: String,
    pub trials: usize,
    pub seeds: usize,
    pub cumulative_reward: MeanStd,
    pub cumulative_regret: MeanStd,
    pub checkpoints: Vec<CheckpointAggregate>,
    pub action_frequencies: Vec<MeanStd>,
}

/// Per-metric mean ± sample std across seeds of one configuration.
pub fn aggregate_over_seeds(summaries: &[RunSummary]) -> Result<AggregateSummary, MetricsError> {
    if summaries.len() < 2 {
        return Err(MetricsError::InsufficientSeeds(summaries.len()));
    }
    let first = &summaries[0];
    for s in &summaries[1..] {
        if s.algorithm != first.algorithm {
            return Err(MetricsError::MixedConfigs("algorithm"));
        }
        if s.trials != first.trials {
            return Err(MetricsError::MixedConfigs("trials"));
        }
        if s.action_counts.len() != first.action_counts.len() {
            return Err(MetricsError::MixedConfigs("action count"));
        }
        let grid = |x: &RunSummary| x.checkpoints.iter().map(|c| c.t).collect::<Vec<_>>();
        if grid(s) != grid(first) {
            return Err(MetricsError::MixedConfigs("checkpoints"));
        }
    }

    let over =
        |f: &dyn Fn(&RunSummary) -> f64| mean_std(&summaries.iter().map(f).collect::<Vec<_>>());
    Ok(AggregateSummary {
        algorithm: first.algorithm.clone(),
        trials: first.trials,
        seeds: summaries.len(),
        cumulative_reward: over(&|s| s.cumulative_reward),
        cumulative_regret: over(&|s| s.cumulative_regret),
        checkpoints: first
            .checkpoints
            .iter()
            .enumerate()
            .map(|(i, c)| CheckpointAggregate {
                t: c.t,
                cumulative_reward: over(&|s| s.checkpoints[i].cumulative_reward),
                cumulative_regret: over(&|s| s.checkpoints[i].cumulative_regret),
            })
            .collect(),
        action_frequencies: (0..first.action_frequencies.len())
            .map(|a| over(&|s| s.action_frequencies[a]))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn log_from(rows: &[(usize, usize, f64, f64, f64)]) -> TrialLog {
        let mut log = TrialLog::new();
        for &(c, a, r, star, chosen) in rows {
            log.push(c, a, r, star, chosen);
        }
        log
    }

    #[test]
    fn hand_traced_regret() {
        let log = log_from(&[
            (0, 0, 0.93, 0.9, 0.9),
            (0, 3, 0.08, 0.9, 0.1),
            (0, 1, 0.52, 0.9, 0.5),
        ]);
        let s = accumulate(&log, "x", 4, &[1, 3]).unwrap();
        assert!((s.cumulative_regret - 1.2).abs() < 1e-12);
        assert!((s.cumulative_reward - 1.53).abs() < 1e-12);
        assert_eq!(s.checkpoints[0].cumulative_regret, 0.0);
        assert_eq!(s.checkpoints[1].t, 3);
    }

    #[test]
    fn always_optimal_means_zero_regret() {
        let rows: Vec<_> = (0..50).map(|i| (i % 4, i % 4, 0.8, 0.8, 0.8)).collect();
        let s = accumulate(&log_from(&rows), "oracle", 4, &[50]).unwrap();
        assert_eq!(s.cumulative_regret, 0.0);
    }

    #[test]
    fn frequency_fixture() {
        let mut rows = Vec::new();
        for (action, count) in [(0, 42), (1, 16), (2, 29), (3, 13)] {
            rows.extend(std::iter::repeat_n((0, action, 0.5, 0.9, 0.5), count));
        }
        let s = accumulate(&log_from(&rows), "x", 4, &[]).unwrap();
        assert_eq!(s.trials, 100);
        assert_eq!(s.action_frequencies, vec![0.42, 0.16, 0.29, 0.13]);
    }

    #[test]
    fn error_paths() {
        assert_eq!(
            accumulate(&TrialLog::new(), "x", 2, &[]),
            Err(MetricsError::EmptyLog)
        );
        let log = log_from(&[(0, 0, 1.0, 1.0, 1.0)]);
        assert!(matches!(
            accumulate(&log, "x", 2, &[2]),
            Err(MetricsError::CheckpointOutOfRange {
                checkpoint: 2,
                trials: 1
            })
        ));
        assert!(matches!(
            accumulate(&log, "x", 2, &[0]),
            Err(MetricsError::CheckpointOutOfRange { .. })
        ));
        let mut bad = log.records().to_vec();
        bad[0].cum_reward = 5.0;
        assert!(matches!(
            accumulate(&TrialLog::from_records(bad), "x", 2, &[]),
            Err(MetricsError::InconsistentLog {
                field: "cum_reward",
                ..
            })
        ));
        let log = log_from(&[(0, 3, 1.0, 1.0, 1.0)]);
        assert!(matches!(
            accumulate(&log, "x", 2, &[]),
            Err(MetricsError::ActionOutOfRange { action: 3, .. })
        ));
    }

    fn summary(regret: f64) -> RunSummary {
        RunSummary {
            algorithm: "ucb1".into(),
            seed: None,
            trials: 10,
            cumulative_reward: 5.0,
            cumulative_regret: regret,
            oracle_total: 9.0,
            chosen_total: 9.0 - regret,
            checkpoints: vec![Checkpoint {
                t: 10,
                cumulative_reward: 5.0,
                cumulative_regret: regret,
            }],
            action_counts: vec![5, 5],
            action_frequencies: vec![0.5, 0.5],
        }
    }

    #[test]
    fn aggregate_examples() {
        let agg = aggregate_over_seeds(&[summary(10.0), summary(20.0)]).unwrap();
        assert_eq!(agg.cumulative_regret.mean, 15.0);
        // sqrt(50) = 7.0710678118654755
        assert!((agg.cumulative_regret.std - 7.071_067_811_865_475_5).abs() < 1e-12);
        let same = aggregate_over_seeds(&[summary(3.0), summary(3.0), summary(3.0)]).unwrap();
        assert_eq!(same.cumulative_regret.std, 0.0);
        assert_eq!(same.cumulative_reward.std, 0.0);
        assert_eq!(same.seeds, 3);
    }

    #[test]
    fn aggregate_errors() {
        assert_eq!(
            aggregate_over_seeds(&[summary(1.0)]),
            Err(MetricsError::InsufficientSeeds(1))
        );
        let mut other = summary(1.0);
        other.algorithm = "softmax".into();
        assert_eq!(
            aggregate_over_seeds(&[summary(1.0), other]),
            Err(MetricsError::MixedConfigs("algorithm"))
        );
        let mut other = summary(1.0);
        other.trials = 11;
        assert!(aggregate_over_seeds(&[summary(1.0), other]).is_err());
    }

    proptest! {
        #[test]
        fn accounting_identity_and_monotone_regret(
            rows in prop::collection::vec((0usize..3, -1.0f64..2.0, 0.0f64..1.0, 0.0f64..1.0), 1..200)
        ) {
            // chosen_mean ≤ oracle_mean, as the environment guarantees.
            let mut log = TrialLog::new();
            for &(a, r, star, frac) in &rows {
                log.push(0, a, r, star, star * frac);
            }
            let s = accumulate(&log, "p", 3, &[]).unwrap();
            prop_assert!((s.oracle_total - s.cumulative_regret - s.chosen_total).abs() < 1e-9);
            prop_assert!((s.cumulative_reward - log.last().unwrap().cum_reward).abs() < 1e-9);
            prop_assert!(s.cumulative_regret >= 0.0);
            let regrets: Vec<f64> = log.records().iter().map(|r| r.cum_regret).collect();
            prop_assert!(regrets.windows(2).all(|w| w[1] >= w[0]));
            prop_assert!((s.action_frequencies.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
