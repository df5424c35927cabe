//! Seeded experiment orchestration.
//!
//! Each round of a run: draw a context (`env-context` stream), encode it
//! (memoized per run), let the policy choose (`policy` stream), sample the
//! reward (`env-reward` stream, one draw per round), update the policy and
//! log the round. Context and reward streams depend on the seed alone, so
//! every algorithm under one seed sees the same contexts and the same
//! reward noise.

mod config;
mod output;

pub use config::{
    default_checkpoints, trial_file, ExperimentConfig, OutputConfig, OutputFormat, RunId,
};
pub use output::{
    read_trial_csv, render_comparison, report, trial_csv, write_outputs, AlgorithmSummaryFile,
    Manifest, COMPARISON_FILE, MANIFEST_FILE, TRIAL_CSV_HEADER,
};

use crate::encoders::{Encoder, EncoderError};
use crate::environment::{EnvironmentError, RewardModel};
use crate::metrics::{self, MetricsError, RunSummary};
use crate::policies::{AlgorithmSpec, Policy, PolicyError};
use crate::rng::{new_rng, ENV_CONTEXT, ENV_REWARD, POLICY};
use crate::types::{EmbeddingVector, TrialLog};
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("cannot access {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Environment(#[from] EnvironmentError),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {message}")]
    Output { path: PathBuf, message: String },
}

/// One finished (algorithm, seed) run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub id: RunId,
    pub log: TrialLog,
    pub summary: RunSummary,
}

/// All runs of an experiment, ordered by algorithm (config order) then seed.
#[derive(Debug, Clone)]
pub struct ExperimentResults {
    pub config_hash: String,
    pub runs: Vec<RunResult>,
}

impl ExperimentResults {
    pub fn runs_for<'a>(&'a self, algorithm: &'a str) -> impl Iterator<Item = &'a RunResult> {
        self.runs
            .iter()
            .filter(move |r| r.id.algorithm == algorithm)
    }

    pub fn summaries_for(&self, algorithm: &str) -> Vec<RunSummary> {
        self.runs_for(algorithm)
            .map(|r| r.summary.clone())
            .collect()
    }
}

/// A validated config with its reward model and encoder loaded.
pub struct Experiment {
    config: ExperimentConfig,
    model: Arc<RewardModel>,
    encoder: Arc<dyn Encoder>,
    config_hash: String,
}

impl Experiment {
    /// Loads a config file, resolving relative paths against its directory.
    pub fn from_config_file(path: &Path) -> Result<Self, HarnessError> {
        let config = ExperimentConfig::load(path)?;
        Self::from_config(config, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn from_config(
        mut config: ExperimentConfig,
        base_dir: &Path,
    ) -> Result<Self, HarnessError> {
        config.resolve_paths(base_dir);
        config.validate()?;
        let model = RewardModel::load(&config.reward_model_path)?;
        let encoder = config.encoder.build(base_dir)?;
        Self::with_parts(config, model, encoder)
    }

    /// Assembles an experiment from already-built parts. Paths in `config`
    /// are used as given.
    pub fn with_parts(
        config: ExperimentConfig,
        model: RewardModel,
        encoder: Arc<dyn Encoder>,
    ) -> Result<Self, HarnessError> {
        config.validate()?;
        if encoder.dim() != config.encoder.embedding_dim {
            return Err(HarnessError::Config(format!(
                "encoder produces dimension {}, config says {}",
                encoder.dim(),
                config.encoder.embedding_dim
            )));
        }
        let config_hash = config.hash();
        Ok(Self {
            config,
            model: Arc::new(model),
            encoder,
            config_hash,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn model(&self) -> &RewardModel {
        &self.model
    }

    pub fn encoder(&self) -> &dyn Encoder {
        self.encoder.as_ref()
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn run_id(&self, algorithm: &str, seed: u64) -> RunId {
        RunId {
            algorithm: algorithm.to_owned(),
            seed,
            config_hash: self.config_hash.clone(),
        }
    }

    pub fn build_policy(&self, algorithm: &AlgorithmSpec) -> Result<Box<dyn Policy>, HarnessError> {
        Ok(algorithm.build(self.model.num_actions(), self.encoder.dim())?)
    }

    /// Runs a fresh policy for `algorithm` under `seed`.
    pub fn run_single(
        &self,
        algorithm: &AlgorithmSpec,
        seed: u64,
    ) -> Result<TrialLog, HarnessError> {
        let mut policy = self.build_policy(algorithm)?;
        self.run_with_policy(policy.as_mut(), seed)
    }

    /// Drives an arbitrary policy through `config.trials` rounds.
    pub fn run_with_policy(
        &self,
        policy: &mut dyn Policy,
        seed: u64,
    ) -> Result<TrialLog, HarnessError> {
        let model = &self.model;
        if policy.num_actions() != model.num_actions() {
            return Err(HarnessError::Config(format!(
                "policy {} has {} actions, model has {}",
                policy.name(),
                policy.num_actions(),
                model.num_actions()
            )));
        }
        let mut context_rng = new_rng(seed, ENV_CONTEXT);
        let mut reward_rng = new_rng(seed, ENV_REWARD);
        let mut policy_rng = new_rng(seed, POLICY);
        let mut embeddings: Vec<Option<EmbeddingVector>> = vec![None; model.num_contexts()];
        let mut log = TrialLog::with_capacity(self.config.trials);

        for _ in 0..self.config.trials {
            let context = model.sample_context(&mut context_rng);
            let embedding = match &mut embeddings[context.id] {
                Some(e) => e,
                slot @ None => slot.insert(self.encoder.encode(&context)?),
            };
            let action = policy.select(&context, embedding, &mut policy_rng)?;
            let reward = model.sample_reward(context.id, action, &mut reward_rng)?;
            policy.update(&context, embedding, action, reward)?;
            let (_, best_mean) = model.oracle(context.id)?;
            let chosen_mean = model.mean(context.id, action)?;
            log.push(context.id, action.0, reward, best_mean, chosen_mean);
        }
        Ok(log)
    }

    /// Runs every (algorithm, seed) pair, in parallel across runs. Nothing
    /// is returned unless every run succeeds.
    pub fn run_all(&self) -> Result<ExperimentResults, HarnessError> {
        let checkpoints = self.config.checkpoints();
        let jobs: Vec<(&AlgorithmSpec, u64)> = self
            .config
            .algorithms
            .iter()
            .flat_map(|a| self.config.seeds.iter().map(move |&s| (a, s)))
            .collect();
        let runs = jobs
            .into_par_iter()
            .map(|(algorithm, seed)| {
                let log = self.run_single(algorithm, seed)?;
                let mut summary = metrics::accumulate(
                    &log,
                    algorithm.name(),
                    self.model.num_actions(),
                    &checkpoints,
                )?;
                summary.seed = Some(seed);
                log::info!(
                    "{} seed {}: reward {:.3}, regret {:.3}",
                    algorithm.name(),
                    seed,
                    summary.cumulative_reward,
                    summary.cumulative_regret
                );
                Ok(RunResult {
                    id: self.run_id(algorithm.name(), seed),
                    log,
                    summary,
                })
            })
            .collect::<Result<Vec<_>, HarnessError>>()?;
        Ok(ExperimentResults {
            config_hash: self.config_hash.clone(),
            runs,
        })
    }

    /// Runs everything, then publishes the output files.
    pub fn run_experiment(&self) -> Result<ExperimentResults, HarnessError> {
        let results = self.run_all()?;
        write_outputs(self, &results)?;
        Ok(results)
    }
}
