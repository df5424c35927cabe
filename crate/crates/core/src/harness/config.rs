//! Experiment configuration file.
//!
//! Relative paths inside a config file resolve against the directory that
//! holds the file.

use super::HarnessError;
use crate::encoders::{EncoderConfig, EncoderKind};
use crate::metrics::DEFAULT_CHECKPOINTS;
use crate::policies::AlgorithmSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    /// Per-trial logs and the comparison table.
    Csv,
    /// Per-algorithm summaries.
    Json,
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Csv, OutputFormat::Json]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
}

impl OutputConfig {
    pub fn wants(&self, format: OutputFormat) -> bool {
        self.formats.contains(&format)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub reward_model_path: PathBuf,
    #[serde(default)]
    pub encoder: EncoderConfig,
    pub algorithms: Vec<AlgorithmSpec>,
    pub trials: usize,
    pub seeds: Vec<u64>,
    /// Defaults to 250/500/750/1000, keeping those within the run length
    /// (or just the final round when none fit).
    #[serde(default)]
    pub checkpoints: Option<Vec<usize>>,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_json(json: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(json).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let json = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&json).map_err(|e| match e {
            HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn checkpoints(&self) -> Vec<usize> {
        match &self.checkpoints {
            Some(c) => c.clone(),
            None => default_checkpoints(self.trials),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.seeds.is_empty() {
            return bad("seeds must be nonempty".into());
        }
        for (i, s) in self.seeds.iter().enumerate() {
            if self.seeds[..i].contains(s) {
                return bad(format!("duplicate seed {s}"));
            }
        }
        if self.algorithms.is_empty() {
            return bad("algorithms must be nonempty".into());
        }
        for (i, a) in self.algorithms.iter().enumerate() {
            if self.algorithms[..i].iter().any(|b| b.name() == a.name()) {
                return bad(format!("algorithm {} listed twice", a.name()));
            }
            a.validate()
                .map_err(|e| HarnessError::Config(format!("{}: {e}", a.name())))?;
        }
        let checkpoints = self.checkpoints();
        if let Some(c) = checkpoints.iter().find(|&&c| c == 0 || c > self.trials) {
            return bad(format!("checkpoint {c} outside 1..={}", self.trials));
        }
        if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return bad("checkpoints must be strictly increasing".into());
        }
        if self.output.formats.is_empty() {
            return bad("output.formats must name csv and/or json".into());
        }
        self.encoder
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Replaces the seed list with a single seed.
    pub fn override_seed(&mut self, seed: u64) {
        self.seeds = vec![seed];
    }

    /// Sets the run length, dropping explicit checkpoints past it.
    pub fn override_trials(&mut self, trials: usize) {
        self.trials = trials;
        if let Some(c) = &mut self.checkpoints {
            c.retain(|&t| t <= trials);
            if c.is_empty() {
                c.push(trials);
            }
        }
    }

    pub fn override_encoder(&mut self, kind: EncoderKind) {
        self.encoder.kind = kind;
    }

    /// Rewrites relative paths against `base_dir`.
    pub fn resolve_paths(&mut self, base_dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        };
        fix(&mut self.reward_model_path);
        fix(&mut self.output.directory);
        if let Some(p) = &mut self.encoder.table_path {
            fix(p);
        }
        if let Some(p) = self
            .encoder
            .remote
            .as_mut()
            .and_then(|r| r.cache_path.as_mut())
        {
            fix(p);
        }
    }

    /// First 16 hex digits of SHA-256 over the canonical JSON form. The output
    /// directory is left out so relocated runs keep their identity.
    pub fn hash(&self) -> String {
        let mut identity = self.clone();
        identity.output.directory = PathBuf::new();
        let canonical = serde_json::to_string(&identity).expect("config serializes");
        Sha256::digest(canonical.as_bytes())
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

pub fn default_checkpoints(trials: usize) -> Vec<usize> {
    let fitting: Vec<usize> = DEFAULT_CHECKPOINTS
        .iter()
        .copied()
        .filter(|&t| t <= trials)
        .collect();
    if fitting.is_empty() {
        vec![trials]
    } else {
        fitting
    }
}

/// Identifies one (algorithm, seed) run within an experiment.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RunId {
    pub algorithm: String,
    pub seed: u64,
    pub config_hash: String,
}

impl RunId {
    /// Trial-log file name, relative to the output directory.
    pub fn trial_file(&self) -> String {
        trial_file(&self.algorithm, self.seed)
    }
}

pub fn trial_file(algorithm: &str, seed: u64) -> String {
    format!("trials/{algorithm}_seed{seed}.csv")
}

impl fmt::Display for RunId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}-seed{}-{}",
            self.algorithm, self.seed, self.config_hash
        )
    }
}
