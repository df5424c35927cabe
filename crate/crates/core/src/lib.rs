//! Contextual-bandit experimentation toolkit.
//!
//! Contexts are short text descriptions (weather phrases in the bundled
//! world). An [`encoders::Encoder`] maps each text to a dense vector, a
//! [`policies::Policy`] picks an action from that vector, the
//! [`environment::RewardModel`] samples a Gaussian reward, and the
//! [`metrics`] module turns the per-round log into cumulative reward,
//! cumulative regret and action-frequency summaries. The [`harness`]
//! drives seeded, paired runs of every configured algorithm and writes
//! CSV/JSON outputs.

pub mod encoders;
pub mod environment;
pub mod harness;
pub mod metrics;
pub mod policies;
pub mod rng;
pub mod types;

pub use encoders::{Encoder, EncoderConfig, EncoderError};
pub use environment::{EnvironmentError, RewardModel};
pub use harness::{ExperimentConfig, HarnessError};
pub use metrics::{MetricsError, RunSummary};
pub use policies::{Policy, PolicyError};
pub use rng::{new_rng, RngStream, StreamLabel};
pub use types::{ActionId, ActionSet, Context, EmbeddingVector, TrialLog, TrialRecord};
