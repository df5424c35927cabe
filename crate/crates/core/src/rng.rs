//! Named, seeded random sub-streams.
//!
//! Every stream is a ChaCha8 generator keyed by the 64-bit run seed, with
//! the ChaCha stream id (the 64-bit nonce word) set to the FNV-1a hash of
//! the stream label. ChaCha8 is specified bit-for-bit and endianness
//! independent, so `(seed, label, draw index)` fixes every value on every
//! platform. Distinct labels select distinct keystreams under the same
//! key, which keeps draws in one component from shifting another's.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream used for context arrivals.
pub const ENV_CONTEXT: &str = "env-context";
/// Stream used for Gaussian reward noise.
pub const ENV_REWARD: &str = "env-reward";
/// Stream owned by the policy under test.
pub const POLICY: &str = "policy";

/// The three sub-streams a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamLabel {
    EnvContext,
    EnvReward,
    Policy,
}

impl StreamLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            StreamLabel::EnvContext => ENV_CONTEXT,
            StreamLabel::EnvReward => ENV_REWARD,
            StreamLabel::Policy => POLICY,
        }
    }
}

impl AsRef<str> for StreamLabel {
    fn as_ref(&self) -> &str {
        self.as_str()
    }
}

/// 64-bit FNV-1a.
pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes
        .iter()
        .fold(OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

/// A deterministic pseudo-random stream. Single consumer.
#[derive(Debug, Clone)]
pub struct RngStream {
    label: String,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn label(&self) -> &str {
        &self.label
    }
}

/// Opens the sub-stream `label` of `seed`.
pub fn new_rng(seed: u64, label: impl AsRef<str>) -> RngStream {
    let label = label.as_ref();
    let mut inner = ChaCha8Rng::seed_from_u64(seed);
    inner.set_stream(fnv1a64(label.as_bytes()));
    RngStream {
        label: label.to_owned(),
        inner,
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
