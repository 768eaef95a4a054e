//! Deterministic random streams.
//!
//! Every (seed, replicate) pair owns a ChaCha8 key, the first 32 bytes of
//! `SHA-256(seed_le || replicate_le)`. Within a replicate, agent `i` at time
//! step `t` draws from ChaCha stream `(t << 32) | i` of that key. Draws are
//! therefore independent of the order in which agents, steps or replicates
//! are evaluated, and of the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStreams {
    key: [u8; 32],
}

impl RngStreams {
    pub fn new(seed: u64, replicate: u64) -> Self {
        let mut h = Sha256::new();
        h.update(seed.to_le_bytes());
        h.update(replicate.to_le_bytes());
        let digest = h.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest[..32]);
        RngStreams { key }
    }

    /// Stream for `agent` at time step `step`. Both must fit in 32 bits.
    pub fn agent_step(&self, agent: usize, step: u64) -> StreamRng {
        assert!(agent < (1 << 32) && step < (1 << 32), "stream index out of range");
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream((step << 32) | agent as u64);
        rng
    }
}
