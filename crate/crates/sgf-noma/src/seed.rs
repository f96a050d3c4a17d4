//! Deterministic seed derivation.
//!
//! A single master seed fans out to every stochastic consumer through a
//! documented derivation: each consumer owns a `(purpose, indices...)` tag
//! tuple, and its generator is a ChaCha8 stream seeded with a SplitMix64 fold
//! of `master` and the tag words. Changing one consumer's draws therefore
//! never perturbs another's, and per-episode streams make mid-run resumption
//! exact without serializing generator state.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags for derived streams. The discriminant values are part of the
/// reproducibility contract; do not reorder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    /// Cell topology (user counts, positions, GB sub-channel assignment).
    Topology = 1,
    /// Per-slot Rayleigh fading, one stream per episode.
    Fading = 2,
    /// Network weight initialization, one stream per agent.
    Init = 3,
    /// Epsilon-greedy exploration, one stream per (agent, episode).
    Explore = 4,
    /// Replay minibatch sampling, one stream per (agent, episode).
    Replay = 5,
    /// Monte-Carlo slots for baselines and open-loop evaluation.
    MonteCarlo = 6,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Fold `master` and the tag words into a single derived seed.
pub fn derive_seed(master: u64, purpose: Purpose, tags: &[u64]) -> u64 {
    let mut acc = splitmix64(master ^ splitmix64(purpose as u64));
    for &t in tags {
        acc = splitmix64(acc ^ splitmix64(t));
    }
    acc
}

/// Derived ChaCha8 stream for one consumer.
pub fn derive_rng(master: u64, purpose: Purpose, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, purpose, tags))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn streams_are_independent_and_stable() {
        let mut a = derive_rng(7, Purpose::Fading, &[0]);
        let mut b = derive_rng(7, Purpose::Fading, &[1]);
        let mut a2 = derive_rng(7, Purpose::Fading, &[0]);
        assert_ne!(a.next_u64(), b.next_u64());
        let mut a3 = derive_rng(7, Purpose::Fading, &[0]);
        assert_eq!(a2.next_u64(), a3.next_u64());
        let _ = a;
    }

    #[test]
    fn purpose_changes_stream() {
        assert_ne!(
            derive_seed(7, Purpose::Fading, &[3]),
            derive_seed(7, Purpose::Explore, &[3])
        );
        assert_ne!(derive_seed(7, Purpose::Topology, &[]), derive_seed(8, Purpose::Topology, &[]));
    }
}
