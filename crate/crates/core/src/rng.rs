//! Seeded random streams.
//!
//! Every chain, period, and replication draws from its own ChaCha stream
//! whose key is derived from the run seed and a tuple of indices, so results
//! do not depend on the order in which independent pieces are executed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Purposes that get distinct streams for the same indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Simulation = 1,
    InitialPath = 2,
    Chain = 3,
    Moments = 4,
    Derivatives = 5,
    Check = 6,
    PathSampling = 7,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream keyed by `(seed, purpose, indices...)`.
pub fn stream(seed: u64, purpose: Purpose, indices: &[u64]) -> Stream {
    let mut h = splitmix(seed ^ 0x5A0D_5EED);
    h = splitmix(h ^ purpose as u64);
    for &i in indices {
        h = splitmix(h ^ i.wrapping_mul(0xD1B5_4A32_D192_ED03));
    }
    let mut key = [0u8; 32];
    for (k, chunk) in key.chunks_mut(8).enumerate() {
        h = splitmix(h.wrapping_add(k as u64));
        chunk.copy_from_slice(&h.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
