//! Seeded random streams.
//!
//! Every consumer of randomness draws from its own named stream derived from
//! one top-level seed, so adding draws in one module never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type Rng64 = ChaCha8Rng;

/// Returns the stream `name` of the generator seeded with `seed`.
pub fn stream(seed: u64, name: &str) -> Rng64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(name.as_bytes()));
    rng
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
