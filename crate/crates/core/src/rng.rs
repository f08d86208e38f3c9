//! Named child random streams.
//!
//! Every random draw in an experiment comes from a stream keyed by the master
//! seed, a stream name and a list of indices (cell, trial, ...). Results are
//! therefore independent of how trials are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeded root stream.
pub fn root(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Child stream derived from `(seed, name, indices)`.
pub fn child(seed: u64, name: &str, indices: &[u64]) -> StreamRng {
    let mut h = splitmix64(seed);
    for b in name.bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    for &i in indices {
        h = splitmix64(h ^ i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(h);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_key_same_stream() {
        let a: Vec<u64> = child(7, "trial", &[1, 2]).random_iter().take(8).collect();
        let b: Vec<u64> = child(7, "trial", &[1, 2]).random_iter().take(8).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn different_keys_differ() {
        let a: u64 = child(7, "trial", &[1, 2]).random();
        let b: u64 = child(7, "trial", &[2, 1]).random();
        let c: u64 = child(7, "noise", &[1, 2]).random();
        let d: u64 = child(8, "trial", &[1, 2]).random();
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }
}
