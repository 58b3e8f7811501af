//! Keyed random streams.
//!
//! Every random quantity is drawn from a ChaCha stream addressed by
//! `(seed, key)`, so the draws of task `k` never depend on how many other
//! tasks ran before it or on which worker thread it landed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Tags separating the purposes a single user seed is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    MonteCarlo = 1,
    Multistart = 2,
    Walker = 3,
    Padding = 4,
    Fuzz = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Random stream for task `key` of the given purpose under `seed`.
pub fn stream(seed: u64, purpose: Purpose, key: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(purpose as u64)));
    rng.set_stream(key);
    rng
}

/// Stream addressed by two keys, e.g. `(run, robot)`.
pub fn stream2(seed: u64, purpose: Purpose, outer: u64, inner: u64) -> StreamRng {
    stream(splitmix64(seed) ^ splitmix64(outer.wrapping_add(0x5851_f42d)), purpose, inner)
}
