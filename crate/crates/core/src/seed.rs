//! Named random streams derived from a single top-level seed.
//!
//! Every stochastic stage draws from its own stream, `derive_seed(root, name,
//! index)`, so stages can be rerun in isolation and never share state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

pub fn derive_seed(root: u64, stream: &str, index: u64) -> u64 {
    let h = splitmix64(root ^ fnv1a(stream.as_bytes()));
    splitmix64(h ^ splitmix64(index))
}

pub fn stream_rng(root: u64, stream: &str, index: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, stream, index))
}
