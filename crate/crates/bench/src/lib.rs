//! Shared fixtures for the benchmarks.

use plsk_core::{build_dataset, gen_pool, Dataset, GridShape};

/// A deduplicated order-`n` dataset from a small pool.
pub fn fixture_dataset(n: usize, pool_size: usize, seed: u64) -> Dataset {
    let shape = GridShape::new(n).expect("valid order");
    let pool = gen_pool(shape, pool_size, seed).expect("pool");
    build_dataset(&pool, 1, seed).expect("dataset").0
}
