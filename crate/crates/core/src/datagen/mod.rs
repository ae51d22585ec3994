//! Solution pools, deconstruction into training examples, and dataset splits.

mod io;

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{from_grid, Example, Grid, GridShape, PairIndex};
use crate::seed::{derive_seed, stream_rng};
use crate::solver::{generate_solution, SearchConfig};

pub use io::{read_dataset, read_pool, write_dataset, write_pool, DATASET_MAGIC, DATASET_VERSION};

/// Consecutive duplicate draws tolerated by [`gen_pool`] before giving up.
pub const POOL_RETRY_BUDGET: usize = 10_000;

/// Full, pairwise distinct Latin squares of one order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolutionPool {
    shape: GridShape,
    solutions: Vec<Grid>,
}

impl SolutionPool {
    pub fn new(shape: GridShape, solutions: Vec<Grid>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(solutions.len());
        for (i, g) in solutions.iter().enumerate() {
            if g.shape() != shape {
                return Err(Error::Precondition(format!("solution {i} has order {}", g.shape().n())));
            }
            if !g.is_latin_square() {
                return Err(Error::Precondition(format!("solution {i} is not a full Latin square")));
            }
            if !seen.insert(g) {
                return Err(Error::Precondition(format!("solution {i} is a duplicate")));
            }
        }
        Ok(Self { shape, solutions })
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn solutions(&self) -> &[Grid] {
        &self.solutions
    }

    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    /// First `count` solutions.
    pub fn truncated(&self, count: usize) -> Self {
        Self {
            shape: self.shape,
            solutions: self.solutions[..count.min(self.len())].to_vec(),
        }
    }
}

/// Draws `count` distinct random solutions.
///
/// Candidate `i` is produced by the solver seeded from stream `("pool", i)`;
/// candidates are accepted in index order, so the pool does not depend on
/// the number of worker threads.
pub fn gen_pool(shape: GridShape, count: usize, seed: u64) -> Result<SolutionPool> {
    let mut seen = HashSet::with_capacity(count);
    let mut solutions = Vec::with_capacity(count);
    let mut next = 0u64;
    let mut rejected_in_a_row = 0usize;
    while solutions.len() < count {
        let want = count - solutions.len();
        let batch = want.clamp(64, 4096) as u64;
        let candidates = (next..next + batch)
            .into_par_iter()
            .map(|i| generate_solution(shape, &SearchConfig::new(derive_seed(seed, "pool", i))))
            .collect::<Result<Vec<_>>>()?;
        next += batch;
        for g in candidates {
            if solutions.len() == count {
                break;
            }
            if seen.insert(g.clone()) {
                solutions.push(g);
                rejected_in_a_row = 0;
            } else {
                rejected_in_a_row += 1;
                if rejected_in_a_row >= POOL_RETRY_BUDGET {
                    return Err(Error::Resource(format!(
                        "only {} distinct solutions of order {} found after {} consecutive duplicates",
                        solutions.len(),
                        shape.n(),
                        POOL_RETRY_BUDGET
                    )));
                }
            }
        }
    }
    Ok(SolutionPool { shape, solutions })
}

/// Strips a full solution one random assignment at a time.
///
/// Returns `n^2` examples; the `i`-th has fill level `n^2 - 1 - i` and its
/// target is the assignment just removed.
pub fn deconstruct(solution: &Grid, seed: u64) -> Result<Vec<Example>> {
    deconstruct_with(solution, &mut stream_rng(seed, "deconstruct", 0))
}

fn deconstruct_with(solution: &Grid, rng: &mut impl Rng) -> Result<Vec<Example>> {
    if !solution.is_latin_square() {
        return Err(Error::Precondition("deconstruction needs a full Latin square".into()));
    }
    let mut x = from_grid(solution);
    let mut remaining: Vec<PairIndex> = x.iter_ones().collect();
    let mut out = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let i = rng.gen_range(0..remaining.len());
        let y = remaining.swap_remove(i);
        x.clear(y);
        out.push(Example { x: x.clone(), y });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    shape: GridShape,
    examples: Vec<Example>,
}

impl Dataset {
    pub fn new(shape: GridShape, examples: Vec<Example>) -> Result<Self> {
        if let Some(e) = examples.iter().find(|e| e.x.shape() != shape) {
            return Err(Error::Precondition(format!(
                "example of order {} in a dataset of order {}",
                e.x.shape().n(),
                shape.n()
            )));
        }
        Ok(Self {
            shape,
            examples,
        })
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn into_examples(self) -> Vec<Example> {
        self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Drops exact `(x, y)` repeats, keeping first occurrences in order.
    pub fn dedup(&mut self) {
        let mut seen = HashSet::with_capacity(self.examples.len());
        let keep: Vec<bool> = self.examples.iter().map(|e| seen.insert(e)).collect();
        let mut keep = keep.into_iter();
        self.examples.retain(|_| keep.next().unwrap());
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BuildStats {
    pub generated: usize,
    pub kept: usize,
}

/// Deconstructs every pool solution `passes` times and removes duplicates.
///
/// Pass `p` of solution `i` uses stream `("deconstruct", i * passes + p)`.
pub fn build_dataset(pool: &SolutionPool, passes: usize, seed: u64) -> Result<(Dataset, BuildStats)> {
    if pool.is_empty() {
        return Err(Error::Precondition("empty solution pool".into()));
    }
    if passes == 0 {
        return Err(Error::Range("at least one deconstruction pass is required".into()));
    }
    let per_solution: Vec<Vec<Example>> = pool
        .solutions()
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            let mut out = Vec::with_capacity(passes * pool.shape().cells());
            for p in 0..passes {
                let stream = (i * passes + p) as u64;
                out.extend(deconstruct_with(g, &mut stream_rng(seed, "deconstruct", stream))?);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let generated = per_solution.iter().map(Vec::len).sum();
    let mut dataset = Dataset {
        shape: pool.shape(),
        examples: per_solution.into_iter().flatten().collect(),
    };
    dataset.dedup();
    let kept = dataset.len();
    Ok((dataset, BuildStats { generated, kept }))
}

/// Example-level random partition into `(train, test)`.
pub fn split(dataset: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Range(format!("test fraction {test_fraction} not in (0, 1)")));
    }
    if dataset.is_empty() {
        return Err(Error::Precondition("cannot split an empty dataset".into()));
    }
    let n_test = (test_fraction * dataset.len() as f64).round() as usize;
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut stream_rng(seed, "split", 0));
    let mut is_test = vec![false; dataset.len()];
    for &i in &order[..n_test] {
        is_test[i] = true;
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (e, t) in dataset.examples.iter().zip(is_test) {
        if t {
            test.push(e.clone());
        } else {
            train.push(e.clone());
        }
    }
    Ok((
        Dataset {
            shape: dataset.shape,
            examples: train,
        },
        Dataset {
            shape: dataset.shape,
            examples: test,
        },
    ))
}
