//! Partial Latin square completion with neural feasibility estimators that
//! learn from solution pools and from constraint propagators.

pub mod datagen;
pub mod error;
pub mod grid;
pub mod harness;
pub mod neural;
pub mod propagate;
pub mod seed;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{
    encode_pair, from_grid, is_latin_consistent, to_grid, Example, Grid, GridShape, Pair, PairIndex,
    PartialAssignment,
};
pub use propagate::{forward_check, FeasibilityMask, KnowledgeLevel};
pub use solver::{
    generate_solution, is_completable, solve, ProbabilityEstimator, SearchConfig, SearchResult, SolveOutcome, UniformEstimator,
};
pub use datagen::{build_dataset, deconstruct, gen_pool, split, BuildStats, Dataset, SolutionPool};
pub use harness::{
    compare_regimes, evaluate, feastest, EstimatorKind, EvalLimits, FeasibilityReport, FeastestOutcome,
};
