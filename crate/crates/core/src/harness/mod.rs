//! Feasibility testing of estimator suggestions and the regime comparisons
//! built on it.
//!
//! For each test partial, the estimator's most likely surviving pair is
//! asserted and a complete search decides whether the result still extends to
//! a full square. Outcomes are binned by fill level.

mod report;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::grid::{PairIndex, PartialAssignment};
use crate::neural::{NetworkEstimator, TrainRegime};
use crate::propagate::{forward_check, FeasibilityMask, KnowledgeLevel};
use crate::seed::{derive_seed, stream_rng};
use crate::solver::{is_completable, solve, ProbabilityEstimator, SearchConfig, SolveOutcome, UniformEstimator};

pub use report::{ComparisonRow, FeasibilityReport, FillBin, OutcomeTally, ReportMeta, DEFAULT_BAND};

/// Examples scored per batched forward pass during evaluation.
const EVAL_CHUNK: usize = 1024;

/// The estimators being compared.
#[derive(Clone, Copy, Debug)]
pub enum EstimatorKind<'a> {
    /// Every pair equally likely.
    Uniform,
    Network {
        regime: TrainRegime,
        model: &'a NetworkEstimator,
    },
}

impl EstimatorKind<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Uniform => "rnd",
            EstimatorKind::Network { regime, .. } => regime.as_str(),
        }
    }

    pub fn training_level(&self) -> Option<KnowledgeLevel> {
        match self {
            EstimatorKind::Uniform => None,
            EstimatorKind::Network { regime, .. } => Some(regime.level()),
        }
    }
}

impl ProbabilityEstimator for EstimatorKind<'_> {
    fn scores(&self, x: &PartialAssignment) -> Vec<f32> {
        match self {
            EstimatorKind::Uniform => UniformEstimator.scores(x),
            EstimatorKind::Network { model, .. } => model.scores(x),
        }
    }

    fn scores_batch(&self, xs: &[&PartialAssignment]) -> Vec<Vec<f32>> {
        match self {
            EstimatorKind::Uniform => UniformEstimator.scores_batch(xs),
            EstimatorKind::Network { model, .. } => model.scores_batch(xs),
        }
    }

    fn is_uniform(&self) -> bool {
        matches!(self, EstimatorKind::Uniform)
    }
}

/// Result of testing one suggestion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FeastestOutcome {
    Feasible,
    Infeasible,
    /// The mask removed every pair, so nothing could be suggested.
    NoCandidate,
    /// The suggestion targets a cell that is already filled. Such a pair is
    /// not a new assignment and counts as infeasible.
    AssignedCell,
    /// The completion search hit its node limit before reaching a verdict.
    NodeLimit,
}

/// A verdict and how it was reached.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Tested {
    outcome: FeastestOutcome,
    used_fallback: bool,
}

impl FeastestOutcome {
    pub fn bit(self) -> u8 {
        u8::from(self == FeastestOutcome::Feasible)
    }
}

/// Nodes the static-order completion search may expand before the exact
/// check takes over.
pub const DEFAULT_NODE_BUDGET: u64 = 100_000;

/// Search effort available to each completion check.
///
/// The static-order search runs first. If it exhausts `node_limit` and
/// `exact_fallback` is set, [`is_completable`] settles the verdict instead;
/// completability does not depend on search order, so the result is the one
/// an unlimited search would reach.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalLimits {
    pub node_limit: Option<u64>,
    pub exact_fallback: bool,
}

impl Default for EvalLimits {
    fn default() -> Self {
        Self {
            node_limit: Some(DEFAULT_NODE_BUDGET),
            exact_fallback: true,
        }
    }
}

impl EvalLimits {
    pub fn unlimited() -> Self {
        Self {
            node_limit: None,
            exact_fallback: false,
        }
    }
}

/// Tests the estimator's most likely pair under the `eval_level` mask.
///
/// Ties in the maximal score are broken uniformly at random; the tie break and
/// the completion search both derive from `seed`.
pub fn feastest<H: ProbabilityEstimator + ?Sized>(
    x: &PartialAssignment,
    eval_level: KnowledgeLevel,
    h: &H,
    seed: u64,
) -> Result<FeastestOutcome> {
    feastest_limited(x, eval_level, h, seed, EvalLimits::default())
}

pub fn feastest_limited<H: ProbabilityEstimator + ?Sized>(
    x: &PartialAssignment,
    eval_level: KnowledgeLevel,
    h: &H,
    seed: u64,
    limits: EvalLimits,
) -> Result<FeastestOutcome> {
    check_testable(x)?;
    let scores = if h.is_uniform() { None } else { Some(h.scores(x)) };
    Ok(test_suggestion(x, eval_level, scores.as_deref(), seed, limits)?.outcome)
}

fn check_testable(x: &PartialAssignment) -> Result<()> {
    if !x.is_cell_consistent() {
        return Err(Error::Precondition("assignment is not cell consistent".into()));
    }
    if x.fill_level() == x.shape().cells() {
        return Err(Error::Precondition("assignment is already full".into()));
    }
    Ok(())
}

/// Maximal-score pairs among those the mask keeps, compared exactly.
fn best_pairs(mask: &FeasibilityMask, scores: Option<&[f32]>) -> Vec<PairIndex> {
    let Some(scores) = scores else {
        return mask.iter_ones().collect();
    };
    let mut best = Vec::new();
    let mut top = f32::NEG_INFINITY;
    for p in mask.iter_ones() {
        let s = scores[p.index()];
        if s > top {
            top = s;
            best.clear();
            best.push(p);
        } else if s == top {
            best.push(p);
        }
    }
    best
}

/// `scores` is `None` for the uniform estimator.
fn test_suggestion(
    x: &PartialAssignment,
    eval_level: KnowledgeLevel,
    scores: Option<&[f32]>,
    seed: u64,
    limits: EvalLimits,
) -> Result<Tested> {
    let verdict = |outcome| Tested {
        outcome,
        used_fallback: false,
    };
    let shape = x.shape();
    if let Some(s) = scores {
        if s.len() != shape.m() {
            return Err(Error::Shape {
                expected: shape.m(),
                actual: s.len(),
            });
        }
    }
    let mask = forward_check(x, eval_level)?;
    let candidates = best_pairs(&mask, scores);
    let Some(&pick) = candidates.choose(&mut stream_rng(seed, "pick", 0)) else {
        return Ok(verdict(FeastestOutcome::NoCandidate));
    };

    let pair = shape.decode_unchecked(pick.index());
    if x.cell_value(pair.row, pair.col).is_some() {
        return Ok(verdict(FeastestOutcome::AssignedCell));
    }
    let mut extended = x.clone();
    extended.set(pick);

    let mut config = SearchConfig::new(derive_seed(seed, "complete", 0));
    config.node_limit = limits.node_limit;
    Ok(match solve(&extended, &config, &UniformEstimator)?.outcome {
        SolveOutcome::Solution(_) => verdict(FeastestOutcome::Feasible),
        SolveOutcome::Infeasible => verdict(FeastestOutcome::Infeasible),
        SolveOutcome::NodeLimit if limits.exact_fallback => Tested {
            outcome: if is_completable(&extended)? {
                FeastestOutcome::Feasible
            } else {
                FeastestOutcome::Infeasible
            },
            used_fallback: true,
        },
        SolveOutcome::NodeLimit => verdict(FeastestOutcome::NodeLimit),
    })
}

/// Per-example seed used by [`evaluate`] for the example at `index`.
pub fn example_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, "feastest", index as u64)
}

/// Runs [`feastest`] on every test input and bins the results by fill level.
///
/// Targets are ignored. Full inputs are skipped and counted separately.
pub fn evaluate<H: ProbabilityEstimator + ?Sized>(
    test_set: &Dataset,
    eval_level: KnowledgeLevel,
    h: &H,
    seed: u64,
) -> Result<FeasibilityReport> {
    evaluate_limited(test_set, eval_level, h, seed, EvalLimits::default())
}

pub fn evaluate_limited<H: ProbabilityEstimator + ?Sized>(
    test_set: &Dataset,
    eval_level: KnowledgeLevel,
    h: &H,
    seed: u64,
    limits: EvalLimits,
) -> Result<FeasibilityReport> {
    let shape = test_set.shape();
    let meta = ReportMeta {
        estimator: if h.is_uniform() { "rnd" } else { "network" }.to_string(),
        training_level: None,
        eval_level,
        seed,
        node_limit: limits.node_limit,
        exact_fallback: limits.exact_fallback,
        n: shape.n(),
        provenance: Vec::new(),
    };
    let mut report = FeasibilityReport::empty(meta);

    let examples = test_set.examples();
    for (chunk_index, chunk) in examples.chunks(EVAL_CHUNK).enumerate() {
        let base = chunk_index * EVAL_CHUNK;
        let full = shape.cells();
        let testable: Vec<usize> = (0..chunk.len()).filter(|&i| chunk[i].x.fill_level() < full).collect();
        report.tally.skipped_full += (chunk.len() - testable.len()) as u64;

        let scores = if h.is_uniform() {
            None
        } else {
            let xs: Vec<&PartialAssignment> = testable.iter().map(|&i| &chunk[i].x).collect();
            Some(h.scores_batch(&xs))
        };
        let outcomes: Vec<(usize, Tested)> = testable
            .par_iter()
            .enumerate()
            .map(|(k, &i)| {
                let x = &chunk[i].x;
                check_testable(x)?;
                let s = scores.as_ref().map(|s| s[k].as_slice());
                let outcome = test_suggestion(x, eval_level, s, example_seed(seed, base + i), limits)?;
                Ok((x.fill_level(), outcome))
            })
            .collect::<Result<_>>()?;
        for (fill, tested) in outcomes {
            report.record(fill, tested.outcome);
            report.tally.exact_fallback += u64::from(tested.used_fallback);
        }
    }
    Ok(report)
}

/// Every estimator against every evaluation level, uniform baseline first.
///
/// Models are given with the regime they were trained under; their order is
/// kept in the output.
pub fn compare_regimes(
    models: &[(TrainRegime, &NetworkEstimator)],
    test_set: &Dataset,
    eval_levels: &[KnowledgeLevel],
    seed: u64,
    band: (usize, usize),
) -> Result<(Vec<FeasibilityReport>, Vec<ComparisonRow>)> {
    let m = test_set.shape().m();
    if let Some((regime, model)) = models.iter().find(|(_, e)| e.model().output_width() != m) {
        return Err(Error::Precondition(format!(
            "{} model scores {} pairs, test set has {m}",
            regime.as_str(),
            model.model().output_width()
        )));
    }
    let mut kinds = vec![EstimatorKind::Uniform];
    kinds.extend(models.iter().map(|&(regime, model)| EstimatorKind::Network { regime, model }));

    let mut reports = Vec::new();
    let mut rows = Vec::new();
    for kind in &kinds {
        for &level in eval_levels {
            let report = evaluate(test_set, level, kind, seed)?.labelled(kind.name(), kind.training_level());
            rows.push(ComparisonRow::from_report(&report, band));
            reports.push(report);
        }
    }
    Ok((reports, rows))
}

#[cfg(test)]
mod tests;
