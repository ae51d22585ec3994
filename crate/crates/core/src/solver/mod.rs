//! Randomized depth-first completion of partial Latin squares.
//!
//! At each node the solver forward-checks every unassigned cell, backtracks on
//! a domain wipeout, and otherwise branches on the first unassigned cell in
//! row-major order. Values of the branching cell are tried in an order drawn
//! by weighted sampling without replacement, the weights being the estimator's
//! scores for the surviving pairs of that cell.

mod exact;

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridShape, PairIndex, PartialAssignment};
use crate::propagate::KnowledgeLevel;
use crate::seed::{stream_rng, StreamRng};

pub use exact::is_completable;

/// Scores variable-value pairs given the current partial assignment.
///
/// Scores must be nonnegative and finite; they need not sum to one.
pub trait ProbabilityEstimator: Sync {
    fn scores(&self, x: &PartialAssignment) -> Vec<f32>;

    /// Scores for many inputs at once; implementations backed by dense
    /// algebra override this.
    fn scores_batch(&self, xs: &[&PartialAssignment]) -> Vec<Vec<f32>> {
        xs.iter().map(|x| self.scores(x)).collect()
    }

    /// Whether every pair always receives the same score.
    fn is_uniform(&self) -> bool {
        false
    }
}

/// Equal score for every pair.
#[derive(Clone, Copy, Debug, Default)]
pub struct UniformEstimator;

impl ProbabilityEstimator for UniformEstimator {
    fn scores(&self, x: &PartialAssignment) -> Vec<f32> {
        vec![1.0; x.shape().m()]
    }

    fn is_uniform(&self) -> bool {
        true
    }
}

impl<T: ProbabilityEstimator + ?Sized> ProbabilityEstimator for &T {
    fn scores(&self, x: &PartialAssignment) -> Vec<f32> {
        (**self).scores(x)
    }

    fn scores_batch(&self, xs: &[&PartialAssignment]) -> Vec<Vec<f32>> {
        (**self).scores_batch(xs)
    }

    fn is_uniform(&self) -> bool {
        (**self).is_uniform()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchConfig {
    pub seed: u64,
    /// Maximum number of search nodes; `None` is unlimited.
    pub node_limit: Option<u64>,
    /// Constraints enforced during search. Everything in this crate uses the
    /// full row and column structure.
    pub constraints: KnowledgeLevel,
}

impl SearchConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            node_limit: None,
            constraints: KnowledgeLevel::RowsCols,
        }
    }

    pub fn with_node_limit(mut self, limit: u64) -> Self {
        self.node_limit = Some(limit);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveOutcome {
    Solution(Grid),
    /// The search space was exhausted: no completion exists.
    Infeasible,
    /// The node limit ran out before a verdict was reached.
    NodeLimit,
}

impl SolveOutcome {
    pub fn is_solution(&self) -> bool {
        matches!(self, SolveOutcome::Solution(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchResult {
    pub outcome: SolveOutcome,
    pub nodes: u64,
}

enum Step {
    Found,
    Exhausted,
    Limit,
}

struct Search<'a, H: ?Sized> {
    shape: GridShape,
    cells: Vec<u8>,
    row_used: Vec<u64>,
    col_used: Vec<u64>,
    all_values: u64,
    constraints: KnowledgeLevel,
    estimator: &'a H,
    rng: StreamRng,
    nodes: u64,
    node_limit: Option<u64>,
}

impl<H: ProbabilityEstimator + ?Sized> Search<'_, H> {
    fn domain(&self, cell: usize) -> u64 {
        let n = self.shape.n();
        let mut d = self.all_values;
        match self.constraints {
            KnowledgeLevel::None => {}
            KnowledgeLevel::Rows => d &= !self.row_used[cell / n],
            KnowledgeLevel::RowsCols => d &= !(self.row_used[cell / n] | self.col_used[cell % n]),
        }
        d
    }

    fn assign(&mut self, cell: usize, value: usize) {
        let n = self.shape.n();
        self.cells[cell] = value as u8;
        self.row_used[cell / n] |= 1 << (value - 1);
        self.col_used[cell % n] |= 1 << (value - 1);
    }

    fn unassign(&mut self, cell: usize, value: usize) {
        let n = self.shape.n();
        self.cells[cell] = 0;
        self.row_used[cell / n] &= !(1 << (value - 1));
        self.col_used[cell % n] &= !(1 << (value - 1));
    }

    fn current_assignment(&self) -> PartialAssignment {
        let n = self.shape.n();
        let mut x = PartialAssignment::empty(self.shape);
        for (cell, &v) in self.cells.iter().enumerate() {
            if v != 0 {
                x.set(PairIndex::new(cell * n + v as usize - 1));
            }
        }
        x
    }

    /// Surviving values of `cell` in the order they will be tried.
    fn value_order(&mut self, cell: usize, domain: u64) -> Vec<usize> {
        let n = self.shape.n();
        let mut values: Vec<usize> = (0..n).filter(|v| domain >> v & 1 == 1).map(|v| v + 1).collect();
        let mut weights: Vec<f64> = if self.estimator.is_uniform() {
            vec![1.0; values.len()]
        } else {
            let scores = self.estimator.scores(&self.current_assignment());
            values
                .iter()
                .map(|&v| {
                    let s = f64::from(scores[cell * n + v - 1]);
                    if s.is_finite() && s > 0.0 {
                        s
                    } else {
                        0.0
                    }
                })
                .collect()
        };

        let mut order = Vec::with_capacity(values.len());
        while !values.is_empty() {
            let total: f64 = weights.iter().sum();
            let pick = if total > 0.0 {
                let target = self.rng.gen::<f64>() * total;
                let mut acc = 0.0;
                let mut chosen = None;
                for (i, &w) in weights.iter().enumerate() {
                    acc += w;
                    if w > 0.0 && target < acc {
                        chosen = Some(i);
                        break;
                    }
                }
                // Rounding can leave target == total; take the last positive weight.
                chosen.unwrap_or_else(|| weights.iter().rposition(|&w| w > 0.0).unwrap())
            } else {
                self.rng.gen_range(0..values.len())
            };
            order.push(values.swap_remove(pick));
            weights.swap_remove(pick);
        }
        order
    }

    fn dfs(&mut self) -> Step {
        self.nodes += 1;
        if self.node_limit.is_some_and(|limit| self.nodes > limit) {
            return Step::Limit;
        }

        let mut branch = None;
        for cell in 0..self.cells.len() {
            if self.cells[cell] != 0 {
                continue;
            }
            let d = self.domain(cell);
            if d == 0 {
                return Step::Exhausted;
            }
            if branch.is_none() {
                branch = Some((cell, d));
            }
        }
        let Some((cell, domain)) = branch else {
            return Step::Found;
        };

        for value in self.value_order(cell, domain) {
            self.assign(cell, value);
            match self.dfs() {
                Step::Exhausted => self.unassign(cell, value),
                done => return done,
            }
        }
        Step::Exhausted
    }
}

/// Completes `x` or proves that no completion exists.
pub fn solve<H: ProbabilityEstimator + ?Sized>(
    x: &PartialAssignment,
    config: &SearchConfig,
    estimator: &H,
) -> Result<SearchResult> {
    let shape = x.shape();
    let n = shape.n();
    let mut cells = vec![0u8; shape.cells()];
    let mut row_used = vec![0u64; n];
    let mut col_used = vec![0u64; n];
    let mut conflict = false;
    for p in x.iter_ones() {
        let pair = shape.decode_unchecked(p.index());
        let cell = pair.cell(shape);
        if cells[cell] != 0 {
            return Err(Error::Precondition(format!(
                "cell ({}, {}) assigned twice",
                pair.row, pair.col
            )));
        }
        cells[cell] = pair.value as u8;
        let bit = 1u64 << (pair.value - 1);
        conflict |= match config.constraints {
            KnowledgeLevel::None => false,
            KnowledgeLevel::Rows => row_used[pair.row] & bit != 0,
            KnowledgeLevel::RowsCols => (row_used[pair.row] | col_used[pair.col]) & bit != 0,
        };
        row_used[pair.row] |= bit;
        col_used[pair.col] |= bit;
    }
    if conflict {
        return Ok(SearchResult {
            outcome: SolveOutcome::Infeasible,
            nodes: 0,
        });
    }

    let mut search = Search {
        shape,
        cells,
        row_used,
        col_used,
        all_values: if n == 64 { u64::MAX } else { (1u64 << n) - 1 },
        constraints: config.constraints,
        estimator,
        rng: stream_rng(config.seed, "solve", 0),
        nodes: 0,
        node_limit: config.node_limit,
    };
    let outcome = match search.dfs() {
        Step::Found => {
            let grid = Grid::from_cells(shape, search.cells)?;
            if config.constraints == KnowledgeLevel::RowsCols {
                assert!(grid.is_latin_square(), "solver produced an invalid square");
            }
            SolveOutcome::Solution(grid)
        }
        Step::Exhausted => SolveOutcome::Infeasible,
        Step::Limit => SolveOutcome::NodeLimit,
    };
    Ok(SearchResult {
        outcome,
        nodes: search.nodes,
    })
}

/// A random full Latin square of the given order.
pub fn generate_solution(shape: GridShape, config: &SearchConfig) -> Result<Grid> {
    let result = solve(&PartialAssignment::empty(shape), config, &UniformEstimator)?;
    match result.outcome {
        SolveOutcome::Solution(grid) => Ok(grid),
        SolveOutcome::NodeLimit => Err(Error::Resource(format!(
            "node limit reached after {} nodes while generating a solution",
            result.nodes
        ))),
        SolveOutcome::Infeasible => unreachable!("empty squares are always completable"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{encode_pair, from_grid, is_latin_consistent};

    fn shape(n: usize) -> GridShape {
        GridShape::new(n).unwrap()
    }

    #[test]
    fn order_one() {
        let r = solve(&PartialAssignment::empty(shape(1)), &SearchConfig::new(0), &UniformEstimator).unwrap();
        assert_eq!(r.outcome, SolveOutcome::Solution(Grid::from_rows(&[vec![1]]).unwrap()));
        assert_eq!(generate_solution(shape(1), &SearchConfig::new(7)).unwrap(), Grid::from_rows(&[vec![1]]).unwrap());
    }

    #[test]
    fn order_two_infeasible_diagonal() {
        let s = shape(2);
        let x = PartialAssignment::from_pairs(s, [encode_pair(s, 0, 0, 1).unwrap(), encode_pair(s, 1, 1, 2).unwrap()])
            .unwrap();
        for seed in 0..20 {
            let r = solve(&x, &SearchConfig::new(seed), &UniformEstimator).unwrap();
            assert_eq!(r.outcome, SolveOutcome::Infeasible);
        }
    }

    #[test]
    fn conflicting_input_is_infeasible() {
        let s = shape(3);
        let x = PartialAssignment::from_pairs(s, [encode_pair(s, 0, 0, 1).unwrap(), encode_pair(s, 0, 2, 1).unwrap()])
            .unwrap();
        let r = solve(&x, &SearchConfig::new(0), &UniformEstimator).unwrap();
        assert_eq!(r.outcome, SolveOutcome::Infeasible);
    }

    #[test]
    fn cell_inconsistent_input_is_rejected() {
        let s = shape(2);
        let x = PartialAssignment::from_pairs(s, [encode_pair(s, 0, 0, 1).unwrap(), encode_pair(s, 0, 0, 2).unwrap()])
            .unwrap();
        assert!(matches!(
            solve(&x, &SearchConfig::new(0), &UniformEstimator),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn node_limit_is_reported_separately() {
        let r = solve(
            &PartialAssignment::empty(shape(6)),
            &SearchConfig::new(3).with_node_limit(5),
            &UniformEstimator,
        )
        .unwrap();
        assert_eq!(r.outcome, SolveOutcome::NodeLimit);
        assert!(generate_solution(shape(6), &SearchConfig::new(3).with_node_limit(5)).is_err());
    }

    #[test]
    fn seeds_are_deterministic() {
        let s = shape(6);
        for seed in 0..10 {
            let a = solve(&PartialAssignment::empty(s), &SearchConfig::new(seed), &UniformEstimator).unwrap();
            let b = solve(&PartialAssignment::empty(s), &SearchConfig::new(seed), &UniformEstimator).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn order_ten_solutions_are_latin() {
        for seed in 0..5 {
            let g = generate_solution(shape(10), &SearchConfig::new(seed)).unwrap();
            assert_eq!(g.filled(), 100);
            let x = from_grid(&g);
            assert!(is_latin_consistent(&x));
            assert_eq!(x.fill_level(), 100);
        }
    }

    struct Peaked(usize);

    impl ProbabilityEstimator for Peaked {
        fn scores(&self, x: &PartialAssignment) -> Vec<f32> {
            let mut s = vec![0.0; x.shape().m()];
            s[self.0] = 1.0;
            s
        }
    }

    #[test]
    fn estimator_steers_first_choice() {
        let s = shape(4);
        let target = encode_pair(s, 0, 0, 3).unwrap().index();
        for seed in 0..10 {
            let r = solve(&PartialAssignment::empty(s), &SearchConfig::new(seed), &Peaked(target)).unwrap();
            let SolveOutcome::Solution(g) = r.outcome else { panic!() };
            assert_eq!(g.get(0, 0), Some(3));
        }
    }

    #[test]
    fn all_zero_scores_fall_back_to_uniform() {
        struct Zero;
        impl ProbabilityEstimator for Zero {
            fn scores(&self, x: &PartialAssignment) -> Vec<f32> {
                vec![0.0; x.shape().m()]
            }
        }
        let r = solve(&PartialAssignment::empty(shape(5)), &SearchConfig::new(1), &Zero).unwrap();
        assert!(r.outcome.is_solution());
    }
}
