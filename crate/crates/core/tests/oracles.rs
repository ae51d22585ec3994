//! Solver, generator and propagator checked against exhaustive enumeration.

mod common;

use std::collections::HashSet;

use common::oracle;
use plsk_core::{
    deconstruct, encode_pair, forward_check, from_grid, gen_pool, is_completable, solve, to_grid, Grid, GridShape, KnowledgeLevel,
    PartialAssignment, SearchConfig, SolveOutcome, UniformEstimator,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cells_of(x: &PartialAssignment) -> Vec<u8> {
    to_grid(x).unwrap().cells().to_vec()
}

fn partial_of(shape: GridShape, cells: &[u8]) -> PartialAssignment {
    from_grid(&Grid::from_cells(shape, cells.to_vec()).unwrap())
}

#[test]
fn enumeration_census() {
    assert_eq!(oracle::all_latin_squares(1).len(), 1);
    assert_eq!(oracle::all_latin_squares(2).len(), 2);
    assert_eq!(oracle::all_latin_squares(3).len(), 12);
    assert_eq!(oracle::all_latin_squares(4).len(), 576);
}

#[test]
fn generator_reaches_every_square() {
    for (n, total) in [(3, 12), (4, 576)] {
        let shape = GridShape::new(n).unwrap();
        let pool = gen_pool(shape, total, 11).unwrap();
        let found: HashSet<Vec<u8>> = pool.solutions().iter().map(|g| g.cells().to_vec()).collect();
        let all: HashSet<Vec<u8>> = oracle::all_latin_squares(n).into_iter().collect();
        assert_eq!(found, all);
    }
}

/// Deconstruction partials, and the same partials with one random value
/// written into a random empty cell so that both verdicts occur.
fn solver_cases(n: usize, count: usize, seed: u64) -> Vec<PartialAssignment> {
    let shape = GridShape::new(n).unwrap();
    let pool = gen_pool(shape, 8, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::new();
    while cases.len() < count {
        let g = &pool.solutions()[rng.gen_range(0..pool.len())];
        let examples = deconstruct(g, rng.gen()).unwrap();
        let e = &examples[rng.gen_range(0..examples.len())];
        cases.push(e.x.clone());
        let cells = cells_of(&e.x);
        let empty: Vec<usize> = (0..n * n).filter(|&i| cells[i] == 0).collect();
        let cell = empty[rng.gen_range(0..empty.len())];
        let mut x = e.x.clone();
        x.set(encode_pair(shape, cell / n, cell % n, rng.gen_range(1..=n)).unwrap());
        cases.push(x);
    }
    cases.truncate(count);
    cases
}

#[test]
fn solver_verdicts_match_enumeration() {
    for n in [3, 4] {
        let squares = oracle::all_latin_squares(n);
        let mut verdicts = [0usize; 2];
        for (i, x) in solver_cases(n, 1000, n as u64).iter().enumerate() {
            let expected = oracle::completable(&cells_of(x), &squares);
            let result = solve(x, &SearchConfig::new(i as u64), &UniformEstimator).unwrap();
            match result.outcome {
                SolveOutcome::Solution(g) => {
                    assert!(expected, "solver completed an uncompletable partial");
                    assert!(g.is_latin_square());
                    assert!(x.is_subset_of(&from_grid(&g)));
                }
                SolveOutcome::Infeasible => assert!(!expected, "solver missed a completion"),
                SolveOutcome::NodeLimit => unreachable!("no node limit set"),
            }
            assert_eq!(is_completable(x).unwrap(), expected);
            verdicts[usize::from(expected)] += 1;
        }
        assert!(verdicts[0] > 0 && verdicts[1] > 0, "n={n}: {verdicts:?}");
    }
}

#[test]
fn forward_check_matches_direct_violations() {
    let n = 3;
    let shape = GridShape::new(n).unwrap();
    let mut partials: HashSet<Vec<u8>> = HashSet::new();
    for square in oracle::all_latin_squares(n) {
        partials.extend(oracle::sub_grids(&square));
    }
    for cells in &partials {
        let x = partial_of(shape, cells);
        let full = forward_check(&x, KnowledgeLevel::RowsCols).unwrap();
        let rows = forward_check(&x, KnowledgeLevel::Rows).unwrap();
        for r in 0..n {
            for c in 0..n {
                for v in 1..=n {
                    let j = encode_pair(shape, r, c, v).unwrap().index();
                    assert_eq!(!full.get(j), oracle::direct_violation(cells, n, r, c, v as u8));
                    assert_eq!(!rows.get(j), oracle::direct_row_violation(cells, n, r, c, v as u8));
                }
            }
        }
    }
}

#[test]
fn masks_shrink_with_knowledge() {
    let shape = GridShape::new(10).unwrap();
    let pool = gen_pool(shape, 20, 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let g = &pool.solutions()[rng.gen_range(0..pool.len())];
        let keep = rng.gen::<f64>();
        let cells: Vec<u8> = g.cells().iter().map(|&v| if rng.gen_bool(keep) { v } else { 0 }).collect();
        let x = partial_of(shape, &cells);
        let none = forward_check(&x, KnowledgeLevel::None).unwrap();
        let rows = forward_check(&x, KnowledgeLevel::Rows).unwrap();
        let full = forward_check(&x, KnowledgeLevel::RowsCols).unwrap();
        assert!(rows.is_subset_of(&none));
        assert!(full.is_subset_of(&rows));
    }
}

#[test]
fn exact_check_agrees_with_search_at_order_ten() {
    let cases = solver_cases(10, 300, 21);
    let mut infeasible = 0;
    for (i, x) in cases.iter().enumerate() {
        let config = SearchConfig::new(i as u64).with_node_limit(200_000);
        let verdict = match solve(x, &config, &UniformEstimator).unwrap().outcome {
            SolveOutcome::Solution(_) => true,
            SolveOutcome::Infeasible => false,
            SolveOutcome::NodeLimit => continue,
        };
        infeasible += usize::from(!verdict);
        assert_eq!(is_completable(x).unwrap(), verdict, "case {i}");
    }
    assert!(infeasible > 0);
}
