use super::*;
use crate::grid::{encode_pair, Example, GridShape};

fn shape(n: usize) -> GridShape {
    GridShape::new(n).unwrap()
}

fn partial(n: usize, cells: &[(usize, usize, usize)]) -> PartialAssignment {
    let s = shape(n);
    PartialAssignment::from_pairs(s, cells.iter().map(|&(r, c, v)| encode_pair(s, r, c, v).unwrap())).unwrap()
}

/// Puts all its mass on one pair.
struct Peaked(PairIndex);

impl ProbabilityEstimator for Peaked {
    fn scores(&self, x: &PartialAssignment) -> Vec<f32> {
        let mut s = vec![0.1; x.shape().m()];
        s[self.0.index()] = 0.9;
        s
    }
}

fn three_cases() -> Vec<PartialAssignment> {
    vec![
        partial(2, &[(0, 0, 1), (0, 1, 2), (1, 0, 2)]),
        partial(2, &[(0, 0, 1)]),
        partial(2, &[]),
    ]
}

#[test]
fn single_empty_cell_is_always_feasible_under_full_masking() {
    let x = partial(2, &[(0, 0, 1), (0, 1, 2), (1, 0, 2)]);
    for seed in 0..20 {
        for target in 0..8 {
            let h = Peaked(PairIndex::new(target));
            assert_eq!(feastest(&x, KnowledgeLevel::RowsCols, &h, seed).unwrap(), FeastestOutcome::Feasible);
        }
        assert_eq!(
            feastest(&x, KnowledgeLevel::RowsCols, &UniformEstimator, seed).unwrap(),
            FeastestOutcome::Feasible
        );
    }
}

#[test]
fn row_duplicate_suggestion_is_infeasible() {
    let x = partial(2, &[(0, 0, 1)]);
    let h = Peaked(encode_pair(shape(2), 0, 1, 1).unwrap());
    for seed in 0..10 {
        let outcome = feastest(&x, KnowledgeLevel::None, &h, seed).unwrap();
        assert_eq!(outcome, FeastestOutcome::Infeasible);
        assert_eq!(outcome.bit(), 0);
    }
}

#[test]
fn suggestion_in_filled_cell_counts_as_assigned() {
    let x = partial(2, &[(0, 0, 1)]);
    let h = Peaked(encode_pair(shape(2), 0, 0, 2).unwrap());
    assert_eq!(feastest(&x, KnowledgeLevel::None, &h, 0).unwrap(), FeastestOutcome::AssignedCell);
    // The mask removes the filled cell at the Rows level.
    assert_ne!(feastest(&x, KnowledgeLevel::Rows, &h, 0).unwrap(), FeastestOutcome::AssignedCell);
}

#[test]
fn wiped_out_mask_has_no_candidate() {
    // The only empty cell, (1, 0), sees 2 in its row and 1 in its column.
    let x = partial(2, &[(0, 0, 1), (1, 1, 2), (0, 1, 2)]);
    assert_eq!(
        feastest(&x, KnowledgeLevel::RowsCols, &UniformEstimator, 0).unwrap(),
        FeastestOutcome::NoCandidate
    );
}

#[test]
fn full_input_is_rejected() {
    let x = partial(2, &[(0, 0, 1), (0, 1, 2), (1, 0, 2), (1, 1, 1)]);
    assert!(matches!(
        feastest(&x, KnowledgeLevel::None, &UniformEstimator, 0),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn feastest_is_deterministic() {
    let x = partial(3, &[(0, 0, 1), (1, 1, 1)]);
    for seed in 0..10 {
        let a = feastest(&x, KnowledgeLevel::None, &UniformEstimator, seed).unwrap();
        let b = feastest(&x, KnowledgeLevel::None, &UniformEstimator, seed).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn ties_are_broken_among_all_maximal_pairs() {
    let x = partial(2, &[]);
    let mut seen = std::collections::HashSet::new();
    for seed in 0..200 {
        let mask = forward_check(&x, KnowledgeLevel::None).unwrap();
        let best = best_pairs(&mask, None);
        seen.insert(*best.choose(&mut stream_rng(seed, "pick", 0)).unwrap());
    }
    assert_eq!(seen.len(), 8);
}

#[test]
fn empty_test_set_gives_zero_counts() {
    let test = Dataset::new(shape(3), Vec::new()).unwrap();
    let report = evaluate(&test, KnowledgeLevel::None, &UniformEstimator, 1).unwrap();
    assert_eq!(report.bins.len(), 9);
    assert_eq!(report.tested(), 0);
    assert!(report.bins.iter().all(|b| b.ratio().is_none()));
    assert_eq!(report.mean_ratio((0, 8)), None);
}

#[test]
fn evaluate_matches_per_example_results() {
    let s = shape(2);
    let examples: Vec<Example> = three_cases()
        .into_iter()
        .map(|x| {
            let y = (0..8)
                .map(PairIndex::new)
                .find(|&p| {
                    let pair = s.decode(p).unwrap();
                    x.cell_value(pair.row, pair.col).is_none()
                })
                .unwrap();
            Example::new(x, y).unwrap()
        })
        .collect();
    let test = Dataset::new(s, examples.clone()).unwrap();
    let h = Peaked(encode_pair(s, 0, 1, 1).unwrap());
    for level in KnowledgeLevel::ALL {
        let report = evaluate(&test, level, &h, 7).unwrap();
        let mut expected = vec![FillBin::default(); 4];
        for (i, e) in examples.iter().enumerate() {
            let outcome = feastest(&e.x, level, &h, example_seed(7, i)).unwrap();
            let bin = &mut expected[e.x.fill_level()];
            bin.tested += 1;
            bin.feasible += u64::from(outcome.bit());
        }
        assert_eq!(report.bins, expected);
        assert_eq!(report.tested(), 3);
        // Unmasked, the peaked pair lands in a filled cell of the fill-3 case.
        let expected_last = if level == KnowledgeLevel::None { 0.0 } else { 1.0 };
        assert_eq!(report.ratio(3), Some(expected_last));
    }
    // Without masking, the peaked pair duplicates value 1 in row 0.
    let report = evaluate(&test, KnowledgeLevel::None, &h, 7).unwrap();
    assert_eq!(report.bins[1], FillBin { tested: 1, feasible: 0 });
}

#[test]
fn full_examples_are_skipped() {
    let s = shape(2);
    let full = partial(2, &[(0, 0, 1), (0, 1, 2), (1, 0, 2)]);
    // A full square cannot be a valid example target, so construct the
    // dataset entry through an example whose x is complete but y unused.
    let mut x = full.clone();
    x.set(encode_pair(s, 1, 1, 1).unwrap());
    let examples = vec![
        Example::new(full, encode_pair(s, 1, 1, 1).unwrap()).unwrap(),
        Example::new(x, encode_pair(s, 1, 1, 2).unwrap()).unwrap(),
    ];
    let test = Dataset::new(s, examples).unwrap();
    let report = evaluate(&test, KnowledgeLevel::RowsCols, &UniformEstimator, 0).unwrap();
    assert_eq!(report.tally.skipped_full, 1);
    assert_eq!(report.tested(), 1);
}

#[test]
fn report_csv_round_trip() {
    let s = shape(3);
    let pool = crate::datagen::gen_pool(s, 4, 3).unwrap();
    let (data, _) = crate::datagen::build_dataset(&pool, 2, 3).unwrap();
    let mut report = evaluate(&data, KnowledgeLevel::Rows, &UniformEstimator, 5).unwrap();
    report.meta.provenance.push(("config_hash".into(), "abc".into()));
    let mut buf = Vec::new();
    report.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.lines().any(|l| l == "fill,tested,feasible,ratio"));
    assert!(text.lines().take_while(|l| l.starts_with('#')).count() >= 10);
    let back = FeasibilityReport::read_csv(&buf[..]).unwrap();
    assert_eq!(back, report);
    assert_eq!(back.tested() as usize, data.len());
}

#[test]
fn report_csv_rejects_bad_rows() {
    let bad = "# n=1\nfill,tested,feasible,ratio\n0,1,2,\n";
    assert!(matches!(
        FeasibilityReport::read_csv(bad.as_bytes()),
        Err(Error::Parse { line: 3, .. })
    ));
    assert!(FeasibilityReport::read_csv("# n=1\n".as_bytes()).is_err());
}

#[test]
fn mean_ratio_skips_untested_levels() {
    let meta = ReportMeta {
        estimator: "rnd".into(),
        training_level: None,
        eval_level: KnowledgeLevel::None,
        seed: 0,
        node_limit: None,
        exact_fallback: false,
        n: 3,
        provenance: Vec::new(),
    };
    let mut report = FeasibilityReport::empty(meta);
    report.record(2, FeastestOutcome::Feasible);
    report.record(4, FeastestOutcome::Infeasible);
    report.record(4, FeastestOutcome::Feasible);
    report.record(8, FeastestOutcome::Feasible);
    assert_eq!(report.mean_ratio((2, 4)), Some(0.75));
    assert_eq!(report.mean_ratio((5, 7)), None);
}

#[test]
fn node_limit_is_tallied() {
    let s = shape(6);
    let test = Dataset::new(s, vec![Example::new(PartialAssignment::empty(s), PairIndex::new(0)).unwrap()]).unwrap();
    let limits = EvalLimits {
        node_limit: Some(1),
        exact_fallback: false,
    };
    let report = evaluate_limited(&test, KnowledgeLevel::None, &UniformEstimator, 0, limits).unwrap();
    assert_eq!(report.tally.node_limit, 1);
    assert_eq!(report.bins[0], FillBin { tested: 1, feasible: 0 });

    let limits = EvalLimits {
        node_limit: Some(1),
        exact_fallback: true,
    };
    let report = evaluate_limited(&test, KnowledgeLevel::None, &UniformEstimator, 0, limits).unwrap();
    assert_eq!(report.tally.node_limit, 0);
    assert_eq!(report.tally.exact_fallback, 1);
    assert_eq!(report.bins[0], FillBin { tested: 1, feasible: 1 });
}

#[test]
fn compare_regimes_covers_the_grid() {
    use crate::neural::Mlp;
    let s = shape(2);
    let pool = crate::datagen::gen_pool(s, 2, 0).unwrap();
    let (data, _) = crate::datagen::build_dataset(&pool, 1, 0).unwrap();
    let model = NetworkEstimator::new(Mlp::new(&[8, 4, 8], 0).unwrap());
    let models = [(TrainRegime::Agn, &model), (TrainRegime::Full, &model)];
    let levels = [KnowledgeLevel::None, KnowledgeLevel::RowsCols];
    let (reports, rows) = compare_regimes(&models, &data, &levels, 1, (0, 3)).unwrap();
    assert_eq!(reports.len(), 6);
    let names: Vec<&str> = rows.iter().map(|r| r.estimator.as_str()).collect();
    assert_eq!(names, ["rnd", "rnd", "agn", "agn", "full", "full"]);
    assert_eq!(reports[4].meta.training_level, Some(KnowledgeLevel::RowsCols));

    let (single, _) = compare_regimes(&[], &data, &[KnowledgeLevel::Rows], 1, (0, 3)).unwrap();
    assert_eq!(single.len(), 1);

    let wrong = NetworkEstimator::new(Mlp::new(&[27, 4, 27], 0).unwrap());
    assert!(compare_regimes(&[(TrainRegime::Agn, &wrong)], &data, &levels, 1, (0, 3)).is_err());
}
