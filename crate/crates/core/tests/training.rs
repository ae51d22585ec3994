//! Behavioural checks of the training loop on tiny problems.

use plsk_core::neural::{train, TrainConfig};
use plsk_core::{build_dataset, forward_check, gen_pool, Dataset, Example, GridShape, KnowledgeLevel, PairIndex};
use plsk_core::PartialAssignment;

fn small_config() -> TrainConfig {
    TrainConfig {
        hidden: vec![32, 32],
        batch_size: 16,
        init_seed: 3,
        shuffle_seed: 4,
        ..TrainConfig::default()
    }
}

#[test]
fn memorizes_a_single_example() {
    let shape = GridShape::new(3).unwrap();
    let x = PartialAssignment::from_pairs(shape, [PairIndex::new(0), PairIndex::new(13)]).unwrap();
    let data = Dataset::new(shape, vec![Example::new(x, PairIndex::new(25)).unwrap()]).unwrap();
    let config = TrainConfig {
        epochs: 3000,
        ..small_config()
    };
    let mut losses = Vec::new();
    train::<f32>(&data, &config, |s| losses.push(s.mean_loss)).unwrap();
    let windows: Vec<f64> = losses.chunks(100).map(|w| w.iter().sum::<f64>() / w.len() as f64).collect();
    for pair in windows.windows(2).skip(1) {
        assert!(pair[1] < pair[0], "window means {windows:?}");
    }
    assert!(*losses.last().unwrap() < 0.05, "final loss {}", losses.last().unwrap());
}

#[test]
fn mask_penalty_alone_is_learnable() {
    let shape = GridShape::new(3).unwrap();
    let pool = gen_pool(shape, 6, 1).unwrap();
    let (data, _) = build_dataset(&pool, 1, 1).unwrap();
    let config = TrainConfig {
        crossentropy_weight: 0.0,
        lambda: 1.0,
        knowledge_level: KnowledgeLevel::RowsCols,
        epochs: 400,
        ..small_config()
    };
    let model = train::<f32>(&data, &config, |_| {}).unwrap();
    let mut total = 0.0;
    let mut count = 0usize;
    for e in data.examples() {
        let f = model.forward(&e.x).unwrap();
        let c = forward_check(&e.x, KnowledgeLevel::RowsCols).unwrap();
        for (j, fj) in f.iter().enumerate() {
            total += (f64::from(*fj) - f64::from(u8::from(c.get(j)))).abs();
            count += 1;
        }
    }
    let mean = total / count as f64;
    assert!(mean < 0.1, "mean |f - C| = {mean}");
}

#[test]
fn identical_configs_give_identical_weights() {
    let shape = GridShape::new(3).unwrap();
    let pool = gen_pool(shape, 4, 2).unwrap();
    let (data, _) = build_dataset(&pool, 2, 2).unwrap();
    let config = TrainConfig {
        lambda: 0.5,
        knowledge_level: KnowledgeLevel::Rows,
        epochs: 5,
        ..small_config()
    };
    let a = train::<f32>(&data, &config, |_| {}).unwrap();
    let b = train::<f32>(&data, &config, |_| {}).unwrap();
    let bits = |m: &plsk_core::neural::Mlp<f32>| m.params().map(|p| p.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
}
