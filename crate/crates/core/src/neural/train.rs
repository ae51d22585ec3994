//! Mini-batch training with per-example propagator masks.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::adam::{Adam, AdamConfig};
use super::loss::{output_gradient, LossParts, LossWeights};
use super::mlp::{sparse_input, Gradients, Mlp, DEFAULT_HIDDEN};
use super::real::Real;
use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::propagate::{forward_check, FeasibilityMask, KnowledgeLevel};
use crate::seed::stream_rng;

/// The three trained estimators compared in the experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TrainRegime {
    /// No propagator knowledge, crossentropy only.
    Agn,
    /// Row-level masks with `lambda = 0.01`.
    Rows,
    /// Row and column masks with `lambda = 1`.
    Full,
}

impl TrainRegime {
    pub const ALL: [TrainRegime; 3] = [TrainRegime::Agn, TrainRegime::Rows, TrainRegime::Full];

    pub fn lambda(self) -> f64 {
        match self {
            TrainRegime::Agn => 0.0,
            TrainRegime::Rows => 0.01,
            TrainRegime::Full => 1.0,
        }
    }

    pub fn level(self) -> KnowledgeLevel {
        match self {
            TrainRegime::Agn => KnowledgeLevel::None,
            TrainRegime::Rows => KnowledgeLevel::Rows,
            TrainRegime::Full => KnowledgeLevel::RowsCols,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TrainRegime::Agn => "agn",
            TrainRegime::Rows => "rows",
            TrainRegime::Full => "full",
        }
    }
}

impl fmt::Display for TrainRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TrainRegime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "agn" => Ok(TrainRegime::Agn),
            "rows" | "row" => Ok(TrainRegime::Rows),
            "full" => Ok(TrainRegime::Full),
            _ => Err(Error::Range(format!("unknown regime {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub lambda: f64,
    /// Weight of the crossentropy term; `0` trains on the mask penalty alone.
    pub crossentropy_weight: f64,
    pub knowledge_level: KnowledgeLevel,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub init_seed: u64,
    pub shuffle_seed: u64,
    pub hidden: Vec<usize>,
    /// Rows per dense product; affects speed only.
    pub chunk_size: usize,
    /// Number of partial gradient sums per batch. Partial sums are reduced
    /// in index order, so results depend on this value but not on the
    /// number of threads.
    pub grad_groups: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            crossentropy_weight: 1.0,
            knowledge_level: KnowledgeLevel::None,
            epochs: 1000,
            batch_size: 50_000,
            adam: AdamConfig::default(),
            init_seed: 0,
            shuffle_seed: 0,
            hidden: DEFAULT_HIDDEN.to_vec(),
            chunk_size: 256,
            grad_groups: 4,
        }
    }
}

impl TrainConfig {
    pub fn for_regime(regime: TrainRegime) -> Self {
        Self {
            lambda: regime.lambda(),
            knowledge_level: regime.level(),
            ..Self::default()
        }
    }

    pub fn loss_weights(&self) -> LossWeights {
        LossWeights {
            crossentropy: self.crossentropy_weight,
            lambda: self.lambda,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    pub examples: usize,
    pub mean_loss: f64,
    pub mean_crossentropy: f64,
    pub mean_sbr: f64,
}

/// Training inputs in compressed sparse form with cached masks.
struct Prepared {
    offsets: Vec<usize>,
    indices: Vec<u32>,
    targets: Vec<usize>,
    masks: Vec<FeasibilityMask>,
}

impl Prepared {
    fn new(data: &Dataset, level: KnowledgeLevel) -> Result<Self> {
        let mut offsets = Vec::with_capacity(data.len() + 1);
        let mut indices = Vec::new();
        offsets.push(0);
        for e in data.examples() {
            indices.extend(sparse_input(&e.x));
            offsets.push(indices.len());
        }
        let masks = data
            .examples()
            .par_iter()
            .map(|e| forward_check(&e.x, level))
            .collect::<Result<_>>()?;
        Ok(Self {
            offsets,
            indices,
            targets: data.examples().iter().map(|e| e.y.index()).collect(),
            masks,
        })
    }

    fn input(&self, i: usize) -> &[u32] {
        &self.indices[self.offsets[i]..self.offsets[i + 1]]
    }
}

fn accumulate_group<T: Real>(
    model: &Mlp<T>,
    data: &Prepared,
    chunks: &[&[usize]],
    weights: LossWeights,
) -> Result<(Gradients<T>, LossParts)> {
    let mut grads = Gradients::zeros_like(model);
    let mut parts = LossParts::default();
    let m = model.output_width();
    for chunk in chunks {
        let inputs: Vec<&[u32]> = chunk.iter().map(|&i| data.input(i)).collect();
        let acts = model.forward_chunk(&inputs);
        let mut d = vec![T::zero(); chunk.len() * m];
        for (row, &i) in chunk.iter().enumerate() {
            let p = output_gradient(
                &acts.output()[row * m..(row + 1) * m],
                data.targets[i],
                &data.masks[i],
                weights,
                1.0,
                &mut d[row * m..(row + 1) * m],
            )?;
            parts.crossentropy += p.crossentropy;
            parts.sbr += p.sbr;
        }
        model.backward_chunk(&inputs, &acts, d, &mut grads);
    }
    Ok((grads, parts))
}

/// Loss terms and summed gradients over `batch` (dataset positions).
fn batch_gradients<T: Real>(
    model: &Mlp<T>,
    data: &Prepared,
    batch: &[usize],
    config: &TrainConfig,
) -> Result<(Gradients<T>, LossParts)> {
    let chunks: Vec<&[usize]> = batch.chunks(config.chunk_size.max(1)).collect();
    let groups = config.grad_groups.clamp(1, chunks.len());
    let per_group = chunks.len().div_ceil(groups);
    let weights = config.loss_weights();
    let partials = chunks
        .par_chunks(per_group)
        .map(|group| accumulate_group(model, data, group, weights))
        .collect::<Result<Vec<_>>>()?;
    let mut partials = partials.into_iter();
    let (mut grads, mut parts) = partials.next().expect("non-empty batch");
    for (g, p) in partials {
        grads.add_assign(&g);
        parts.crossentropy += p.crossentropy;
        parts.sbr += p.sbr;
    }
    Ok((grads, parts))
}

/// Trains a fresh network on `train_set`, reporting each epoch to `on_epoch`.
pub fn train<T: Real>(
    train_set: &Dataset,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<Mlp<T>> {
    if train_set.is_empty() {
        return Err(Error::Precondition("empty training set".into()));
    }
    if config.epochs == 0 || config.batch_size == 0 {
        return Err(Error::Range("epochs and batch size must be positive".into()));
    }
    if !(config.lambda >= 0.0) || !(config.crossentropy_weight >= 0.0) {
        return Err(Error::Range("loss weights must be nonnegative".into()));
    }
    let m = train_set.shape().m();
    let mut widths = vec![m];
    widths.extend(&config.hidden);
    widths.push(m);
    let mut model = Mlp::<T>::new(&widths, config.init_seed)?;
    let mut adam = Adam::new(&model, config.adam);
    let data = Prepared::new(train_set, config.knowledge_level)?;
    let weights = config.loss_weights();

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 1..=config.epochs {
        order.sort_unstable();
        order.shuffle(&mut stream_rng(config.shuffle_seed, "shuffle", epoch as u64));
        let mut totals = LossParts::default();
        for batch in order.chunks(config.batch_size) {
            let (mut grads, parts) = batch_gradients(&model, &data, batch, config)?;
            grads.scale(T::from_f64(1.0 / batch.len() as f64));
            adam.update(&mut model, &grads);
            totals.crossentropy += parts.crossentropy;
            totals.sbr += parts.sbr;
        }
        let count = train_set.len() as f64;
        let stats = EpochStats {
            epoch,
            examples: train_set.len(),
            mean_loss: totals.total(weights) / count,
            mean_crossentropy: totals.crossentropy / count,
            mean_sbr: totals.sbr / count,
        };
        log::debug!(
            "epoch {epoch}: loss {:.6} (ce {:.6}, sbr {:.6})",
            stats.mean_loss,
            stats.mean_crossentropy,
            stats.mean_sbr
        );
        on_epoch(&stats);
    }
    Ok(model)
}
