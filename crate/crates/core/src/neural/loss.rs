//! Crossentropy over normalized sigmoid outputs plus the squared mask penalty.
//!
//! For scores `f` (sigmoid outputs), target pair `y`, mask `C` and weight
//! `lambda`:
//!
//! ```text
//! Z     = sum_j f_j
//! H     = -ln f_y + ln Z
//! L_sbr = sum_j (C_j - f_j)^2
//! L     = H + lambda * L_sbr
//! ```
//!
//! Both logarithms are floored at [`LOG_FLOOR`].

use super::mlp::{sparse_input, Gradients, Mlp};
use super::real::Real;
use crate::error::{Error, Result};
use crate::grid::{PairIndex, PartialAssignment};
use crate::propagate::FeasibilityMask;

pub const LOG_FLOOR: f64 = 1e-12;

/// Network output for one input; the normalized view divides by `Z`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreVector<T> {
    values: Vec<T>,
}

impl<T: Real> ScoreVector<T> {
    pub fn new(values: Vec<T>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `Z = sum_j f_j`.
    pub fn partition(&self) -> f64 {
        self.values.iter().map(|v| v.as_f64()).sum()
    }

    pub fn normalized(&self) -> Option<Vec<f64>> {
        let z = self.partition();
        (z > 0.0 && z.is_finite()).then(|| self.values.iter().map(|v| v.as_f64() / z).collect())
    }
}

/// Relative weights of the two loss terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub crossentropy: f64,
    pub lambda: f64,
}

impl LossWeights {
    pub fn new(lambda: f64) -> Self {
        Self {
            crossentropy: 1.0,
            lambda,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossParts {
    pub crossentropy: f64,
    pub sbr: f64,
}

impl LossParts {
    pub fn total(&self, weights: LossWeights) -> f64 {
        weights.crossentropy * self.crossentropy + weights.lambda * self.sbr
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::Shape { expected, actual });
    }
    Ok(())
}

pub fn sbr_loss<T: Real>(scores: &[T], mask: &FeasibilityMask) -> Result<f64> {
    check_len(mask.len(), scores.len())?;
    Ok(scores
        .iter()
        .enumerate()
        .map(|(j, f)| {
            let c = if mask.get(j) { 1.0 } else { 0.0 };
            let d = c - f.as_f64();
            d * d
        })
        .sum())
}

fn partition_of<T: Real>(scores: &[T]) -> Result<f64> {
    let z: f64 = scores.iter().map(|v| v.as_f64()).sum();
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Numeric(format!("partition function is {z}")));
    }
    Ok(z)
}

pub fn crossentropy<T: Real>(scores: &[T], y: PairIndex) -> Result<f64> {
    if y.index() >= scores.len() {
        return Err(Error::Range(format!("target {y} >= {}", scores.len())));
    }
    let z = partition_of(scores)?;
    Ok(z.max(LOG_FLOOR).ln() - scores[y.index()].as_f64().max(LOG_FLOOR).ln())
}

pub fn total_loss<T: Real>(scores: &[T], y: PairIndex, mask: &FeasibilityMask, lambda: f64) -> Result<f64> {
    Ok(crossentropy(scores, y)? + lambda * sbr_loss(scores, mask)?)
}

/// Loss terms for one example and the gradient with respect to the output
/// pre-activations, scaled by `scale`, written into `d`.
pub(crate) fn output_gradient<T: Real>(
    scores: &[T],
    y: usize,
    mask: &FeasibilityMask,
    weights: LossWeights,
    scale: f64,
    d: &mut [T],
) -> Result<LossParts> {
    check_len(mask.len(), scores.len())?;
    let z = partition_of(scores)?;
    let fy = scores[y].as_f64();
    let parts = LossParts {
        crossentropy: z.max(LOG_FLOOR).ln() - fy.max(LOG_FLOOR).ln(),
        sbr: sbr_loss(scores, mask)?,
    };

    let inv_z = if z > LOG_FLOOR { 1.0 / z } else { 0.0 };
    let inv_fy = if fy > LOG_FLOOR { 1.0 / fy } else { 0.0 };
    let ce_w = weights.crossentropy;
    let two_lambda = 2.0 * weights.lambda;
    for (j, (dj, &f)) in d.iter_mut().zip(scores).enumerate() {
        let f = f.as_f64();
        let mut dl_df = ce_w * inv_z;
        if j == y {
            dl_df -= ce_w * inv_fy;
        }
        if two_lambda != 0.0 {
            let c = if mask.get(j) { 1.0 } else { 0.0 };
            dl_df += two_lambda * (f - c);
        }
        *dj = T::from_f64(scale * dl_df * f * (1.0 - f));
    }
    Ok(parts)
}

/// Exact gradient of the weighted loss for one example.
pub fn backward<T: Real>(
    model: &Mlp<T>,
    x: &PartialAssignment,
    y: PairIndex,
    mask: &FeasibilityMask,
    weights: LossWeights,
) -> Result<(f64, Gradients<T>)> {
    model.check_input(x)?;
    check_len(model.output_width(), mask.len())?;
    if y.index() >= model.output_width() {
        return Err(Error::Range(format!("target {y} >= {}", model.output_width())));
    }
    let ones = sparse_input(x);
    let inputs: &[&[u32]] = &[&ones];
    let acts = model.forward_chunk(inputs);
    let mut d = vec![T::zero(); model.output_width()];
    let parts = output_gradient(acts.output(), y.index(), mask, weights, 1.0, &mut d)?;
    let mut grads = Gradients::zeros_like(model);
    model.backward_chunk(inputs, &acts, d, &mut grads);
    Ok((parts.total(weights), grads))
}

/// Weighted loss of one example.
pub fn example_loss<T: Real>(
    model: &Mlp<T>,
    x: &PartialAssignment,
    y: PairIndex,
    mask: &FeasibilityMask,
    weights: LossWeights,
) -> Result<f64> {
    let scores = model.forward(x)?;
    Ok(weights.crossentropy * crossentropy(&scores, y)? + weights.lambda * sbr_loss(&scores, mask)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridShape;

    fn mask(bits: &[u8]) -> FeasibilityMask {
        // Masks over a pair space of size n^3; use n = 2 (m = 8) padded with ones.
        let mut full = bits.to_vec();
        full.resize(8, 1);
        FeasibilityMask::from_bits(GridShape::new(2).unwrap(), &full).unwrap()
    }

    #[test]
    fn sbr_examples() {
        let m = mask(&[1, 0, 1, 1, 1, 1, 1, 1]);
        let f: Vec<f64> = m.to_bits().iter().map(|&b| f64::from(b)).collect();
        assert_eq!(sbr_loss(&f, &m).unwrap(), 0.0);

        let ones = mask(&[1; 8]);
        assert!((sbr_loss(&[0.5f64; 8], &ones).unwrap() - 2.0).abs() < 1e-15);

        let m = mask(&[1, 0]);
        let mut f = vec![1.0f64; 8];
        f[0] = 0.9;
        f[1] = 0.2;
        assert!((sbr_loss(&f, &m).unwrap() - 0.05).abs() < 1e-12);
        assert!(sbr_loss(&f[..4], &m).is_err());
    }

    #[test]
    fn crossentropy_examples() {
        for v in [0.3f64, 0.5, 0.9] {
            let f = vec![v; 8];
            assert!((crossentropy(&f, PairIndex::new(2)).unwrap() - 8f64.ln()).abs() < 1e-12);
        }
        let f = [0.8f64, 0.2];
        assert!((crossentropy(&f, PairIndex::new(0)).unwrap() - 0.223_143_551_314_209_7).abs() < 1e-12);
        assert!(crossentropy(&[0.0f64, 0.0], PairIndex::new(0)).is_err());
    }

    #[test]
    fn total_loss_two_pair_example() {
        // Only the first two pairs carry nonzero mass; the mask continues with
        // zeros so the tail contributes nothing to either term.
        let m = FeasibilityMask::from_bits(GridShape::new(2).unwrap(), &[1, 0, 0, 0, 0, 0, 0, 0]).unwrap();
        let mut f = vec![0.0f64; 8];
        f[0] = 0.8;
        f[1] = 0.2;
        let l0 = total_loss(&f, PairIndex::new(0), &m, 0.0).unwrap();
        let l1 = total_loss(&f, PairIndex::new(0), &m, 1.0).unwrap();
        assert!((l0 - 0.2231).abs() < 1e-4);
        assert!((l1 - 0.3031).abs() < 1e-4);
        assert!((l1 - l0 - sbr_loss(&f, &m).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn score_vector_normalizes() {
        let s = ScoreVector::new(vec![0.25f32, 0.75, 0.5, 0.5]);
        let p = s.normalized().unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((s.partition() - 2.0).abs() < 1e-12);
        assert!(ScoreVector::new(vec![0.0f32; 3]).normalized().is_none());
    }
}
