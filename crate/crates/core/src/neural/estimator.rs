use super::mlp::Mlp;
use crate::grid::PartialAssignment;
use crate::solver::ProbabilityEstimator;

/// Rows per dense product when scoring many inputs.
const SCORE_CHUNK: usize = 256;

/// A trained network used as a pair scorer.
#[derive(Clone, Debug)]
pub struct NetworkEstimator {
    model: Mlp<f32>,
}

impl NetworkEstimator {
    pub fn new(model: Mlp<f32>) -> Self {
        Self { model }
    }

    pub fn model(&self) -> &Mlp<f32> {
        &self.model
    }
}

impl ProbabilityEstimator for NetworkEstimator {
    fn scores(&self, x: &PartialAssignment) -> Vec<f32> {
        self.model.forward(x).expect("estimator input width matches the network")
    }

    fn scores_batch(&self, xs: &[&PartialAssignment]) -> Vec<Vec<f32>> {
        let m = self.model.output_width();
        let flat = self
            .model
            .forward_batch(xs, SCORE_CHUNK)
            .expect("estimator input width matches the network");
        flat.chunks_exact(m).map(<[f32]>::to_vec).collect()
    }
}
