//! Feed-forward pair scorer, hybrid loss, and training.

mod adam;
mod estimator;
mod io;
mod loss;
mod mlp;
mod real;
mod train;

pub use adam::{Adam, AdamConfig};
pub use estimator::NetworkEstimator;
pub use io::{read_model, write_model, ModelMeta, MODEL_MAGIC, MODEL_VERSION};
pub use loss::{
    backward, crossentropy, example_loss, sbr_loss, total_loss, LossParts, LossWeights, ScoreVector, LOG_FLOOR,
};
pub use mlp::{Gradients, Layer, Mlp, DEFAULT_HIDDEN};
pub use real::Real;
pub use train::{train, EpochStats, TrainConfig, TrainRegime};
