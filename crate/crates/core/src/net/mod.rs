//! Minimal differentiable feedforward classifier.

mod adam;
mod feature;
mod model;
mod persist;
mod train;

pub use adam::{AdamParams, AdamState};
pub use feature::{FeatureVector, Shape};
pub use model::{
    softmax_prob, Activation, GradientOf, Layer, LayerGradient, LogitVector, NetworkModel,
    ParamGradients,
};
pub(crate) use model::probability_upstream;
pub use persist::{load_model, save_model, ModelFile};
pub use train::{accuracy, train, TrainConfig, TrainReport};
