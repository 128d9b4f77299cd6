//! Counterfactual explanations by gradual construction.
//!
//! Given a trained feedforward classifier, an instance and a target class,
//! the engine repeatedly selects the input unit (feature or pixel block) with
//! the largest target-class gradient magnitude and optimizes the values of
//! all selected units so that the instance's logits approach the mean logits
//! of training data classified as the target. It stops once the target
//! probability reaches τ.
//!
//! Modules:
//! - [`net`]: dense ReLU networks, backpropagation, Adam, training, model files
//! - [`data`]: CSV / IDX / synthetic data, min-max normalization, reference sets
//! - [`explain`]: masks, losses and the gradual-construction loop
//! - [`baselines`]: probability-maximizing objectives on the same scaffold
//! - [`metrics`]: φ1, φ2, coherence and logit-distribution diagnostics

pub mod baselines;
pub mod data;
pub mod error;
pub mod explain;
pub mod metrics;
pub mod net;
pub mod rng;

pub use error::{Error, Result};
