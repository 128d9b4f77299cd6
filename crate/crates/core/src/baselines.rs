//! Probability-maximizing comparison objectives.
//!
//! Both objectives minimize `−p_t(X') + λ‖X' − X‖₂`. They run on the same
//! masking scaffold, optimizer and stopping rule as the logit-matching
//! objective; `wachter` may additionally run in full scope (every feature
//! free, starting from `X`).

use crate::data::ReferenceLogitStats;
use crate::error::{Error, Result};
use crate::explain::{compose, proximity, run, BinaryMask, ExplainConfig, ExplainSession, Objective};
use crate::net::{probability_upstream, FeatureVector, NetworkModel};

/// `−softmax(f(X'))[c_t] + λ‖X' − X‖₂`.
pub fn wachter_loss(model: &NetworkModel, x_prime: &[f64], x: &[f64], target: usize, lambda: f64) -> Result<f64> {
    if x.len() != x_prime.len() {
        return Err(Error::DimensionMismatch {
            expected: x_prime.len(),
            got: x.len(),
        });
    }
    Ok(-model.probability(x_prime, target)? + lambda * proximity(x_prime, x))
}

/// `−f_ct((1 − M)∘X + M∘C) + λ‖X' − X‖₂`.
pub fn ablation_loss(
    model: &NetworkModel,
    x: &FeatureVector,
    mask: &BinaryMask,
    composite: &[f64],
    target: usize,
    lambda: f64,
) -> Result<f64> {
    if mask.count_ones() == 0 {
        return Err(Error::InvalidConfig("ablation loss needs a non-empty mask".into()));
    }
    let x_prime = compose(x, mask, composite, false)?;
    wachter_loss(model, x_prime.values(), x.values(), target, lambda)
}

/// Value and `∂/∂X'` of `−p_t(X') + λ‖X' − X‖₂`.
pub(crate) fn probability_loss_grad(
    model: &NetworkModel,
    x_prime: &[f64],
    x: &[f64],
    target: usize,
    lambda: f64,
) -> Result<(f64, Vec<f64>)> {
    model.check_class(target)?;
    let mut p = 0.0;
    let (_, mut grad) = model.logits_and_input_vjp(x_prime, |logits| {
        p = crate::net::softmax_prob(logits)[target];
        probability_upstream(logits, target).into_iter().map(|g| -g).collect()
    })?;
    let prox = proximity(x_prime, x);
    if lambda != 0.0 && prox > 0.0 {
        for ((g, a), b) in grad.iter_mut().zip(x_prime).zip(x) {
            *g += lambda * (a - b) / prox;
        }
    }
    Ok((-p + lambda * prox, grad))
}

/// Gradual construction with a probability-maximizing objective.
pub fn run_baseline(
    model: &NetworkModel,
    x: &FeatureVector,
    target: usize,
    reference: &ReferenceLogitStats,
    config: &ExplainConfig,
) -> Result<ExplainSession> {
    if config.objective == Objective::Gradual {
        return Err(Error::InvalidConfig("run_baseline needs the wachter or ablation objective".into()));
    }
    run(model, x, target, reference, config)
}
