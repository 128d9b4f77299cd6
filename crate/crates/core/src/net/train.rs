use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::{AdamParams, AdamState};
use super::model::NetworkModel;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 32,
            lr: 1e-3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: usize,
    pub final_loss: Option<f64>,
    pub train_accuracy: f64,
    pub test_accuracy: Option<f64>,
}

pub fn accuracy(model: &NetworkModel, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut correct = 0usize;
    for (x, &y) in data.instances().iter().zip(data.labels()) {
        if model.predict(x.values())? == y {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Mini-batch Adam on mean cross-entropy. Deterministic for a given seed.
pub fn train(
    model: &mut NetworkModel,
    train: &Dataset,
    test: Option<&Dataset>,
    config: &TrainConfig,
) -> Result<TrainReport> {
    if train.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if config.batch_size == 0 {
        return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
    }
    for ds in std::iter::once(train).chain(test) {
        for &y in ds.labels() {
            model.check_class(y)?;
        }
        for x in ds.instances() {
            model.check_input(x.values())?;
        }
    }

    let params = AdamParams::with_lr(config.lr);
    let mut optimizers: Vec<(AdamState, AdamState)> = model
        .layers()
        .iter()
        .map(|l| {
            (
                AdamState::new(l.weights().len(), params),
                AdamState::new(l.bias().len(), params),
            )
        })
        .collect();

    let mut rng = stream(config.seed, Stream::Shuffle, 0);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut final_loss = None;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<(&[f64], usize)> = chunk
                .iter()
                .map(|&i| (train.instances()[i].values(), train.labels()[i]))
                .collect();
            let grads = model.param_gradients(&batch)?;
            epoch_loss += grads.loss * chunk.len() as f64;
            for ((layer, g), (opt_w, opt_b)) in model
                .layers_mut()
                .iter_mut()
                .zip(&grads.layers)
                .zip(optimizers.iter_mut())
            {
                let (w, b) = layer.params_mut();
                opt_w.step(w, &g.weights)?;
                opt_b.step(b, &g.bias)?;
            }
        }
        final_loss = Some(epoch_loss / train.len() as f64);
    }

    Ok(TrainReport {
        epochs: config.epochs,
        final_loss,
        train_accuracy: accuracy(model, train)?,
        test_accuracy: test.map(|t| accuracy(model, t)).transpose()?,
    })
}
