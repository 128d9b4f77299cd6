#![allow(dead_code)]

use gradcf::data::{sample_reference_set, synth_gaussian, Dataset, Membership, ReferenceLogitStats, SynthSpec};
use gradcf::net::{train, Activation, Layer, NetworkModel, TrainConfig};
use gradcf::rng::{stream, Stream};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Dense net with random weights and biases.
pub fn random_model(rng: &mut ChaCha8Rng, dims: &[usize]) -> NetworkModel {
    let n = dims.len() - 1;
    let layers = (0..n)
        .map(|l| {
            let rows = (0..dims[l + 1])
                .map(|_| (0..dims[l]).map(|_| normal(rng) / (dims[l] as f64).sqrt()).collect())
                .collect();
            let bias = (0..dims[l + 1]).map(|_| 0.3 * normal(rng)).collect();
            let act = if l + 1 == n { Activation::Identity } else { Activation::Relu };
            Layer::new(rows, bias, act).unwrap()
        })
        .collect();
    NetworkModel::new(layers).unwrap()
}

pub fn random_dims(rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut dims = vec![rng.random_range(2..9)];
    for _ in 0..rng.random_range(1..3) {
        dims.push(rng.random_range(3..9));
    }
    dims.push(rng.random_range(2..5));
    dims
}

/// Throwaway forward pass: plain loops over the weight rows. Returns the
/// logits and the pre-activation sign pattern of every hidden unit.
pub fn oracle_forward(model: &NetworkModel, x: &[f64]) -> (Vec<f64>, Vec<bool>) {
    let mut a = x.to_vec();
    let mut signs = Vec::new();
    for layer in model.layers() {
        let mut next = Vec::with_capacity(layer.outputs());
        for (row, b) in layer.weight_rows().zip(layer.bias()) {
            let mut z = *b;
            for (w, v) in row.iter().zip(&a) {
                z += w * v;
            }
            match layer.activation() {
                Activation::Relu => {
                    signs.push(z > 0.0);
                    next.push(z.max(0.0));
                }
                Activation::Identity => next.push(z),
            }
        }
        a = next;
    }
    (a, signs)
}

pub fn oracle_softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

/// Trained two-class model on the default 10-feature blobs.
pub struct Synth {
    pub train: Dataset,
    pub test: Dataset,
    pub model: NetworkModel,
}

impl Synth {
    pub fn new(seed: u64) -> Self {
        let (train_ds, test_ds) = synth_gaussian(&SynthSpec {
            seed,
            ..SynthSpec::default()
        })
        .unwrap();
        let mut model = NetworkModel::mlp(&[10, 32, 16, 2], &mut stream(seed, Stream::Init, 0)).unwrap();
        train(
            &mut model,
            &train_ds,
            None,
            &TrainConfig {
                seed,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        Self {
            train: train_ds,
            test: test_ds,
            model,
        }
    }

    pub fn reference(&self, target: usize) -> ReferenceLogitStats {
        sample_reference_set(&self.train, &self.model, target, 100, 0, Membership::Predicted).unwrap()
    }

    /// Test rows predicted as `class`.
    pub fn predicted_as(&self, class: usize) -> Vec<usize> {
        (0..self.test.len())
            .filter(|&i| self.model.predict(self.test.instances()[i].values()).unwrap() == class)
            .collect()
    }
}
