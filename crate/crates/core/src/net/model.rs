use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Which scalar of the target class is differentiated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradientOf {
    Logit,
    #[default]
    Probability,
}

/// Dense layer `act(W a + b)` with `W` stored row-major, `outputs × inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
    activation: Activation,
}

impl Layer {
    pub fn new(rows: Vec<Vec<f64>>, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        let outputs = rows.len();
        if outputs == 0 {
            return Err(Error::InvalidNetwork("layer has no output units".into()));
        }
        let inputs = rows[0].len();
        if inputs == 0 {
            return Err(Error::InvalidNetwork("layer has no inputs".into()));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != inputs) {
            return Err(Error::InvalidNetwork(format!(
                "weight row {bad} has {} columns, expected {inputs}",
                rows[bad].len()
            )));
        }
        if bias.len() != outputs {
            return Err(Error::InvalidNetwork(format!(
                "bias has {} entries, expected {outputs}",
                bias.len()
            )));
        }
        Ok(Self {
            inputs,
            outputs,
            weights: rows.into_iter().flatten().collect(),
            bias,
            activation,
        })
    }

    /// He-normal weights, zero bias.
    pub fn random<R: Rng + ?Sized>(
        inputs: usize,
        outputs: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let normal = Normal::new(0.0, (2.0 / inputs as f64).sqrt()).expect("finite std");
        Self {
            inputs,
            outputs,
            weights: (0..inputs * outputs).map(|_| normal.sample(rng)).collect(),
            bias: vec![0.0; outputs],
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn weight_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.weights.chunks(self.inputs)
    }

    pub(crate) fn params_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.weights, &mut self.bias)
    }

    fn pre_activation(&self, a: &[f64]) -> Vec<f64> {
        self.weight_rows()
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(a).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect()
    }
}

/// Pre-softmax class scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogitVector(pub Vec<f64>);

impl LogitVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Lowest index among maximal logits.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.0.iter().enumerate() {
            if v > self.0[best] {
                best = i;
            }
        }
        best
    }

    pub fn probabilities(&self) -> Vec<f64> {
        softmax_prob(&self.0)
    }
}

/// Softmax with max-subtraction.
pub fn softmax_prob(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln()
}

/// Gradient of the mean cross-entropy, one entry per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamGradients {
    pub layers: Vec<LayerGradient>,
    /// Mean cross-entropy over the batch.
    pub loss: f64,
}

impl ParamGradients {
    pub fn max_abs(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias))
            .fold(0.0, |m, g| m.max(g.abs()))
    }
}

struct Trace {
    /// `activations[0]` is the input; `activations[l + 1]` is layer `l`'s output.
    activations: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

/// Layered dense classifier producing `K` logits.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    layers: Vec<Layer>,
}

impl NetworkModel {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidNetwork("no layers".into()));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::InvalidNetwork(format!(
                    "layer {i} outputs {} values but layer {} expects {}",
                    pair[0].outputs,
                    i + 1,
                    pair[1].inputs
                )));
            }
        }
        if layers.last().map(|l| l.activation) != Some(Activation::Identity) {
            return Err(Error::InvalidNetwork(
                "final layer must use the identity activation".into(),
            ));
        }
        Ok(Self { layers })
    }

    /// ReLU MLP with widths `dims[0] → … → dims[n-1]`; the last layer is linear.
    pub fn mlp<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::InvalidNetwork(format!("bad layer widths {dims:?}")));
        }
        let last = dims.len() - 2;
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i == last {
                    Activation::Identity
                } else {
                    Activation::Relu
                };
                Layer::random(w[0], w[1], act, rng)
            })
            .collect();
        Self::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn class_count(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn check_class(&self, class: usize) -> Result<()> {
        if class >= self.class_count() {
            return Err(Error::InvalidClass {
                class,
                classes: self.class_count(),
            });
        }
        Ok(())
    }

    fn trace(&self, x: &[f64]) -> Trace {
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        let mut pre = Vec::with_capacity(self.layers.len());
        activations.push(x.to_vec());
        for layer in &self.layers {
            let z = layer.pre_activation(activations.last().unwrap());
            activations.push(z.iter().map(|&v| layer.activation.apply(v)).collect());
            pre.push(z);
        }
        Trace { activations, pre }
    }

    /// Backpropagates `upstream = dL/dlogits`. Returns `dL/dinput`; when
    /// `params` is given, parameter gradients are accumulated into it scaled
    /// by `scale`.
    fn backward(
        &self,
        trace: &Trace,
        upstream: &[f64],
        mut params: Option<(&mut [LayerGradient], f64)>,
    ) -> Vec<f64> {
        let mut grad = upstream.to_vec();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let gz: Vec<f64> = grad
                .iter()
                .zip(&trace.pre[l])
                .map(|(g, &z)| g * layer.activation.derivative(z))
                .collect();
            let input = &trace.activations[l];
            if let Some((acc, scale)) = params.as_mut() {
                let acc = &mut acc[l];
                for (o, &g) in gz.iter().enumerate() {
                    if g == 0.0 {
                        continue;
                    }
                    let row = &mut acc.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (w, &a) in row.iter_mut().zip(input) {
                        *w += *scale * g * a;
                    }
                    acc.bias[o] += *scale * g;
                }
            }
            let mut next = vec![0.0; layer.inputs];
            for (row, &g) in layer.weight_rows().zip(&gz) {
                if g == 0.0 {
                    continue;
                }
                for (n, &w) in next.iter_mut().zip(row) {
                    *n += w * g;
                }
            }
            grad = next;
        }
        grad
    }

    pub fn forward(&self, x: &[f64]) -> Result<LogitVector> {
        self.check_input(x)?;
        let mut a = x.to_vec();
        for layer in &self.layers {
            a = layer
                .pre_activation(&a)
                .into_iter()
                .map(|z| layer.activation.apply(z))
                .collect();
        }
        Ok(LogitVector(a))
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(self.forward(x)?.argmax())
    }

    pub fn probability(&self, x: &[f64], class: usize) -> Result<f64> {
        self.check_class(class)?;
        Ok(self.forward(x)?.probabilities()[class])
    }

    /// Logits together with the vector-Jacobian product `upstream(logits)ᵀ · ∂logits/∂x`.
    ///
    /// `upstream` receives the logits and returns `dL/dlogits`; this lets a
    /// caller differentiate any scalar function of the logits with a single
    /// forward pass.
    pub fn logits_and_input_vjp<F>(&self, x: &[f64], upstream: F) -> Result<(LogitVector, Vec<f64>)>
    where
        F: FnOnce(&[f64]) -> Vec<f64>,
    {
        self.check_input(x)?;
        let trace = self.trace(x);
        let logits = trace.activations.last().unwrap().clone();
        let g = upstream(&logits);
        if g.len() != logits.len() {
            return Err(Error::DimensionMismatch {
                expected: logits.len(),
                got: g.len(),
            });
        }
        let grad = self.backward(&trace, &g, None);
        Ok((LogitVector(logits), grad))
    }

    /// ∇ₓ of the target logit or target softmax probability.
    pub fn input_gradient(&self, x: &[f64], target: usize, of: GradientOf) -> Result<Vec<f64>> {
        self.check_class(target)?;
        let (_, grad) = self.logits_and_input_vjp(x, |logits| match of {
            GradientOf::Logit => {
                let mut g = vec![0.0; logits.len()];
                g[target] = 1.0;
                g
            }
            GradientOf::Probability => probability_upstream(logits, target),
        })?;
        Ok(grad)
    }

    /// Mean cross-entropy gradient over `batch`.
    pub fn param_gradients(&self, batch: &[(&[f64], usize)]) -> Result<ParamGradients> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let mut acc: Vec<LayerGradient> = self
            .layers
            .iter()
            .map(|l| LayerGradient {
                weights: vec![0.0; l.weights.len()],
                bias: vec![0.0; l.bias.len()],
            })
            .collect();
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        for &(x, label) in batch {
            self.check_input(x)?;
            self.check_class(label)?;
            let trace = self.trace(x);
            let logits = trace.activations.last().unwrap();
            loss += log_sum_exp(logits) - logits[label];
            let mut g = softmax_prob(logits);
            g[label] -= 1.0;
            self.backward(&trace, &g, Some((&mut acc, scale)));
        }
        Ok(ParamGradients {
            layers: acc,
            loss: loss * scale,
        })
    }

    /// Mean cross-entropy, used for finite-difference checks and reporting.
    pub fn cross_entropy(&self, batch: &[(&[f64], usize)]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let mut total = 0.0;
        for &(x, label) in batch {
            self.check_class(label)?;
            let logits = self.forward(x)?;
            total += log_sum_exp(logits.as_slice()) - logits.0[label];
        }
        Ok(total / batch.len() as f64)
    }
}

/// `∂p_t/∂z = p_t (e_t − p)`.
pub(crate) fn probability_upstream(logits: &[f64], target: usize) -> Vec<f64> {
    let p = softmax_prob(logits);
    let pt = p[target];
    p.iter()
        .enumerate()
        .map(|(k, &pk)| if k == target { pt * (1.0 - pk) } else { -pt * pk })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    fn linear(rows: Vec<Vec<f64>>, bias: Vec<f64>) -> NetworkModel {
        NetworkModel::new(vec![Layer::new(rows, bias, Activation::Identity).unwrap()]).unwrap()
    }

    #[test]
    fn single_linear_layer_by_hand() {
        let m = linear(vec![vec![1.0, -2.0, 3.0]], vec![0.0]);
        assert_eq!(m.forward(&[1.0, 1.0, 1.0]).unwrap().0, vec![2.0]);
    }

    #[test]
    fn zero_network_gives_zero_logits() {
        let m = linear(vec![vec![0.0; 4]; 3], vec![0.0; 3]);
        assert_eq!(m.forward(&[0.3, -1.0, 8.0, 2.0]).unwrap().0, vec![0.0; 3]);
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let m = linear(vec![vec![1.0, 2.0]], vec![0.0]);
        assert!(matches!(
            m.forward(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn softmax_cases() {
        assert_eq!(softmax_prob(&[0.0, 0.0]), vec![0.5, 0.5]);
        let p = softmax_prob(&[1000.0, 0.0]);
        assert!(p.iter().all(|v| v.is_finite()));
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1] < 1e-300);
        // exp-normalize evaluated directly, no max shift
        let e: Vec<f64> = [1.0f64, 2.0, 3.0].iter().map(|v| v.exp()).collect();
        let s: f64 = e.iter().sum();
        for (a, b) in softmax_prob(&[1.0, 2.0, 3.0]).iter().zip(e.iter().map(|v| v / s)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_logit_gradient_is_weight_row() {
        let m = linear(vec![vec![0.5, 0.5, 0.5], vec![1.0, -2.0, 3.0]], vec![0.0, 0.0]);
        let g = m.input_gradient(&[0.2, 0.4, 0.9], 1, GradientOf::Logit).unwrap();
        assert_eq!(g, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn dead_relu_gives_zero_gradient() {
        let hidden = Layer::new(vec![vec![-1.0, -1.0], vec![-2.0, 0.0]], vec![-1.0, -1.0], Activation::Relu).unwrap();
        let out = Layer::new(vec![vec![1.0, 1.0], vec![2.0, -1.0]], vec![0.0, 0.0], Activation::Identity).unwrap();
        let m = NetworkModel::new(vec![hidden, out]).unwrap();
        for of in [GradientOf::Logit, GradientOf::Probability] {
            assert_eq!(m.input_gradient(&[0.5, 0.5], 0, of).unwrap(), vec![0.0, 0.0]);
        }
    }

    #[test]
    fn invalid_class_is_rejected() {
        let m = linear(vec![vec![1.0]; 2], vec![0.0; 2]);
        assert!(matches!(
            m.input_gradient(&[1.0], 2, GradientOf::Logit),
            Err(Error::InvalidClass { class: 2, classes: 2 })
        ));
    }

    #[test]
    fn chain_and_final_activation_are_validated() {
        let a = Layer::new(vec![vec![1.0, 1.0]; 3], vec![0.0; 3], Activation::Relu).unwrap();
        let b = Layer::new(vec![vec![1.0; 2]; 2], vec![0.0; 2], Activation::Identity).unwrap();
        assert!(matches!(NetworkModel::new(vec![a.clone(), b]), Err(Error::InvalidNetwork(_))));
        assert!(matches!(NetworkModel::new(vec![a]), Err(Error::InvalidNetwork(_))));
    }

    #[test]
    fn confident_correct_prediction_has_tiny_gradient() {
        let m = linear(vec![vec![40.0, 0.0], vec![-40.0, 0.0]], vec![0.0, 0.0]);
        let g = m.param_gradients(&[(&[1.0, 0.5], 0)]).unwrap();
        assert!(g.max_abs() <= 1e-6, "{}", g.max_abs());
    }

    #[test]
    fn duplicate_batch_matches_single_example() {
        let m = NetworkModel::mlp(&[3, 5, 2], &mut stream(3, Stream::Init, 0)).unwrap();
        let x = [0.1, 0.7, -0.4];
        let one = m.param_gradients(&[(&x, 1)]).unwrap();
        let two = m.param_gradients(&[(&x, 1), (&x, 1)]).unwrap();
        for (a, b) in one.layers.iter().zip(&two.layers) {
            for (u, v) in a.weights.iter().chain(&a.bias).zip(b.weights.iter().chain(&b.bias)) {
                assert!((u - v).abs() <= 1e-15 * u.abs().max(1.0));
            }
        }
    }

    #[test]
    fn empty_batch_is_an_error() {
        let m = linear(vec![vec![1.0]; 2], vec![0.0; 2]);
        assert!(matches!(m.param_gradients(&[]), Err(Error::EmptyBatch)));
    }

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(LogitVector(vec![1.0, 3.0, 3.0]).argmax(), 1);
    }
}
