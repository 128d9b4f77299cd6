use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Split};
use super::normalize::Normalizer;
use crate::error::{Error, Result};
use crate::net::FeatureVector;
use crate::rng::{stream, Stream};

/// Isotropic unit-variance Gaussian blobs, one per class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub d: usize,
    pub classes: usize,
    pub n_per_class: usize,
    pub n_test_per_class: usize,
    pub separation: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            d: 10,
            classes: 2,
            n_per_class: 200,
            n_test_per_class: 100,
            separation: 6.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    /// Class `c` is centred at `separation · (1 + ⌊c/d⌋) · e_{c mod d}`, so
    /// classes sit on distinct axes whenever `classes ≤ d`.
    pub fn class_mean(&self, class: usize) -> Vec<f64> {
        let mut mean = vec![0.0; self.d];
        mean[class % self.d] = self.separation * (1 + class / self.d) as f64;
        mean
    }
}

/// Returns `(train, test)`, both min-max normalized with the training range.
pub fn synth_gaussian(spec: &SynthSpec) -> Result<(Dataset, Dataset)> {
    if spec.d == 0 || spec.classes < 2 {
        return Err(Error::InvalidConfig(format!(
            "synthetic data needs d ≥ 1 and at least two classes (got d={}, K={})",
            spec.d, spec.classes
        )));
    }
    let mut rng = stream(spec.seed, Stream::Data, 0);
    let mut draw = |per_class: usize, split: Split| -> Result<Dataset> {
        let mut rows: Vec<(Vec<f64>, usize)> = Vec::with_capacity(per_class * spec.classes);
        for c in 0..spec.classes {
            let mean = spec.class_mean(c);
            for _ in 0..per_class {
                let x = mean
                    .iter()
                    .map(|m| m + <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
                    .collect();
                rows.push((x, c));
            }
        }
        rows.shuffle(&mut rng);
        let (xs, ys): (Vec<_>, Vec<_>) = rows.into_iter().map(|(x, y)| (FeatureVector::flat(x), y)).unzip();
        Dataset::new(xs, ys, split)
    };
    let train = draw(spec.n_per_class, Split::Train)?;
    let test = draw(spec.n_test_per_class, Split::Test)?;
    if train.is_empty() {
        return Err(Error::InvalidConfig("n_per_class must be at least 1".into()));
    }
    let norm = Normalizer::fit(&train)?;
    Ok((norm.apply(&train)?, norm.apply(&test)?))
}
