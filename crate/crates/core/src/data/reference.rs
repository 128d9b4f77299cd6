use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::net::{LogitVector, NetworkModel};
use crate::rng::{stream, Stream};

/// How training instances qualify for the target-class reference set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Membership {
    /// The model's argmax equals the target class.
    #[default]
    Predicted,
    /// The ground-truth label equals the target class.
    Label,
}

/// Mean logit vector over sampled training instances of one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceLogitStats {
    pub target: usize,
    /// Requested sample count `N`.
    pub requested: usize,
    /// Indices into the training split, in sampling order.
    pub samples: Vec<usize>,
    pub sample_logits: Vec<LogitVector>,
    pub mean_logits: LogitVector,
}

impl ReferenceLogitStats {
    pub fn from_logits(target: usize, samples: Vec<usize>, sample_logits: Vec<LogitVector>) -> Result<Self> {
        let first = sample_logits.first().ok_or(Error::NoReferenceInstances(target))?;
        let k = first.len();
        let mut mean = vec![0.0; k];
        for l in &sample_logits {
            if l.len() != k {
                return Err(Error::DimensionMismatch { expected: k, got: l.len() });
            }
            for (m, v) in mean.iter_mut().zip(l.as_slice()) {
                *m += v;
            }
        }
        let n = sample_logits.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        Ok(Self {
            target,
            requested: sample_logits.len(),
            samples,
            sample_logits,
            mean_logits: LogitVector(mean),
        })
    }

    /// Number of instances actually used (≤ `requested`).
    pub fn count(&self) -> usize {
        self.sample_logits.len()
    }

    pub fn is_shortfall(&self) -> bool {
        self.count() < self.requested
    }
}

/// Samples up to `n` qualifying training instances without replacement and
/// averages their logits.
pub fn sample_reference_set(
    train: &Dataset,
    model: &NetworkModel,
    target: usize,
    n: usize,
    seed: u64,
    membership: Membership,
) -> Result<ReferenceLogitStats> {
    model.check_class(target)?;
    if n == 0 {
        return Err(Error::InvalidConfig("reference sample count N must be at least 1".into()));
    }
    let mut candidates = Vec::new();
    let mut logits = Vec::new();
    for (i, (x, &y)) in train.instances().iter().zip(train.labels()).enumerate() {
        let l = model.forward(x.values())?;
        let qualifies = match membership {
            Membership::Predicted => l.argmax() == target,
            Membership::Label => y == target,
        };
        if qualifies {
            candidates.push(i);
            logits.push(l);
        }
    }
    if candidates.is_empty() {
        return Err(Error::NoReferenceInstances(target));
    }
    let picks: Vec<usize> = if candidates.len() <= n {
        (0..candidates.len()).collect()
    } else {
        let mut rng = stream(seed, Stream::Sampling, target as u64);
        rand::seq::index::sample(&mut rng, candidates.len(), n).into_vec()
    };
    let samples = picks.iter().map(|&p| candidates[p]).collect();
    let sample_logits = picks.iter().map(|&p| logits[p].clone()).collect();
    let mut stats = ReferenceLogitStats::from_logits(target, samples, sample_logits)?;
    stats.requested = n;
    Ok(stats)
}
