use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExplainConfig;
use super::mask::{compose, BinaryMask};
use crate::data::to_byte;
use crate::error::{Error, Result};
use crate::net::{FeatureVector, Shape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    BudgetExhausted,
    /// Only seen on sessions driven step by step.
    InProgress,
}

/// State of one gradual-construction run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplainSession {
    pub original: FeatureVector,
    pub target: usize,
    pub original_class: usize,
    pub mask: BinaryMask,
    pub composite: Vec<f64>,
    pub counterfactual: FeatureVector,
    /// Units in the order they were selected.
    pub selection_order: Vec<usize>,
    /// Static ranking on the original instance (absent for full-scope runs).
    pub ranking: Option<Vec<usize>>,
    pub initial_prob: f64,
    /// Target probability after each outer iteration.
    pub prob_trace: Vec<f64>,
    /// Loss before every inner optimizer step, across all outer iterations.
    pub loss_trace: Vec<f64>,
    /// Loss at the composite left by the last composition step.
    pub final_loss: Option<f64>,
    pub outer_iterations: usize,
    pub outcome: Outcome,
    pub config: ExplainConfig,
}

impl ExplainSession {
    pub fn final_prob(&self) -> f64 {
        self.prob_trace.last().copied().unwrap_or(self.initial_prob)
    }

    pub fn is_success(&self) -> bool {
        self.outcome == Outcome::Success
    }

    /// Rebuilds `X'` from `(X, M, C)`.
    pub fn recompose(&self) -> Result<FeatureVector> {
        compose(&self.original, &self.mask, &self.composite, self.config.clamp)
    }

    pub fn record(&self) -> SessionRecord {
        SessionRecord {
            objective: self.config.objective.name().to_string(),
            target: self.target,
            original_class: self.original_class,
            original: self.original.values().to_vec(),
            counterfactual: self.counterfactual.values().to_vec(),
            mask: self.mask.bits().to_vec(),
            selection_order: self.selection_order.clone(),
            initial_prob: self.initial_prob,
            prob_trace: self.prob_trace.clone(),
            final_loss: self.final_loss,
            outcome: self.outcome,
            shape: self.original.shape(),
            config: self.config.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.record()).expect("session record serializes")
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

/// Exported form of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub objective: String,
    pub target: usize,
    pub original_class: usize,
    pub original: Vec<f64>,
    pub counterfactual: Vec<f64>,
    pub mask: Vec<u8>,
    pub selection_order: Vec<usize>,
    pub initial_prob: f64,
    pub prob_trace: Vec<f64>,
    pub final_loss: Option<f64>,
    pub outcome: Outcome,
    pub shape: Shape,
    pub config: ExplainConfig,
}

/// Binary PGM (P5, maxval 255); values are clamped to `[0, 1]` for display.
pub fn pgm_bytes(image: &FeatureVector) -> Result<Vec<u8>> {
    let Shape::Image { height, width } = image.shape() else {
        return Err(Error::NotImage);
    };
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(image.values().iter().map(|&v| to_byte(v)));
    Ok(out)
}

pub fn write_pgm(path: impl AsRef<Path>, image: &FeatureVector) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, pgm_bytes(image)?).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_header_and_clamping() {
        let img = FeatureVector::image(vec![0.0, 1.0, -0.5, 2.0, 0.5, 1.0], 2, 3).unwrap();
        let bytes = pgm_bytes(&img).unwrap();
        assert!(bytes.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(&bytes[bytes.len() - 6..], &[0, 255, 0, 255, 128, 255]);
        assert!(matches!(pgm_bytes(&FeatureVector::flat(vec![0.0])), Err(Error::NotImage)));
    }
}
