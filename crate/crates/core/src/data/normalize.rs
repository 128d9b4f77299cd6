use super::dataset::Dataset;
use crate::error::{Error, Result};

/// Per-feature min-max scaling fitted on a training split.
///
/// `(v - min) / (max - min)`; constant features map to `0.0`. Values outside
/// the fitted range are not clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    min: Vec<f64>,
    max: Vec<f64>,
}

impl Normalizer {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Result<Self> {
        if min.len() != max.len() {
            return Err(Error::DimensionMismatch {
                expected: min.len(),
                got: max.len(),
            });
        }
        Ok(Self { min, max })
    }

    /// `min = 0`, `max = 1`: leaves values unchanged.
    pub fn identity(d: usize) -> Self {
        Self {
            min: vec![0.0; d],
            max: vec![1.0; d],
        }
    }

    pub fn fit(train: &Dataset) -> Result<Self> {
        let d = train.dim().ok_or(Error::EmptyBatch)?;
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for x in train.instances() {
            for (j, &v) in x.values().iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Ok(Self { min, max })
    }

    pub fn len(&self) -> usize {
        self.min.len()
    }

    pub fn is_empty(&self) -> bool {
        self.min.is_empty()
    }

    pub fn min(&self) -> &[f64] {
        &self.min
    }

    pub fn max(&self) -> &[f64] {
        &self.max
    }

    pub fn apply_values(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: values.len(),
            });
        }
        Ok(values
            .iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&v, (&lo, &hi))| if hi == lo { 0.0 } else { (v - lo) / (hi - lo) })
            .collect())
    }

    /// Maps a normalized vector back to raw units (constant features return `min`).
    pub fn invert_values(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: values.len(),
            });
        }
        Ok(values
            .iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&v, (&lo, &hi))| lo + v * (hi - lo))
            .collect())
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        Ok(ds
            .map_instances(|x| x.replace_values(self.apply_values(x.values())?))?
            .with_normalizer(self.clone()))
    }
}
