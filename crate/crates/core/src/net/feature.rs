use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometry of an instance: a flat vector or a row-major 2-D image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Flat(usize),
    Image { height: usize, width: usize },
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Flat(d) => d,
            Shape::Image { height, width } => height * width,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_image(&self) -> bool {
        matches!(self, Shape::Image { .. })
    }
}

/// A single real-valued instance.
///
/// `bounds` holds the per-feature domain; `None` means every feature lives in
/// `[0, 1]`. Values may leave their bounds (a perturbed or extrapolated
/// instance); that is reported through [`FeatureVector::out_of_bounds`], never
/// rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    values: Vec<f64>,
    shape: Shape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bounds: Option<Vec<(f64, f64)>>,
}

impl FeatureVector {
    pub fn flat(values: Vec<f64>) -> Self {
        let shape = Shape::Flat(values.len());
        Self {
            values,
            shape,
            bounds: None,
        }
    }

    pub fn image(values: Vec<f64>, height: usize, width: usize) -> Result<Self> {
        Self::with_shape(values, Shape::Image { height, width })
    }

    pub fn with_shape(values: Vec<f64>, shape: Shape) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(Error::DimensionMismatch {
                expected: shape.len(),
                got: values.len(),
            });
        }
        Ok(Self {
            values,
            shape,
            bounds: None,
        })
    }

    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.len() != self.values.len() {
            return Err(Error::DimensionMismatch {
                expected: self.values.len(),
                got: bounds.len(),
            });
        }
        self.bounds = Some(bounds);
        Ok(self)
    }

    /// Same shape and bounds, new values.
    pub fn replace_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::DimensionMismatch {
                expected: self.values.len(),
                got: values.len(),
            });
        }
        Ok(Self {
            values,
            shape: self.shape,
            bounds: self.bounds.clone(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn bound(&self, i: usize) -> (f64, f64) {
        self.bounds.as_ref().map_or((0.0, 1.0), |b| b[i])
    }

    pub fn within_bounds(&self, i: usize) -> bool {
        let (lo, hi) = self.bound(i);
        (lo..=hi).contains(&self.values[i])
    }

    pub fn out_of_bounds(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.within_bounds(i)).collect()
    }
}

impl AsRef<[f64]> for FeatureVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}
