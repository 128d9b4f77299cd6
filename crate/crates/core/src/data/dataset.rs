use serde::{Deserialize, Serialize};

use super::normalize::Normalizer;
use crate::error::{Error, Result};
use crate::net::{FeatureVector, Shape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// Labelled instances sharing one shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    instances: Vec<FeatureVector>,
    labels: Vec<usize>,
    split: Split,
    normalizer: Option<Normalizer>,
    class_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(instances: Vec<FeatureVector>, labels: Vec<usize>, split: Split) -> Result<Self> {
        if instances.len() != labels.len() {
            return Err(Error::CountMismatch {
                images: instances.len(),
                labels: labels.len(),
            });
        }
        if let Some(first) = instances.first() {
            if let Some(bad) = instances.iter().find(|x| x.shape() != first.shape()) {
                return Err(Error::DimensionMismatch {
                    expected: first.len(),
                    got: bad.len(),
                });
            }
        }
        Ok(Self {
            instances,
            labels,
            split,
            normalizer: None,
            class_names: None,
        })
    }

    pub fn with_class_names(mut self, names: Vec<String>) -> Self {
        self.class_names = Some(names);
        self
    }

    pub(crate) fn with_normalizer(mut self, normalizer: Normalizer) -> Self {
        self.normalizer = Some(normalizer);
        self
    }

    pub fn instances(&self) -> &[FeatureVector] {
        &self.instances
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn split(&self) -> Split {
        self.split
    }

    /// The normalization that was applied to this dataset, if any.
    pub fn normalizer(&self) -> Option<&Normalizer> {
        self.normalizer.as_ref()
    }

    pub fn class_names(&self) -> Option<&[String]> {
        self.class_names.as_deref()
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.instances.first().map(FeatureVector::len)
    }

    pub fn shape(&self) -> Option<Shape> {
        self.instances.first().map(FeatureVector::shape)
    }

    /// Largest label plus one.
    pub fn class_count(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    /// The first `n` instances (or all of them).
    pub fn take(&self, n: usize) -> Dataset {
        self.subset(&(0..n.min(self.len())).collect::<Vec<_>>())
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            instances: indices.iter().map(|&i| self.instances[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            split: self.split,
            normalizer: self.normalizer.clone(),
            class_names: self.class_names.clone(),
        }
    }

    pub(crate) fn map_instances<F>(&self, f: F) -> Result<Dataset>
    where
        F: Fn(&FeatureVector) -> Result<FeatureVector>,
    {
        Ok(Dataset {
            instances: self.instances.iter().map(f).collect::<Result<_>>()?,
            labels: self.labels.clone(),
            split: self.split,
            normalizer: self.normalizer.clone(),
            class_names: self.class_names.clone(),
        })
    }
}
