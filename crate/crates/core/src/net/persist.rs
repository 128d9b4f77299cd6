//! JSON model files.
//!
//! ```json
//! {"layers":[{"w":[[...]],"b":[...],"act":"relu"}], "k":K,
//!  "norm":{"min":[...],"max":[...]}}
//! ```
//!
//! Optional keys `shape`, `labels` and `source` carry the image geometry,
//! the class names of CSV data and an opaque description of the training
//! data. Floats are written in shortest round-trip form, so a save/load cycle
//! is bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::feature::Shape;
use super::model::{Activation, Layer, NetworkModel};
use crate::data::Normalizer;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LayerRecord {
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
    act: Activation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NormRecord {
    min: Vec<f64>,
    max: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelRecord {
    layers: Vec<LayerRecord>,
    k: usize,
    norm: NormRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shape: Option<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<serde_json::Value>,
}

/// A network together with the preprocessing needed to feed it raw data.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: NetworkModel,
    pub normalizer: Normalizer,
    pub shape: Shape,
    pub labels: Option<Vec<String>>,
    pub source: Option<serde_json::Value>,
}

impl ModelFile {
    pub fn new(model: NetworkModel, normalizer: Normalizer, shape: Shape) -> Result<Self> {
        let d = model.input_dim();
        if normalizer.len() != d || shape.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: if normalizer.len() != d {
                    normalizer.len()
                } else {
                    shape.len()
                },
            });
        }
        Ok(Self {
            model,
            normalizer,
            shape,
            labels: None,
            source: None,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let record = ModelRecord {
            layers: self
                .model
                .layers()
                .iter()
                .map(|l| LayerRecord {
                    w: l.weight_rows().map(<[f64]>::to_vec).collect(),
                    b: l.bias().to_vec(),
                    act: l.activation(),
                })
                .collect(),
            k: self.model.class_count(),
            norm: NormRecord {
                min: self.normalizer.min().to_vec(),
                max: self.normalizer.max().to_vec(),
            },
            shape: match self.shape {
                Shape::Image { height, width } => Some((height, width)),
                Shape::Flat(_) => None,
            },
            labels: self.labels.clone(),
            source: self.source.clone(),
        };
        serde_json::to_string(&record).map_err(|e| Error::InvalidNetwork(e.to_string()))
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let record: ModelRecord =
            serde_json::from_str(text).map_err(|e| Error::malformed(path, e.to_string()))?;
        let layers = record
            .layers
            .into_iter()
            .map(|l| Layer::new(l.w, l.b, l.act))
            .collect::<Result<Vec<_>>>()?;
        let model = NetworkModel::new(layers)?;
        if model.class_count() != record.k {
            return Err(Error::InvalidNetwork(format!(
                "k = {} but the last layer has {} outputs",
                record.k,
                model.class_count()
            )));
        }
        let normalizer = Normalizer::new(record.norm.min, record.norm.max)?;
        let d = model.input_dim();
        let shape = match record.shape {
            Some((height, width)) => Shape::Image { height, width },
            None => Shape::Flat(d),
        };
        if let Some(labels) = &record.labels {
            if labels.len() > record.k {
                return Err(Error::InvalidNetwork(format!(
                    "{} class labels for {} classes",
                    labels.len(),
                    record.k
                )));
            }
        }
        let mut file = ModelFile::new(model, normalizer, shape)
            .map_err(|e| Error::InvalidNetwork(format!("preprocessing does not fit the network: {e}")))?;
        file.labels = record.labels;
        file.source = record.source;
        Ok(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path)
    }
}

pub fn save_model(model: &NetworkModel, path: impl AsRef<Path>) -> Result<()> {
    let d = model.input_dim();
    ModelFile::new(model.clone(), Normalizer::identity(d), Shape::Flat(d))?.save(path)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<NetworkModel> {
    Ok(ModelFile::load(path)?.model)
}
