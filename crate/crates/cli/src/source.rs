use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gradcf::data::{load_csv, load_idx, synth_gaussian, Dataset, Normalizer, Split, SynthSpec};
use serde::{Deserialize, Serialize};

use crate::args::DataArgs;

const DEFAULT_MNIST_DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/data/mnist");

/// Where a model's data comes from; stored in the model file so later
/// commands can rebuild the same splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DataSource {
    Synth {
        spec: SynthSpec,
    },
    Mnist {
        dir: PathBuf,
        train_limit: Option<usize>,
        test_limit: Option<usize>,
    },
    Csv {
        train: PathBuf,
        test: Option<PathBuf>,
        label_column: String,
    },
}

pub struct Loaded {
    pub train: Dataset,
    pub test: Option<Dataset>,
    pub normalizer: Normalizer,
    pub labels: Option<Vec<String>>,
}

impl DataSource {
    /// Data selection for `train`: `--data` names the training data.
    pub fn for_training(args: &DataArgs, seed: u64) -> Result<Self> {
        let Some(data) = args.data.as_deref() else {
            bail!("--data is required (synth, mnist or a CSV file)");
        };
        Ok(match data {
            "synth" => Self::synth(args, None, seed),
            "mnist" => Self::mnist(args, None),
            path => DataSource::Csv {
                train: PathBuf::from(path),
                test: args.test_data.clone(),
                label_column: args.label_column.clone().unwrap_or_else(|| "label".into()),
            },
        })
    }

    /// Data selection for explanation commands: `--data` names the instances
    /// to explain; reference data default to what the model was trained on.
    pub fn for_model(args: &DataArgs, stored: Option<&DataSource>, seed: u64) -> Result<Self> {
        let Some(data) = args.data.as_deref() else {
            let Some(stored) = stored else {
                bail!("the model file does not record its data; pass --data");
            };
            return Ok(match stored {
                DataSource::Synth { .. } => Self::synth(args, Some(stored), seed),
                DataSource::Mnist { .. } => Self::mnist(args, Some(stored)),
                DataSource::Csv { .. } => stored.clone(),
            });
        };
        Ok(match data {
            "synth" => Self::synth(args, stored, seed),
            "mnist" => Self::mnist(args, stored),
            path => {
                let (stored_train, stored_label) = match stored {
                    Some(DataSource::Csv { train, label_column, .. }) => (Some(train.clone()), Some(label_column.clone())),
                    _ => (None, None),
                };
                let Some(train) = args.train_data.clone().or(stored_train) else {
                    bail!("reference instances are needed; pass --train-data");
                };
                DataSource::Csv {
                    train,
                    test: Some(PathBuf::from(path)),
                    label_column: args.label_column.clone().or(stored_label).unwrap_or_else(|| "label".into()),
                }
            }
        })
    }

    fn synth(args: &DataArgs, stored: Option<&DataSource>, seed: u64) -> Self {
        let mut spec = match stored {
            Some(DataSource::Synth { spec }) => *spec,
            _ => SynthSpec {
                seed,
                ..SynthSpec::default()
            },
        };
        if let Some(v) = args.d {
            spec.d = v;
        }
        if let Some(v) = args.classes {
            spec.classes = v;
        }
        if let Some(v) = args.separation {
            spec.separation = v;
        }
        if let Some(v) = args.n_per_class {
            spec.n_per_class = v;
        }
        if let Some(v) = args.n_test_per_class {
            spec.n_test_per_class = v;
        }
        DataSource::Synth { spec }
    }

    fn mnist(args: &DataArgs, stored: Option<&DataSource>) -> Self {
        let (dir, train_limit, test_limit) = match stored {
            Some(DataSource::Mnist {
                dir,
                train_limit,
                test_limit,
            }) => (dir.clone(), *train_limit, *test_limit),
            _ => (PathBuf::from(DEFAULT_MNIST_DIR), None, None),
        };
        DataSource::Mnist {
            dir: args.mnist_dir.clone().unwrap_or(dir),
            train_limit: args.train_limit.or(train_limit),
            test_limit: args.test_limit.or(test_limit),
        }
    }

    pub fn name(&self) -> String {
        match self {
            DataSource::Synth { .. } => "synth".into(),
            DataSource::Mnist { .. } => "mnist".into(),
            DataSource::Csv { train, test, .. } => stem(test.as_ref().unwrap_or(train)),
        }
    }

    /// Input files this source reads.
    pub fn paths(&self) -> Vec<PathBuf> {
        match self {
            DataSource::Synth { .. } => Vec::new(),
            DataSource::Mnist { dir, .. } => MNIST_FILES.iter().map(|f| dir.join(f)).collect(),
            DataSource::Csv { train, test, .. } => std::iter::once(train.clone()).chain(test.clone()).collect(),
        }
    }

    /// Loads both splits. CSV features are normalized with `normalizer` when
    /// given, otherwise with a range fitted on the training file.
    pub fn load(&self, normalizer: Option<&Normalizer>, labels: Option<&[String]>) -> Result<Loaded> {
        match self {
            DataSource::Synth { spec } => {
                let (train, test) = synth_gaussian(spec)?;
                Ok(Loaded {
                    normalizer: Normalizer::identity(spec.d),
                    train,
                    test: Some(test),
                    labels: None,
                })
            }
            DataSource::Mnist {
                dir,
                train_limit,
                test_limit,
            } => {
                let [ti, tl, si, sl] = MNIST_FILES.map(|f| dir.join(f));
                let mut train = load_idx(&ti, &tl, Split::Train).with_context(|| format!("loading MNIST from {}", dir.display()))?;
                let mut test = load_idx(&si, &sl, Split::Test)?;
                if let Some(n) = train_limit {
                    train = train.take(*n);
                }
                if let Some(n) = test_limit {
                    test = test.take(*n);
                }
                Ok(Loaded {
                    normalizer: Normalizer::identity(28 * 28),
                    train,
                    test: Some(test),
                    labels: None,
                })
            }
            DataSource::Csv {
                train,
                test,
                label_column,
            } => {
                let raw = load_csv(train, label_column, Split::Train, labels)?;
                let normalizer = match normalizer {
                    Some(n) => n.clone(),
                    None => Normalizer::fit(&raw)?,
                };
                let mut names = raw.class_names().map(<[String]>::to_vec);
                let train_ds = normalizer.apply(&raw)?;
                let test_ds = match test {
                    Some(path) => {
                        let raw = load_csv(path, label_column, Split::Test, names.as_deref())?;
                        names = raw.class_names().map(<[String]>::to_vec);
                        Some(normalizer.apply(&raw)?)
                    }
                    None => None,
                };
                Ok(Loaded {
                    train: train_ds,
                    test: test_ds,
                    normalizer,
                    labels: names,
                })
            }
        }
    }
}

const MNIST_FILES: [&str; 4] = [
    "train-images-idx3-ubyte.gz",
    "train-labels-idx1-ubyte.gz",
    "t10k-images-idx3-ubyte.gz",
    "t10k-labels-idx1-ubyte.gz",
];

fn stem(p: &Path) -> String {
    p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned())
}
