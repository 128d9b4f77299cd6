//! Dataset ingestion, normalization and reference-set sampling.

mod csv_io;
mod dataset;
mod idx;
mod normalize;
mod reference;
mod synth;

pub use csv_io::{load_csv, read_csv, write_csv};
pub use dataset::{Dataset, Split};
pub use idx::{load_idx, read_idx_images, read_idx_labels, to_byte, write_idx, IMAGES_MAGIC, LABELS_MAGIC};
pub use normalize::Normalizer;
pub use reference::{sample_reference_set, Membership, ReferenceLogitStats};
pub use synth::{synth_gaussian, SynthSpec};
