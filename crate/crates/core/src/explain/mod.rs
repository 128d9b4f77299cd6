//! Gradual construction: alternate masking and composition steps until the
//! target class is reached.

mod config;
mod engine;
mod loss;
mod mask;
mod session;

pub use config::{ExplainConfig, Objective, RankMode, Scope};
pub use engine::{generate_from_seed, run, Explainer};
pub use loss::{gradual_loss, gradual_loss_grad, proximity, tv_regularizer, LogitNorm};
pub use mask::{compose, rank_features, rank_units, BinaryMask, UnitLayout};
pub use session::{pgm_bytes, write_pgm, ExplainSession, Outcome, SessionRecord};
