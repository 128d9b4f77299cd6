use serde::{Deserialize, Serialize};

use super::loss::LogitNorm;
use crate::data::Membership;
use crate::error::{Error, Result};
use crate::net::GradientOf;

/// The scalar minimized by each composition step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// Logit matching against the target-class reference mean.
    #[default]
    Gradual,
    /// Target-probability maximization with an L2 proximity penalty.
    Wachter,
    /// Same as `Wachter`, always confined to masked coordinates.
    Ablation,
}

impl Objective {
    pub fn name(&self) -> &'static str {
        match self {
            Objective::Gradual => "gradual",
            Objective::Wachter => "wachter",
            Objective::Ablation => "ablation",
        }
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gradual" => Ok(Objective::Gradual),
            "wachter" => Ok(Objective::Wachter),
            "ablation" => Ok(Objective::Ablation),
            other => Err(Error::InvalidConfig(format!("unknown objective `{other}`"))),
        }
    }
}

/// Which coordinates the optimizer may move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    /// Only the units selected by masking steps.
    #[default]
    Masked,
    /// Every feature, starting from the original values, without masking.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankMode {
    /// Rank once on the original instance and take the n-th unit.
    #[default]
    Static,
    /// Re-rank on the current counterfactual each outer iteration.
    Recompute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainConfig {
    /// Target probability that stops the outer loop.
    pub tau: f64,
    /// Adam steps per composition step.
    pub sigma: usize,
    pub lambda: f64,
    /// Total-variation weight (image instances only).
    pub eta: f64,
    pub beta: f64,
    pub reference_count: usize,
    pub lr: f64,
    pub block: Option<(usize, usize)>,
    pub objective: Objective,
    pub scope: Scope,
    pub rank_mode: RankMode,
    pub clamp: bool,
    /// Outer-iteration cap; `None` means one iteration per unit.
    pub max_outer: Option<usize>,
    pub seed: u64,
    pub gradient_of: GradientOf,
    pub logit_norm: LogitNorm,
    /// Keep the composite across outer iterations (`false` redraws masked
    /// coordinates before every composition step).
    pub warm_start: bool,
    pub membership: Membership,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        Self::tabular()
    }
}

impl ExplainConfig {
    pub fn tabular() -> Self {
        Self {
            tau: 0.5,
            sigma: 500,
            lambda: 0.3,
            eta: 0.3,
            beta: 2.0,
            reference_count: 100,
            lr: 0.1,
            block: None,
            objective: Objective::Gradual,
            scope: Scope::Masked,
            rank_mode: RankMode::Static,
            clamp: false,
            max_outer: None,
            seed: 0,
            gradient_of: GradientOf::Probability,
            logit_norm: LogitNorm::Vector,
            warm_start: true,
            membership: Membership::Predicted,
        }
    }

    pub fn image() -> Self {
        Self {
            tau: 0.9,
            sigma: 1000,
            block: Some((4, 4)),
            ..Self::tabular()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return bad(format!("tau must lie in (0, 1), got {}", self.tau));
        }
        if self.sigma == 0 {
            return bad("sigma must be at least 1".into());
        }
        if !(self.lambda >= 0.0 && self.eta >= 0.0) {
            return bad(format!("lambda and eta must be ≥ 0 (got {}, {})", self.lambda, self.eta));
        }
        if self.beta.is_nan() || self.beta <= 0.0 {
            return bad(format!("beta must be > 0, got {}", self.beta));
        }
        if self.lr.is_nan() || self.lr <= 0.0 {
            return bad(format!("lr must be > 0, got {}", self.lr));
        }
        if self.reference_count == 0 {
            return bad("reference count N must be at least 1".into());
        }
        if self.max_outer == Some(0) {
            return bad("max_outer must be at least 1".into());
        }
        if self.scope == Scope::Full && self.objective != Objective::Wachter {
            return bad(format!("scope `full` is only defined for the wachter objective, not {}", self.objective.name()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        ExplainConfig::tabular().validate().unwrap();
        ExplainConfig::image().validate().unwrap();
        assert_eq!(ExplainConfig::image().sigma, 1000);
        assert_eq!(ExplainConfig::tabular().sigma, 500);
    }

    #[test]
    fn invariants_are_enforced() {
        let base = ExplainConfig::tabular();
        for cfg in [
            ExplainConfig { sigma: 0, ..base.clone() },
            ExplainConfig { tau: 1.0, ..base.clone() },
            ExplainConfig { tau: 0.0, ..base.clone() },
            ExplainConfig { lambda: -0.1, ..base.clone() },
            ExplainConfig { beta: 0.0, ..base.clone() },
            ExplainConfig { max_outer: Some(0), ..base.clone() },
            ExplainConfig { scope: Scope::Full, ..base.clone() },
        ] {
            assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))), "{cfg:?}");
        }
    }
}
