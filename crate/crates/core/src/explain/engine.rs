use rand_distr::{Distribution, StandardNormal};

use super::config::{ExplainConfig, Objective, RankMode, Scope};
use super::loss::{gradual_loss_grad, tv_value_grad};
use super::mask::{compose, rank_units, BinaryMask, UnitLayout};
use super::session::{ExplainSession, Outcome};
use crate::baselines::probability_loss_grad;
use crate::data::ReferenceLogitStats;
use crate::error::{Error, Result};
use crate::net::{AdamParams, AdamState, FeatureVector, NetworkModel, Shape};
use crate::rng::{stream, Stream};

/// Runs gradual construction for one model, reference set and configuration.
///
/// The explainer is immutable; sessions own all mutable state, so one
/// explainer may serve many threads.
#[derive(Debug, Clone)]
pub struct Explainer<'a> {
    model: &'a NetworkModel,
    reference: &'a ReferenceLogitStats,
    config: ExplainConfig,
}

impl<'a> Explainer<'a> {
    pub fn new(model: &'a NetworkModel, reference: &'a ReferenceLogitStats, config: ExplainConfig) -> Result<Self> {
        config.validate()?;
        model.check_class(reference.target)?;
        if reference.mean_logits.len() != model.class_count() {
            return Err(Error::DimensionMismatch {
                expected: model.class_count(),
                got: reference.mean_logits.len(),
            });
        }
        Ok(Self {
            model,
            reference,
            config,
        })
    }

    pub fn config(&self) -> &ExplainConfig {
        &self.config
    }

    fn layout(&self, x: &FeatureVector) -> Result<UnitLayout> {
        UnitLayout::for_shape(x.shape(), self.config.block)
    }

    fn max_outer(&self, layout: UnitLayout) -> usize {
        let units = match self.config.scope {
            Scope::Masked => layout.unit_count(),
            Scope::Full => usize::MAX,
        };
        self.config.max_outer.unwrap_or(layout.unit_count()).min(units)
    }

    fn target_prob(&self, x: &FeatureVector, target: usize) -> Result<f64> {
        self.model.probability(x.values(), target)
    }

    /// Fresh session: empty mask, `C ~ N(0, 1)` (full scope: `C = X` with
    /// every feature selected).
    pub fn start(&self, x: &FeatureVector, target: usize) -> Result<ExplainSession> {
        self.model.check_input(x.values())?;
        self.model.check_class(target)?;
        if target != self.reference.target {
            return Err(Error::InvalidConfig(format!(
                "reference set is for class {} but the target is {target}",
                self.reference.target
            )));
        }
        let layout = self.layout(x)?;
        let logits = self.model.forward(x.values())?;
        let initial_prob = logits.probabilities()[target];
        let (mask, composite, ranking) = match self.config.scope {
            Scope::Masked => {
                let mut rng = stream(self.config.seed, Stream::Composite, 0);
                let c: Vec<f64> = (0..x.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
                let ranking = match self.config.rank_mode {
                    RankMode::Static => Some(rank_units(
                        &self.model.input_gradient(x.values(), target, self.config.gradient_of)?,
                        layout,
                    )),
                    RankMode::Recompute => None,
                };
                (BinaryMask::empty(layout), c, ranking)
            }
            Scope::Full => (BinaryMask::full(layout), x.values().to_vec(), None),
        };
        Ok(ExplainSession {
            original: x.clone(),
            target,
            original_class: logits.argmax(),
            counterfactual: compose(x, &mask, &composite, self.config.clamp)?,
            mask,
            composite,
            selection_order: Vec::new(),
            ranking,
            initial_prob,
            prob_trace: Vec::new(),
            loss_trace: Vec::new(),
            final_loss: None,
            outer_iterations: 0,
            outcome: Outcome::InProgress,
            config: self.config.clone(),
        })
    }

    /// Selects the next unit and sets its mask bits. Returns the unit.
    pub fn masking_step(&self, session: &mut ExplainSession) -> Result<usize> {
        let layout = session.mask.layout();
        let units = layout.unit_count();
        let next = match (&session.ranking, self.config.rank_mode) {
            (Some(ranking), RankMode::Static) => ranking.iter().copied().find(|&u| !session.mask.is_unit_set(u)),
            _ => {
                let grad = self.model.input_gradient(
                    session.counterfactual.values(),
                    session.target,
                    self.config.gradient_of,
                )?;
                rank_units(&grad, layout)
                    .into_iter()
                    .find(|&u| !session.mask.is_unit_set(u))
            }
        };
        let unit = next.ok_or(Error::MaskExhausted { units })?;
        session.mask.set_unit(unit);
        session.selection_order.push(unit);
        session.counterfactual = session.recompose()?;
        Ok(unit)
    }

    /// Objective value and gradient with respect to `X'`.
    fn objective(&self, x_prime: &FeatureVector, x: &FeatureVector, target: usize) -> Result<(f64, Vec<f64>)> {
        let cfg = &self.config;
        match cfg.objective {
            Objective::Gradual => {
                let (mut value, mut grad) = gradual_loss_grad(
                    self.model,
                    x_prime.values(),
                    x.values(),
                    self.reference.mean_logits.as_slice(),
                    cfg.lambda,
                    cfg.logit_norm,
                )?;
                if let (Shape::Image { height, width }, true) = (x_prime.shape(), cfg.eta > 0.0) {
                    let (tv, tv_grad) = tv_value_grad(x_prime.values(), height, width, cfg.beta, true);
                    value += cfg.eta * tv;
                    for (g, t) in grad.iter_mut().zip(tv_grad) {
                        *g += cfg.eta * t;
                    }
                }
                Ok((value, grad))
            }
            Objective::Wachter | Objective::Ablation => {
                probability_loss_grad(self.model, x_prime.values(), x.values(), target, cfg.lambda)
            }
        }
    }

    /// σ Adam steps on the masked coordinates of the composite.
    pub fn composition_step(&self, session: &mut ExplainSession) -> Result<()> {
        let masked = session.mask.masked_indices();
        if masked.is_empty() {
            return Err(Error::InvalidConfig("composition step needs at least one masked unit".into()));
        }
        let cfg = &self.config;
        if !cfg.warm_start && cfg.scope == Scope::Masked {
            let mut rng = stream(cfg.seed, Stream::Composite, session.outer_iterations as u64 + 1);
            for &i in &masked {
                session.composite[i] = StandardNormal.sample(&mut rng);
            }
        }
        let start = session.composite.clone();
        let mut adam = AdamState::new(session.composite.len(), AdamParams::with_lr(cfg.lr));
        let outer = session.outer_iterations;
        session.outer_iterations += 1;

        for step in 0..cfg.sigma {
            let x_prime = compose(&session.original, &session.mask, &session.composite, cfg.clamp)?;
            let (loss, grad) = self.objective(&x_prime, &session.original, session.target)?;
            if !loss.is_finite() || masked.iter().any(|&i| !grad[i].is_finite()) {
                session.composite = start;
                session.counterfactual = session.recompose()?;
                return Err(Error::Diverged { outer, step });
            }
            session.loss_trace.push(loss);
            adam.step_indices(&mut session.composite, &grad, &masked)?;
            if cfg.clamp {
                for &i in &masked {
                    let (lo, hi) = session.original.bound(i);
                    session.composite[i] = session.composite[i].clamp(lo, hi);
                }
            }
        }
        session.counterfactual = session.recompose()?;
        let (final_loss, _) = self.objective(&session.counterfactual, &session.original, session.target)?;
        if !final_loss.is_finite() {
            session.composite = start;
            session.counterfactual = session.recompose()?;
            return Err(Error::Diverged { outer, step: cfg.sigma });
        }
        session.final_loss = Some(final_loss);
        Ok(())
    }

    /// Alternates masking and composition until the target probability
    /// reaches τ or the outer budget is spent.
    pub fn run(&self, x: &FeatureVector, target: usize) -> Result<ExplainSession> {
        let mut session = self.start(x, target)?;
        if session.initial_prob >= self.config.tau {
            session.outcome = Outcome::Success;
            return Ok(session);
        }
        let budget = self.max_outer(session.mask.layout());
        for _ in 0..budget {
            if self.config.scope == Scope::Masked {
                self.masking_step(&mut session)?;
            }
            self.composition_step(&mut session)?;
            let p = self.target_prob(&session.counterfactual, target)?;
            session.prob_trace.push(p);
            if p >= self.config.tau {
                session.outcome = Outcome::Success;
                return Ok(session);
            }
        }
        session.outcome = Outcome::BudgetExhausted;
        Ok(session)
    }
}

/// One gradual-construction run.
pub fn run(
    model: &NetworkModel,
    x: &FeatureVector,
    target: usize,
    reference: &ReferenceLogitStats,
    config: &ExplainConfig,
) -> Result<ExplainSession> {
    Explainer::new(model, reference, config.clone())?.run(x, target)
}

/// Grows an image of class `target` from `seed_image` (e.g. all black) with
/// the proximity weight forced to zero.
pub fn generate_from_seed(
    model: &NetworkModel,
    seed_image: &FeatureVector,
    target: usize,
    reference: &ReferenceLogitStats,
    config: &ExplainConfig,
) -> Result<ExplainSession> {
    if !seed_image.shape().is_image() {
        return Err(Error::NotImage);
    }
    let config = ExplainConfig {
        lambda: 0.0,
        ..config.clone()
    };
    run(model, seed_image, target, reference, &config)
}
