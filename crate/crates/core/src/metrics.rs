//! Sparsity, proximity, coherence and logit-distribution metrics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{sample_reference_set, Dataset, ReferenceLogitStats};
use crate::error::{Error, Result};
use crate::explain::{proximity, ExplainConfig, ExplainSession, Explainer, Outcome};
use crate::net::NetworkModel;
use crate::rng::{stream, Stream};

/// Smallest per-feature change that counts as a modification.
pub const CHANGE_THRESHOLD: f64 = 0.001;

fn same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(())
}

/// Number of features with `|x_i − x'_i| ≥ 0.001`.
pub fn phi1(x: &[f64], x_prime: &[f64]) -> Result<usize> {
    same_len(x, x_prime)?;
    Ok(x.iter().zip(x_prime).filter(|(a, b)| (*a - *b).abs() >= CHANGE_THRESHOLD).count())
}

/// `‖x − x'‖₂`.
pub fn phi2(x: &[f64], x_prime: &[f64]) -> Result<f64> {
    same_len(x, x_prime)?;
    Ok(proximity(x, x_prime))
}

/// Largest `‖X'_i − X'_o‖₂ / ‖X_i − X_o‖₂` over neighbours `X_i` that differ
/// from `X_o` in at most `epsilon` features (and in at least one). `None`
/// when no neighbour qualifies.
pub fn coherence(
    x_o: &[f64],
    x_o_prime: &[f64],
    neighbors: &[(&[f64], &[f64])],
    epsilon: usize,
) -> Result<Option<f64>> {
    same_len(x_o, x_o_prime)?;
    let mut best: Option<f64> = None;
    for &(x_i, x_i_prime) in neighbors {
        same_len(x_o, x_i)?;
        same_len(x_o, x_i_prime)?;
        if phi1(x_i, x_o)? > epsilon {
            continue;
        }
        let denom = proximity(x_i, x_o);
        if denom == 0.0 {
            continue;
        }
        let ratio = proximity(x_i_prime, x_o_prime) / denom;
        best = Some(best.map_or(ratio, |b| b.max(ratio)));
    }
    Ok(best)
}

/// Distance from `f'(x')` to the reference mean logits.
pub fn logit_distance(model: &NetworkModel, x_prime: &[f64], reference: &ReferenceLogitStats) -> Result<f64> {
    let logits = model.forward(x_prime)?;
    Ok(proximity(logits.as_slice(), reference.mean_logits.as_slice()))
}

/// Five-number summary with linear interpolation between order statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (v.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
        };
        Some(Self {
            min: v[0],
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassBoxes {
    pub class: usize,
    pub counterfactual: Quartiles,
    pub reference: Quartiles,
}

/// Box-plot data comparing counterfactual logits with the reference samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitDivergence {
    pub target: usize,
    pub per_class: Vec<ClassBoxes>,
    pub distances: Vec<f64>,
    pub mean_distance: f64,
}

/// Per-class logit quartiles of the counterfactuals and of the reference
/// samples, plus the mean distance of counterfactual logits to the reference
/// mean. Every session must target `reference.target`.
pub fn logit_divergence(
    model: &NetworkModel,
    sessions: &[&ExplainSession],
    reference: &ReferenceLogitStats,
) -> Result<LogitDivergence> {
    if sessions.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if let Some(s) = sessions.iter().find(|s| s.target != reference.target) {
        return Err(Error::InvalidConfig(format!(
            "session targets class {} but the reference set is for class {}",
            s.target, reference.target
        )));
    }
    let logits = sessions
        .iter()
        .map(|s| model.forward(s.counterfactual.values()))
        .collect::<Result<Vec<_>>>()?;
    Ok(divergence_of(&logits.iter().map(|l| l.0.clone()).collect::<Vec<_>>(), reference))
}

pub(crate) fn divergence_of(logits: &[Vec<f64>], reference: &ReferenceLogitStats) -> LogitDivergence {
    let k = reference.mean_logits.len();
    let per_class = (0..k)
        .map(|c| {
            let cf: Vec<f64> = logits.iter().map(|l| l[c]).collect();
            let rf: Vec<f64> = reference.sample_logits.iter().map(|l| l.0[c]).collect();
            ClassBoxes {
                class: c,
                counterfactual: Quartiles::of(&cf).expect("non-empty batch"),
                reference: Quartiles::of(&rf).expect("non-empty reference"),
            }
        })
        .collect();
    let distances: Vec<f64> = logits
        .iter()
        .map(|l| proximity(l, reference.mean_logits.as_slice()))
        .collect();
    let mean_distance = distances.iter().sum::<f64>() / distances.len() as f64;
    LogitDivergence {
        target: reference.target,
        per_class,
        distances,
        mean_distance,
    }
}

/// How each instance's target class is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetPolicy {
    /// `(predicted + 1) mod K`; for two classes, the other class.
    NextClass,
    Fixed(usize),
}

impl TargetPolicy {
    pub fn target(&self, predicted: usize, classes: usize) -> usize {
        match *self {
            TargetPolicy::NextClass => (predicted + 1) % classes,
            TargetPolicy::Fixed(c) => c,
        }
    }
}

/// `n` distinct indices below `len`, ascending.
pub fn select_instances(len: usize, n: usize, seed: u64) -> Vec<usize> {
    let mut picks = if n >= len {
        (0..len).collect()
    } else {
        rand::seq::index::sample(&mut stream(seed, Stream::Selection, 0), len, n).into_vec()
    };
    picks.sort_unstable();
    picks
}

/// Seed of the `index`-th explanation in a batch.
pub fn instance_seed(seed: u64, index: usize) -> u64 {
    stream(seed, Stream::Composite, index as u64 + (1 << 32)).next_u64()
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub count: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self {
                mean: None,
                std: None,
                count: 0,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self {
            mean: Some(mean),
            std: Some(var.sqrt()),
            count: values.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMetrics {
    /// Position of the instance in the evaluated dataset.
    pub index: usize,
    pub original_class: usize,
    pub target: usize,
    pub outcome: Outcome,
    pub masked_units: usize,
    pub phi1: usize,
    pub phi2: f64,
    pub coherence: Option<f64>,
    pub logit_distance: f64,
    pub final_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: String,
    pub dataset: String,
    pub epsilon: usize,
    pub phi1: Summary,
    pub phi2: Summary,
    pub coherence: Summary,
    pub logit_distance: Summary,
    pub success_rate: f64,
    pub budget_exhausted: usize,
    /// Successful instances whose coherence neighbourhood was empty.
    pub coherence_undefined: usize,
    pub rows: Vec<InstanceMetrics>,
}

/// Explanations of a batch, one per selected instance, in input order.
#[derive(Debug, Clone)]
pub struct BatchRun {
    pub indices: Vec<usize>,
    pub sessions: Vec<ExplainSession>,
    pub references: BTreeMap<usize, ReferenceLogitStats>,
}

/// Explains every instance of `data` listed in `indices`.
///
/// Reference sets are drawn from `train` once per target class; each
/// instance gets its own composite seed derived from `config.seed` and its
/// dataset index, so runs are reproducible regardless of thread count.
pub fn explain_batch(
    model: &NetworkModel,
    train: &Dataset,
    data: &Dataset,
    indices: &[usize],
    policy: TargetPolicy,
    config: &ExplainConfig,
) -> Result<BatchRun> {
    if indices.is_empty() {
        return Err(Error::EmptyBatch);
    }
    config.validate()?;
    let k = model.class_count();
    let targets = indices
        .iter()
        .map(|&i| {
            let x = data.instances().get(i).ok_or(Error::DimensionMismatch {
                expected: data.len(),
                got: i + 1,
            })?;
            let t = policy.target(model.predict(x.values())?, k);
            model.check_class(t)?;
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut references = BTreeMap::new();
    for &t in &targets {
        if let std::collections::btree_map::Entry::Vacant(e) = references.entry(t) {
            e.insert(sample_reference_set(
                train,
                model,
                t,
                config.reference_count,
                config.seed,
                config.membership,
            )?);
        }
    }
    let sessions = indices
        .par_iter()
        .zip(targets.par_iter())
        .map(|(&i, &t)| {
            let cfg = ExplainConfig {
                seed: instance_seed(config.seed, i),
                ..config.clone()
            };
            Explainer::new(model, &references[&t], cfg)?.run(&data.instances()[i], t)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BatchRun {
        indices: indices.to_vec(),
        sessions,
        references,
    })
}

/// Metrics of a finished batch. Means cover successful sessions only.
pub fn summarize(
    model: &NetworkModel,
    run: &BatchRun,
    method: &str,
    dataset: &str,
    epsilon: usize,
) -> Result<MetricsReport> {
    let successes: Vec<usize> = (0..run.sessions.len()).filter(|&j| run.sessions[j].is_success()).collect();
    let mut rows = Vec::with_capacity(run.sessions.len());
    for (j, s) in run.sessions.iter().enumerate() {
        let x = s.original.values();
        let xp = s.counterfactual.values();
        let coherence_value = if s.is_success() {
            let neighbors: Vec<(&[f64], &[f64])> = successes
                .iter()
                .filter(|&&o| o != j)
                .map(|&o| (run.sessions[o].original.values(), run.sessions[o].counterfactual.values()))
                .collect();
            coherence(x, xp, &neighbors, epsilon)?
        } else {
            None
        };
        rows.push(InstanceMetrics {
            index: run.indices[j],
            original_class: s.original_class,
            target: s.target,
            outcome: s.outcome,
            masked_units: s.mask.unit_cardinality(),
            phi1: phi1(x, xp)?,
            phi2: phi2(x, xp)?,
            coherence: coherence_value,
            logit_distance: logit_distance(model, xp, &run.references[&s.target])?,
            final_prob: s.final_prob(),
        });
    }
    let ok: Vec<&InstanceMetrics> = rows.iter().filter(|r| r.outcome == Outcome::Success).collect();
    let coh: Vec<f64> = ok.iter().filter_map(|r| r.coherence).collect();
    Ok(MetricsReport {
        method: method.to_string(),
        dataset: dataset.to_string(),
        epsilon,
        phi1: Summary::of(&ok.iter().map(|r| r.phi1 as f64).collect::<Vec<_>>()),
        phi2: Summary::of(&ok.iter().map(|r| r.phi2).collect::<Vec<_>>()),
        coherence: Summary::of(&coh),
        logit_distance: Summary::of(&ok.iter().map(|r| r.logit_distance).collect::<Vec<_>>()),
        success_rate: ok.len() as f64 / rows.len() as f64,
        budget_exhausted: rows.len() - ok.len(),
        coherence_undefined: ok.len() - coh.len(),
        rows,
    })
}

/// Explains the listed instances and aggregates φ1, φ2, coherence and the
/// logit distance.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_batch(
    model: &NetworkModel,
    train: &Dataset,
    data: &Dataset,
    indices: &[usize],
    policy: TargetPolicy,
    config: &ExplainConfig,
    epsilon: usize,
    dataset_name: &str,
) -> Result<MetricsReport> {
    let run = explain_batch(model, train, data, indices, policy, config)?;
    summarize(model, &run, config.objective.name(), dataset_name, epsilon)
}

pub const REPORT_COLUMNS: [&str; 10] = [
    "method",
    "dataset",
    "phi1_mean",
    "phi1_std",
    "phi2_mean",
    "phi2_std",
    "coherence_mean",
    "coherence_std",
    "logit_dist_mean",
    "success_rate",
];

fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

/// One CSV row per report; undefined values are empty cells.
pub fn reports_csv(reports: &[MetricsReport]) -> String {
    let mut out = REPORT_COLUMNS.join(",");
    out.push('\n');
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.method,
            r.dataset,
            cell(r.phi1.mean),
            cell(r.phi1.std),
            cell(r.phi2.mean),
            cell(r.phi2.std),
            cell(r.coherence.mean),
            cell(r.coherence.std),
            cell(r.logit_distance.mean),
            r.success_rate
        );
    }
    out
}

pub fn reports_json(reports: &[MetricsReport]) -> String {
    serde_json::to_string_pretty(reports).expect("reports serialize")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedRow {
    pub index: usize,
    pub target: usize,
    pub gradual_success: bool,
    pub ablation_success: bool,
    pub gradual_distance: f64,
    pub ablation_distance: f64,
}

/// Logit-matching versus probability-maximization on identical instances,
/// seeds and masking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedReport {
    pub rows: Vec<PairedRow>,
    /// Pairs where both objectives reached τ.
    pub both_success: usize,
    /// Among those pairs, how often the logit-matching counterfactual is closer.
    pub gradual_lower_fraction: f64,
    pub gradual_mean_distance: f64,
    pub ablation_mean_distance: f64,
    pub gradual_success_rate: f64,
    pub ablation_success_rate: f64,
    pub gradual_divergence: Vec<LogitDivergence>,
    pub ablation_divergence: Vec<LogitDivergence>,
}

pub fn paired_ablation(
    model: &NetworkModel,
    train: &Dataset,
    data: &Dataset,
    indices: &[usize],
    policy: TargetPolicy,
    config: &ExplainConfig,
) -> Result<PairedReport> {
    use crate::explain::{Objective, Scope};
    let gradual_cfg = ExplainConfig {
        objective: Objective::Gradual,
        scope: Scope::Masked,
        ..config.clone()
    };
    let ablation_cfg = ExplainConfig {
        objective: Objective::Ablation,
        scope: Scope::Masked,
        ..config.clone()
    };
    let g = explain_batch(model, train, data, indices, policy, &gradual_cfg)?;
    let a = explain_batch(model, train, data, indices, policy, &ablation_cfg)?;

    let mut rows = Vec::with_capacity(indices.len());
    for (j, (gs, as_)) in g.sessions.iter().zip(&a.sessions).enumerate() {
        let reference = &g.references[&gs.target];
        rows.push(PairedRow {
            index: indices[j],
            target: gs.target,
            gradual_success: gs.is_success(),
            ablation_success: as_.is_success(),
            gradual_distance: logit_distance(model, gs.counterfactual.values(), reference)?,
            ablation_distance: logit_distance(model, as_.counterfactual.values(), reference)?,
        });
    }
    let both: Vec<&PairedRow> = rows.iter().filter(|r| r.gradual_success && r.ablation_success).collect();
    let n = both.len().max(1) as f64;
    let divergences = |run: &BatchRun| -> Vec<LogitDivergence> {
        run.references
            .iter()
            .filter_map(|(t, reference)| {
                let logits: Vec<Vec<f64>> = run
                    .sessions
                    .iter()
                    .filter(|s| s.target == *t && s.is_success())
                    .map(|s| model.forward(s.counterfactual.values()).map(|l| l.0))
                    .collect::<Result<_>>()
                    .ok()?;
                (!logits.is_empty()).then(|| divergence_of(&logits, reference))
            })
            .collect()
    };
    Ok(PairedReport {
        both_success: both.len(),
        gradual_lower_fraction: both.iter().filter(|r| r.gradual_distance < r.ablation_distance).count() as f64 / n,
        gradual_mean_distance: both.iter().map(|r| r.gradual_distance).sum::<f64>() / n,
        ablation_mean_distance: both.iter().map(|r| r.ablation_distance).sum::<f64>() / n,
        gradual_success_rate: rows.iter().filter(|r| r.gradual_success).count() as f64 / rows.len() as f64,
        ablation_success_rate: rows.iter().filter(|r| r.ablation_success).count() as f64 / rows.len() as f64,
        gradual_divergence: divergences(&g),
        ablation_divergence: divergences(&a),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi1_cases() {
        assert_eq!(phi1(&[0.1, 0.2], &[0.1, 0.2]).unwrap(), 0);
        assert_eq!(phi1(&[0.0, 0.0], &[0.0005, 0.5]).unwrap(), 1);
        assert_eq!(phi1(&[0.0], &[0.001]).unwrap(), 1);
        assert!(phi1(&[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn phi2_cases() {
        assert_eq!(phi2(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(phi2(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
    }

    #[test]
    fn coherence_cases() {
        let xo = [0.0, 0.0];
        let xo_p = [0.0, 0.0];
        // ‖X'_i − X'_o‖ = 0.2, ‖X_i − X_o‖ = 0.1
        let one = [(&[0.1, 0.0][..], &[0.2, 0.0][..])];
        assert!((coherence(&xo, &xo_p, &one, 3).unwrap().unwrap() - 2.0).abs() < 1e-12);
        let two = [(&[0.2, 0.0][..], &[0.1, 0.0][..]), (&[0.0, 0.1][..], &[0.0, 0.3][..])];
        assert!((coherence(&xo, &xo_p, &two, 3).unwrap().unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(coherence(&xo, &xo_p, &two, 0).unwrap(), None);
        // identical neighbour is skipped
        let same = [(&xo[..], &[1.0, 1.0][..])];
        assert_eq!(coherence(&xo, &xo_p, &same, 3).unwrap(), None);
    }

    #[test]
    fn quartiles_interpolate() {
        let q = Quartiles::of(&[4.0, 1.0, 3.0, 2.0, 5.0]).unwrap();
        assert_eq!((q.min, q.q1, q.median, q.q3, q.max), (1.0, 2.0, 3.0, 4.0, 5.0));
        let q = Quartiles::of(&[1.0, 2.0]).unwrap();
        assert_eq!(q.q1, 1.25);
        assert!(Quartiles::of(&[]).is_none());
    }

    #[test]
    fn summary_is_population_std() {
        let s = Summary::of(&[1.0, 3.0]);
        assert_eq!((s.mean, s.std, s.count), (Some(2.0), Some(1.0), 2));
        assert_eq!(Summary::of(&[]).mean, None);
    }

    #[test]
    fn target_policy() {
        assert_eq!(TargetPolicy::NextClass.target(1, 2), 0);
        assert_eq!(TargetPolicy::NextClass.target(9, 10), 0);
        assert_eq!(TargetPolicy::Fixed(3).target(9, 10), 3);
    }

    #[test]
    fn selection_is_sorted_and_distinct() {
        let s = select_instances(1000, 100, 4);
        assert_eq!(s.len(), 100);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(s, select_instances(1000, 100, 4));
        assert_eq!(select_instances(5, 10, 4), vec![0, 1, 2, 3, 4]);
    }
}
