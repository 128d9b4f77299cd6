//! Logit-matching objective and its image regularizer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{FeatureVector, NetworkModel, Shape};

/// How the per-class logit differences are reduced to a scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogitNorm {
    /// `‖f'(X') − μ‖₂` over the K-vector of differences.
    #[default]
    Vector,
    /// `|Σ_k (f'_k(X') − μ_k)|`.
    ScalarSum,
}

/// Value and `dL/dlogits` of the logit-matching term.
pub(crate) fn logit_term(logits: &[f64], mean: &[f64], norm: LogitNorm) -> (f64, Vec<f64>) {
    let diff: Vec<f64> = logits.iter().zip(mean).map(|(z, m)| z - m).collect();
    match norm {
        LogitNorm::Vector => {
            let n = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
            let g = if n > 0.0 {
                diff.iter().map(|d| d / n).collect()
            } else {
                vec![0.0; diff.len()]
            };
            (n, g)
        }
        LogitNorm::ScalarSum => {
            let s: f64 = diff.iter().sum();
            let sign = if s > 0.0 {
                1.0
            } else if s < 0.0 {
                -1.0
            } else {
                0.0
            };
            (s.abs(), vec![sign; diff.len()])
        }
    }
}

/// `‖X' − X‖₂`.
pub fn proximity(x_prime: &[f64], x: &[f64]) -> f64 {
    x_prime.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Adds `weight · ∂‖X' − X‖₂/∂X'` into `grad`; the subgradient at `X' = X` is 0.
pub(crate) fn add_proximity_grad(grad: &mut [f64], x_prime: &[f64], x: &[f64], weight: f64) -> f64 {
    let n = proximity(x_prime, x);
    if weight != 0.0 && n > 0.0 {
        for ((g, a), b) in grad.iter_mut().zip(x_prime).zip(x) {
            *g += weight * (a - b) / n;
        }
    }
    n
}

/// `‖f'(X') − μ‖₂ + λ‖X' − X‖₂`.
pub fn gradual_loss(
    model: &NetworkModel,
    x_prime: &[f64],
    x: &[f64],
    mean_logits: &[f64],
    lambda: f64,
    norm: LogitNorm,
) -> Result<f64> {
    let logits = model.forward(x_prime)?;
    if logits.len() != mean_logits.len() {
        return Err(Error::DimensionMismatch {
            expected: logits.len(),
            got: mean_logits.len(),
        });
    }
    let (term, _) = logit_term(logits.as_slice(), mean_logits, norm);
    Ok(term + lambda * proximity(x_prime, x))
}

/// The same loss together with its gradient with respect to `X'`.
pub fn gradual_loss_grad(
    model: &NetworkModel,
    x_prime: &[f64],
    x: &[f64],
    mean_logits: &[f64],
    lambda: f64,
    norm: LogitNorm,
) -> Result<(f64, Vec<f64>)> {
    if model.class_count() != mean_logits.len() {
        return Err(Error::DimensionMismatch {
            expected: model.class_count(),
            got: mean_logits.len(),
        });
    }
    let mut term = 0.0;
    let (_, mut grad) = model.logits_and_input_vjp(x_prime, |logits| {
        let (t, g) = logit_term(logits, mean_logits, norm);
        term = t;
        g
    })?;
    let prox = add_proximity_grad(&mut grad, x_prime, x, lambda);
    Ok((term + lambda * prox, grad))
}

/// Total variation `Σ_{i,j} (|Δ_right|^β + |Δ_down|^β)^{β/2}` over existing
/// neighbours only. Absolute differences keep the expression real for
/// non-integer β; for even β it is unchanged.
pub fn tv_regularizer(image: &FeatureVector, beta: f64) -> Result<f64> {
    match image.shape() {
        Shape::Image { height, width } => Ok(tv_value_grad(image.values(), height, width, beta, false).0),
        Shape::Flat(_) => Err(Error::NotImage),
    }
}

pub(crate) fn tv_value_grad(values: &[f64], height: usize, width: usize, beta: f64, with_grad: bool) -> (f64, Vec<f64>) {
    let mut total = 0.0;
    let mut grad = if with_grad { vec![0.0; values.len()] } else { Vec::new() };
    let half = beta / 2.0;
    for i in 0..height {
        for j in 0..width {
            let here = i * width + j;
            let right = (j + 1 < width).then(|| values[here + 1] - values[here]);
            let down = (i + 1 < height).then(|| values[here + width] - values[here]);
            if right.is_none() && down.is_none() {
                continue;
            }
            let pa = right.map_or(0.0, |a| a.abs().powf(beta));
            let pb = down.map_or(0.0, |b| b.abs().powf(beta));
            let s = pa + pb;
            total += s.powf(half);
            if !with_grad || s == 0.0 {
                continue;
            }
            // d/dΔ (S^{β/2}) = (β/2) S^{β/2 − 1} · β |Δ|^{β−1} sign(Δ)
            let outer = half * s.powf(half - 1.0);
            if let Some(a) = right {
                let g = outer * beta * a.abs().powf(beta - 1.0) * a.signum();
                grad[here + 1] += g;
                grad[here] -= g;
            }
            if let Some(b) = down {
                let g = outer * beta * b.abs().powf(beta - 1.0) * b.signum();
                grad[here + width] += g;
                grad[here] -= g;
            }
        }
    }
    (total, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{Activation, Layer};

    fn identity2() -> NetworkModel {
        NetworkModel::new(vec![Layer::new(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0.0, 0.0],
            Activation::Identity,
        )
        .unwrap()])
        .unwrap()
    }

    #[test]
    fn exact_match_is_zero() {
        let m = identity2();
        assert_eq!(gradual_loss(&m, &[0.3, 0.7], &[0.3, 0.7], &[0.3, 0.7], 0.3, LogitNorm::Vector).unwrap(), 0.0);
    }

    #[test]
    fn unit_difference() {
        let m = identity2();
        assert_eq!(gradual_loss(&m, &[1.0, 0.0], &[1.0, 0.0], &[0.0, 0.0], 0.0, LogitNorm::Vector).unwrap(), 1.0);
    }

    #[test]
    fn proximity_term_alone() {
        // one logit so the logit term is |z - z| = 0
        let m = NetworkModel::new(vec![Layer::new(vec![vec![0.0; 3]], vec![0.0], Activation::Identity).unwrap()]).unwrap();
        let l = gradual_loss(&m, &[0.1, 0.0, 0.0], &[0.0; 3], &[0.0], 0.3, LogitNorm::Vector).unwrap();
        assert!((l - 0.03).abs() < 1e-15);
    }

    #[test]
    fn scalar_sum_mode_sums_before_the_norm() {
        let m = identity2();
        let l = gradual_loss(&m, &[1.0, -1.0], &[0.0, 0.0], &[0.0, 0.0], 0.0, LogitNorm::ScalarSum).unwrap();
        assert_eq!(l, 0.0);
    }

    fn img(rows: &[&[f64]]) -> FeatureVector {
        let w = rows[0].len();
        FeatureVector::image(rows.concat(), rows.len(), w).unwrap()
    }

    #[test]
    fn tv_cases() {
        assert_eq!(tv_regularizer(&img(&[&[0.4, 0.4], &[0.4, 0.4]]), 2.0).unwrap(), 0.0);
        assert_eq!(tv_regularizer(&img(&[&[0.0, 1.0], &[0.0, 1.0]]), 2.0).unwrap(), 2.0);
        assert!(matches!(tv_regularizer(&FeatureVector::flat(vec![1.0]), 2.0), Err(Error::NotImage)));
    }

    #[test]
    fn tv_gradient_matches_finite_differences() {
        let vals: Vec<f64> = (0..12).map(|i| ((i * 7) % 5) as f64 * 0.21 - 0.3).collect();
        for beta in [2.0, 1.5, 3.0] {
            let (_, g) = tv_value_grad(&vals, 3, 4, beta, true);
            for k in 0..vals.len() {
                let h = 1e-6;
                let mut p = vals.clone();
                p[k] += h;
                let mut q = vals.clone();
                q[k] -= h;
                let fd = (tv_value_grad(&p, 3, 4, beta, false).0 - tv_value_grad(&q, 3, 4, beta, false).0) / (2.0 * h);
                assert!((fd - g[k]).abs() < 1e-6, "beta {beta} k {k}: {fd} vs {}", g[k]);
            }
        }
    }
}
