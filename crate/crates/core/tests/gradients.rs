mod common;

use common::{normal, oracle_forward, oracle_softmax, random_dims, random_model};
use gradcf::net::{GradientOf, Layer, NetworkModel};
use gradcf::rng::{stream, Stream};

const H: f64 = 1e-4;
const REL: f64 = 1e-5;
/// Below this magnitude components are compared absolutely.
const FLOOR: f64 = 1e-6;

fn close(analytic: f64, numeric: f64) -> bool {
    (analytic - numeric).abs() <= REL * analytic.abs().max(numeric.abs()).max(FLOOR)
}

#[test]
fn forward_matches_loop_oracle() {
    let mut rng = stream(11, Stream::Init, 0);
    for _ in 0..100 {
        let dims = random_dims(&mut rng);
        let m = random_model(&mut rng, &dims);
        let x: Vec<f64> = (0..dims[0]).map(|_| normal(&mut rng)).collect();
        let (oracle, _) = oracle_forward(&m, &x);
        let got = m.forward(&x).unwrap();
        for (a, b) in got.as_slice().iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        let p = m.probability(&x, 0).unwrap();
        assert!((p - oracle_softmax(&oracle)[0]).abs() < 1e-12);
    }
}

#[test]
fn input_gradients_match_central_differences() {
    let mut rng = stream(12, Stream::Init, 0);
    let mut checked = 0;
    let mut skipped = 0;
    for _ in 0..100 {
        let dims = random_dims(&mut rng);
        let m = random_model(&mut rng, &dims);
        let x: Vec<f64> = (0..dims[0]).map(|_| normal(&mut rng)).collect();
        let k = *dims.last().unwrap();
        for target in 0..k {
            for of in [GradientOf::Logit, GradientOf::Probability] {
                let g = m.input_gradient(&x, target, of).unwrap();
                let f = |v: &[f64]| {
                    let (z, signs) = oracle_forward(&m, v);
                    let val = match of {
                        GradientOf::Logit => z[target],
                        GradientOf::Probability => oracle_softmax(&z)[target],
                    };
                    (val, signs)
                };
                for i in 0..x.len() {
                    let mut xp = x.clone();
                    xp[i] += H;
                    let mut xm = x.clone();
                    xm[i] -= H;
                    let ((fp, sp), (fm, sm)) = (f(&xp), f(&xm));
                    if sp != sm {
                        skipped += 1;
                        continue;
                    }
                    let fd = (fp - fm) / (2.0 * H);
                    assert!(close(g[i], fd), "dims {dims:?} target {target} {of:?} i {i}: {} vs {fd}", g[i]);
                    checked += 1;
                }
            }
        }
    }
    assert!(skipped * 100 < checked, "too many kink crossings: {skipped} of {checked}");
}

fn with_param(m: &NetworkModel, layer: usize, idx: usize, delta: f64) -> NetworkModel {
    let layers = m
        .layers()
        .iter()
        .enumerate()
        .map(|(l, lay)| {
            let mut rows: Vec<Vec<f64>> = lay.weight_rows().map(|r| r.to_vec()).collect();
            let mut bias = lay.bias().to_vec();
            if l == layer {
                let nw = lay.weights().len();
                if idx < nw {
                    rows[idx / lay.inputs()][idx % lay.inputs()] += delta;
                } else {
                    bias[idx - nw] += delta;
                }
            }
            Layer::new(rows, bias, lay.activation()).unwrap()
        })
        .collect();
    NetworkModel::new(layers).unwrap()
}

#[test]
fn parameter_gradients_match_central_differences() {
    let mut rng = stream(13, Stream::Init, 0);
    let mut checked = 0;
    let mut skipped = 0;
    for _ in 0..100 {
        let dims = random_dims(&mut rng);
        let m = random_model(&mut rng, &dims);
        let k = *dims.last().unwrap();
        let xs: Vec<Vec<f64>> = (0..3).map(|_| (0..dims[0]).map(|_| normal(&mut rng)).collect()).collect();
        let batch: Vec<(&[f64], usize)> = xs.iter().enumerate().map(|(j, x)| (x.as_slice(), j % k)).collect();
        let grads = m.param_gradients(&batch).unwrap();
        let pattern = |mm: &NetworkModel| -> Vec<Vec<bool>> { xs.iter().map(|x| oracle_forward(mm, x).1).collect() };
        let ce = |mm: &NetworkModel| -> f64 {
            batch
                .iter()
                .map(|&(x, y)| {
                    let (z, _) = oracle_forward(mm, x);
                    -oracle_softmax(&z)[y].ln()
                })
                .sum::<f64>()
                / batch.len() as f64
        };
        for (l, lg) in grads.layers.iter().enumerate() {
            let analytic: Vec<f64> = lg.weights.iter().chain(&lg.bias).copied().collect();
            for (idx, &a) in analytic.iter().enumerate() {
                let mp = with_param(&m, l, idx, H);
                let mm = with_param(&m, l, idx, -H);
                if pattern(&mp) != pattern(&mm) {
                    skipped += 1;
                    continue;
                }
                let fd = (ce(&mp) - ce(&mm)) / (2.0 * H);
                assert!(close(a, fd), "dims {dims:?} layer {l} param {idx}: {a} vs {fd}");
                checked += 1;
            }
        }
    }
    assert!(skipped * 100 < checked, "too many kink crossings: {skipped} of {checked}");
}
