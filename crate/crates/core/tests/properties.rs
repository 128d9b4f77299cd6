mod common;

use gradcf::explain::{compose, tv_regularizer, BinaryMask};
use gradcf::metrics::{coherence, phi1, phi2};
use gradcf::net::{softmax_prob, FeatureVector};
use gradcf::rng::{stream, Stream};
use proptest::prelude::*;
use rand::Rng;

fn brute_phi1(a: &[f64], b: &[f64]) -> usize {
    let mut n = 0;
    for i in 0..a.len() {
        let d = if a[i] > b[i] { a[i] - b[i] } else { b[i] - a[i] };
        if d >= 0.001 {
            n += 1;
        }
    }
    n
}

fn brute_phi2(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    s.sqrt()
}

fn brute_coherence(xo: &[f64], xop: &[f64], nb: &[(Vec<f64>, Vec<f64>)], eps: usize) -> Option<f64> {
    let mut ratios = Vec::new();
    for (xi, xip) in nb {
        if brute_phi1(xi, xo) <= eps && brute_phi2(xi, xo) != 0.0 {
            ratios.push(brute_phi2(xip, xop) / brute_phi2(xi, xo));
        }
    }
    ratios.into_iter().reduce(f64::max)
}

/// Values on a 0.001 grid so exact-threshold differences occur often.
fn grid_vec(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(0..20) as f64 * 0.001).collect()
}

#[test]
fn metrics_match_brute_force_on_random_cases() {
    let mut rng = stream(21, Stream::Data, 0);
    for case in 0..1000 {
        let d = rng.random_range(1..8);
        let coarse = case % 2 == 0;
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| if coarse { grid_vec(rng, d) } else { (0..d).map(|_| rng.random::<f64>()).collect() };
        let x = draw(&mut rng);
        let xp = draw(&mut rng);
        assert_eq!(phi1(&x, &xp).unwrap(), brute_phi1(&x, &xp));
        assert_eq!(phi2(&x, &xp).unwrap(), brute_phi2(&x, &xp));

        let nb: Vec<(Vec<f64>, Vec<f64>)> = (0..rng.random_range(0..6))
            .map(|_| {
                let mut xi = x.clone();
                for _ in 0..rng.random_range(0..d + 1) {
                    let j = rng.random_range(0..d);
                    xi[j] = if coarse { rng.random_range(0..20) as f64 * 0.001 } else { rng.random() };
                }
                (xi, draw(&mut rng))
            })
            .collect();
        let eps = rng.random_range(0..d + 1);
        let refs: Vec<(&[f64], &[f64])> = nb.iter().map(|(a, b)| (a.as_slice(), b.as_slice())).collect();
        assert_eq!(coherence(&x, &xp, &refs, eps).unwrap(), brute_coherence(&x, &xp, &nb, eps));
    }
}

#[test]
fn phi1_threshold_is_closed() {
    assert_eq!(phi1(&[0.0], &[0.001]).unwrap(), 1);
    assert_eq!(phi1(&[0.001], &[0.0]).unwrap(), 1);
    assert_eq!(phi1(&[0.0], &[0.000999]).unwrap(), 0);
}

proptest! {
    #[test]
    fn softmax_sums_to_one(z in prop::collection::vec(-700.0f64..700.0, 1..12)) {
        let p = softmax_prob(&z);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(p.iter().all(|v| v.is_finite() && *v >= 0.0));
    }

    #[test]
    fn phi1_identity_symmetry_bound(
        pair in (1usize..20).prop_flat_map(|d| (prop::collection::vec(-2.0f64..2.0, d), prop::collection::vec(-2.0f64..2.0, d)))
    ) {
        let (a, b) = pair;
        prop_assert_eq!(phi1(&a, &a).unwrap(), 0);
        prop_assert_eq!(phi1(&a, &b).unwrap(), phi1(&b, &a).unwrap());
        prop_assert!(phi1(&a, &b).unwrap() <= a.len());
    }

    #[test]
    fn phi2_triangle_inequality(
        t in (1usize..20).prop_flat_map(|d| (
            prop::collection::vec(-5.0f64..5.0, d),
            prop::collection::vec(-5.0f64..5.0, d),
            prop::collection::vec(-5.0f64..5.0, d),
        ))
    ) {
        let (a, b, c) = t;
        prop_assert!(phi2(&a, &c).unwrap() <= phi2(&a, &b).unwrap() + phi2(&b, &c).unwrap() + 1e-9);
    }

    #[test]
    fn coherence_dominates_every_neighbour_ratio(
        xs in prop::collection::vec((prop::collection::vec(0.0f64..1.0, 3), prop::collection::vec(0.0f64..1.0, 3)), 2..8)
    ) {
        let (xo, xop) = &xs[0];
        let nb: Vec<(&[f64], &[f64])> = xs[1..].iter().map(|(a, b)| (a.as_slice(), b.as_slice())).collect();
        let c = coherence(xo, xop, &nb, 3).unwrap();
        for (xi, xip) in &nb {
            let den = phi2(xi, xo).unwrap();
            if den > 0.0 {
                prop_assert!(c.unwrap() >= phi2(xip, xop).unwrap() / den);
            }
        }
    }

    #[test]
    fn compose_changes_only_masked_coordinates(
        t in (1usize..16).prop_flat_map(|d| (
            prop::collection::vec(0.0f64..1.0, d),
            prop::collection::vec(0u8..2, d),
            prop::collection::vec(-3.0f64..3.0, d),
        ))
    ) {
        let (x, bits, c) = t;
        let fx = FeatureVector::flat(x.clone());
        let m = BinaryMask::from_bits(bits.clone()).unwrap();
        let out = compose(&fx, &m, &c, false).unwrap();
        for i in 0..x.len() {
            let expect = if bits[i] == 1 { c[i] } else { x[i] };
            prop_assert_eq!(out.values()[i].to_bits(), expect.to_bits());
        }
        prop_assert!(phi1(&x, out.values()).unwrap() <= m.count_ones());
    }

    #[test]
    fn tv_is_quadratically_homogeneous_at_beta_two(
        t in (1usize..6, 1usize..6).prop_flat_map(|(h, w)| (Just(h), Just(w), prop::collection::vec(0.0f64..1.0, h * w), 0.1f64..10.0))
    ) {
        let (h, w, v, s) = t;
        let img = FeatureVector::image(v.clone(), h, w).unwrap();
        let scaled = FeatureVector::image(v.iter().map(|p| p * s).collect(), h, w).unwrap();
        let a = tv_regularizer(&img, 2.0).unwrap();
        let b = tv_regularizer(&scaled, 2.0).unwrap();
        prop_assert!((b - s * s * a).abs() <= 1e-9 * b.abs().max(1e-300));
    }
}
