mod common;

use cbd_core::ball::{phi_core, phi_sym, pointwise_cbd, theta2_weighted, WeightedEmpirical};
use cbd_core::data::{pairwise_distances, rank_order};
use cbd_core::estimator::CbdEngine;
use cbd_core::rng::rng_from_seed;
use cbd_core::{Bandwidths, DistanceMatrix, KernelSpec, Matrix, WeightFunction};
use common::*;
use rand::Rng;

fn bandwidths(h1: f64, h2: f64) -> Bandwidths {
    Bandwidths {
        h1,
        h2,
        h0: 1.0,
        h2_prime: 0.0,
        c1: 1.0,
        c2: 1.0,
    }
}

fn dm(d: &[Vec<f64>]) -> DistanceMatrix {
    let n = d.len();
    DistanceMatrix::from_values(n, d.iter().flatten().copied().collect()).unwrap()
}

#[test]
fn pointwise_matches_triple_loop_on_random_small_samples() {
    let mut rng = rng_from_seed(11);
    let spec = KernelSpec::epanechnikov();
    let mut checked = 0;
    for case in 0..200 {
        let n = rng.random_range(3..=12);
        let dx = if case % 3 == 0 { 2 } else { 1 };
        let ties = case % 2 == 0;
        let ds = random_dataset(&mut rng, n, dx, ties);
        let (h1, h2) = (rng.random_range(0.6..3.0), rng.random_range(0.6..3.0));
        let dist = pairwise_distances(ds.x()).unwrap();
        let order = rank_order(&dist);
        let engine = CbdEngine::new(&ds, bandwidths(h1, h2), spec, WeightFunction::One).unwrap();
        let fast = engine.pointwise(ds.x()).unwrap();
        for s in 0..n {
            let want = pointwise_reference(&ds, s, h1, h2);
            let got = pointwise_cbd(&ds, &dist, &order, s, h1, h2, spec).unwrap();
            assert!(rel_close(got, want, 1e-10), "case {case} s {s}: {got} vs {want}");
            assert!(
                rel_close(fast[s], want, 1e-10),
                "engine, case {case} s {s}: {} vs {want}",
                fast[s]
            );
            checked += 1;
        }
    }
    assert!(checked > 1000);
}

#[test]
fn weighted_divergence_matches_expanded_square() {
    let mut rng = rng_from_seed(12);
    for case in 0..200 {
        let n = rng.random_range(1..=9);
        let pts: Vec<f64> = (0..n)
            .map(|_| {
                let v: f64 = rng.random_range(-2.0..2.0);
                if case % 2 == 0 {
                    v.round()
                } else {
                    v
                }
            })
            .collect();
        let x = Matrix::column_vector(&pts);
        let d = dist_table(&x);
        let draw = |rng: &mut cbd_core::rng::CbdRng| {
            let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let t: f64 = w.iter().sum();
            w.iter().map(|v| v / t).collect::<Vec<f64>>()
        };
        let p = draw(&mut rng);
        let q = draw(&mut rng);
        let want = theta2_quadruple(&d, &p, &q);
        assert!(rel_close(want, theta2_triple(&d, &p, &q), 1e-12));
        let got = theta2_weighted(
            &dm(&d),
            &WeightedEmpirical::new((0..n).collect(), p.clone()).unwrap(),
            &WeightedEmpirical::new((0..n).collect(), q.clone()).unwrap(),
        )
        .unwrap();
        assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "{got} vs {want}");
    }
}

#[test]
fn identical_measures_have_zero_divergence() {
    let x = Matrix::column_vector(&[0.0, 1.0, 1.0, 3.0]);
    let d = dm(&dist_table(&x));
    let p = WeightedEmpirical::dense(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
    assert_eq!(theta2_weighted(&d, &p, &p).unwrap(), 0.0);
}

#[test]
fn symmetrized_core_matches_full_enumeration() {
    let mut rng = rng_from_seed(13);
    for case in 0..100 {
        let pts: Vec<f64> = (0..16)
            .map(|_| {
                let v: f64 = rng.random_range(-2.0..2.0);
                if case % 2 == 0 {
                    v.round()
                } else {
                    v
                }
            })
            .collect();
        let x = Matrix::from_vec(8, 2, pts).unwrap();
        let d = dist_table(&x);
        let lib = dm(&d);
        let (u, v) = ([0, 1, 2, 3], [4, 5, 6, 7]);
        let want = phi_sym_reference(&d, u, v);
        assert!((phi_sym(&lib, u, v) - want).abs() <= 1e-12);
        assert_eq!(phi_core(&lib, u, v), phi(&d, u, v));
    }
}

/// For atomic P and Q, averaging φ over independent draws U₁..U₄ ~ P,
/// V₁..V₄ ~ Q recovers Θ²(P, Q) exactly.
#[test]
fn core_function_is_unbiased_for_the_divergence() {
    let mut rng = rng_from_seed(14);
    for case in 0..20 {
        let m: usize = 3;
        let pts: Vec<f64> = (0..m)
            .map(|_| {
                let v: f64 = rng.random_range(-2.0..2.0);
                if case % 2 == 0 {
                    v.round()
                } else {
                    v
                }
            })
            .collect();
        let d = dist_table(&Matrix::column_vector(&pts));
        let lib = dm(&d);
        let draw = |rng: &mut cbd_core::rng::CbdRng| {
            let w: Vec<f64> = (0..m).map(|_| rng.random::<f64>() + 0.05).collect();
            let t: f64 = w.iter().sum();
            w.iter().map(|v| v / t).collect::<Vec<f64>>()
        };
        let p = draw(&mut rng);
        let q = draw(&mut rng);
        let mut expect = 0.0;
        let mut expect_lib = 0.0;
        for code in 0..m.pow(8) {
            let mut c = code;
            let mut t = [0usize; 8];
            for slot in &mut t {
                *slot = c % m;
                c /= m;
            }
            let mut w = 1.0;
            for k in 0..4 {
                w *= p[t[k]] * q[t[4 + k]];
            }
            let (u, v) = ([t[0], t[1], t[2], t[3]], [t[4], t[5], t[6], t[7]]);
            expect += w * phi(&d, u, v);
            expect_lib += w * phi_core(&lib, u, v);
        }
        let theta = theta2_triple(&d, &p, &q);
        assert!((expect - theta).abs() < 1e-12, "case {case}: {expect} vs {theta}");
        assert!((expect_lib - theta).abs() < 1e-12);
    }
}
