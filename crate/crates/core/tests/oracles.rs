mod common;

use common::*;
use mmdcheck::estimators::{mmd2_eps, mmd2_full, mmd2_q, var_full, var_full_diff, var_q, var_q_diff, GramSet};
use mmdcheck::KernelSpec;
use ndarray::{Array2, Axis};
use proptest::prelude::*;

const INSTANCES: u64 = 50;

#[test]
fn full_variance_reductions_match_triple_sums() {
    for n in 3..=10 {
        for seed in 0..INSTANCES {
            let k = &kernels()[(seed % 3) as usize];
            let (x, y1, y2) = random_instance(n, 1 + (seed % 3) as usize, 1000 * n as u64 + seed);
            let (u, raw) = brute_var_full(k, x.view(), y1.view());
            let got = var_full(k, x.view(), y1.view()).unwrap();
            assert!(close(got.raw, raw, u, 1e-10), "n={n} seed={seed}: {} vs {raw}", got.raw);

            let (u, raw) = brute_var_full_diff(k, x.view(), y1.view(), y2.view());
            let got = var_full_diff(k, x.view(), y1.view(), y2.view()).unwrap();
            assert!(close(got.raw, raw, u, 1e-10), "diff n={n} seed={seed}");
        }
    }
}

#[test]
fn split_variance_reductions_match_triple_sums() {
    for n in [6, 8, 10, 12] {
        for seed in 0..INSTANCES {
            let k = &kernels()[(seed % 3) as usize];
            let (x, y1, y2) = random_instance(n, 1 + (seed % 2) as usize, 7000 * n as u64 + seed);
            let (u, raw) = brute_var_q(k, x.view(), y1.view());
            let got = var_q(k, x.view(), y1.view()).unwrap();
            assert!(close(got.raw, raw, u, 1e-10), "n={n} seed={seed}: {} vs {raw}", got.raw);

            let (u, raw) = brute_var_q_diff(k, x.view(), y1.view(), y2.view());
            let got = var_q_diff(k, x.view(), y1.view(), y2.view()).unwrap();
            assert!(close(got.raw, raw, u, 1e-10), "diff n={n} seed={seed}");
        }
    }
}

#[test]
fn point_estimators_match_direct_loops() {
    for seed in 0..20 {
        let k = &kernels()[(seed % 3) as usize];
        let (x, y, _) = random_instance(7, 2, seed);
        let b = brute_mmd2(k, x.view(), y.view());
        assert!(close(mmd2_full(k, x.view(), y.view()).unwrap(), b, b, 1e-12));
        let (x, y, _) = random_instance(8, 2, 100 + seed);
        let b = brute_mmd2_q(k, x.view(), y.view());
        assert!(close(mmd2_q(k, x.view(), y.view()).unwrap(), b, b, 1e-12));
    }
}

#[test]
fn weighted_kernel_form_equals_sum_form() {
    for (i, n) in [6usize, 8, 12, 20].into_iter().enumerate() {
        for eps in [0.0, 0.3, 1.0, 2.5] {
            let k = &kernels()[i % 3];
            let (x, y, _) = random_instance(n, 2, 40 + i as u64);
            let lit = literal_mmd2_eps(k, x.view(), y.view(), eps);
            let sum = mmd2_eps(k, x.view(), y.view(), eps).unwrap();
            let scale = mmd2_full(k, x.view(), y.view()).unwrap().abs() + eps * mmd2_q(k, x.view(), y.view()).unwrap().abs();
            assert!(close(lit, sum, scale, 1e-12), "n={n} eps={eps}: {lit} vs {sum}");
        }
    }
}

#[test]
fn odd_sample_uses_leading_blocks() {
    let k = KernelSpec::default();
    let (x, y, _) = random_instance(9, 2, 3);
    let q9 = mmd2_q(&k, x.view(), y.view()).unwrap();
    let q8 = mmd2_q(&k, x.slice(ndarray::s![..8, ..]), y.slice(ndarray::s![..8, ..])).unwrap();
    assert_eq!(q9, q8);
}

#[test]
fn continuous_data_keeps_split_variance_positive() {
    let k = KernelSpec::default();
    for seed in 0..20 {
        let (x, _, _) = random_instance(400, 2, 500 + seed);
        let (_, y, _) = random_instance(400, 2, 900 + seed);
        assert!(!var_q(&k, x.view(), y.view()).unwrap().floored);
    }
}

fn permute_rows(a: &Array2<f64>, perm: &[usize]) -> Array2<f64> {
    a.select(Axis(0), perm)
}

/// Maps a block permutation to the row permutation that keeps within-block order.
fn block_rows(blocks: &[usize]) -> Vec<usize> {
    blocks.iter().flat_map(|&b| [2 * b, 2 * b + 1]).collect()
}

fn shuffle_strategy(len: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..len).collect::<Vec<_>>()).prop_shuffle()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pair_permutation_invariance(seed in 0u64..10_000, perm in shuffle_strategy(12)) {
        let k = &kernels()[(seed % 3) as usize];
        let (x, y, _) = random_instance(12, 2, seed);
        let (xp, yp) = (permute_rows(&x, &perm), permute_rows(&y, &perm));
        let a = GramSet::pair(k, x.view(), y.view()).unwrap();
        let b = GramSet::pair(k, xp.view(), yp.view()).unwrap();
        let (m1, m2) = (a.mmd2_full(0).unwrap(), b.mmd2_full(0).unwrap());
        prop_assert!(close(m1, m2, m1, 1e-12));
        let (v1, v2) = (a.var_full(0).unwrap().raw, b.var_full(0).unwrap().raw);
        prop_assert!(close(v1, v2, v1, 1e-12));
    }

    #[test]
    fn block_permutation_invariance(seed in 0u64..10_000, blocks in shuffle_strategy(7)) {
        let k = &kernels()[(seed % 3) as usize];
        let (x, y, _) = random_instance(14, 2, seed);
        let rows = block_rows(&blocks);
        let (xp, yp) = (permute_rows(&x, &rows), permute_rows(&y, &rows));
        let a = GramSet::pair(k, x.view(), y.view()).unwrap();
        let b = GramSet::pair(k, xp.view(), yp.view()).unwrap();
        let (q1, q2) = (a.mmd2_q(0).unwrap(), b.mmd2_q(0).unwrap());
        prop_assert!(close(q1, q2, q1, 1e-12));
        let (v1, v2) = (a.var_q(0).unwrap().raw, b.var_q(0).unwrap().raw);
        prop_assert!(close(v1, v2, v1.abs() + 1e-3, 1e-12));
    }

    #[test]
    fn exchange_symmetry(seed in 0u64..10_000) {
        let k = &kernels()[(seed % 3) as usize];
        let (x, y, _) = random_instance(9, 3, seed);
        let (a, b) = (mmd2_full(k, x.view(), y.view()).unwrap(), mmd2_full(k, y.view(), x.view()).unwrap());
        prop_assert!(close(a, b, a, 1e-12));
    }

    #[test]
    fn linear_identity(seed in 0u64..10_000, eps in 0.0f64..3.0) {
        let k = &kernels()[(seed % 3) as usize];
        let (x, y, _) = random_instance(10, 2, seed);
        let full = mmd2_full(k, x.view(), y.view()).unwrap();
        let q = mmd2_q(k, x.view(), y.view()).unwrap();
        let e = mmd2_eps(k, x.view(), y.view(), eps).unwrap();
        prop_assert!((e - full - eps * q).abs() <= 4.0 * f64::EPSILON * (full.abs() + eps * q.abs()));
    }

    #[test]
    fn identical_pairs_vanish(seed in 0u64..10_000) {
        let k = &kernels()[(seed % 3) as usize];
        let (x, _, _) = random_instance(10, 2, seed);
        prop_assert_eq!(mmd2_full(k, x.view(), x.view()).unwrap(), 0.0);
        prop_assert_eq!(var_full(k, x.view(), x.view()).unwrap().raw, 0.0);
        let (_, y1, _) = random_instance(10, 2, seed + 1);
        prop_assert_eq!(var_full_diff(k, x.view(), y1.view(), y1.view()).unwrap().raw, 0.0);
        prop_assert!(var_q_diff(k, x.view(), y1.view(), y1.view()).unwrap().floored);
    }
}
