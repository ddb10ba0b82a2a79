//! Brute-force oracles shared by the integration and acceptance tests. They
//! evaluate the kernel directly on rows and follow the defining sums term by
//! term, with no Gram staging and no algebraic reduction.

#![allow(dead_code)]

use mmdcheck::rng::RngStream;
use mmdcheck::KernelSpec;
use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn kern(k: &KernelSpec, a: ArrayView2<'_, f64>, i: usize, b: ArrayView2<'_, f64>, j: usize) -> f64 {
    k.eval(a.row(i).as_slice().unwrap(), b.row(j).as_slice().unwrap()).unwrap()
}

/// `h((x_i, y_i), (x_j, y_j))`.
pub fn pair_h(k: &KernelSpec, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>, i: usize, j: usize) -> f64 {
    kern(k, x, i, x, j) - kern(k, x, i, y, j) - kern(k, x, j, y, i) + kern(k, y, i, y, j)
}

/// Split kernel on 1-based blocks `a`, `b`: rows `2a-1, 2a` and `2b-1, 2b`.
pub fn block_q(k: &KernelSpec, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>, a: usize, b: usize) -> f64 {
    let r = |one_based: usize| one_based - 1;
    kern(k, x, r(2 * a - 1), x, r(2 * b - 1)) - kern(k, y, r(2 * b), x, r(2 * a)) - kern(k, y, r(2 * a), x, r(2 * b))
        + kern(k, y, r(2 * a - 1), y, r(2 * b - 1))
}

pub fn brute_mmd2(k: &KernelSpec, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> f64 {
    let n = x.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += kern(k, x, i, x, j) - 2.0 * kern(k, x, i, y, j) + kern(k, y, i, y, j);
            }
        }
    }
    s / (n * (n - 1)) as f64
}

pub fn brute_mmd2_q(k: &KernelSpec, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> f64 {
    let m = x.nrows() / 2;
    let mut s = 0.0;
    for a in 1..=m {
        for b in 1..=m {
            if a != b {
                s += block_q(k, x, y, a, b);
            }
        }
    }
    s / (m * (m - 1)) as f64
}

/// `(1/(N(N-1)(N-2))) Σ_{i,j,l distinct} c/3 {f(i,j)f(i,l) + f(j,i)f(j,l) + f(l,j)f(l,i)}`.
fn symmetrized_triple(count: usize, c: f64, f: impl Fn(usize, usize) -> f64) -> f64 {
    let mut s = 0.0;
    for i in 0..count {
        for j in 0..count {
            for l in 0..count {
                if i == j || j == l || i == l {
                    continue;
                }
                s += c / 3.0 * (f(i, j) * f(i, l) + f(j, i) * f(j, l) + f(l, j) * f(l, i));
            }
        }
    }
    s / (count * (count - 1) * (count - 2)) as f64
}

/// `(U-statistic term, raw variance)` of the full statistic.
pub fn brute_var_full(k: &KernelSpec, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> (f64, f64) {
    let u = symmetrized_triple(x.nrows(), 4.0, |i, j| pair_h(k, x, y, i, j));
    let m = brute_mmd2(k, x, y);
    (u, u - 4.0 * m * m)
}

pub fn brute_var_q(k: &KernelSpec, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> (f64, f64) {
    let u = symmetrized_triple(x.nrows() / 2, 8.0, |a, b| block_q(k, x, y, a + 1, b + 1));
    let m = brute_mmd2(k, x, y);
    (u, u - 8.0 * m * m)
}

pub fn brute_var_full_diff(
    k: &KernelSpec,
    x: ArrayView2<'_, f64>,
    y1: ArrayView2<'_, f64>,
    y2: ArrayView2<'_, f64>,
) -> (f64, f64) {
    let u = symmetrized_triple(x.nrows(), 4.0, |i, j| pair_h(k, x, y1, i, j) - pair_h(k, x, y2, i, j));
    let d = brute_mmd2(k, x, y1) - brute_mmd2(k, x, y2);
    (u, u - 4.0 * d * d)
}

pub fn brute_var_q_diff(
    k: &KernelSpec,
    x: ArrayView2<'_, f64>,
    y1: ArrayView2<'_, f64>,
    y2: ArrayView2<'_, f64>,
) -> (f64, f64) {
    let u = symmetrized_triple(x.nrows() / 2, 8.0, |a, b| {
        block_q(k, x, y1, a + 1, b + 1) - block_q(k, x, y2, a + 1, b + 1)
    });
    let d = brute_mmd2(k, x, y1) - brute_mmd2(k, x, y2);
    (u, u - 8.0 * d * d)
}

/// `MMD̂²_ε` through the single index-dependent weighted kernel (even `n`).
pub fn literal_mmd2_eps(k: &KernelSpec, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>, eps: f64) -> f64 {
    let n = x.nrows();
    let nf = n as f64;
    let half = nf / 2.0;
    let w = nf * (nf - 1.0) / (half * (half - 1.0)) * eps;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            // 1-based parity
            let both_odd = i % 2 == 0 && j % 2 == 0;
            let both_even = i % 2 == 1 && j % 2 == 1;
            let wp = 1.0 + if both_odd { w } else { 0.0 };
            let wm = 1.0 + if both_even { w } else { 0.0 };
            s += wp * (kern(k, x, i, x, j) + kern(k, y, i, y, j)) - wm * (kern(k, x, i, y, j) + kern(k, y, i, x, j));
        }
    }
    s / (nf * (nf - 1.0))
}

/// Population `MMD²(N(0, I_p), N(μ1, s² I_p))` for the kernel `exp(-‖x-y‖²/p)`.
pub fn gaussian_mmd2_closed_form(p: usize, mu: f64, s: f64) -> f64 {
    let pf = p as f64;
    // E exp(-D²/p) for D ~ N(δ, τ²), per coordinate
    let e = |delta: f64, tau2: f64| (1.0 + 2.0 * tau2 / pf).powf(-0.5) * (-delta * delta / (pf + 2.0 * tau2)).exp();
    let exx = e(0.0, 2.0).powi(p as i32);
    let eyy = e(0.0, 2.0 * s * s).powi(p as i32);
    let exy = e(mu, 1.0 + s * s).powi(p as i32);
    exx + eyy - 2.0 * exy
}

pub fn normal_sample(n: usize, p: usize, mean: f64, sd: f64, stream: &mut RngStream) -> Array2<f64> {
    let rng = stream.rng();
    Array2::from_shape_simple_fn((n, p), || {
        let z: f64 = rng.sample(StandardNormal);
        mean + sd * z
    })
}

/// Mixed-scale data so that the oracle comparison sees varied kernel values.
pub fn random_instance(n: usize, p: usize, seed: u64) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let mut s = RngStream::new(seed);
    let shift = s.rng().random_range(-1.0..1.0);
    let sd = s.rng().random_range(0.5..2.0);
    let x = normal_sample(n, p, 0.0, 1.0, &mut s);
    let y1 = normal_sample(n, p, shift, sd, &mut s);
    let y2 = normal_sample(n, p, -shift, 1.0, &mut s);
    (x, y1, y2)
}

pub fn kernels() -> Vec<KernelSpec> {
    vec![
        KernelSpec::gaussian_dim_normalized(),
        KernelSpec::gaussian(0.7).unwrap(),
        KernelSpec::laplace(1.5).unwrap(),
    ]
}

/// `|a - b| <= tol · max(scale, tiny)`.
pub fn close(a: f64, b: f64, scale: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * scale.abs().max(1e-300)
}
