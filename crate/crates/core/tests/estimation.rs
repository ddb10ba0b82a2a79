mod common;

use common::*;
use mmdcheck::estimators::mmd2_full;
use mmdcheck::models::PatternSearchOptions;
use mmdcheck::rng::RngStream;
use mmdcheck::{estimate_mmd_min, estimate_plugin, GenerativeModel, KernelSpec, PluginKind};

#[test]
fn mmd_min_agrees_with_grid_search() {
    let model = GenerativeModel::gaussian_location(1, &[1.0]).unwrap();
    let k = KernelSpec::default();
    let x = normal_sample(500, 1, 0.0, 1.0, &mut RngStream::new(21));
    let noise = model.sample_noise(500, &mut RngStream::new(22));
    let fit = estimate_mmd_min(&model, x.view(), &k, &noise, &[0.7], &PatternSearchOptions::default()).unwrap();

    let objective = |a: f64| {
        let y = model.generate(&noise, &[a]).unwrap();
        mmd2_full(&k, x.view(), y.view()).unwrap()
    };
    let (mut best_a, mut best_v) = (0.0, f64::INFINITY);
    for i in 0..=2000 {
        let a = -1.0 + 0.001 * f64::from(i);
        let v = objective(a);
        if v < best_v {
            best_a = a;
            best_v = v;
        }
    }
    let mean = estimate_plugin(PluginKind::MarginalMean, x.view()).unwrap()[0];
    assert!((fit.params[0] - mean).abs() < 0.15, "fit {} mean {mean}", fit.params[0]);
    assert!((fit.params[0] - best_a).abs() < 0.01, "fit {} grid {best_a}", fit.params[0]);
    assert!(fit.objective <= best_v + 1e-6);
}

#[test]
fn closed_form_oracle_limits() {
    assert_eq!(gaussian_mmd2_closed_form(3, 0.0, 1.0), 0.0);
    // p = 1: 1/√5 + 1/√(1+4s²) - 2/√(1+2(1+s²)) e^{-μ²/(1+2(1+s²))}
    let s: f64 = 1.3;
    let v = 5f64.powf(-0.5) + (1.0 + 4.0 * s * s).powf(-0.5)
        - 2.0 * (3.0 + 2.0 * s * s).powf(-0.5) * (-0.25 / (3.0 + 2.0 * s * s)).exp();
    assert!((gaussian_mmd2_closed_form(1, 0.5, s) - v).abs() < 1e-15);
}

#[test]
fn full_estimator_is_unbiased_small_run() {
    let k = KernelSpec::default();
    let (p, mu, s) = (1usize, 0.5, 1.0);
    let reps = 400;
    let mut stream = RngStream::new(77);
    let vals: Vec<f64> = (0..reps)
        .map(|_| {
            let x = normal_sample(60, p, 0.0, 1.0, &mut stream);
            let y = normal_sample(60, p, mu, s, &mut stream);
            mmd2_full(&k, x.view(), y.view()).unwrap()
        })
        .collect();
    let mean = vals.iter().sum::<f64>() / reps as f64;
    let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
    let target = gaussian_mmd2_closed_form(p, mu, s);
    assert!((mean - target).abs() < 4.0 * sd / (reps as f64).sqrt(), "{mean} vs {target}");
}
