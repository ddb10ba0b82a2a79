//! Model names with inline hyperparameters, e.g. `gaussian-location:p=4,sd=1.2`.

use std::collections::BTreeMap;

use mmdcheck::models::{estimate_mmd_min, NoiseSample, PatternSearchOptions};
use mmdcheck::{estimate_plugin, GenerativeModel, KernelSpec, ModelKind, PluginKind};
use ndarray::ArrayView2;

pub const MODEL_NAMES: &str =
    "gaussian-location[:p=P,sd=S], gaussian-scale[:p=P,mean=M], discrete-truncated-gaussian:m=M, levy-frailty-copula[:p=P]";

fn hyperparams(s: &str) -> Result<BTreeMap<&str, &str>, String> {
    let mut out = BTreeMap::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| format!("hyperparameter '{part}' is not key=value"))?;
        out.insert(k.trim(), v.trim());
    }
    Ok(out)
}

fn take<T: std::str::FromStr>(h: &mut BTreeMap<&str, &str>, key: &str, default: Option<T>) -> Result<T, String> {
    match h.remove(key) {
        Some(v) => v.parse().map_err(|_| format!("bad value '{v}' for {key}")),
        None => default.ok_or_else(|| format!("missing hyperparameter {key}")),
    }
}

/// Builds a model; `p` defaults to the data dimension.
pub fn parse_model(spec: &str, data_dim: usize) -> Result<GenerativeModel, String> {
    let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let mut h = hyperparams(rest)?;
    let model = match name {
        "gaussian-location" => {
            let p = take(&mut h, "p", Some(data_dim))?;
            let sd = take(&mut h, "sd", Some(1.0))?;
            GenerativeModel::gaussian_location_iso(p, sd)
        }
        "gaussian-scale" => {
            let p = take(&mut h, "p", Some(data_dim))?;
            let mean = take(&mut h, "mean", Some(0.0))?;
            GenerativeModel::gaussian_scale(p, mean)
        }
        "discrete-truncated-gaussian" => GenerativeModel::discrete_truncated_gaussian(take(&mut h, "m", None)?),
        "levy-frailty-copula" => GenerativeModel::levy_frailty_copula(take(&mut h, "p", Some(data_dim))?),
        _ => return Err(format!("unknown model '{name}'; known: {MODEL_NAMES}")),
    }
    .map_err(|e| e.to_string())?;
    if let Some(k) = h.keys().next() {
        return Err(format!("unknown hyperparameter '{k}' for {name}"));
    }
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FitMethod {
    Mean,
    Std,
    MmdMin,
}

/// Plug-in fits apply only to the family they estimate.
pub fn check_fit(model: &GenerativeModel, fit: FitMethod) -> Result<(), String> {
    let ok = match fit {
        FitMethod::Mean => matches!(model.kind(), ModelKind::GaussianLocation { .. }),
        FitMethod::Std => matches!(model.kind(), ModelKind::GaussianScale { .. }),
        FitMethod::MmdMin => true,
    };
    if ok {
        Ok(())
    } else {
        Err(format!("--fit {fit:?} does not apply to this model"))
    }
}

/// Starting point for the minimum-MMD search: a moment fit where one exists.
fn mmd_min_start(model: &GenerativeModel, x: ArrayView2<'_, f64>) -> Result<Vec<f64>, String> {
    let mut start = match model.kind() {
        ModelKind::GaussianLocation { .. } => estimate_plugin(PluginKind::MarginalMean, x).map_err(|e| e.to_string())?,
        ModelKind::GaussianScale { .. } => estimate_plugin(PluginKind::MarginalStd, x).map_err(|e| e.to_string())?,
        ModelKind::DiscreteTruncatedGaussian { .. } => {
            let m = estimate_plugin(PluginKind::MarginalMean, x).map_err(|e| e.to_string())?;
            let s = estimate_plugin(PluginKind::MarginalStd, x).map_err(|e| e.to_string())?;
            vec![m[0], s[0]]
        }
        ModelKind::LevyFrailtyCopula => model.box_center(),
    };
    model.project(&mut start);
    Ok(start)
}

/// Estimates the parameter; `fit_noise` feeds the minimum-MMD objective only.
pub fn fit_params(
    model: &GenerativeModel,
    fit: FitMethod,
    x: ArrayView2<'_, f64>,
    kernel: &KernelSpec,
    fit_noise: &NoiseSample,
) -> Result<Vec<f64>, String> {
    if x.ncols() != model.obs_dim() {
        return Err(format!("data has {} columns, model expects {}", x.ncols(), model.obs_dim()));
    }
    let params = match fit {
        FitMethod::Mean => estimate_plugin(PluginKind::MarginalMean, x).map_err(|e| e.to_string())?,
        FitMethod::Std => estimate_plugin(PluginKind::MarginalStd, x).map_err(|e| e.to_string())?,
        FitMethod::MmdMin => {
            let start = mmd_min_start(model, x)?;
            estimate_mmd_min(model, x, kernel, fit_noise, &start, &PatternSearchOptions::default())
                .map_err(|e| e.to_string())?
                .params
        }
    };
    model.check_param(&params).map_err(|e| e.to_string())?;
    Ok(params)
}
