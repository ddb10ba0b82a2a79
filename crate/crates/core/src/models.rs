//! Parametric models represented by a generating function `F(u; α)` and a
//! base-noise law `P_U`, so that `F(U; α) ~ P_α` for `U ~ P_U`.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Exp1, Open01, StandardNormal};
use serde::Serialize;

use crate::error::{MmdError, Result};
use crate::estimators::mmd2_full;
use crate::kernels::KernelSpec;
use crate::normal::std_normal_quantile;
use crate::rng::RngStream;

const LOCATION_BOUND: f64 = 10.0;
const SCALE_BOUNDS: (f64, f64) = (1e-3, 10.0);
const COPULA_BOUNDS: (f64, f64) = (1e-3, 1.0 - 1e-3);

/// Built-in model families.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ModelKind {
    /// `F(u; α) = u + α`, `U ~ N(0, diag(cov_diag))`.
    GaussianLocation { cov_diag: Vec<f64> },
    /// `F(u; σ) = mean·1 + diag(σ) u`, `U ~ N(0, I_p)`.
    GaussianScale { mean: f64 },
    /// `Z = μ + σ Φ⁻¹(u)`, `F = 1(Z ∈ [0,m)) ⌊Z⌋ + m 1(Z ≥ m)`, `U ~ Unif(0,1)`.
    DiscreteTruncatedGaussian { m: u32 },
    /// Lévy-frailty copula on `[0,1]^p`, `U = (e_0, …, e_p)` i.i.d. Exp(1).
    LevyFrailtyCopula,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerativeModel {
    kind: ModelKind,
    param_dim: usize,
    noise_dim: usize,
    obs_dim: usize,
    param_box: Vec<(f64, f64)>,
}

/// Draws from `P_U`, tagged with the id of the stream that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSample {
    pub values: Array2<f64>,
    pub stream_id: u64,
}

impl NoiseSample {
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }
}

fn check_positive_dim(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        Err(MmdError::InvalidHyperparameter(format!("{name} must be >= 1")))
    } else {
        Ok(())
    }
}

impl GenerativeModel {
    /// Location family around `N(0, diag(cov_diag))`; parameter is the p-vector shift.
    pub fn gaussian_location(p: usize, cov_diag: &[f64]) -> Result<Self> {
        check_positive_dim("p", p)?;
        if cov_diag.len() != p {
            return Err(MmdError::InvalidHyperparameter(format!(
                "cov_diag has {} entries, expected {p}",
                cov_diag.len()
            )));
        }
        if !cov_diag.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(MmdError::InvalidHyperparameter(
                "cov_diag entries must be finite and > 0".into(),
            ));
        }
        Ok(Self {
            kind: ModelKind::GaussianLocation {
                cov_diag: cov_diag.to_vec(),
            },
            param_dim: p,
            noise_dim: p,
            obs_dim: p,
            param_box: vec![(-LOCATION_BOUND, LOCATION_BOUND); p],
        })
    }

    /// Location family with isotropic variance `sd²`.
    pub fn gaussian_location_iso(p: usize, sd: f64) -> Result<Self> {
        if !(sd.is_finite() && sd > 0.0) {
            return Err(MmdError::InvalidHyperparameter(format!("sd must be finite and > 0, got {sd}")));
        }
        Self::gaussian_location(p, &vec![sd * sd; p])
    }

    /// Fixed mean `mean·1`, parameter is the p-vector of marginal standard deviations.
    pub fn gaussian_scale(p: usize, mean: f64) -> Result<Self> {
        check_positive_dim("p", p)?;
        if !mean.is_finite() {
            return Err(MmdError::InvalidHyperparameter("mean must be finite".into()));
        }
        Ok(Self {
            kind: ModelKind::GaussianScale { mean },
            param_dim: p,
            noise_dim: p,
            obs_dim: p,
            param_box: vec![SCALE_BOUNDS; p],
        })
    }

    /// Gaussian discretized onto `{0, …, m}`; parameter `(μ, σ)`.
    pub fn discrete_truncated_gaussian(m: u32) -> Result<Self> {
        if m == 0 {
            return Err(MmdError::InvalidHyperparameter("m must be >= 1".into()));
        }
        Ok(Self {
            kind: ModelKind::DiscreteTruncatedGaussian { m },
            param_dim: 2,
            noise_dim: 1,
            obs_dim: 1,
            param_box: vec![(-LOCATION_BOUND, f64::from(m) + LOCATION_BOUND), SCALE_BOUNDS],
        })
    }

    /// One-parameter Lévy-frailty copula in dimension `p`.
    pub fn levy_frailty_copula(p: usize) -> Result<Self> {
        check_positive_dim("p", p)?;
        Ok(Self {
            kind: ModelKind::LevyFrailtyCopula,
            param_dim: 1,
            noise_dim: p + 1,
            obs_dim: p,
            param_box: vec![COPULA_BOUNDS],
        })
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn param_box(&self) -> &[(f64, f64)] {
        &self.param_box
    }

    /// Centre of the parameter box.
    pub fn box_center(&self) -> Vec<f64> {
        self.param_box.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }

    pub fn check_param(&self, alpha: &[f64]) -> Result<()> {
        if alpha.len() != self.param_dim {
            return Err(MmdError::DimensionMismatch {
                expected: self.param_dim,
                found: alpha.len(),
            });
        }
        for (index, (&value, &(lower, upper))) in alpha.iter().zip(&self.param_box).enumerate() {
            if !(value >= lower && value <= upper) {
                return Err(MmdError::ParamOutOfBox {
                    index,
                    value,
                    lower,
                    upper,
                });
            }
        }
        Ok(())
    }

    /// Projects a parameter onto the box; returns whether any coordinate moved.
    pub fn project(&self, alpha: &mut [f64]) -> bool {
        let mut moved = false;
        for (a, &(lo, hi)) in alpha.iter_mut().zip(&self.param_box) {
            let c = a.clamp(lo, hi);
            if c != *a {
                *a = c;
                moved = true;
            }
        }
        moved
    }

    /// `n` i.i.d. draws from `P_U`.
    pub fn sample_noise(&self, n: usize, stream: &mut RngStream) -> NoiseSample {
        let id = stream.id();
        let rng = stream.rng();
        let d = self.noise_dim;
        let mut values = Array2::<f64>::zeros((n, d));
        match &self.kind {
            ModelKind::GaussianLocation { cov_diag } => {
                let sds: Vec<f64> = cov_diag.iter().map(|v| v.sqrt()).collect();
                for mut row in values.rows_mut() {
                    for (v, sd) in row.iter_mut().zip(&sds) {
                        let z: f64 = rng.sample(StandardNormal);
                        *v = sd * z;
                    }
                }
            }
            ModelKind::GaussianScale { .. } => {
                values.mapv_inplace(|_| rng.sample(StandardNormal));
            }
            ModelKind::DiscreteTruncatedGaussian { .. } => {
                values.mapv_inplace(|_| rng.sample(Open01));
            }
            ModelKind::LevyFrailtyCopula => {
                values.mapv_inplace(|_| rng.sample(Exp1));
            }
        }
        NoiseSample {
            values,
            stream_id: id,
        }
    }

    /// Applies `F(·; α)` row-wise.
    pub fn generate(&self, noise: &NoiseSample, alpha: &[f64]) -> Result<Array2<f64>> {
        self.generate_from(noise.values.view(), alpha)
    }

    pub fn generate_from(&self, noise: ArrayView2<'_, f64>, alpha: &[f64]) -> Result<Array2<f64>> {
        self.check_param(alpha)?;
        if noise.ncols() != self.noise_dim {
            return Err(MmdError::DimensionMismatch {
                expected: self.noise_dim,
                found: noise.ncols(),
            });
        }
        let mut out = Array2::<f64>::zeros((noise.nrows(), self.obs_dim));
        for (u, mut y) in noise.axis_iter(Axis(0)).zip(out.axis_iter_mut(Axis(0))) {
            let u = u.to_vec();
            let row = self.generator(&u, alpha);
            y.assign(&Array1::from(row));
        }
        Ok(out)
    }

    /// The generating function on a single noise draw.
    pub fn generator(&self, u: &[f64], alpha: &[f64]) -> Vec<f64> {
        match &self.kind {
            ModelKind::GaussianLocation { .. } => u.iter().zip(alpha).map(|(u, a)| u + a).collect(),
            ModelKind::GaussianScale { mean } => u.iter().zip(alpha).map(|(u, s)| mean + s * u).collect(),
            ModelKind::DiscreteTruncatedGaussian { m } => {
                let m = f64::from(*m);
                let z = alpha[0] + alpha[1] * std_normal_quantile(u[0]);
                let v = if z >= m {
                    m
                } else if z >= 0.0 {
                    z.floor()
                } else {
                    0.0
                };
                vec![v]
            }
            ModelKind::LevyFrailtyCopula => {
                let a = alpha[0];
                let e0 = u[0];
                u[1..]
                    .iter()
                    .map(|&ej| {
                        let own = if a * e0 >= (1.0 - a) * ej { 1.0 } else { 0.0 };
                        let common = 1.0 - own;
                        (-ej * own / a - e0 * common / (1.0 - a)).exp()
                    })
                    .collect()
            }
        }
    }
}

/// Plug-in moment estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PluginKind {
    MarginalMean,
    /// Divisor `n`.
    MarginalStd,
}

pub fn estimate_plugin(kind: PluginKind, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    let n = x.nrows();
    if n < 2 {
        return Err(MmdError::TooFewObservations { needed: 2, found: n });
    }
    let nf = n as f64;
    let means: Vec<f64> = x
        .axis_iter(Axis(1))
        .map(|c| c.iter().sum::<f64>() / nf)
        .collect();
    match kind {
        PluginKind::MarginalMean => Ok(means),
        PluginKind::MarginalStd => Ok(x
            .axis_iter(Axis(1))
            .zip(&means)
            .map(|(c, m)| (c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / nf).sqrt())
            .collect()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatternSearchOptions {
    /// Maximum number of full coordinate cycles.
    pub max_iter: usize,
    /// Stop once the step falls below this.
    pub tol: f64,
    /// Step multiplier after a cycle without improvement, in (0, 1).
    pub shrink: f64,
    pub initial_step: f64,
}

impl Default for PatternSearchOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol: 1e-4,
            shrink: 0.5,
            initial_step: 0.25,
        }
    }
}

/// Outcome of [`estimate_mmd_min`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MmdFit {
    pub params: Vec<f64>,
    pub objective: f64,
    pub init_objective: f64,
    pub cycles: usize,
    /// `init` lay outside the box and was projected onto it.
    pub init_projected: bool,
}

/// Minimum-MMD estimate by coordinatewise pattern search with common random numbers.
///
/// The same `noise` is reused for every candidate, so the objective
/// `α ↦ MMD̂²(x, F(noise; α))` is deterministic and no gradient is needed.
pub fn estimate_mmd_min(
    model: &GenerativeModel,
    x: ArrayView2<'_, f64>,
    kernel: &KernelSpec,
    noise: &NoiseSample,
    init: &[f64],
    opts: &PatternSearchOptions,
) -> Result<MmdFit> {
    if init.len() != model.param_dim() {
        return Err(MmdError::DimensionMismatch {
            expected: model.param_dim(),
            found: init.len(),
        });
    }
    if noise.len() != x.nrows() {
        return Err(MmdError::DimensionMismatch {
            expected: x.nrows(),
            found: noise.len(),
        });
    }
    if x.ncols() != model.obs_dim() {
        return Err(MmdError::DimensionMismatch {
            expected: model.obs_dim(),
            found: x.ncols(),
        });
    }
    if !(opts.shrink > 0.0 && opts.shrink < 1.0) || !(opts.tol > 0.0) || !(opts.initial_step > 0.0) {
        return Err(MmdError::InvalidHyperparameter(
            "pattern search needs 0 < shrink < 1, tol > 0, initial_step > 0".into(),
        ));
    }
    let objective = |a: &[f64]| -> Result<f64> {
        let y = model.generate(noise, a)?;
        mmd2_full(kernel, x, y.view())
    };

    let mut current = init.to_vec();
    let init_projected = model.project(&mut current);
    let init_objective = objective(&current)?;
    let mut best = init_objective;
    let mut step = opts.initial_step;
    let mut cycles = 0;

    while step >= opts.tol && cycles < opts.max_iter {
        cycles += 1;
        let mut improved = false;
        for c in 0..current.len() {
            for dir in [1.0, -1.0] {
                let mut cand = current.clone();
                cand[c] += dir * step;
                model.project(&mut cand);
                if cand[c] == current[c] {
                    continue;
                }
                let v = objective(&cand)?;
                if v < best {
                    best = v;
                    current = cand;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= opts.shrink;
        }
    }

    Ok(MmdFit {
        params: current,
        objective: best,
        init_objective,
        cycles,
        init_projected,
    })
}
