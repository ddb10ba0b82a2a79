//! MMD² point estimators and their variance estimators.
//!
//! Notation: `x` is the data sample, `y` a row-aligned model sample
//! (`y_i = F(U_i; α)`). The pair kernel is
//!
//! ```text
//! h(i, j) = k(x_i, x_j) - k(x_i, y_j) - k(x_j, y_i) + k(y_i, y_j)
//! ```
//!
//! and, for blocks `a = (rows 2a, 2a+1)` (0-based), the split kernel is
//!
//! ```text
//! q(a, b) = k(x_2a, x_2b) - k(x_2b+1, y_2a+1) - k(x_2a+1, y_2b+1) + k(y_2a, y_2b)
//! ```
//!
//! Both are symmetric, so the triple sums behind the variance estimators
//! reduce to row sums: `Σ_{i,j,k distinct} h(i,j) h(i,k) = Σ_i (r_i² - s_i)`
//! with `r_i = Σ_{j≠i} h(i,j)` and `s_i = Σ_{j≠i} h(i,j)²`. This turns the
//! O(n³) estimators into O(n²) passes over precomputed Gram matrices.

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{MmdError, Result};
use crate::kernels::{gram_cross, gram_self, KernelSpec};
use crate::rng::RngStream;

/// Floor applied to split-kernel variance estimates.
pub const Q_VARIANCE_FLOOR: f64 = 1e-12;

/// Variance estimate after clamping, with the raw value kept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceEstimate {
    pub raw: f64,
    pub value: f64,
    pub floored: bool,
}

impl VarianceEstimate {
    /// Clamp at zero (full-statistic variances, whose null value is 0).
    fn clamp_zero(raw: f64) -> Self {
        Self {
            raw,
            value: raw.max(0.0),
            floored: raw < 0.0,
        }
    }

    /// Floor at [`Q_VARIANCE_FLOOR`] (split-statistic variances, always positive in theory).
    fn floor_q(raw: f64) -> Self {
        Self {
            raw,
            value: raw.max(Q_VARIANCE_FLOOR),
            floored: raw <= Q_VARIANCE_FLOOR,
        }
    }

    pub fn sd(&self) -> f64 {
        self.value.sqrt()
    }
}

/// The five estimates computed from one (data, model) sample pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MmdEstimates {
    pub mmd2_full: f64,
    pub mmd2_q: f64,
    pub epsilon: f64,
    pub mmd2_eps: f64,
    pub sigma2: VarianceEstimate,
    pub sigma2_q: VarianceEstimate,
    /// The last row was ignored by the block statistics because n is odd.
    pub odd_n_dropped: bool,
}

/// Row-aligned data and model samples of equal shape.
#[derive(Debug, Clone)]
pub struct PairedSamples {
    x: Array2<f64>,
    y: Array2<f64>,
}

impl PairedSamples {
    pub fn new(x: Array2<f64>, y: Array2<f64>) -> Result<Self> {
        check_same_shape(x.view(), y.view())?;
        Ok(Self { x, y })
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn y(&self) -> ArrayView2<'_, f64> {
        self.y.view()
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }

    /// Jointly permutes the pairs with a seeded shuffle, keeping `(x_i, y_i)` together.
    ///
    /// Block statistics depend on row order, so this is never applied implicitly.
    pub fn shuffled(&self, stream: &mut RngStream) -> Self {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(stream.rng());
        Self {
            x: self.x.select(Axis(0), &order),
            y: self.y.select(Axis(0), &order),
        }
    }

    pub fn into_parts(self) -> (Array2<f64>, Array2<f64>) {
        (self.x, self.y)
    }
}

fn check_same_shape(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<()> {
    if x.ncols() != y.ncols() {
        return Err(MmdError::DimensionMismatch {
            expected: x.ncols(),
            found: y.ncols(),
        });
    }
    if x.nrows() != y.nrows() {
        return Err(MmdError::DimensionMismatch {
            expected: x.nrows(),
            found: y.nrows(),
        });
    }
    Ok(())
}

fn require_rows(n: usize, needed: usize) -> Result<()> {
    if n < needed {
        Err(MmdError::TooFewObservations { needed, found: n })
    } else {
        Ok(())
    }
}

/// Gram matrices of one model sample against the data: `kyy[i,j] = k(y_i,y_j)`,
/// `kxy[i,j] = k(x_i,y_j)`.
#[derive(Debug, Clone)]
pub struct ModelGrams {
    kyy: Array2<f64>,
    kxy: Array2<f64>,
}

impl ModelGrams {
    pub fn new(k: &KernelSpec, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<Self> {
        check_same_shape(x, y)?;
        Ok(Self {
            kyy: gram_self(k, y)?,
            kxy: gram_cross(k, x, y)?,
        })
    }
}

/// Gram matrices shared by every estimator for one data sample and one or
/// two model samples.
#[derive(Debug, Clone)]
pub struct GramSet {
    kxx: Array2<f64>,
    models: Vec<ModelGrams>,
}

impl GramSet {
    pub fn pair(k: &KernelSpec, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<Self> {
        let models = vec![ModelGrams::new(k, x, y)?];
        Ok(Self {
            kxx: gram_self(k, x)?,
            models,
        })
    }

    pub fn triple(
        k: &KernelSpec,
        x: ArrayView2<'_, f64>,
        y1: ArrayView2<'_, f64>,
        y2: ArrayView2<'_, f64>,
    ) -> Result<Self> {
        let models = vec![ModelGrams::new(k, x, y1)?, ModelGrams::new(k, x, y2)?];
        Ok(Self {
            kxx: gram_self(k, x)?,
            models,
        })
    }

    pub fn n(&self) -> usize {
        self.kxx.nrows()
    }

    pub fn model_count(&self) -> usize {
        self.models.len()
    }

    #[inline]
    fn h(&self, model: usize, i: usize, j: usize) -> f64 {
        let m = &self.models[model];
        self.kxx[[i, j]] - m.kxy[[i, j]] - m.kxy[[j, i]] + m.kyy[[i, j]]
    }

    #[inline]
    fn q(&self, model: usize, a: usize, b: usize) -> f64 {
        let m = &self.models[model];
        let (a0, a1, b0, b1) = (2 * a, 2 * a + 1, 2 * b, 2 * b + 1);
        self.kxx[[a0, b0]] - m.kxy[[b1, a1]] - m.kxy[[a1, b1]] + m.kyy[[a0, b0]]
    }

    fn block_count(&self) -> usize {
        self.n() / 2
    }

    /// `MMD̂²` for model `model`.
    pub fn mmd2_full(&self, model: usize) -> Result<f64> {
        let n = self.n();
        require_rows(n, 2)?;
        let sum = pair_sum(n, |i, j| self.h(model, i, j));
        Ok(sum / (n as f64 * (n as f64 - 1.0)))
    }

    /// `MMD̂²_q` for model `model`.
    pub fn mmd2_q(&self, model: usize) -> Result<f64> {
        let n = self.n();
        require_rows(n, 4)?;
        let m = self.block_count();
        let sum = pair_sum(m, |a, b| self.q(model, a, b));
        Ok(sum / (m as f64 * (m as f64 - 1.0)))
    }

    /// `σ̂²` of the full statistic.
    pub fn var_full(&self, model: usize) -> Result<VarianceEstimate> {
        let n = self.n();
        require_rows(n, 3)?;
        let mmd = self.mmd2_full(model)?;
        let t = row_sum_reduction(n, |i, j| self.h(model, i, j));
        let u = 4.0 * t / (n as f64 * (n as f64 - 1.0) * (n as f64 - 2.0));
        Ok(VarianceEstimate::clamp_zero(u - 4.0 * mmd * mmd))
    }

    /// `σ̂²_q` of the split statistic.
    pub fn var_q(&self, model: usize) -> Result<VarianceEstimate> {
        let n = self.n();
        require_rows(n, 6)?;
        let m = self.block_count();
        let mmd = self.mmd2_full(model)?;
        let t = row_sum_reduction(m, |a, b| self.q(model, a, b));
        let u = 8.0 * t / (m as f64 * (m as f64 - 1.0) * (m as f64 - 2.0));
        Ok(VarianceEstimate::floor_q(u - 8.0 * mmd * mmd))
    }

    fn require_two_models(&self) -> Result<()> {
        if self.models.len() < 2 {
            Err(MmdError::DimensionMismatch {
                expected: 2,
                found: self.models.len(),
            })
        } else {
            Ok(())
        }
    }

    /// `σ̂²_{α,β}`: variance of the difference of the two full statistics.
    pub fn var_full_diff(&self) -> Result<VarianceEstimate> {
        self.require_two_models()?;
        let n = self.n();
        require_rows(n, 3)?;
        let d = self.mmd2_full(0)? - self.mmd2_full(1)?;
        let t = row_sum_reduction(n, |i, j| self.h(0, i, j) - self.h(1, i, j));
        let u = 4.0 * t / (n as f64 * (n as f64 - 1.0) * (n as f64 - 2.0));
        Ok(VarianceEstimate::clamp_zero(u - 4.0 * d * d))
    }

    /// `σ̂²_{q,α,β}`: variance of the difference of the two split statistics.
    pub fn var_q_diff(&self) -> Result<VarianceEstimate> {
        self.require_two_models()?;
        let n = self.n();
        require_rows(n, 6)?;
        let m = self.block_count();
        let d = self.mmd2_full(0)? - self.mmd2_full(1)?;
        let t = row_sum_reduction(m, |a, b| self.q(0, a, b) - self.q(1, a, b));
        let u = 8.0 * t / (m as f64 * (m as f64 - 1.0) * (m as f64 - 2.0));
        Ok(VarianceEstimate::floor_q(u - 8.0 * d * d))
    }

    /// All five estimates for model `model` with weight `eps`.
    pub fn estimates(&self, model: usize, eps: f64) -> Result<MmdEstimates> {
        check_eps(eps)?;
        let mmd2_full = self.mmd2_full(model)?;
        let mmd2_q = self.mmd2_q(model)?;
        Ok(MmdEstimates {
            mmd2_full,
            mmd2_q,
            epsilon: eps,
            mmd2_eps: mmd2_full + eps * mmd2_q,
            sigma2: self.var_full(model)?,
            sigma2_q: self.var_q(model)?,
            odd_n_dropped: self.n() % 2 == 1,
        })
    }
}

/// `Σ_{i≠j} f(i, j)` for symmetric `f`, accumulated over `i < j` in row order.
fn pair_sum(n: usize, f: impl Fn(usize, usize) -> f64) -> f64 {
    let mut sum = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in (i + 1)..n {
            row += f(i, j);
        }
        sum += row;
    }
    2.0 * sum
}

/// `Σ_{i,j,k distinct} f(i,j) f(i,k) = Σ_i (r_i² - s_i)` for symmetric `f`.
fn row_sum_reduction(n: usize, f: impl Fn(usize, usize) -> f64) -> f64 {
    let mut r = vec![0.0; n];
    let mut s = vec![0.0; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = f(i, j);
            let v2 = v * v;
            r[i] += v;
            r[j] += v;
            s[i] += v2;
            s[j] += v2;
        }
    }
    r.iter().zip(&s).map(|(ri, si)| ri * ri - si).sum()
}

fn check_eps(eps: f64) -> Result<()> {
    if eps.is_nan() || eps < 0.0 {
        Err(MmdError::NegativeEpsilon(eps))
    } else {
        Ok(())
    }
}

/// Unbiased `MMD̂²` of row-aligned samples.
pub fn mmd2_full(k: &KernelSpec, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<f64> {
    require_rows(x.nrows(), 2)?;
    GramSet::pair(k, x, y)?.mmd2_full(0)
}

/// Split estimator `MMD̂²_q` over consecutive row blocks (odd trailing row ignored).
pub fn mmd2_q(k: &KernelSpec, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<f64> {
    require_rows(x.nrows(), 4)?;
    GramSet::pair(k, x, y)?.mmd2_q(0)
}

/// `MMD̂² + eps · MMD̂²_q`.
pub fn mmd2_eps(k: &KernelSpec, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    require_rows(x.nrows(), 4)?;
    let g = GramSet::pair(k, x, y)?;
    Ok(g.mmd2_full(0)? + eps * g.mmd2_q(0)?)
}

pub fn var_full(k: &KernelSpec, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<VarianceEstimate> {
    require_rows(x.nrows(), 3)?;
    GramSet::pair(k, x, y)?.var_full(0)
}

pub fn var_q(k: &KernelSpec, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<VarianceEstimate> {
    require_rows(x.nrows(), 6)?;
    GramSet::pair(k, x, y)?.var_q(0)
}

pub fn var_full_diff(
    k: &KernelSpec,
    x: ArrayView2<'_, f64>,
    y1: ArrayView2<'_, f64>,
    y2: ArrayView2<'_, f64>,
) -> Result<VarianceEstimate> {
    require_rows(x.nrows(), 3)?;
    GramSet::triple(k, x, y1, y2)?.var_full_diff()
}

pub fn var_q_diff(
    k: &KernelSpec,
    x: ArrayView2<'_, f64>,
    y1: ArrayView2<'_, f64>,
    y2: ArrayView2<'_, f64>,
) -> Result<VarianceEstimate> {
    require_rows(x.nrows(), 6)?;
    GramSet::triple(k, x, y1, y2)?.var_q_diff()
}

/// Computes every estimate for one sample pair at weight `eps`.
pub fn estimate_all(
    k: &KernelSpec,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    eps: f64,
) -> Result<MmdEstimates> {
    check_eps(eps)?;
    require_rows(x.nrows(), 6)?;
    GramSet::pair(k, x, y)?.estimates(0, eps)
}
