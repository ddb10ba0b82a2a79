//! Characteristic kernels on ℝ^p.
//!
//! The default is the dimension-normalized Gaussian kernel
//! `k(x, y) = exp(-‖x - y‖² / p)`. No data-dependent bandwidth is ever chosen.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use serde::Serialize;

use crate::error::{MmdError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KernelFamily {
    /// `exp(-‖x-y‖²/p)`; the scale field is ignored.
    GaussianDimNormalized,
    /// `exp(-‖x-y‖²/scale)`.
    Gaussian,
    /// `exp(-‖x-y‖₁/scale)`.
    Laplace,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelSpec {
    family: KernelFamily,
    scale: f64,
}

impl KernelSpec {
    pub fn gaussian_dim_normalized() -> Self {
        Self {
            family: KernelFamily::GaussianDimNormalized,
            scale: 1.0,
        }
    }

    pub fn gaussian(scale: f64) -> Result<Self> {
        Self::new(KernelFamily::Gaussian, scale)
    }

    pub fn laplace(scale: f64) -> Result<Self> {
        Self::new(KernelFamily::Laplace, scale)
    }

    pub fn new(family: KernelFamily, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(MmdError::InvalidKernel(format!(
                "scale must be finite and positive, got {scale}"
            )));
        }
        Ok(Self { family, scale })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Evaluates `k(x, y)`, validating lengths and finiteness.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(MmdError::DimensionMismatch {
                expected: x.len(),
                found: y.len(),
            });
        }
        if x.is_empty() {
            return Err(MmdError::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        if !x.iter().chain(y).all(|v| v.is_finite()) {
            return Err(MmdError::NonFiniteInput);
        }
        Ok(self.eval_unchecked(x, y))
    }

    /// Evaluates `k(x, y)` for equal-length finite slices.
    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        match self.family {
            KernelFamily::GaussianDimNormalized => {
                (-squared_distance(x, y) / x.len() as f64).exp()
            }
            KernelFamily::Gaussian => (-squared_distance(x, y) / self.scale).exp(),
            KernelFamily::Laplace => {
                let l1: f64 = x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum();
                (-l1 / self.scale).exp()
            }
        }
    }
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self::gaussian_dim_normalized()
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            KernelFamily::GaussianDimNormalized => write!(f, "gaussian-dim"),
            KernelFamily::Gaussian => write!(f, "gaussian:{}", self.scale),
            KernelFamily::Laplace => write!(f, "laplace:{}", self.scale),
        }
    }
}

/// Parses `gaussian-dim`, `gaussian:S` or `laplace:S`.
impl FromStr for KernelSpec {
    type Err = MmdError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "gaussian-dim" {
            return Ok(Self::gaussian_dim_normalized());
        }
        let (name, scale) = s
            .split_once(':')
            .ok_or_else(|| MmdError::InvalidKernel(format!("unrecognised kernel '{s}'")))?;
        let scale: f64 = scale
            .trim()
            .parse()
            .map_err(|_| MmdError::InvalidKernel(format!("bad scale in '{s}'")))?;
        match name.trim() {
            "gaussian" => Self::gaussian(scale),
            "laplace" => Self::laplace(scale),
            other => Err(MmdError::InvalidKernel(format!(
                "unrecognised kernel family '{other}'"
            ))),
        }
    }
}

#[inline]
fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Checks that every entry of a sample is finite.
pub fn check_finite(x: ArrayView2<'_, f64>) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(MmdError::NonFiniteInput)
    }
}

fn row_slices<'a>(x: &'a ArrayView2<'a, f64>) -> Vec<&'a [f64]> {
    x.rows()
        .into_iter()
        .map(|r| r.to_slice().expect("standard layout rows"))
        .collect()
}

/// Cross Gram matrix `G[i, j] = k(x_i, y_j)`.
pub fn gram_cross(k: &KernelSpec, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if x.ncols() != y.ncols() {
        return Err(MmdError::DimensionMismatch {
            expected: x.ncols(),
            found: y.ncols(),
        });
    }
    if x.ncols() == 0 {
        return Err(MmdError::DimensionMismatch {
            expected: 1,
            found: 0,
        });
    }
    check_finite(x)?;
    check_finite(y)?;
    let xs = x.as_standard_layout();
    let ys = y.as_standard_layout();
    let xv = xs.view();
    let yv = ys.view();
    let xr = row_slices(&xv);
    let yr = row_slices(&yv);
    Ok(Array2::from_shape_fn((xr.len(), yr.len()), |(i, j)| {
        k.eval_unchecked(xr[i], yr[j])
    }))
}

/// Symmetric Gram matrix `G[i, j] = k(x_i, x_j)`; each unordered pair is
/// evaluated once and mirrored, the diagonal is exactly 1.
pub fn gram_self(k: &KernelSpec, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if x.ncols() == 0 {
        return Err(MmdError::DimensionMismatch {
            expected: 1,
            found: 0,
        });
    }
    check_finite(x)?;
    let xs = x.as_standard_layout();
    let xv = xs.view();
    let xr = row_slices(&xv);
    let n = xr.len();
    let mut g = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        g[[i, i]] = 1.0;
        for j in (i + 1)..n {
            let v = k.eval_unchecked(xr[i], xr[j]);
            g[[i, j]] = v;
            g[[j, i]] = v;
        }
    }
    Ok(g)
}
