//! Asymptotically standard-normal MMD tests.
//!
//! * specification test of `MMD(M, P) = 0` from a fitted model sample,
//! * its simple-null special case (two-sample test with nothing fitted),
//! * comparison of two fitted models `MMD(P_α⋆, P) = MMD(Q_β⋆, P)`.
//!
//! Each statistic is `√n · MMD̂²_ε / (σ̂ + ε σ̂_q)` with `ε = n^(-1/c)`. The
//! split-sample term keeps the denominator away from zero when the full
//! statistic is degenerate, so the null law is N(0, 1) either way.

use ndarray::ArrayView2;
use serde::Serialize;

use crate::error::{MmdError, Result};
use crate::estimators::{GramSet, VarianceEstimate, Q_VARIANCE_FLOOR};
use crate::kernels::KernelSpec;
use crate::normal::std_normal_sf;

/// Default schedule exponent.
pub const DEFAULT_EXPONENT: f64 = 4.5;

/// `ε_n = n^(-1/c)` with `c > 2`, so that `ε_n → 0` and `ε_n √n → ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsilonSchedule {
    exponent_c: f64,
}

impl EpsilonSchedule {
    pub fn new(exponent_c: f64) -> Result<Self> {
        if !(exponent_c.is_finite() && exponent_c > 2.0) {
            return Err(MmdError::InvalidExponent(exponent_c));
        }
        Ok(Self { exponent_c })
    }

    pub fn exponent(&self) -> f64 {
        self.exponent_c
    }

    pub fn epsilon_at(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(MmdError::TooFewObservations { needed: 1, found: 0 });
        }
        Ok((n as f64).powf(-1.0 / self.exponent_c))
    }
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            exponent_c: DEFAULT_EXPONENT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Diagnostics {
    pub odd_n_dropped: bool,
    /// A full-statistic variance was negative and clamped to 0.
    pub variance_floored: bool,
    /// Noise stream ids of the two compared models.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stream_ids: Option<[u64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestReport {
    pub statistic: f64,
    pub p_value: f64,
    /// `None` for the split-only baselines.
    pub epsilon: Option<f64>,
    pub level: f64,
    pub reject: bool,
    /// `(MMD̂², MMD̂²_q)`; differences of the two models for comparisons.
    pub numerator_parts: (f64, f64),
    /// `(σ̂, σ̂_q)`.
    pub denominator_parts: (f64, f64),
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    FavorsModel1,
    FavorsModel2,
    NoEvidence,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompareReport {
    #[serde(flatten)]
    pub report: TestReport,
    pub direction: Direction,
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(MmdError::InvalidLevel(level))
    }
}

fn check_q_variance(v: &VarianceEstimate) -> Result<()> {
    if v.floored {
        Err(MmdError::InvalidDenominator {
            raw: v.raw,
            floor: Q_VARIANCE_FLOOR,
        })
    } else {
        Ok(())
    }
}

fn upper_p_value(t: f64) -> f64 {
    std_normal_sf(t)
}

fn two_sided_p_value(t: f64) -> f64 {
    (2.0 * std_normal_sf(t.abs())).min(1.0)
}

/// Estimates behind a specification (or two-sample) test; compute once, then
/// form reports for any number of schedules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpecStatistics {
    pub n: usize,
    pub mmd2_full: f64,
    pub mmd2_q: f64,
    pub sigma2: VarianceEstimate,
    pub sigma2_q: VarianceEstimate,
    pub odd_n_dropped: bool,
}

impl SpecStatistics {
    pub fn compute(k: &KernelSpec, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<Self> {
        let n = x.nrows();
        if n < 6 {
            return Err(MmdError::TooFewObservations { needed: 6, found: n });
        }
        let g = GramSet::pair(k, x, y)?;
        Ok(Self {
            n,
            mmd2_full: g.mmd2_full(0)?,
            mmd2_q: g.mmd2_q(0)?,
            sigma2: g.var_full(0)?,
            sigma2_q: g.var_q(0)?,
            odd_n_dropped: n % 2 == 1,
        })
    }

    fn diagnostics(&self) -> Diagnostics {
        Diagnostics {
            odd_n_dropped: self.odd_n_dropped,
            variance_floored: self.sigma2.floored,
            stream_ids: None,
        }
    }

    /// `T = √n (MMD̂² + ε MMD̂²_q) / (σ̂ + ε σ̂_q)`, upper-tail p-value.
    pub fn report(&self, schedule: &EpsilonSchedule, level: f64) -> Result<TestReport> {
        check_level(level)?;
        check_q_variance(&self.sigma2_q)?;
        let eps = schedule.epsilon_at(self.n)?;
        let sd = self.sigma2.sd();
        let sd_q = self.sigma2_q.sd();
        let statistic = (self.n as f64).sqrt() * (self.mmd2_full + eps * self.mmd2_q) / (sd + eps * sd_q);
        let p_value = upper_p_value(statistic);
        Ok(TestReport {
            statistic,
            p_value,
            epsilon: Some(eps),
            level,
            reject: p_value < level,
            numerator_parts: (self.mmd2_full, self.mmd2_q),
            denominator_parts: (sd, sd_q),
            diagnostics: self.diagnostics(),
        })
    }

    /// `T = √n MMD̂²_q / σ̂_q`, upper-tail p-value.
    pub fn q_only_report(&self, level: f64) -> Result<TestReport> {
        check_level(level)?;
        check_q_variance(&self.sigma2_q)?;
        let sd = self.sigma2.sd();
        let sd_q = self.sigma2_q.sd();
        let statistic = (self.n as f64).sqrt() * self.mmd2_q / sd_q;
        let p_value = upper_p_value(statistic);
        Ok(TestReport {
            statistic,
            p_value,
            epsilon: None,
            level,
            reject: p_value < level,
            numerator_parts: (self.mmd2_full, self.mmd2_q),
            denominator_parts: (sd, sd_q),
            diagnostics: self.diagnostics(),
        })
    }
}

/// Specification test of a fitted model: `y_i = F(U_i; α_n)` row-aligned with `x`.
pub fn spec_test(
    k: &KernelSpec,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    schedule: &EpsilonSchedule,
    level: f64,
) -> Result<TestReport> {
    check_level(level)?;
    SpecStatistics::compute(k, x, y)?.report(schedule, level)
}

/// Split-statistic baseline `√n MMD̂²_q / σ̂_q`.
pub fn spec_test_q_only(
    k: &KernelSpec,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    level: f64,
) -> Result<TestReport> {
    check_level(level)?;
    SpecStatistics::compute(k, x, y)?.q_only_report(level)
}

/// Two-sample test of `P₁ = P₂` with fully known laws.
///
/// Same computation as [`spec_test`]; with no fitted parameter the model
/// regularity and estimator conditions hold trivially.
pub fn two_sample_test(
    k: &KernelSpec,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    schedule: &EpsilonSchedule,
    level: f64,
) -> Result<TestReport> {
    spec_test(k, x, y, schedule, level)
}

/// Estimates behind a model comparison test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompareStatistics {
    pub n: usize,
    pub mmd2_full: [f64; 2],
    pub mmd2_q: [f64; 2],
    pub sigma2: VarianceEstimate,
    pub sigma2_q: VarianceEstimate,
    pub odd_n_dropped: bool,
    pub stream_ids: [u64; 2],
}

impl CompareStatistics {
    /// `stream_ids` are the noise streams that produced `y1` and `y2`; equal
    /// ids mean the model samples are dependent and the test refuses to run.
    pub fn compute(
        k: &KernelSpec,
        x: ArrayView2<'_, f64>,
        y1: ArrayView2<'_, f64>,
        y2: ArrayView2<'_, f64>,
        stream_ids: [u64; 2],
    ) -> Result<Self> {
        if stream_ids[0] == stream_ids[1] {
            return Err(MmdError::SameStreamIds(stream_ids[0]));
        }
        let n = x.nrows();
        if n < 6 {
            return Err(MmdError::TooFewObservations { needed: 6, found: n });
        }
        let g = GramSet::triple(k, x, y1, y2)?;
        Ok(Self {
            n,
            mmd2_full: [g.mmd2_full(0)?, g.mmd2_full(1)?],
            mmd2_q: [g.mmd2_q(0)?, g.mmd2_q(1)?],
            sigma2: g.var_full_diff()?,
            sigma2_q: g.var_q_diff()?,
            odd_n_dropped: n % 2 == 1,
            stream_ids,
        })
    }

    fn diagnostics(&self) -> Diagnostics {
        Diagnostics {
            odd_n_dropped: self.odd_n_dropped,
            variance_floored: self.sigma2.floored,
            stream_ids: Some(self.stream_ids),
        }
    }

    fn finish(&self, report: TestReport) -> CompareReport {
        let direction = match (report.reject, report.statistic) {
            (true, t) if t > 0.0 => Direction::FavorsModel2,
            (true, t) if t < 0.0 => Direction::FavorsModel1,
            _ => Direction::NoEvidence,
        };
        CompareReport { report, direction }
    }

    /// `T = √n (MMD̂²_ε(1) - MMD̂²_ε(2)) / (σ̂_{α,β} + ε σ̂_{q,α,β})`, two-sided.
    pub fn report(&self, schedule: &EpsilonSchedule, level: f64) -> Result<CompareReport> {
        check_level(level)?;
        check_q_variance(&self.sigma2_q)?;
        let eps = schedule.epsilon_at(self.n)?;
        let d_full = self.mmd2_full[0] - self.mmd2_full[1];
        let d_q = self.mmd2_q[0] - self.mmd2_q[1];
        let sd = self.sigma2.sd();
        let sd_q = self.sigma2_q.sd();
        let statistic = (self.n as f64).sqrt() * (d_full + eps * d_q) / (sd + eps * sd_q);
        let p_value = two_sided_p_value(statistic);
        Ok(self.finish(TestReport {
            statistic,
            p_value,
            epsilon: Some(eps),
            level,
            reject: p_value < level,
            numerator_parts: (d_full, d_q),
            denominator_parts: (sd, sd_q),
            diagnostics: self.diagnostics(),
        }))
    }

    /// `T = √n (MMD̂²_q(1) - MMD̂²_q(2)) / σ̂_{q,α,β}`, two-sided.
    pub fn q_only_report(&self, level: f64) -> Result<CompareReport> {
        check_level(level)?;
        check_q_variance(&self.sigma2_q)?;
        let d_full = self.mmd2_full[0] - self.mmd2_full[1];
        let d_q = self.mmd2_q[0] - self.mmd2_q[1];
        let sd = self.sigma2.sd();
        let sd_q = self.sigma2_q.sd();
        let statistic = (self.n as f64).sqrt() * d_q / sd_q;
        let p_value = two_sided_p_value(statistic);
        Ok(self.finish(TestReport {
            statistic,
            p_value,
            epsilon: None,
            level,
            reject: p_value < level,
            numerator_parts: (d_full, d_q),
            denominator_parts: (sd, sd_q),
            diagnostics: self.diagnostics(),
        }))
    }
}

/// Comparison of two fitted models; `y1`, `y2` must come from independent noise streams.
pub fn compare_test(
    k: &KernelSpec,
    x: ArrayView2<'_, f64>,
    y1: ArrayView2<'_, f64>,
    y2: ArrayView2<'_, f64>,
    stream_ids: [u64; 2],
    schedule: &EpsilonSchedule,
    level: f64,
) -> Result<CompareReport> {
    check_level(level)?;
    CompareStatistics::compute(k, x, y1, y2, stream_ids)?.report(schedule, level)
}

pub fn compare_test_q_only(
    k: &KernelSpec,
    x: ArrayView2<'_, f64>,
    y1: ArrayView2<'_, f64>,
    y2: ArrayView2<'_, f64>,
    stream_ids: [u64; 2],
    level: f64,
) -> Result<CompareReport> {
    check_level(level)?;
    CompareStatistics::compute(k, x, y1, y2, stream_ids)?.q_only_report(level)
}
