//! Monte Carlo harness: level and power grids for the four simulation
//! examples, the fixed versus estimated parameter tables, and the derivative
//! statistics of the one-dimensional location example.
//!
//! Every replication seeds its own streams from
//! `(master_seed, experiment, cell, rep)`, so results do not depend on the
//! number of workers or on scheduling order.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{MmdError, Result};
use crate::hypothesis::{CompareStatistics, EpsilonSchedule, SpecStatistics};
use crate::kernels::KernelSpec;
use crate::models::{estimate_plugin, GenerativeModel, PluginKind};
use crate::rng::{replication_seed, RngStream, TAG_DATA, TAG_NOISE_U, TAG_NOISE_V};

pub const POWER_HEADER: &str = "experiment,n,p,param,eps_exponent,test,rejections,reps,rate,mc_se,failures";
pub const APPENDIX_HEADER: &str = "n,kind,sd,min,q25,median,mean,q75,max,reps";

/// Largest tolerated share of failed replications.
pub const FAILURE_BUDGET: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Experiment {
    Example1,
    Example2,
    Example3,
    Example4,
    AppendixB,
    Illustrative,
}

impl Experiment {
    /// Stable id mixed into replication seeds.
    pub fn id(self) -> u64 {
        match self {
            Experiment::Example1 => 1,
            Experiment::Example2 => 2,
            Experiment::Example3 => 3,
            Experiment::Example4 => 4,
            Experiment::AppendixB => 5,
            Experiment::Illustrative => 6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Example1 => "example1",
            Experiment::Example2 => "example2",
            Experiment::Example3 => "example3",
            Experiment::Example4 => "example4",
            Experiment::AppendixB => "appendix-b",
            Experiment::Illustrative => "illustrative",
        }
    }

    /// Examples 3 and 4 compare two models; 1 and 2 test one.
    pub fn is_comparison(self) -> bool {
        matches!(self, Experiment::Example3 | Experiment::Example4)
    }

    fn tests(self) -> (TestName, TestName) {
        if self.is_comparison() {
            (TestName::Compare, TestName::CompareQOnly)
        } else {
            (TestName::Spec, TestName::SpecQOnly)
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = MmdError;

    fn from_str(s: &str) -> Result<Self> {
        [
            Experiment::Example1,
            Experiment::Example2,
            Experiment::Example3,
            Experiment::Example4,
            Experiment::AppendixB,
            Experiment::Illustrative,
        ]
        .into_iter()
        .find(|e| e.name() == s)
        .ok_or_else(|| MmdError::InvalidConfig(format!("unknown experiment '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TestName {
    Spec,
    SpecQOnly,
    Compare,
    CompareQOnly,
}

impl TestName {
    pub fn name(self) -> &'static str {
        match self {
            TestName::Spec => "spec_test",
            TestName::SpecQOnly => "spec_test_q_only",
            TestName::Compare => "compare_test",
            TestName::CompareQOnly => "compare_test_q_only",
        }
    }
}

impl fmt::Display for TestName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestName {
    type Err = MmdError;

    fn from_str(s: &str) -> Result<Self> {
        [TestName::Spec, TestName::SpecQOnly, TestName::Compare, TestName::CompareQOnly]
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| MmdError::InvalidConfig(format!("unknown test '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n_list: Vec<usize>,
    pub p_list: Vec<usize>,
    /// σ for Examples 1, 3, 4; the fixed mean α₀ for Example 2.
    pub param_grid: Vec<f64>,
    pub eps_exponents: Vec<f64>,
    pub reps: usize,
    pub level: f64,
    pub master_seed: u64,
    pub workers: usize,
}

impl ExperimentConfig {
    /// The full published grid for one of the four examples.
    pub fn paper_grid(experiment: Experiment) -> Self {
        let param_grid = match experiment {
            Experiment::Example2 => (0..=6).map(|i| f64::from(i) / 10.0).collect(),
            Experiment::Example4 => vec![1.2, 1.3, 1.4, 1.5, 1.6],
            _ => vec![1.0, 1.1, 1.2, 1.3, 1.4],
        };
        Self {
            experiment,
            n_list: vec![500, 1000],
            p_list: vec![2, 4, 8, 16],
            param_grid,
            eps_exponents: vec![2.5, 4.5, 6.5],
            reps: 1000,
            level: 0.05,
            master_seed: 20_240_611,
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(MmdError::InvalidConfig(m));
        if matches!(self.experiment, Experiment::AppendixB | Experiment::Illustrative) {
            return bad(format!("{} is not a level/power grid experiment", self.experiment));
        }
        if self.reps == 0 {
            return bad("reps must be >= 1".into());
        }
        if self.workers == 0 {
            return bad("workers must be >= 1".into());
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(MmdError::InvalidLevel(self.level));
        }
        if self.n_list.is_empty() || self.p_list.is_empty() || self.param_grid.is_empty() || self.eps_exponents.is_empty() {
            return bad("n_list, p_list, param_grid and eps_exponents must be non-empty".into());
        }
        if let Some(n) = self.n_list.iter().find(|&&n| n < 6 || n % 2 == 1) {
            return bad(format!("sample sizes must be even and >= 6, got {n}"));
        }
        for &p in &self.p_list {
            if p == 0 || (self.experiment.is_comparison() && p % 2 == 1) {
                return bad(format!("invalid dimension {p} for {}", self.experiment));
            }
        }
        for &c in &self.eps_exponents {
            EpsilonSchedule::new(c)?;
        }
        for &v in &self.param_grid {
            let ok = v.is_finite() && (self.experiment == Experiment::Example2 || v > 0.0);
            if !ok {
                return bad(format!("invalid grid value {v}"));
            }
        }
        Ok(())
    }

    /// Grid cells in emission order: `n`, then `p`, then the parameter.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &n in &self.n_list {
            for &p in &self.p_list {
                for &param in &self.param_grid {
                    out.push(Cell {
                        index: out.len() as u64,
                        n,
                        p,
                        param,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub index: u64,
    pub n: usize,
    pub p: usize,
    pub param: f64,
}

/// What one replication of one cell produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepOutcome {
    /// Main statistic per ε-exponent, in config order.
    pub statistics: Vec<f64>,
    pub rejects: Vec<bool>,
    pub q_statistic: f64,
    pub q_reject: bool,
    /// `σ̂²` of the full statistic (of the difference for comparisons).
    pub sigma2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellRun {
    pub cell: Cell,
    pub outcomes: Vec<Result<RepOutcome>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: Experiment,
    pub n: usize,
    pub p: usize,
    pub param: f64,
    pub eps_exponent: f64,
    pub test: TestName,
    pub rejections: usize,
    /// Successful replications; failures are excluded.
    pub reps: usize,
    pub rate: f64,
    pub mc_se: f64,
    pub failures: usize,
}

impl ResultRow {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        experiment: Experiment,
        cell: &Cell,
        eps_exponent: f64,
        test: TestName,
        rejections: usize,
        reps: usize,
        failures: usize,
    ) -> Self {
        let rate = if reps == 0 { 0.0 } else { rejections as f64 / reps as f64 };
        let mc_se = if reps == 0 {
            0.0
        } else {
            (rate * (1.0 - rate) / reps as f64).sqrt()
        };
        Self {
            experiment,
            n: cell.n,
            p: cell.p,
            param: cell.param,
            eps_exponent,
            test,
            rejections,
            reps,
            rate,
            mc_se,
            failures,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
}

impl ExperimentResult {
    pub fn find(&self, n: usize, p: usize, param: f64, eps_exponent: f64, test: TestName) -> Option<&ResultRow> {
        self.rows.iter().find(|r| {
            r.n == n && r.p == p && r.param == param && r.eps_exponent == eps_exponent && r.test == test
        })
    }
}

fn standard_normal(n: usize, p: usize, stream: &mut RngStream) -> Array2<f64> {
    let rng = stream.rng();
    Array2::from_shape_simple_fn((n, p), || rng.sample(StandardNormal))
}

/// Noise covariance diagonal of the first compared model: `base²` on the
/// first `p/2` margins, `σ²` on the rest.
fn split_cov(p: usize, base: f64, sigma: f64) -> Vec<f64> {
    (0..p)
        .map(|j| if j < p / 2 { base * base } else { sigma * sigma })
        .collect()
}

/// Runs one replication of one cell.
pub fn replicate(cfg: &ExperimentConfig, cell: &Cell, rep: usize) -> Result<RepOutcome> {
    let root = RngStream::new(replication_seed(cfg.master_seed, cfg.experiment.id(), cell.index, rep as u64));
    let mut data = root.child(TAG_DATA);
    let mut noise_u = root.child(TAG_NOISE_U);
    let mut noise_v = root.child(TAG_NOISE_V);
    let (n, p) = (cell.n, cell.p);
    let kernel = KernelSpec::default();
    let x = standard_normal(n, p, &mut data);

    let schedules = cfg
        .eps_exponents
        .iter()
        .map(|&c| EpsilonSchedule::new(c))
        .collect::<Result<Vec<_>>>()?;

    match cfg.experiment {
        Experiment::Example1 | Experiment::Example2 => {
            let (model, alpha) = if cfg.experiment == Experiment::Example1 {
                let m = GenerativeModel::gaussian_location_iso(p, cell.param)?;
                (m, estimate_plugin(PluginKind::MarginalMean, x.view())?)
            } else {
                let m = GenerativeModel::gaussian_scale(p, cell.param)?;
                (m, estimate_plugin(PluginKind::MarginalStd, x.view())?)
            };
            let noise = model.sample_noise(n, &mut noise_u);
            let y = model.generate(&noise, &alpha)?;
            let st = SpecStatistics::compute(&kernel, x.view(), y.view())?;
            let mut statistics = Vec::with_capacity(schedules.len());
            let mut rejects = Vec::with_capacity(schedules.len());
            for s in &schedules {
                let r = st.report(s, cfg.level)?;
                statistics.push(r.statistic);
                rejects.push(r.reject);
            }
            let q = st.q_only_report(cfg.level)?;
            Ok(RepOutcome {
                statistics,
                rejects,
                q_statistic: q.statistic,
                q_reject: q.reject,
                sigma2: st.sigma2.value,
            })
        }
        Experiment::Example3 | Experiment::Example4 => {
            let base = if cfg.experiment == Experiment::Example3 { 1.0 } else { 1.2 };
            let m1 = GenerativeModel::gaussian_location(p, &split_cov(p, base, cell.param))?;
            let m2 = GenerativeModel::gaussian_location(p, &vec![base * base; p])?;
            let alpha = estimate_plugin(PluginKind::MarginalMean, x.view())?;
            let u = m1.sample_noise(n, &mut noise_u);
            let v = m2.sample_noise(n, &mut noise_v);
            let y1 = m1.generate(&u, &alpha)?;
            let y2 = m2.generate(&v, &alpha)?;
            let st = CompareStatistics::compute(&kernel, x.view(), y1.view(), y2.view(), [u.stream_id, v.stream_id])?;
            let mut statistics = Vec::with_capacity(schedules.len());
            let mut rejects = Vec::with_capacity(schedules.len());
            for s in &schedules {
                let r = st.report(s, cfg.level)?;
                statistics.push(r.report.statistic);
                rejects.push(r.report.reject);
            }
            let q = st.q_only_report(cfg.level)?;
            Ok(RepOutcome {
                statistics,
                rejects,
                q_statistic: q.report.statistic,
                q_reject: q.report.reject,
                sigma2: st.sigma2.value,
            })
        }
        Experiment::AppendixB | Experiment::Illustrative => Err(MmdError::InvalidConfig(format!(
            "{} has no per-cell replication",
            cfg.experiment
        ))),
    }
}

/// Evaluates `f(0..count)` on a pool of `workers` threads, preserving order.
fn parallel_map<T, F>(workers: usize, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    if workers == 0 {
        return Err(MmdError::InvalidConfig("workers must be >= 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| MmdError::InvalidConfig(e.to_string()))?;
    Ok(pool.install(|| (0..count).into_par_iter().map(&f).collect()))
}

/// All replications of every cell, in cell order.
pub fn run_cells(cfg: &ExperimentConfig) -> Result<Vec<CellRun>> {
    cfg.validate()?;
    let cells = cfg.cells();
    let reps = cfg.reps;
    let mut flat = parallel_map(cfg.workers, cells.len() * reps, |t| replicate(cfg, &cells[t / reps], t % reps))?;
    let mut runs = Vec::with_capacity(cells.len());
    for cell in cells.into_iter().rev() {
        let outcomes = flat.split_off(flat.len() - reps);
        runs.push(CellRun { cell, outcomes });
    }
    runs.reverse();
    Ok(runs)
}

/// Tallies replications into result rows; fails if any cell exceeds the failure budget.
pub fn summarize(cfg: &ExperimentConfig, runs: &[CellRun]) -> Result<ExperimentResult> {
    let (main_test, q_test) = cfg.experiment.tests();
    let mut rows = Vec::new();
    for run in runs {
        let ok: Vec<&RepOutcome> = run.outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
        let failures = run.outcomes.len() - ok.len();
        if failures as f64 > FAILURE_BUDGET * run.outcomes.len() as f64 {
            let last = run
                .outcomes
                .iter()
                .rev()
                .find_map(|o| o.as_ref().err())
                .map(|e| e.to_string())
                .unwrap_or_default();
            return Err(MmdError::TooManyFailures {
                failures,
                reps: run.outcomes.len(),
                last,
            });
        }
        let q_rejections = ok.iter().filter(|o| o.q_reject).count();
        for (ci, &c) in cfg.eps_exponents.iter().enumerate() {
            let rejections = ok.iter().filter(|o| o.rejects[ci]).count();
            rows.push(ResultRow::new(cfg.experiment, &run.cell, c, main_test, rejections, ok.len(), failures));
            // the split-only test ignores ε; repeated per exponent so every
            // (n, c, test) curve is complete
            rows.push(ResultRow::new(cfg.experiment, &run.cell, c, q_test, q_rejections, ok.len(), failures));
        }
    }
    Ok(ExperimentResult { rows })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let runs = run_cells(cfg)?;
    summarize(cfg, &runs)
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `contents` to a sibling temp file and renames it over `path`.
fn write_atomically(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => std::env::current_dir()?,
    };
    let file_name = path
        .file_name()
        .ok_or_else(|| MmdError::Io(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.partial", file_name.to_string_lossy()));
    let written = (|| -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = written {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

fn to_csv(header: &str, records: impl Iterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header.split(',')).map_err(csv_err)?;
    for r in records {
        w.write_record(&r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| MmdError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| MmdError::Io(e.to_string()))
}

fn csv_err(e: csv::Error) -> MmdError {
    MmdError::Io(e.to_string())
}

/// Writes the power/level grid; overwrites `path`, leaving no partial file on error.
pub fn emit_csv(result: &ExperimentResult, path: &Path) -> Result<()> {
    let records = result.rows.iter().map(|r| {
        vec![
            r.experiment.to_string(),
            r.n.to_string(),
            r.p.to_string(),
            fmt_float(r.param),
            fmt_float(r.eps_exponent),
            r.test.to_string(),
            r.rejections.to_string(),
            r.reps.to_string(),
            fmt_float(r.rate),
            fmt_float(r.mc_se),
            r.failures.to_string(),
        ]
    });
    write_atomically(path, &to_csv(POWER_HEADER, records)?)
}

fn read_records(path: &Path, header: &str) -> Result<Vec<(usize, csv::StringRecord)>> {
    let text = fs::read_to_string(path)?;
    let first = text.lines().next().unwrap_or("");
    if first != header {
        return Err(MmdError::Malformed {
            line: 1,
            message: format!("expected header '{header}', found '{first}'"),
        });
    }
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| MmdError::Malformed {
            line,
            message: e.to_string(),
        })?;
        out.push((line, rec));
    }
    Ok(out)
}

fn field<T: FromStr>(rec: &csv::StringRecord, line: usize, idx: usize) -> Result<T> {
    let raw = rec.get(idx).ok_or_else(|| MmdError::Malformed {
        line,
        message: format!("missing column {}", idx + 1),
    })?;
    raw.parse().map_err(|_| MmdError::Malformed {
        line,
        message: format!("cannot parse column {} value '{raw}'", idx + 1),
    })
}

/// Parses a file written by [`emit_csv`].
pub fn read_csv(path: &Path) -> Result<ExperimentResult> {
    let mut rows = Vec::new();
    for (line, rec) in read_records(path, POWER_HEADER)? {
        rows.push(ResultRow {
            experiment: field(&rec, line, 0)?,
            n: field(&rec, line, 1)?,
            p: field(&rec, line, 2)?,
            param: field(&rec, line, 3)?,
            eps_exponent: field(&rec, line, 4)?,
            test: field(&rec, line, 5)?,
            rejections: field(&rec, line, 6)?,
            reps: field(&rec, line, 7)?,
            rate: field(&rec, line, 8)?,
            mc_se: field(&rec, line, 9)?,
            failures: field(&rec, line, 10)?,
        });
    }
    Ok(ExperimentResult { rows })
}

// ---------------------------------------------------------------------------
// Fixed versus estimated location parameter, p = 1, k(x, y) = exp(-(x-y)²).

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AppendixKind {
    FixedAlpha,
    EstimatedAlpha,
}

impl AppendixKind {
    pub fn name(self) -> &'static str {
        match self {
            AppendixKind::FixedAlpha => "fixed_alpha",
            AppendixKind::EstimatedAlpha => "estimated_alpha",
        }
    }
}

impl FromStr for AppendixKind {
    type Err = MmdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed_alpha" => Ok(AppendixKind::FixedAlpha),
            "estimated_alpha" => Ok(AppendixKind::EstimatedAlpha),
            _ => Err(MmdError::InvalidConfig(format!("unknown kind '{s}'"))),
        }
    }
}

/// Sample summary; `sd` has divisor `n - 1`, quantiles interpolate linearly
/// between order statistics (`h = (n-1) q`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub sd: f64,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub mean: f64,
    pub q75: f64,
    pub max: f64,
}

pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize_values(values: &[f64]) -> Result<Summary> {
    if values.len() < 2 {
        return Err(MmdError::TooFewObservations {
            needed: 2,
            found: values.len(),
        });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok(Summary {
        sd: var.sqrt(),
        min: sorted[0],
        q25: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        mean,
        q75: quantile_sorted(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AppendixRow {
    pub n: usize,
    pub kind: AppendixKind,
    pub summary: Summary,
    pub reps: usize,
}

#[inline]
fn unit_gaussian(a: f64, b: f64) -> f64 {
    let d = a - b;
    (-d * d).exp()
}

/// `(n·MMD̂²(x, y), n·MMD̂²(x, y + shift))` for univariate samples.
///
/// `k(y_i + s, y_j + s) = k(y_i, y_j)`, so only the cross terms are
/// recomputed for the shifted sample.
pub fn fixed_and_shifted(x: &[f64], y: &[f64], shift: f64) -> (f64, f64) {
    let n = x.len();
    let mut within = 0.0;
    for i in 0..n {
        let (xi, yi) = (x[i], y[i]);
        let mut row = 0.0;
        for j in (i + 1)..n {
            row += unit_gaussian(xi, x[j]) + unit_gaussian(yi, y[j]);
        }
        within += row;
    }
    let mut cross = 0.0;
    let mut cross_shifted = 0.0;
    for i in 0..n {
        let xi = x[i];
        let (mut row, mut row_s) = (0.0, 0.0);
        for (j, &yj) in y.iter().enumerate() {
            if j != i {
                row += unit_gaussian(xi, yj);
                row_s += unit_gaussian(xi, yj + shift);
            }
        }
        cross += row;
        cross_shifted += row_s;
    }
    let nf = n as f64;
    let norm = nf / (nf * (nf - 1.0));
    (
        (2.0 * within - 2.0 * cross) * norm,
        (2.0 * within - 2.0 * cross_shifted) * norm,
    )
}

/// Per-replication `(fixed, estimated)` values of `n·MMD̂²` at sample size `n`.
///
/// `x, y ~ N(0, 1)` independent; the fixed statistic uses `α⋆ = 0`, the
/// estimated one `y + mean(x)`.
pub fn appendix_b_draws(n: usize, n_index: u64, reps: usize, master_seed: u64, workers: usize) -> Result<Vec<(f64, f64)>> {
    if n < 2 {
        return Err(MmdError::TooFewObservations { needed: 2, found: n });
    }
    parallel_map(workers, reps, |rep| {
        let root = RngStream::new(replication_seed(master_seed, Experiment::AppendixB.id(), n_index, rep as u64));
        let mut data = root.child(TAG_DATA);
        let mut noise = root.child(TAG_NOISE_U);
        let x: Vec<f64> = (0..n).map(|_| data.rng().sample(StandardNormal)).collect();
        let y: Vec<f64> = (0..n).map(|_| noise.rng().sample(StandardNormal)).collect();
        let alpha = x.iter().sum::<f64>() / n as f64;
        fixed_and_shifted(&x, &y, alpha)
    })
}

pub fn run_appendix_b(n_list: &[usize], reps: usize, master_seed: u64, workers: usize) -> Result<Vec<AppendixRow>> {
    if reps < 2 {
        return Err(MmdError::InvalidConfig("reps must be >= 2".into()));
    }
    let mut rows = Vec::new();
    for (idx, &n) in n_list.iter().enumerate() {
        let draws = appendix_b_draws(n, idx as u64, reps, master_seed, workers)?;
        let fixed: Vec<f64> = draws.iter().map(|d| d.0).collect();
        let estimated: Vec<f64> = draws.iter().map(|d| d.1).collect();
        for (kind, v) in [(AppendixKind::FixedAlpha, fixed), (AppendixKind::EstimatedAlpha, estimated)] {
            rows.push(AppendixRow {
                n,
                kind,
                summary: summarize_values(&v)?,
                reps,
            });
        }
    }
    Ok(rows)
}

pub fn emit_appendix_csv(rows: &[AppendixRow], path: &Path) -> Result<()> {
    let records = rows.iter().map(|r| {
        let s = &r.summary;
        let mut rec = vec![r.n.to_string(), r.kind.name().to_string()];
        rec.extend([s.sd, s.min, s.q25, s.median, s.mean, s.q75, s.max].map(fmt_float));
        rec.push(r.reps.to_string());
        rec
    });
    write_atomically(path, &to_csv(APPENDIX_HEADER, records)?)
}

pub fn read_appendix_csv(path: &Path) -> Result<Vec<AppendixRow>> {
    let mut rows = Vec::new();
    for (line, rec) in read_records(path, APPENDIX_HEADER)? {
        rows.push(AppendixRow {
            n: field(&rec, line, 0)?,
            kind: field(&rec, line, 1)?,
            summary: Summary {
                sd: field(&rec, line, 2)?,
                min: field(&rec, line, 3)?,
                q25: field(&rec, line, 4)?,
                median: field(&rec, line, 5)?,
                mean: field(&rec, line, 6)?,
                q75: field(&rec, line, 7)?,
                max: field(&rec, line, 8)?,
            },
            reps: field(&rec, line, 9)?,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Derivatives of α ↦ MMD̂²(x, y + α) at α = 0.

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IllustrativeStats {
    pub n: usize,
    pub reps: usize,
    pub step: f64,
    /// Monte Carlo variance (divisor `reps - 1`) of `√n Ũ₁`.
    pub var_sqrtn_u1: f64,
    /// Monte Carlo mean of `Ũ₂`.
    pub mean_u2: f64,
}

/// Reference values `(Var √n Ũ₁, E Ũ₂)` quoted for this setup: `8√3/(63√7)` and `16/(5√5)`.
pub fn illustrative_targets() -> (f64, f64) {
    (8.0 * 3f64.sqrt() / (63.0 * 7f64.sqrt()), 16.0 / (5.0 * 5f64.sqrt()))
}

/// Large-`n` limits of the two statistics as computed here, derived in closed
/// form: `32√3/(63√7)` and `4/(5√5)`.
pub fn illustrative_limits() -> (f64, f64) {
    (32.0 * 3f64.sqrt() / (63.0 * 7f64.sqrt()), 4.0 / (5.0 * 5f64.sqrt()))
}

/// `Σ_{i≠j}` of the α-dependent part of `h((x_i, y_i + α), (x_j, y_j + α))`.
fn shifted_pair_sum(x: &[f64], y: &[f64], alpha: f64) -> f64 {
    let n = x.len();
    let ys: Vec<f64> = y.iter().map(|v| v + alpha).collect();
    let mut cross = 0.0;
    let mut within = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for (j, &yj) in ys.iter().enumerate() {
            if j != i {
                row += unit_gaussian(x[i], yj);
            }
        }
        cross += row;
        let mut wrow = 0.0;
        for &yj in &ys[i + 1..] {
            wrow += unit_gaussian(ys[i], yj);
        }
        within += wrow;
    }
    2.0 * within - 2.0 * cross
}

/// Central finite-difference `(Ũ₁, Ũ₂)` of one sample pair.
///
/// The `k(x_i, x_j)` terms do not depend on α and cancel in both differences.
pub fn derivative_ustats(x: &[f64], y: &[f64], step: f64) -> (f64, f64) {
    let nf = x.len() as f64;
    let norm = nf * (nf - 1.0);
    let plus = shifted_pair_sum(x, y, step);
    let zero = shifted_pair_sum(x, y, 0.0);
    let minus = shifted_pair_sum(x, y, -step);
    let u1 = (plus - minus) / (2.0 * step) / norm;
    let u2 = (plus - 2.0 * zero + minus) / (step * step) / norm;
    (u1, u2)
}

pub fn illustrative_stats(n: usize, reps: usize, master_seed: u64, step: f64, workers: usize) -> Result<IllustrativeStats> {
    if n < 2 {
        return Err(MmdError::TooFewObservations { needed: 2, found: n });
    }
    if reps < 2 {
        return Err(MmdError::InvalidConfig("reps must be >= 2".into()));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(MmdError::InvalidHyperparameter(format!("finite-difference step must be > 0, got {step}")));
    }
    let draws = parallel_map(workers, reps, |rep| {
        let root = RngStream::new(replication_seed(master_seed, Experiment::Illustrative.id(), n as u64, rep as u64));
        let mut data = root.child(TAG_DATA);
        let mut noise = root.child(TAG_NOISE_U);
        let x: Vec<f64> = (0..n).map(|_| data.rng().sample(StandardNormal)).collect();
        let y: Vec<f64> = (0..n).map(|_| noise.rng().sample(StandardNormal)).collect();
        derivative_ustats(&x, &y, step)
    })?;
    let scaled: Vec<f64> = draws.iter().map(|d| (n as f64).sqrt() * d.0).collect();
    let u2: Vec<f64> = draws.iter().map(|d| d.1).collect();
    Ok(IllustrativeStats {
        n,
        reps,
        step,
        var_sqrtn_u1: summarize_values(&scaled)?.sd.powi(2),
        mean_u2: u2.iter().sum::<f64>() / reps as f64,
    })
}
