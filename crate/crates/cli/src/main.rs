//! `mmdcheck`: MMD specification, two-sample and model comparison tests on
//! CSV samples, plus the simulation study drivers.
//!
//! Exit codes: 0 on completion (whether or not the test rejects), 2 on usage
//! errors, 3 on data errors.

mod config;
mod data;
mod registry;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mmdcheck::rng::RngStream;
use mmdcheck::simstudy::{self, Experiment};
use mmdcheck::{compare_test, spec_test, two_sample_test, EpsilonSchedule, GenerativeModel, KernelSpec};
use ndarray::Array2;
use serde_json::{json, Value};

use crate::config::{KeyValues, Overrides, WORKERS_ENV};
use crate::registry::FitMethod;

/// Child-stream tags for the single-test subcommands.
const TAG_MODEL1: u64 = 1;
const TAG_MODEL2: u64 = 2;
const TAG_FIT1: u64 = 3;
const TAG_FIT2: u64 = 4;

#[derive(Parser, Debug)]
#[command(name = "mmdcheck", version, about = "MMD-based model specification and comparison tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct TestOpts {
    /// gaussian-dim | gaussian:S | laplace:S
    #[arg(long, default_value = "gaussian-dim")]
    kernel: KernelSpec,
    /// Exponent c of the weight schedule n^(-1/c), c > 2.
    #[arg(long = "eps-c", default_value_t = 4.5)]
    eps_c: f64,
    #[arg(long, default_value_t = 0.05)]
    level: f64,
}

#[derive(Args, Debug)]
struct GridOpts {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; defaults to the config file, then $MMDCHECK_WORKERS, then 1.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GridExperiment {
    Example1,
    Example2,
    Example3,
    Example4,
}

impl From<GridExperiment> for Experiment {
    fn from(e: GridExperiment) -> Self {
        match e {
            GridExperiment::Example1 => Experiment::Example1,
            GridExperiment::Example2 => Experiment::Example2,
            GridExperiment::Example3 => Experiment::Example3,
            GridExperiment::Example4 => Experiment::Example4,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Test P1 = P2 from two samples of equal size.
    TwoSample {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[command(flatten)]
        opts: TestOpts,
    },
    /// Test whether a fitted parametric model reproduces the data law.
    SpecTest {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        model: String,
        #[arg(long, value_enum)]
        fit: FitMethod,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        opts: TestOpts,
    },
    /// Test whether two fitted models are equally close to the data law.
    Compare {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        model1: String,
        #[arg(long)]
        model2: String,
        #[arg(long, value_enum)]
        fit1: FitMethod,
        #[arg(long, value_enum)]
        fit2: FitMethod,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        opts: TestOpts,
    },
    /// Level/power grid of one simulation example, written as CSV.
    Simstudy {
        #[arg(long, value_enum)]
        experiment: GridExperiment,
        #[command(flatten)]
        grid: GridOpts,
    },
    /// Distribution of n·MMD² with fixed versus estimated location.
    AppendixB {
        #[command(flatten)]
        grid: GridOpts,
    },
    /// Derivative statistics of the one-dimensional location example.
    Illustrative {
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 5000)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-5)]
        step: f64,
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
}

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

fn data(e: impl ToString) -> Failure {
    Failure::Data(e.to_string())
}

fn log_config(v: &Value) {
    eprintln!("mmdcheck: config {v}");
}

fn schedule(opts: &TestOpts) -> Result<EpsilonSchedule, Failure> {
    if !(opts.level > 0.0 && opts.level < 1.0) {
        return Err(usage(format!("--level must lie in (0, 1), got {}", opts.level)));
    }
    EpsilonSchedule::new(opts.eps_c).map_err(usage)
}

fn print_json(v: &Value) {
    println!("{v}");
}

fn build_model(spec: &str, fit: FitMethod, x: &Array2<f64>) -> Result<GenerativeModel, Failure> {
    let model = registry::parse_model(spec, x.ncols()).map_err(usage)?;
    registry::check_fit(&model, fit).map_err(usage)?;
    Ok(model)
}

/// Fits `model` and draws its row-aligned sample from a fresh stream.
fn fitted_sample(
    model: &GenerativeModel,
    fit: FitMethod,
    x: &Array2<f64>,
    kernel: &KernelSpec,
    root: &RngStream,
    fit_tag: u64,
    sample_tag: u64,
) -> Result<(Vec<f64>, Array2<f64>, u64), Failure> {
    let n = x.nrows();
    let fit_noise = model.sample_noise(n, &mut root.child(fit_tag));
    let params = registry::fit_params(model, fit, x.view(), kernel, &fit_noise).map_err(data)?;
    let noise = model.sample_noise(n, &mut root.child(sample_tag));
    let y = model.generate(&noise, &params).map_err(data)?;
    Ok((params, y, noise.stream_id))
}

fn with_fields(mut v: Value, extra: Value) -> Value {
    if let (Some(obj), Value::Object(more)) = (v.as_object_mut(), extra) {
        obj.extend(more);
    }
    v
}

fn load_sample(path: &Path) -> Result<Array2<f64>, Failure> {
    data::read_sample(path).map_err(data)
}

fn env_workers() -> Option<String> {
    std::env::var(WORKERS_ENV).ok()
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::TwoSample { x, y, opts } => {
            let sched = schedule(&opts)?;
            log_config(&json!({"command": "two-sample", "x": x, "y": y, "kernel": opts.kernel.to_string(),
                "eps_c": opts.eps_c, "level": opts.level}));
            let xs = load_sample(&x)?;
            let ys = load_sample(&y)?;
            let r = two_sample_test(&opts.kernel, xs.view(), ys.view(), &sched, opts.level).map_err(data)?;
            print_json(&serde_json::to_value(r).map_err(data)?);
        }
        Command::SpecTest {
            x,
            model,
            fit,
            seed,
            opts,
        } => {
            let sched = schedule(&opts)?;
            let xs = load_sample(&x)?;
            let m = build_model(&model, fit, &xs)?;
            log_config(&json!({"command": "spec-test", "x": x, "model": model, "fit": format!("{fit:?}"),
                "seed": seed, "kernel": opts.kernel.to_string(), "eps_c": opts.eps_c, "level": opts.level}));
            let root = RngStream::new(seed);
            let (params, y, _) = fitted_sample(&m, fit, &xs, &opts.kernel, &root, TAG_FIT1, TAG_MODEL1)?;
            let r = spec_test(&opts.kernel, xs.view(), y.view(), &sched, opts.level).map_err(data)?;
            print_json(&with_fields(serde_json::to_value(r).map_err(data)?, json!({"params": params})));
        }
        Command::Compare {
            x,
            model1,
            model2,
            fit1,
            fit2,
            seed,
            opts,
        } => {
            let sched = schedule(&opts)?;
            let xs = load_sample(&x)?;
            let m1 = build_model(&model1, fit1, &xs)?;
            let m2 = build_model(&model2, fit2, &xs)?;
            log_config(&json!({"command": "compare", "x": x, "model1": model1, "model2": model2,
                "fit1": format!("{fit1:?}"), "fit2": format!("{fit2:?}"), "seed": seed,
                "kernel": opts.kernel.to_string(), "eps_c": opts.eps_c, "level": opts.level}));
            let root = RngStream::new(seed);
            let (p1, y1, id1) = fitted_sample(&m1, fit1, &xs, &opts.kernel, &root, TAG_FIT1, TAG_MODEL1)?;
            let (p2, y2, id2) = fitted_sample(&m2, fit2, &xs, &opts.kernel, &root, TAG_FIT2, TAG_MODEL2)?;
            let r = compare_test(&opts.kernel, xs.view(), y1.view(), y2.view(), [id1, id2], &sched, opts.level)
                .map_err(data)?;
            print_json(&with_fields(
                serde_json::to_value(r).map_err(data)?,
                json!({"params1": p1, "params2": p2}),
            ));
        }
        Command::Simstudy { experiment, grid } => {
            let kv = KeyValues::load(grid.config.as_deref()).map_err(usage)?;
            let over = Overrides {
                workers: grid.workers,
                reps: grid.reps,
                seed: grid.seed,
            };
            let cfg = config::grid_config(experiment.into(), &kv, over, env_workers().as_deref()).map_err(usage)?;
            log_config(&json!({"command": "simstudy", "out": grid.out, "experiment": cfg.experiment.name(),
                "n_list": cfg.n_list, "p_list": cfg.p_list, "param_grid": cfg.param_grid,
                "eps_exponents": cfg.eps_exponents, "reps": cfg.reps, "level": cfg.level,
                "master_seed": cfg.master_seed, "workers": cfg.workers}));
            let result = simstudy::run_experiment(&cfg).map_err(data)?;
            simstudy::emit_csv(&result, &grid.out).map_err(data)?;
        }
        Command::AppendixB { grid } => {
            let kv = KeyValues::load(grid.config.as_deref()).map_err(usage)?;
            let over = Overrides {
                workers: grid.workers,
                reps: grid.reps,
                seed: grid.seed,
            };
            let cfg = config::appendix_config(&kv, over, env_workers().as_deref()).map_err(usage)?;
            log_config(&json!({"command": "appendix-b", "out": grid.out, "n_list": cfg.n_list,
                "reps": cfg.reps, "master_seed": cfg.master_seed, "workers": cfg.workers}));
            let rows = simstudy::run_appendix_b(&cfg.n_list, cfg.reps, cfg.master_seed, cfg.workers).map_err(data)?;
            simstudy::emit_appendix_csv(&rows, &grid.out).map_err(data)?;
        }
        Command::Illustrative {
            n,
            reps,
            seed,
            step,
            workers,
        } => {
            let workers = config::resolve_workers(workers, None, env_workers().as_deref()).map_err(usage)?;
            log_config(&json!({"command": "illustrative", "n": n, "reps": reps, "seed": seed,
                "step": step, "workers": workers}));
            let s = simstudy::illustrative_stats(n, reps, seed, step, workers).map_err(usage)?;
            let (t1, t2) = simstudy::illustrative_targets();
            let (l1, l2) = simstudy::illustrative_limits();
            print_json(&json!({
                "n": s.n, "reps": s.reps, "step": s.step,
                "var_sqrtn_u1": s.var_sqrtn_u1, "target_var_sqrtn_u1": t1, "closed_form_var_sqrtn_u1": l1,
                "mean_u2": s.mean_u2, "target_mean_u2": t2, "closed_form_mean_u2": l2,
            }));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("mmdcheck: usage error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Data(m)) => {
            eprintln!("mmdcheck: data error: {m}");
            ExitCode::from(3)
        }
    }
}
