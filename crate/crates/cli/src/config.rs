//! Plain `key = value` config files for the experiment subcommands.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use mmdcheck::simstudy::{Experiment, ExperimentConfig};

pub const WORKERS_ENV: &str = "MMDCHECK_WORKERS";

/// Parsed file: keys in sorted order, each with its line number.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected 'key = value'", i + 1))?;
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(format!("line {}: empty key", i + 1));
            }
            if entries.insert(key.clone(), (i + 1, v.trim().to_string())).is_some() {
                return Err(format!("line {}: duplicate key '{key}'", i + 1));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?;
                Self::parse(&text)
            }
        }
    }

    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), String> {
        match self.entries.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            Some((k, (line, _))) => Err(format!("line {line}: unknown key '{k}' (allowed: {})", allowed.join(", "))),
            None => Ok(()),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        self.entries
            .get(key)
            .map(|(line, v)| v.parse().map_err(|_| format!("line {line}: bad value '{v}' for '{key}'")))
            .transpose()
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, String> {
        self.entries
            .get(key)
            .map(|(line, v)| {
                v.split(',')
                    .map(|s| s.trim().parse().map_err(|_| format!("line {line}: bad list entry '{s}' for '{key}'")))
                    .collect()
            })
            .transpose()
    }
}

pub const GRID_KEYS: &[&str] = &[
    "n_list",
    "p_list",
    "param_grid",
    "eps_exponents",
    "reps",
    "level",
    "master_seed",
    "workers",
];

pub const APPENDIX_KEYS: &[&str] = &["n_list", "reps", "master_seed", "workers"];

/// Flag values that take precedence over the file.
#[derive(Debug, Default, Clone, Copy)]
pub struct Overrides {
    pub workers: Option<usize>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
}

/// Worker count: flag, then file, then the environment, then 1.
pub fn resolve_workers(flag: Option<usize>, file: Option<usize>, env: Option<&str>) -> Result<usize, String> {
    if let Some(w) = flag.or(file) {
        return Ok(w);
    }
    match env {
        Some(v) => v
            .trim()
            .parse()
            .map_err(|_| format!("{WORKERS_ENV} must be a positive integer, got '{v}'")),
        None => Ok(1),
    }
}

/// Starts from the full published grid and applies file values, then flags.
pub fn grid_config(
    experiment: Experiment,
    kv: &KeyValues,
    over: Overrides,
    env_workers: Option<&str>,
) -> Result<ExperimentConfig, String> {
    kv.check_keys(GRID_KEYS)?;
    let mut cfg = ExperimentConfig::paper_grid(experiment);
    if let Some(v) = kv.list("n_list")? {
        cfg.n_list = v;
    }
    if let Some(v) = kv.list("p_list")? {
        cfg.p_list = v;
    }
    if let Some(v) = kv.list("param_grid")? {
        cfg.param_grid = v;
    }
    if let Some(v) = kv.list("eps_exponents")? {
        cfg.eps_exponents = v;
    }
    if let Some(v) = over.reps.or(kv.get("reps")?) {
        cfg.reps = v;
    }
    if let Some(v) = kv.get("level")? {
        cfg.level = v;
    }
    if let Some(v) = over.seed.or(kv.get("master_seed")?) {
        cfg.master_seed = v;
    }
    cfg.workers = resolve_workers(over.workers, kv.get("workers")?, env_workers)?;
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AppendixConfig {
    pub n_list: Vec<usize>,
    pub reps: usize,
    pub master_seed: u64,
    pub workers: usize,
}

pub fn appendix_config(kv: &KeyValues, over: Overrides, env_workers: Option<&str>) -> Result<AppendixConfig, String> {
    kv.check_keys(APPENDIX_KEYS)?;
    let cfg = AppendixConfig {
        n_list: kv.list("n_list")?.unwrap_or_else(|| vec![250, 500, 1000]),
        reps: over.reps.or(kv.get("reps")?).unwrap_or(10_000),
        master_seed: over.seed.or(kv.get("master_seed")?).unwrap_or(20_240_611),
        workers: resolve_workers(over.workers, kv.get("workers")?, env_workers)?,
    };
    if cfg.n_list.iter().any(|&n| n < 2) || cfg.n_list.is_empty() {
        return Err("n_list needs sample sizes >= 2".into());
    }
    if cfg.workers == 0 {
        return Err("workers must be >= 1".into());
    }
    Ok(cfg)
}
