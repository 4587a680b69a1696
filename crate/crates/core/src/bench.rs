//! Batch experiments over an instance directory: improvement over
//! construction, the (UnImproved_max, k_max) grid, single-neighborhood
//! ablation and the weight sweep.
//!
//! Rows are computed in parallel and sorted by (instance, config index)
//! before they are returned, so the worker count never changes the output.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::instances::read_instance;
use crate::model::{CostBreakdown, Instance, Weights};
use crate::svns::{solve, LocalSearchNeighborhood, SvnsParams};

/// Environment variable capping the worker count; 0 or unset means one
/// worker per core.
pub const THREADS_ENV: &str = "MVRP_THREADS";

pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const BENCH_CSV_HEADER: [&str; 16] = [
    "instance",
    "seed",
    "config",
    "construct_total",
    "svns_total",
    "improvement_pct",
    "runtime_ms",
    "path_cost",
    "replenishment_cost",
    "hri_cost",
    "team_cost",
    "travel_cost",
    "alpha",
    "beta",
    "gamma",
    "error",
];

/// Values the weight sweep draws each weight from.
pub const WEIGHT_LEVELS: [f64; 5] = [0.0, 0.1, 0.3, 0.6, 1.0];
pub const GRID_UNIMPROVED: [usize; 4] = [10, 20, 30, 40];
pub const GRID_KMAX: [usize; 5] = [10, 20, 30, 40, 60];

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("cannot read instance directory {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("no instance files in {0}")]
    EmptyDirectory(PathBuf),
    #[error("invalid worker count '{0}' in MVRP_THREADS")]
    Threads(String),
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Improvement,
    Params,
    Neighborhoods,
    Weights,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Improvement => "improvement",
            Experiment::Params => "params",
            Experiment::Neighborhoods => "neighborhoods",
            Experiment::Weights => "weights",
        }
    }
}

/// One configuration of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub label: String,
    pub params: SvnsParams,
    /// Replaces the instance weights when set.
    pub weights: Option<Weights<f64>>,
}

/// Triples from [`WEIGHT_LEVELS`] that sum to one, in lexicographic order.
pub fn weight_grid() -> Vec<Weights<f64>> {
    let mut out = Vec::new();
    for a in WEIGHT_LEVELS {
        for b in WEIGHT_LEVELS {
            for g in WEIGHT_LEVELS {
                if (a + b + g - 1.0).abs() < 1e-9 {
                    out.push(Weights::new(a, b, g));
                }
            }
        }
    }
    out
}

pub fn configs(experiment: Experiment, base: &SvnsParams) -> Vec<BenchConfig> {
    match experiment {
        Experiment::Improvement => {
            vec![BenchConfig { label: "default".into(), params: base.clone(), weights: None }]
        }
        Experiment::Params => GRID_UNIMPROVED
            .iter()
            .flat_map(|&u| {
                GRID_KMAX.iter().map(move |&k| BenchConfig {
                    label: format!("unimproved={u};kmax={k}"),
                    params: SvnsParams { unimproved_max: u, k_max: k, ..base.clone() },
                    weights: None,
                })
            })
            .collect(),
        Experiment::Neighborhoods => LocalSearchNeighborhood::ALL
            .iter()
            .map(|&n| BenchConfig {
                label: n.name().to_string(),
                params: SvnsParams { neighborhoods: vec![n], ..base.clone() },
                weights: None,
            })
            .collect(),
        Experiment::Weights => weight_grid()
            .into_iter()
            .map(|w| BenchConfig {
                label: format!("w={}/{}/{}", w.alpha, w.beta, w.gamma),
                params: base.clone(),
                weights: Some(w),
            })
            .collect(),
    }
}

/// A named instance file; unreadable files keep their error.
#[derive(Debug, Clone)]
pub struct BenchInstance {
    pub name: String,
    pub instance: Result<Instance<f64>, String>,
}

/// Every regular file in `dir`, sorted by file name.
pub fn load_dir(dir: impl AsRef<Path>) -> Result<Vec<BenchInstance>, BenchError> {
    let dir = dir.as_ref();
    let io = |source| BenchError::Io { path: dir.to_path_buf(), source };
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(io)? {
        let entry = entry.map_err(io)?;
        if entry.file_type().map_err(io)?.is_file() {
            paths.push(entry.path());
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(BenchError::EmptyDirectory(dir.to_path_buf()));
    }
    Ok(paths
        .into_iter()
        .map(|p| BenchInstance {
            name: p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
            instance: read_instance(&p).map_err(|e| e.to_string()),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub instance: String,
    pub seed: u64,
    pub config: String,
    pub outcome: Result<RowValues, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowValues {
    pub construct_total: f64,
    pub svns_total: f64,
    pub improvement_pct: f64,
    pub runtime_ms: Option<u128>,
    pub cost: CostBreakdown<f64>,
    pub weights: Weights<f64>,
}

impl BenchRow {
    pub fn is_ok(&self) -> bool {
        self.outcome.is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Record wall-clock time per row; off by default to keep output
    /// byte-stable.
    pub timing: bool,
    /// Worker cap; 0 means one per core.
    pub threads: usize,
}

/// Reads [`THREADS_ENV`]; unset or empty is 0.
pub fn threads_from_env() -> Result<usize, BenchError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v.trim().parse().map_err(|_| BenchError::Threads(v)),
        _ => Ok(0),
    }
}

fn run_one(instance: &Instance<f64>, config: &BenchConfig, timing: bool) -> Result<RowValues, String> {
    config.params.validate()?;
    let instance = match config.weights {
        Some(w) => instance.with_weights(w).map_err(|e| e.to_string())?,
        None => instance.clone(),
    };
    let start = Instant::now();
    let result = solve(&instance, &config.params);
    let elapsed = start.elapsed().as_millis();
    Ok(RowValues {
        construct_total: result.construct_cost.total,
        svns_total: result.cost.total,
        improvement_pct: result.improvement_pct(),
        runtime_ms: timing.then_some(elapsed),
        cost: result.cost,
        weights: instance.weights(),
    })
}

/// Runs every (instance, config) pair.
pub fn run(
    instances: &[BenchInstance],
    configs: &[BenchConfig],
    options: RunOptions,
) -> Result<Vec<BenchRow>, BenchError> {
    let jobs: Vec<(usize, usize)> =
        (0..instances.len()).flat_map(|i| (0..configs.len()).map(move |c| (i, c))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.threads)
        .build()
        .map_err(|e| BenchError::Pool(e.to_string()))?;
    let mut rows: Vec<(usize, usize, BenchRow)> = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, c)| {
                let bench = &instances[i];
                let config = &configs[c];
                let outcome = match &bench.instance {
                    Ok(inst) => run_one(inst, config, options.timing),
                    Err(e) => Err(e.clone()),
                };
                let row = BenchRow {
                    instance: bench.name.clone(),
                    seed: config.params.seed,
                    config: config.label.clone(),
                    outcome,
                };
                (i, c, row)
            })
            .collect()
    });
    rows.sort_by(|a, b| a.2.instance.cmp(&b.2.instance).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    Ok(rows.into_iter().map(|(_, _, r)| r).collect())
}

fn real(v: f64) -> String {
    format!("{v:.6}")
}

pub fn rows_to_csv(rows: &[BenchRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(BENCH_CSV_HEADER).expect("in-memory write");
    for row in rows {
        let mut record = vec![row.instance.clone(), row.seed.to_string(), row.config.clone()];
        match &row.outcome {
            Ok(v) => {
                record.extend([
                    real(v.construct_total),
                    real(v.svns_total),
                    real(v.improvement_pct),
                    v.runtime_ms.map(|ms| ms.to_string()).unwrap_or_default(),
                    real(v.cost.path_cost),
                    real(v.cost.replenishment_cost),
                    real(v.cost.hri_cost),
                    real(v.cost.team_cost_total),
                    real(v.cost.travel_cost()),
                    real(v.weights.alpha),
                    real(v.weights.beta),
                    real(v.weights.gamma),
                    String::new(),
                ]);
            }
            Err(e) => {
                record.extend(std::iter::repeat_n(String::new(), BENCH_CSV_HEADER.len() - 4));
                record.push(e.clone());
            }
        }
        w.write_record(&record).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8 fields")
}

/// Whitespace-separated (travel_cost, hri_cost) points per weight triple,
/// one block per instance, for Pareto plots.
pub fn pareto_data(rows: &[BenchRow]) -> String {
    let mut out = String::from("# alpha beta gamma travel_cost hri_cost\n");
    let mut last: Option<&str> = None;
    for row in rows {
        let Ok(v) = &row.outcome else { continue };
        if last != Some(row.instance.as_str()) {
            if last.is_some() {
                out.push_str("\n\n");
            }
            out.push_str(&format!("# {}\n", row.instance));
            last = Some(&row.instance);
        }
        out.push_str(&format!(
            "{} {} {} {} {}\n",
            v.weights.alpha,
            v.weights.beta,
            v.weights.gamma,
            real(v.cost.travel_cost()),
            real(v.cost.hri_cost)
        ));
    }
    out
}
