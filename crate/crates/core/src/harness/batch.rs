use rayon::prelude::*;
use rayon::ThreadPoolBuilder;

use super::{run_problem, AlphaSetting, Method, TrialConfig, TrialResult};
use crate::benchmarks::BenchmarkKind;
use crate::error::{Error, Result};

/// Exponents `0, 0.5, ..., 3` of the margin grid.
pub const DEFAULT_GRID: [f64; 7] = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0];

/// Aggregate of `trials` runs of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub function: BenchmarkKind,
    pub dim: usize,
    pub method: Method,
    pub trials: usize,
    pub successes: usize,
    /// Over successful trials only; `None` without successes.
    pub median_evals: Option<f64>,
    pub iqr_evals: Option<f64>,
}

impl SummaryRow {
    pub fn success_rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BatchSummary {
    pub rows: Vec<SummaryRow>,
}

/// One `(N, m, n)` cell of the margin grid, `α = N^{-m} λ^{-n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub function: BenchmarkKind,
    pub dim: usize,
    pub m: f64,
    pub n: f64,
    pub alpha: f64,
    pub success_rate: f64,
    pub median_evals: Option<f64>,
    /// Set when α falls outside `[0, 0.5)`; no trials are run.
    pub config_error: Option<String>,
}

fn pool(parallelism: usize) -> Result<rayon::ThreadPool> {
    ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))
}

/// Runs trial `k` of `config` with seed `base_seed + k` for `k < trials`.
/// Results are in trial order regardless of `parallelism`.
pub fn run_trials(
    config: &TrialConfig,
    trials: usize,
    parallelism: usize,
    base_seed: u64,
) -> Result<Vec<TrialResult>> {
    let problem = config.problem()?;
    pool(parallelism)?.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|k| run_problem(config, &problem, base_seed.wrapping_add(k as u64)))
            .collect()
    })
}

pub fn summarize(config: &TrialConfig, results: &[TrialResult]) -> SummaryRow {
    let evals: Vec<f64> = results
        .iter()
        .filter(|r| r.success)
        .map(|r| r.evaluations as f64)
        .collect();
    SummaryRow {
        function: config.benchmark,
        dim: config.dim,
        method: config.method,
        trials: results.len(),
        successes: evals.len(),
        median_evals: median(&evals),
        iqr_evals: iqr(&evals),
    }
}

/// One summary row per config, in input order.
pub fn run_batch(
    configs: &[TrialConfig],
    trials: usize,
    parallelism: usize,
    base_seed: u64,
) -> Result<BatchSummary> {
    let rows = configs
        .iter()
        .map(|c| run_trials(c, trials, parallelism, base_seed).map(|r| summarize(c, &r)))
        .collect::<Result<_>>()?;
    Ok(BatchSummary { rows })
}

/// Margin grid on `kind` for each dimension. `template` supplies every
/// setting except function, dimension, method and α.
pub fn alpha_grid(
    template: &TrialConfig,
    dims: &[usize],
    m_grid: &[f64],
    n_grid: &[f64],
    trials: usize,
    parallelism: usize,
    base_seed: u64,
) -> Result<Vec<GridCell>> {
    let mut cells = Vec::new();
    for &dim in dims {
        for &m in m_grid {
            for &n in n_grid {
                if m == 0.0 && n == 0.0 {
                    continue;
                }
                let mut config = template.clone();
                config.dim = dim;
                config.method = Method::Margin;
                let lambda = crate::cmaes::CmaParams::new(dim, config.lambda)?.lambda;
                let alpha = (dim as f64).powf(-m) * (lambda as f64).powf(-n);
                config.alpha = AlphaSetting::Value(alpha);
                let mut cell = GridCell {
                    function: config.benchmark,
                    dim,
                    m,
                    n,
                    alpha,
                    success_rate: 0.0,
                    median_evals: None,
                    config_error: None,
                };
                match run_trials(&config, trials, parallelism, base_seed) {
                    Ok(results) => {
                        let row = summarize(&config, &results);
                        cell.success_rate = row.success_rate();
                        cell.median_evals = row.median_evals;
                    }
                    Err(Error::Config(msg)) => cell.config_error = Some(msg),
                    Err(e) => return Err(e),
                }
                cells.push(cell);
            }
        }
    }
    Ok(cells)
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| median_sorted(&sorted(values)))
}

/// Tukey hinges: medians of the lower and upper halves, the middle element
/// belonging to both halves when the count is odd.
pub fn quartiles(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let v = sorted(values);
    let n = v.len();
    let (lower, upper) = if n % 2 == 1 {
        (&v[..=n / 2], &v[n / 2..])
    } else {
        (&v[..n / 2], &v[n / 2..])
    };
    Some((median_sorted(lower), median_sorted(upper)))
}

pub fn iqr(values: &[f64]) -> Option<f64> {
    quartiles(values).map(|(q1, q3)| q3 - q1)
}
