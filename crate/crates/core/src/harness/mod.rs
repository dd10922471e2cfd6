//! Seeded trials, batches and the margin-parameter grid.
//!
//! A trial alternates sampling, evaluation and update until the best value
//! drops below the target, the distribution collapses
//! (`λ_min(σ²C) < 1e-30`), `C` becomes ill-conditioned (`cond(C) > 1e14`),
//! the evaluation budget runs out, or a numerical failure occurs.
//! Evaluations are counted per candidate in whole generations.

mod batch;
mod output;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::benchmarks::{Benchmark, BenchmarkKind};
use crate::cmaes::{CmaParams, CmaState};
use crate::error::{Error, Result};
use crate::int_mutation::{box_penalty, BoxBounds, GranularityMatrix, ImState};
use crate::margin::{default_alpha, MarginState, ScaleUpdate};
use crate::numerics::Rng;
use crate::space::SearchSpace;

pub use batch::{
    alpha_grid, iqr, median, quartiles, run_batch, run_trials, summarize, BatchSummary, GridCell,
    SummaryRow, DEFAULT_GRID,
};
pub use output::{grid_csv, summary_csv, trajectory_csv, GRID_HEADER, SUMMARY_HEADER};

pub const DEFAULT_TARGET: f64 = 1e-10;
pub const DEFAULT_MIN_EIG: f64 = 1e-30;
pub const DEFAULT_MAX_COND: f64 = 1e14;
pub const DEFAULT_MAX_EVALS: u64 = 1_000_000;

/// Box applied to binary dimensions by [`Method::CmaesImBox`]: the image of
/// `[-1, 1]` under the shift that moves the binary threshold from 0 to 0.5.
pub const BINARY_BOX: (f64, f64) = (-0.5, 1.5);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Cmaes,
    CmaesIm,
    CmaesImBox,
    Margin,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Cmaes, Method::CmaesIm, Method::CmaesImBox, Method::Margin];

    pub fn name(self) -> &'static str {
        match self {
            Self::Cmaes => "cmaes",
            Self::CmaesIm => "cmaes-im",
            Self::CmaesImBox => "cmaes-im-box",
            Self::Margin => "margin",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method '{s}'")))
    }
}

/// Margin parameter: `1 / (N λ)` or an explicit value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum AlphaSetting {
    #[default]
    Auto,
    Value(f64),
}

impl AlphaSetting {
    pub fn resolve(self, dim: usize, lambda: usize) -> f64 {
        match self {
            Self::Auto => default_alpha(dim, lambda),
            Self::Value(a) => a,
        }
    }
}

impl FromStr for AlphaSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(Self::Auto);
        }
        s.parse::<f64>()
            .map(Self::Value)
            .map_err(|_| Error::Config(format!("alpha must be a number or 'auto', got '{s}'")))
    }
}

impl fmt::Display for AlphaSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Auto => f.write_str("auto"),
            Self::Value(a) => write!(f, "{a}"),
        }
    }
}

/// Everything that determines one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub benchmark: BenchmarkKind,
    pub dim: usize,
    pub method: Method,
    pub alpha: AlphaSetting,
    pub seed: u64,
    pub target: f64,
    pub min_eig_stop: f64,
    pub max_cond: f64,
    pub max_evals: u64,
    pub log_trajectory: bool,
    /// Replaces the benchmark's default space; must keep its dimension split.
    pub space: Option<SearchSpace>,
    pub scale_update: ScaleUpdate,
    pub lambda: Option<usize>,
}

impl TrialConfig {
    pub fn new(benchmark: BenchmarkKind, dim: usize, method: Method, seed: u64) -> Self {
        Self {
            benchmark,
            dim,
            method,
            alpha: AlphaSetting::Auto,
            seed,
            target: DEFAULT_TARGET,
            min_eig_stop: DEFAULT_MIN_EIG,
            max_cond: DEFAULT_MAX_COND,
            max_evals: DEFAULT_MAX_EVALS,
            log_trajectory: false,
            space: None,
            scale_update: ScaleUpdate::default(),
            lambda: None,
        }
    }

    pub fn with_alpha(mut self, alpha: AlphaSetting) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_max_evals(mut self, max_evals: u64) -> Self {
        self.max_evals = max_evals;
        self
    }

    pub fn with_trajectory(mut self, on: bool) -> Self {
        self.log_trajectory = on;
        self
    }

    /// Resolved problem pieces shared by every trial of this config.
    pub fn problem(&self) -> Result<Problem> {
        for (name, v) in [
            ("target", self.target),
            ("min_eig_stop", self.min_eig_stop),
            ("max_cond", self.max_cond),
        ] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        let benchmark = Benchmark::make(self.benchmark, self.dim)?;
        let space = match &self.space {
            Some(s) => {
                if (s.n_continuous(), s.n_binary(), s.n_integer())
                    != (benchmark.n_co, benchmark.n_bi, benchmark.n_int)
                {
                    return Err(Error::Config(format!(
                        "space split ({}, {}, {}) does not match {} with N = {}",
                        s.n_continuous(),
                        s.n_binary(),
                        s.n_integer(),
                        self.benchmark,
                        self.dim
                    )));
                }
                s.clone()
            }
            None => benchmark.space()?,
        };
        let params = CmaParams::new(self.dim, self.lambda)?;
        let alpha = match self.method {
            Method::Margin => {
                let a = self.alpha.resolve(self.dim, params.lambda);
                if !(0.0..0.5).contains(&a) {
                    return Err(Error::Config(format!("margin must lie in [0, 0.5), got {a}")));
                }
                Some(a)
            }
            _ => None,
        };
        Ok(Problem {
            benchmark,
            space: Arc::new(space),
            params,
            alpha,
        })
    }
}

/// Validated benchmark, space and hyperparameters of a config.
#[derive(Debug, Clone)]
pub struct Problem {
    pub benchmark: Benchmark,
    pub space: Arc<SearchSpace>,
    pub params: CmaParams,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Target,
    EigCollapse,
    Condition,
    Budget,
    Numerical,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            Self::Target => "target",
            Self::EigCollapse => "eig-collapse",
            Self::Condition => "condition",
            Self::Budget => "budget",
            Self::Numerical => "numerical",
        }
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// State after one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub t: usize,
    pub evals: u64,
    pub best_f: f64,
    pub sigma: f64,
    pub mean: Vec<f64>,
    /// `σ √C_jj`
    pub std: Vec<f64>,
    /// Diagonal of `A`, margin method only.
    pub scale: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub success: bool,
    pub evaluations: u64,
    pub best_f: f64,
    /// Encoded best candidate.
    pub best_x: Vec<f64>,
    pub reason: StopReason,
    pub message: Option<String>,
    pub iterations: usize,
    pub alpha: Option<f64>,
    pub trajectory: Option<Vec<TrajectoryRow>>,
}

/// One of the three optimizers, ready to run.
#[derive(Debug, Clone)]
pub enum Optimizer {
    Cma(CmaState),
    IntMutation {
        state: ImState,
        bounds: Option<BoxBounds>,
    },
    Margin(MarginState),
}

impl Optimizer {
    pub fn cma(&self) -> &CmaState {
        match self {
            Self::Cma(s) => s,
            Self::IntMutation { state, .. } => &state.base,
            Self::Margin(s) => &s.base,
        }
    }

    fn scale(&self) -> Option<&[f64]> {
        match self {
            Self::Margin(s) => Some(s.scale()),
            _ => None,
        }
    }

    /// Samples one generation, evaluates it and, unless `stop_early`
    /// returns true for the evaluated values, updates the distribution.
    /// Returns the objective values and the encoded candidates.
    fn generation(
        &mut self,
        problem: &Problem,
        rng: &mut Rng,
        stop_early: impl FnOnce(&[f64]) -> bool,
    ) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let params = &problem.params;
        let space = &problem.space;
        let bench = &problem.benchmark;
        match self {
            Self::Cma(state) => {
                let mut record = state.sample_generation(params, rng);
                let cands = record
                    .x
                    .iter()
                    .map(|x| space.encode(x))
                    .collect::<Result<Vec<_>>>()?;
                let f = evaluate_all(bench, &cands)?;
                if !stop_early(&f) {
                    record.rank(&f)?;
                    state.update(params, &mut record)?;
                }
                Ok((f, cands))
            }
            Self::IntMutation { state, bounds } => {
                let (mut record, _) = state.ask(params, rng)?;
                let mut cands = Vec::with_capacity(record.len());
                let mut f = Vec::with_capacity(record.len());
                for x in &record.x {
                    let (cand, penalty) = match bounds {
                        Some(b) => {
                            let (feas, pen) = box_penalty(x, b)?;
                            (space.encode(&feas)?, pen)
                        }
                        None => (space.encode(x)?, 0.0),
                    };
                    f.push(bench.evaluate(&cand)? + penalty);
                    cands.push(cand);
                }
                if !stop_early(&f) {
                    state.tell(params, &mut record, &f)?;
                }
                Ok((f, cands))
            }
            Self::Margin(state) => {
                let mut record = state.ask(params, rng)?;
                let f = evaluate_all(bench, &record.v_bar)?;
                if !stop_early(&f) {
                    state.tell(params, &mut record, &f)?;
                }
                Ok((f, std::mem::take(&mut record.v_bar)))
            }
        }
    }
}

fn evaluate_all(bench: &Benchmark, cands: &[Vec<f64>]) -> Result<Vec<f64>> {
    cands.iter().map(|c| bench.evaluate(c)).collect()
}

/// Initial distribution: continuous and integer means uniform in `[1, 3]`,
/// binary means on the threshold 0.5, `σ = 1`, `C = I`, `A = I`.
pub fn init_state(config: &TrialConfig, problem: &Problem, rng: &mut Rng) -> Result<Optimizer> {
    let space = &problem.space;
    let mean: Vec<f64> = (0..space.dim())
        .map(|j| {
            if space.is_binary(j) {
                0.5
            } else {
                rng.uniform(1.0, 3.0)
            }
        })
        .collect();
    let base = CmaState::new(mean, 1.0)?;
    Ok(match config.method {
        Method::Cmaes => Optimizer::Cma(base),
        Method::CmaesIm | Method::CmaesImBox => {
            let bounds = match config.method {
                Method::CmaesImBox => Some(BoxBounds::on_discrete(
                    space,
                    BINARY_BOX,
                    (problem.benchmark.int_range.0 as f64, problem.benchmark.int_range.1 as f64),
                )?),
                _ => None,
            };
            Optimizer::IntMutation {
                state: ImState::new(base, GranularityMatrix::for_space(space))?,
                bounds,
            }
        }
        Method::Margin => {
            let alpha = problem.alpha.unwrap_or_else(|| default_alpha(space.dim(), problem.params.lambda));
            Optimizer::Margin(
                MarginState::new(base, Arc::clone(space), alpha)?.with_scale_update(config.scale_update),
            )
        }
    })
}

fn snapshot(opt: &Optimizer, evals: u64, best_f: f64) -> TrajectoryRow {
    let cma = opt.cma();
    TrajectoryRow {
        t: cma.t,
        evals,
        best_f,
        sigma: cma.sigma,
        mean: cma.mean.clone(),
        std: cma.coordinate_std(),
        scale: opt.scale().map(<[f64]>::to_vec),
    }
}

/// Runs one seeded trial. Configuration errors are returned as `Err`;
/// every other way a run can end is reported through [`StopReason`].
pub fn run_trial(config: &TrialConfig) -> Result<TrialResult> {
    let problem = config.problem()?;
    run_problem(config, &problem, config.seed)
}

pub(crate) fn run_problem(config: &TrialConfig, problem: &Problem, seed: u64) -> Result<TrialResult> {
    let mut rng = Rng::new(seed);
    let mut opt = init_state(config, problem, &mut rng)?;
    let lambda = problem.params.lambda as u64;
    let mut trajectory = config.log_trajectory.then(Vec::new);
    let mut evals = 0u64;
    let mut best_f = f64::INFINITY;
    let mut best_x = Vec::new();
    let mut iterations = 0usize;
    let mut message = None;

    let reason = loop {
        if evals + lambda > config.max_evals {
            break StopReason::Budget;
        }
        let target = config.target;
        let outcome = opt.generation(problem, &mut rng, |f| f.iter().any(|&v| v < target));
        iterations += 1;
        let (f, cands) = match outcome {
            Ok(v) => v,
            Err(e) => {
                // Candidates were not necessarily evaluated; the budget still counts them.
                evals += lambda;
                message = Some(e.to_string());
                break StopReason::Numerical;
            }
        };
        evals += lambda;
        if let Some(i) = argmin(&f) {
            if f[i] < best_f {
                best_f = f[i];
                best_x = cands[i].clone();
            }
        }
        if let Some(rows) = trajectory.as_mut() {
            rows.push(snapshot(&opt, evals, best_f));
        }
        if best_f < config.target {
            break StopReason::Target;
        }
        let cma = opt.cma();
        if cma.min_eigenvalue_scaled() < config.min_eig_stop {
            break StopReason::EigCollapse;
        }
        if cma.condition_number() > config.max_cond {
            break StopReason::Condition;
        }
    };

    Ok(TrialResult {
        success: reason == StopReason::Target,
        evaluations: evals,
        best_f,
        best_x,
        reason,
        message,
        iterations,
        alpha: problem.alpha,
        trajectory,
    })
}

fn argmin(f: &[f64]) -> Option<usize> {
    f.iter()
        .enumerate()
        .filter(|(_, v)| !v.is_nan())
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!(matches!("cma".parse::<Method>(), Err(Error::Config(_))));
        assert_eq!("auto".parse::<AlphaSetting>().unwrap(), AlphaSetting::Auto);
        assert_eq!("0.01".parse::<AlphaSetting>().unwrap(), AlphaSetting::Value(0.01));
        assert!("x".parse::<AlphaSetting>().is_err());
        assert_eq!(serde_json::to_string(&StopReason::EigCollapse).unwrap(), "\"eig-collapse\"");
    }

    #[test]
    fn initial_mean_layout() {
        let cfg = TrialConfig::new(BenchmarkKind::SphereOneMax, 10, Method::Margin, 3);
        let problem = cfg.problem().unwrap();
        let opt = init_state(&cfg, &problem, &mut Rng::new(3)).unwrap();
        let cma = opt.cma();
        assert_eq!(cma.sigma, 1.0);
        assert!(cma.mean[..5].iter().all(|m| (1.0..3.0).contains(m)));
        assert!(cma.mean[5..].iter().all(|&m| m == 0.5));
        assert_eq!(opt.scale().unwrap(), &[1.0; 10]);
        assert_eq!(problem.alpha, Some(default_alpha(10, problem.params.lambda)));
    }

    #[test]
    fn alpha_out_of_range_is_config_error() {
        let cfg = TrialConfig::new(BenchmarkKind::SphereInt, 10, Method::Margin, 0)
            .with_alpha(AlphaSetting::Value(0.5));
        assert!(matches!(run_trial(&cfg), Err(Error::Config(_))));
        let ignored = TrialConfig::new(BenchmarkKind::SphereInt, 10, Method::Cmaes, 0)
            .with_alpha(AlphaSetting::Value(0.5))
            .with_max_evals(0);
        assert!(run_trial(&ignored).is_ok());
    }

    #[test]
    fn zero_budget_evaluates_nothing() {
        for m in Method::ALL {
            let cfg = TrialConfig::new(BenchmarkKind::SphereOneMax, 6, m, 1).with_max_evals(0);
            let r = run_trial(&cfg).unwrap();
            assert_eq!((r.evaluations, r.reason, r.success), (0, StopReason::Budget, false));
        }
    }

    #[test]
    fn budget_counts_whole_generations() {
        let cfg = TrialConfig::new(BenchmarkKind::EllipsoidInt, 10, Method::CmaesIm, 1).with_max_evals(50);
        let r = run_trial(&cfg).unwrap();
        let lambda = CmaParams::new(10, None).unwrap().lambda as u64;
        assert_eq!(r.reason, StopReason::Budget);
        assert_eq!(r.evaluations, 50 / lambda * lambda);
    }

    #[test]
    fn success_reevaluates_below_target() {
        for m in [Method::Margin, Method::CmaesIm, Method::CmaesImBox] {
            let cfg = TrialConfig::new(BenchmarkKind::SphereInt, 6, m, 5);
            let r = run_trial(&cfg).unwrap();
            assert!(r.success, "{m}: {:?}", r.reason);
            let b = Benchmark::make(BenchmarkKind::SphereInt, 6).unwrap();
            assert!(b.evaluate(&r.best_x).unwrap() < DEFAULT_TARGET);
        }
    }

    #[test]
    fn trajectory_rows_track_iterations() {
        let cfg = TrialConfig::new(BenchmarkKind::SphereOneMax, 6, Method::Margin, 2)
            .with_trajectory(true)
            .with_max_evals(200);
        let r = run_trial(&cfg).unwrap();
        let rows = r.trajectory.unwrap();
        assert_eq!(rows.len(), r.iterations);
        assert!(rows.windows(2).all(|w| w[1].best_f <= w[0].best_f && w[1].evals > w[0].evals));
        assert!(rows.iter().all(|row| row.scale.as_ref().map(Vec::len) == Some(6)));
    }

    #[test]
    fn custom_space_must_keep_split() {
        let mut cfg = TrialConfig::new(BenchmarkKind::SphereInt, 4, Method::Margin, 0);
        cfg.space = Some(SearchSpace::mixed(2, 0, 2, (-3, 3)).unwrap());
        assert!(cfg.problem().is_ok());
        cfg.space = Some(SearchSpace::mixed(1, 0, 3, (-3, 3)).unwrap());
        assert!(matches!(cfg.problem(), Err(Error::Config(_))));
    }
}
