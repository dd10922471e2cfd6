//! `mi-cmaes` command-line front end.
//!
//! Exit codes: 0 clean run, 1 numerical or internal failure, 2 usage or
//! configuration error.

mod cli;
mod config;

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use mi_cmaes::harness::{self, alpha_grid, grid_csv, run_batch, run_trial, summary_csv, trajectory_csv, DEFAULT_GRID};
use mi_cmaes::{AlphaSetting, Benchmark, BenchmarkKind, Error, Method, StopReason, TrialConfig};
use serde::Serialize;

use cli::{AlphaGridArgs, Cli, Command, ExperimentArgs, OptimizeArgs};
use config::FileConfig;

const SEED_ENV: &str = "MI_CMAES_SEED_BASE";
const DEFAULT_TRIALS: usize = 100;
const DEFAULT_DIMS: [usize; 3] = [20, 40, 60];
const DEFAULT_METHODS: [Method; 3] = [Method::CmaesIm, Method::CmaesImBox, Method::Margin];

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Dimension { .. } | Error::Domain(_) => Failure::Usage(e.to_string()),
            _ => Failure::Internal(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = config::load(cli.config.as_deref()).and_then(|file| match cli.command {
        Command::Optimize(args) => optimize(args, file),
        Command::Experiment(args) => experiment(args, file),
        Command::AlphaGrid(args) => grid(args, file),
    });
    match outcome {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T, Failure> {
    value.ok_or_else(|| Failure::Usage(format!("missing required --{flag}")))
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> Result<T, Failure> {
    s.parse().map_err(Failure::from)
}

fn parse_all<T: std::str::FromStr<Err = Error>>(items: &[String]) -> Result<Vec<T>, Failure> {
    items.iter().map(|s| parse(s)).collect()
}

/// Flag, then config file, then `MI_CMAES_SEED_BASE`, then 0.
fn seed_base(flag: Option<u64>, file: Option<u64>) -> Result<u64, Failure> {
    if let Some(s) = flag.or(file) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("{SEED_ENV} must be an unsigned integer, got '{v}'"))),
        Err(_) => Ok(0),
    }
}

/// Opens the output before any work so an unwritable path fails fast.
fn create(path: &Path) -> Result<File, Failure> {
    File::create(path).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn write_all(mut file: File, path: &Path, text: &str) -> Result<(), Failure> {
    file.write_all(text.as_bytes())
        .map_err(|e| Failure::Internal(format!("writing {}: {e}", path.display())))
}

fn alpha_setting(flag: Option<String>, file: &FileConfig) -> Result<AlphaSetting, Failure> {
    match flag.or_else(|| file.alpha.as_ref().map(|a| a.to_arg())) {
        Some(s) => parse(&s),
        None => Ok(AlphaSetting::Auto),
    }
}

#[derive(Serialize)]
struct OptimizeReport<'a> {
    function: &'a str,
    dim: usize,
    method: &'a str,
    seed: u64,
    alpha: Option<f64>,
    success: bool,
    evaluations: u64,
    iterations: usize,
    best_f: Option<f64>,
    best_x: &'a [f64],
    reason: StopReason,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<&'a str>,
}

fn optimize(args: OptimizeArgs, file: FileConfig) -> Result<ExitCode, Failure> {
    let function: BenchmarkKind = parse(&required(args.function.or(file.function.clone()), "function")?)?;
    let dim = required(args.dim.or(file.dim), "dim")?;
    let method: Method = parse(&required(args.method.or(file.method.clone()), "method")?)?;
    let seed = seed_base(args.seed, file.seed)?;
    let mut config = TrialConfig::new(function, dim, method, seed)
        .with_alpha(alpha_setting(args.alpha, &file)?)
        .with_max_evals(args.max_evals.or(file.max_evals).unwrap_or(harness::DEFAULT_MAX_EVALS));
    config.lambda = args.lambda.or(file.lambda);
    config.space = file.space;
    let log_path: Option<PathBuf> = args.log.or(file.log);
    config.log_trajectory = log_path.is_some();
    config.problem()?;
    let log = log_path.as_deref().map(create).transpose()?;

    let result = run_trial(&config)?;
    if let (Some(f), Some(path)) = (log, log_path.as_deref()) {
        write_all(f, path, &trajectory_csv(&result))?;
    }
    let report = OptimizeReport {
        function: function.name(),
        dim,
        method: method.name(),
        seed,
        alpha: result.alpha,
        success: result.success,
        evaluations: result.evaluations,
        iterations: result.iterations,
        best_f: result.best_f.is_finite().then_some(result.best_f),
        best_x: &result.best_x,
        reason: result.reason,
        message: result.message.as_deref(),
    };
    let line = serde_json::to_string(&report).map_err(|e| Failure::Internal(e.to_string()))?;
    println!("{line}");
    Ok(if result.reason == StopReason::Numerical {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn jobs(flag: Option<usize>, file: Option<usize>) -> usize {
    flag.or(file)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn experiment(args: ExperimentArgs, file: FileConfig) -> Result<ExitCode, Failure> {
    let functions = match args.functions.or(file.functions.clone()) {
        Some(names) => parse_all(&names)?,
        None => BenchmarkKind::ALL.to_vec(),
    };
    let methods = match args.methods.or(file.methods.clone()) {
        Some(names) => parse_all(&names)?,
        None => DEFAULT_METHODS.to_vec(),
    };
    let dims = args.dims.or(file.dims.clone()).unwrap_or(DEFAULT_DIMS.to_vec());
    let trials = args.trials.or(file.trials).unwrap_or(DEFAULT_TRIALS);
    let base = seed_base(args.seed_base, file.seed_base)?;
    let alpha = alpha_setting(args.alpha, &file)?;
    let max_evals = args.max_evals.or(file.max_evals).unwrap_or(harness::DEFAULT_MAX_EVALS);
    let out = required(args.out.or(file.out.clone()), "out")?;

    let mut configs = Vec::new();
    for &f in &functions {
        for &n in &dims {
            for &m in &methods {
                let c = TrialConfig::new(f, n, m, base).with_alpha(alpha).with_max_evals(max_evals);
                c.problem()?;
                configs.push(c);
            }
        }
    }
    let handle = create(&out)?;
    let summary = run_batch(&configs, trials, jobs(args.jobs, file.jobs), base)?;
    write_all(handle, &out, &summary_csv(&summary))?;
    Ok(ExitCode::SUCCESS)
}

fn grid(args: AlphaGridArgs, file: FileConfig) -> Result<ExitCode, Failure> {
    let function: BenchmarkKind = parse(&required(args.function.or(file.function.clone()), "function")?)?;
    let dims = required(args.dims.or(file.dims.clone()), "dims")?;
    let m_grid = args.m_grid.or(file.m_grid.clone()).unwrap_or(DEFAULT_GRID.to_vec());
    let n_grid = args.n_grid.or(file.n_grid.clone()).unwrap_or(DEFAULT_GRID.to_vec());
    let trials = args.trials.or(file.trials).unwrap_or(DEFAULT_TRIALS);
    let base = seed_base(args.seed_base, file.seed_base)?;
    let max_evals = args.max_evals.or(file.max_evals).unwrap_or(harness::DEFAULT_MAX_EVALS);
    let out = required(args.out.or(file.out.clone()), "out")?;

    let template = TrialConfig::new(function, dims.first().copied().unwrap_or(0), Method::Margin, base)
        .with_max_evals(max_evals);
    for &n in &dims {
        Benchmark::make(function, n)?;
    }
    let handle = create(&out)?;
    let cells = alpha_grid(&template, &dims, &m_grid, &n_grid, trials, jobs(args.jobs, file.jobs), base)?;
    write_all(handle, &out, &grid_csv(&cells))?;
    Ok(ExitCode::SUCCESS)
}
