use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "mi-cmaes", version, about = "Mixed-integer CMA-ES: single runs, batch experiments and margin grids")]
pub struct Cli {
    /// JSON file whose keys mirror the flag names; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one trial and print its result as JSON.
    Optimize(OptimizeArgs),
    /// Run a grid of functions, dimensions and methods and write a summary CSV.
    Experiment(ExperimentArgs),
    /// Sweep the margin α = N^-m λ^-n and write a grid CSV.
    AlphaGrid(AlphaGridArgs),
}

#[derive(Debug, Args, Default)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub function: Option<String>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// cmaes, cmaes-im, cmaes-im-box or margin.
    #[arg(long)]
    pub method: Option<String>,
    /// A number or `auto` for 1/(Nλ).
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_evals: Option<u64>,
    #[arg(long)]
    pub lambda: Option<usize>,
    /// Trajectory CSV destination.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct ExperimentArgs {
    /// Comma-separated benchmark names.
    #[arg(long, value_delimiter = ',')]
    pub functions: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Trial k runs with seed `seed-base + k`.
    #[arg(long)]
    pub seed_base: Option<u64>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub max_evals: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct AlphaGridArgs {
    #[arg(long)]
    pub function: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// Exponents of N.
    #[arg(long, value_delimiter = ',')]
    pub m_grid: Option<Vec<f64>>,
    /// Exponents of λ.
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub seed_base: Option<u64>,
    #[arg(long)]
    pub max_evals: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
