use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Recursive estimation: simulation, rate experiments, condition checks,
/// quadrature oracles and K-traces.
#[derive(Debug, Parser)]
#[command(name = "recest", version)]
pub struct Cli {
    /// Worker threads for replication-parallel subcommands.
    #[arg(long, global = true, env = "RECEST_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one trajectory and write the per-step records.
    Simulate(SimulateArgs),
    /// Monte Carlo rate experiment.
    Rate(RateArgs),
    /// Check a hypothesis (B1, B2, M, R, G) and report where it holds.
    Check(CheckArgs),
    /// Compare a closed-form conditional moment with quadrature.
    Oracle(OracleArgs),
    /// Per-step K_t trace along one trajectory.
    Ktrace(KtraceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Condition {
    #[value(name = "B1", alias = "b1")]
    B1,
    #[value(name = "B2", alias = "b2")]
    B2,
    #[value(name = "M", alias = "m")]
    M,
    #[value(name = "R", alias = "r")]
    R,
    #[value(name = "G", alias = "g")]
    G,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    /// Drift `b(θ, u)`.
    B,
    /// Second moment of ψ at `θ + u`.
    M2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ANorm {
    /// `a_t = t`.
    StepCount,
    /// `a_t` = accumulated information (`H_t` for additive families).
    Information,
}

/// Flags shared by every subcommand that names a model.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Registered model id (`cauchy`, `ar1`).
    #[arg(long, default_value = "cauchy")]
    pub model: String,

    /// True parameter, comma-separated for vectors. Defaults to 1 for
    /// `cauchy` and 0.5 for `ar1`.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,

    /// Starting value of the recursion (zero by default).
    #[arg(long, allow_hyphen_values = true)]
    pub theta0: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1000)]
    pub t_max: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct RateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    /// Comma-separated checkpoints; defaults to round(10^e) for
    /// e = 2, 2.5, 3, 3.5, 4.
    #[arg(long, value_delimiter = ',')]
    pub checkpoints: Option<Vec<usize>>,
    /// Horizon; defaults to the last checkpoint.
    #[arg(long)]
    pub t_max: Option<usize>,
    #[arg(long, default_value_t = 0.4, allow_hyphen_values = true)]
    pub delta: f64,
    /// Master seed from which replication seeds are derived.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "step-count")]
    pub a_choice: ANorm,
    /// Skip the Fisher-information ratio that is recorded by default for
    /// additive models.
    #[arg(long)]
    pub no_fisher_ratio: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, ignore_case = true)]
    pub condition: Condition,
    /// Scale of `C = c·I`.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub c: f64,
    /// Half-width of the symmetric `u` grid.
    #[arg(long, default_value_t = 1.0)]
    pub u_max: f64,
    #[arg(long, default_value_t = 201)]
    pub n_points: usize,
    /// Upper bound required of the B2 second moment.
    #[arg(long, default_value_t = 1e3)]
    pub threshold: f64,
    /// Trajectory length for M, R and G.
    #[arg(long, default_value_t = 10_000)]
    pub t_max: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Band parameter for G (`ε ≤ u² ≤ 1/ε`) and the exponent of R3.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Margin in the additive-family `λ_t`.
    #[arg(long, default_value_t = 0.05)]
    pub eps_tilde: f64,
    #[arg(long, default_value_t = 0.01)]
    pub plateau_tol: f64,
    /// Band resolution for G.
    #[arg(long, default_value_t = 16)]
    pub n_band: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[arg(long, default_value = "cauchy")]
    pub model: String,
    #[arg(long, value_enum)]
    pub quantity: Quantity,
    #[arg(long, allow_hyphen_values = true)]
    pub u: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub theta: f64,
    /// Largest accepted `|closed_form − quadrature|`.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Tolerance passed to the adaptive quadrature.
    #[arg(long, default_value_t = 1e-10)]
    pub quad_tol: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct KtraceArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1000)]
    pub t_max: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.4)]
    pub delta: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub c: f64,
    #[arg(long, value_enum, default_value = "step-count")]
    pub a_choice: ANorm,
    #[command(flatten)]
    pub out: OutputArgs,
}
