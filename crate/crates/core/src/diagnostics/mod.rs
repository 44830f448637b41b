//! Numerical checks of the convergence and rate hypotheses, and the
//! statistics their proofs are built on, evaluated on grids of
//! perturbations `u` or along simulated trajectories.
//!
//! Asymptotic statements ("eventually", "converges a.s.", "the sum is
//! finite") are read at a finite horizon: a partial-sum series has
//! *plateaued* when its increase over the last quartile is at most a
//! configurable fraction of its total (see [`plateau`]). Every report states
//! the thresholds it used.

mod additive_checks;
mod iid_checks;
mod ktrace;
mod quadrature;
mod r_conditions;
mod report;
mod series;

use thiserror::Error;

use crate::linalg::LinalgError;

pub use additive_checks::{
    additive_weights, check_m_conditions, g_trace, script_n, GTrace, GTraceRow, MConfig,
    DEFAULT_M1_TOL,
};
pub use iid_checks::{
    check_b1, check_b2, check_psd, estimate_b_matrix, BMatrixEstimate, GridSpec, Stability,
    DEFAULT_B2_THRESHOLD,
};
pub use ktrace::{k_trace, KTrace, KTraceRow};
pub use quadrature::{integrate, quadrature, MAX_DEPTH, MIN_TOL};
pub use r_conditions::{
    additive_lambda, check_r_conditions, iid_lambda, neg_term, r_series, PChoice, RConfig, RSeries,
    DEFAULT_DELTA, DEFAULT_EPS_TILDE,
};
pub use report::{ConditionId, ConditionReport, PointCheck, Region};
pub use series::{
    last_quartile_start, pairwise_sum, partial_sums, plateau, prop_a2_sums,
    robbins_siegmund_monitor, tail_range, CompensatedSum, IncrementSums, MonitorConfig, Plateau,
    SupermartingaleReport, TailRange, DEFAULT_PLATEAU_TOL, DEFAULT_RANGE_TOL,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("scheme `{0}` has no closed-form drift and no density for quadrature")]
    MissingDrift(String),
    #[error("scheme `{0}` has no closed-form second moment and no density for quadrature")]
    MissingSecondMoment(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("quadrature did not converge by depth {depth} near {at}")]
    MaxDepth { depth: u32, at: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
