//! Recursive parameter estimation.
//!
//! The engine runs `θ̂_t = θ̂_{t−1} + Γ_t⁻¹(θ̂_{t−1}) ψ_t(θ̂_{t−1})` for any
//! [`EstimatingScheme`]; [`models`] provides the Cauchy location and
//! conditionally additive exponential-family (AR(1)) schemes;
//! [`diagnostics`] evaluates the convergence and rate conditions along
//! closed-form moments or trajectories; [`harness`] runs reproducible Monte
//! Carlo rate experiments.
//!
//! The linear algebra, engine and model formulas are generic over
//! [`Scalar`] (`f32` or `f64`). Monte Carlo summaries and reports are `f64`.

pub mod diagnostics;
pub mod engine;
pub mod harness;
pub mod linalg;
pub mod models;
pub mod rng;
mod scalar;

pub use engine::{
    run_trajectory, simulate, step, EngineError, EstimatingScheme, Estimator, EstimatorState, Past,
    StepRecord, Trajectory,
};
pub use linalg::{Inverse, LinalgError, ParamVec, SquareMatrix, MAX_DIM};
pub use rng::{derive_seed, SimRng};
pub use scalar::Scalar;

pub type ParamVec64 = ParamVec<f64>;
pub type ParamVec32 = ParamVec<f32>;
pub type Matrix64 = SquareMatrix<f64>;
pub type Matrix32 = SquareMatrix<f32>;
pub type StepRecord64 = StepRecord<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type EstimatorState64 = EstimatorState<f64>;
