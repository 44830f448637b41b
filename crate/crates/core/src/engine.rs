//! The recursion `θ̂_t = θ̂_{t−1} + Γ_t⁻¹(θ̂_{t−1}) ψ_t(θ̂_{t−1})` and the
//! machinery that drives it along a simulated sample path.

use thiserror::Error;

use crate::linalg::{ParamVec, SquareMatrix};
use crate::rng::SimRng;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("non-finite update at step {t}")]
    NonFiniteUpdate { t: usize },
    #[error("step {t} needs {expected} past observations, got {got}")]
    HistoryMismatch {
        t: usize,
        expected: usize,
        got: usize,
    },
    #[error("parameter dimension {got} does not match scheme dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Information available before observing `X_t`.
#[derive(Debug, Clone, Copy)]
pub struct Past<'a, T> {
    /// `X_1, …, X_{t−1}`.
    pub observations: &'a [T],
    /// Predictable statistic accumulated by the scheme through step `t`
    /// (e.g. the step count or `H_t`).
    pub accumulated: &'a SquareMatrix<T>,
}

impl<'a, T: Scalar> Past<'a, T> {
    pub fn new(observations: &'a [T], accumulated: &'a SquareMatrix<T>) -> Self {
        Self {
            observations,
            accumulated,
        }
    }

    /// `X_{t−1}`, or `None` at the first step.
    pub fn previous(&self) -> Option<T> {
        self.observations.last().copied()
    }
}

/// A model/procedure pair: estimating functions `ψ_t`, normalizers `Γ_t` and
/// the conditional law used to simulate observations.
///
/// `gamma` must not depend on the current observation; it only sees [`Past`].
/// Schemes that factorize `Γ_t` keep a running statistic through
/// [`accumulate`](Self::accumulate) so each step costs O(1).
pub trait EstimatingScheme<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    fn name(&self) -> &str {
        "scheme"
    }

    fn initial_accumulator(&self) -> SquareMatrix<T> {
        SquareMatrix::zeros(self.dim())
    }

    /// Increment of the predictable statistic at step `t`, computed from
    /// `X_1..X_{t−1}` only.
    fn accumulate(&self, _t: usize, _observations: &[T]) -> SquareMatrix<T> {
        SquareMatrix::zeros(self.dim())
    }

    fn psi(&self, t: usize, theta: &ParamVec<T>, x: T, past: &Past<'_, T>) -> ParamVec<T>;

    fn gamma(&self, t: usize, theta: &ParamVec<T>, past: &Past<'_, T>) -> SquareMatrix<T>;

    /// Draws `X_t` from its conditional law under `theta_true`.
    fn sample(&self, t: usize, theta_true: &ParamVec<T>, past: &Past<'_, T>, rng: &mut SimRng)
        -> T;

    /// Closed-form drift `b_t(θ, u) = E_θ{ψ_t(θ + u) | past}`.
    fn drift(
        &self,
        _t: usize,
        _theta: &ParamVec<T>,
        _u: &ParamVec<T>,
        _past: &Past<'_, T>,
    ) -> Option<ParamVec<T>> {
        None
    }

    /// Closed-form `E_θ{ψ_t(θ + u) ψ_t(θ + u)ᵀ | past}`.
    fn psi_second_moment(
        &self,
        _t: usize,
        _theta: &ParamVec<T>,
        _u: &ParamVec<T>,
        _past: &Past<'_, T>,
    ) -> Option<SquareMatrix<T>> {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState<T> {
    pub t: usize,
    pub theta_hat: ParamVec<T>,
    pub normalizer_acc: SquareMatrix<T>,
    /// Number of steps skipped because `Γ_t` was singular.
    pub stalled: usize,
}

impl<T: Scalar> EstimatorState<T> {
    pub fn initial<S: EstimatingScheme<T> + ?Sized>(scheme: &S, theta0: ParamVec<T>) -> Self {
        Self {
            t: 0,
            theta_hat: theta0,
            normalizer_acc: scheme.initial_accumulator(),
            stalled: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord<T> {
    pub t: usize,
    pub x: T,
    /// Estimate after this step.
    pub theta_hat: ParamVec<T>,
    pub psi: ParamVec<T>,
    pub gamma: SquareMatrix<T>,
    /// `Γ_t⁻¹ψ_t`; zero when the step was skipped.
    pub increment: ParamVec<T>,
    pub skipped: bool,
    pub ill_conditioned: bool,
}

/// One step of the recursion.
///
/// `observations` must hold exactly `X_1..X_{t−1}` where `t = state.t + 1`.
/// A singular `Γ_t` leaves the estimate unchanged and marks the record as
/// skipped.
pub fn step<T: Scalar, S: EstimatingScheme<T> + ?Sized>(
    scheme: &S,
    state: &EstimatorState<T>,
    x: T,
    observations: &[T],
) -> Result<(EstimatorState<T>, StepRecord<T>), EngineError> {
    let t = state.t + 1;
    if observations.len() != t - 1 {
        return Err(EngineError::HistoryMismatch {
            t,
            expected: t - 1,
            got: observations.len(),
        });
    }
    if state.theta_hat.dim() != scheme.dim() {
        return Err(EngineError::DimensionMismatch {
            expected: scheme.dim(),
            got: state.theta_hat.dim(),
        });
    }
    let acc = state.normalizer_acc + scheme.accumulate(t, observations);
    let past = Past::new(observations, &acc);
    let theta = state.theta_hat;
    let gamma = scheme.gamma(t, &theta, &past);
    let psi = scheme.psi(t, &theta, x, &past);
    if !psi.is_finite() {
        return Err(EngineError::NonFiniteUpdate { t });
    }

    let mut next = EstimatorState {
        t,
        theta_hat: theta,
        normalizer_acc: acc,
        stalled: state.stalled,
    };
    let record = match gamma.invert() {
        Ok(inv) => {
            let increment = inv.matrix.mul_vec(&psi);
            let theta_hat = theta + increment;
            if !increment.is_finite() || !theta_hat.is_finite() {
                return Err(EngineError::NonFiniteUpdate { t });
            }
            next.theta_hat = theta_hat;
            StepRecord {
                t,
                x,
                theta_hat,
                psi,
                gamma,
                increment,
                skipped: false,
                ill_conditioned: inv.is_ill_conditioned(),
            }
        }
        Err(_) => {
            next.stalled += 1;
            StepRecord {
                t,
                x,
                theta_hat: theta,
                psi,
                gamma,
                increment: ParamVec::zeros(theta.dim()),
                skipped: true,
                ill_conditioned: false,
            }
        }
    };
    Ok((next, record))
}

/// Stateful driver that owns the observation history of one run.
pub struct Estimator<'s, T: Scalar, S: EstimatingScheme<T> + ?Sized> {
    scheme: &'s S,
    state: EstimatorState<T>,
    observations: Vec<T>,
}

impl<'s, T: Scalar, S: EstimatingScheme<T> + ?Sized> Estimator<'s, T, S> {
    pub fn new(scheme: &'s S, theta0: ParamVec<T>) -> Self {
        Self {
            scheme,
            state: EstimatorState::initial(scheme, theta0),
            observations: Vec::new(),
        }
    }

    pub fn with_capacity(scheme: &'s S, theta0: ParamVec<T>, capacity: usize) -> Self {
        let mut est = Self::new(scheme, theta0);
        est.observations.reserve(capacity);
        est
    }

    pub fn state(&self) -> &EstimatorState<T> {
        &self.state
    }

    pub fn observations(&self) -> &[T] {
        &self.observations
    }

    /// Feeds an externally supplied observation.
    pub fn observe(&mut self, x: T) -> Result<StepRecord<T>, EngineError> {
        let (next, record) = step(self.scheme, &self.state, x, &self.observations)?;
        self.state = next;
        self.observations.push(x);
        Ok(record)
    }

    /// Draws the next observation under `theta_true` and applies the step.
    pub fn advance(
        &mut self,
        theta_true: &ParamVec<T>,
        rng: &mut SimRng,
    ) -> Result<StepRecord<T>, EngineError> {
        let t = self.state.t + 1;
        let acc = self.state.normalizer_acc + self.scheme.accumulate(t, &self.observations);
        let past = Past::new(&self.observations, &acc);
        let x = self.scheme.sample(t, theta_true, &past, rng);
        self.observe(x)
    }
}

/// A recorded run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub theta_true: ParamVec<T>,
    pub theta0: ParamVec<T>,
    pub records: Vec<StepRecord<T>>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn observations(&self) -> Vec<T> {
        self.records.iter().map(|r| r.x).collect()
    }

    /// `θ̂_{t}` for `t = 0..=len`.
    pub fn estimates(&self) -> Vec<ParamVec<T>> {
        std::iter::once(self.theta0)
            .chain(self.records.iter().map(|r| r.theta_hat))
            .collect()
    }

    /// `Δ_t = θ̂_t − θ` for `t = 0..=len`.
    pub fn errors(&self) -> Vec<ParamVec<T>> {
        self.estimates()
            .into_iter()
            .map(|e| e - self.theta_true)
            .collect()
    }
}

/// Simulates `X_1..X_{t_max}` under `theta_true` and runs the recursion from
/// `theta0`. The output is a pure function of the arguments.
pub fn run_trajectory<T: Scalar, S: EstimatingScheme<T> + ?Sized>(
    scheme: &S,
    theta_true: &ParamVec<T>,
    theta0: &ParamVec<T>,
    t_max: usize,
    seed: u64,
) -> Result<Vec<StepRecord<T>>, EngineError> {
    let mut rng = SimRng::new(seed);
    let mut est = Estimator::with_capacity(scheme, *theta0, t_max);
    (0..t_max)
        .map(|_| est.advance(theta_true, &mut rng))
        .collect()
}

pub fn simulate<T: Scalar, S: EstimatingScheme<T> + ?Sized>(
    scheme: &S,
    theta_true: &ParamVec<T>,
    theta0: &ParamVec<T>,
    t_max: usize,
    seed: u64,
) -> Result<Trajectory<T>, EngineError> {
    Ok(Trajectory {
        theta_true: *theta_true,
        theta0: *theta0,
        records: run_trajectory(scheme, theta_true, theta0, t_max, seed)?,
    })
}

/// Replays the predictable statistic along `observations`, yielding the
/// accumulator in force at each step `t = 1..=len`.
pub fn accumulators<T: Scalar, S: EstimatingScheme<T> + ?Sized>(
    scheme: &S,
    observations: &[T],
) -> Vec<SquareMatrix<T>> {
    let mut acc = scheme.initial_accumulator();
    (1..=observations.len())
        .map(|t| {
            acc = acc + scheme.accumulate(t, &observations[..t - 1]);
            acc
        })
        .collect()
}
