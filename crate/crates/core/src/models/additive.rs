use std::fmt;
use std::sync::Arc;

use crate::engine::{EstimatingScheme, Past};
use crate::linalg::{ParamVec, SquareMatrix};
use crate::rng::SimRng;
use crate::scalar::Scalar;

use super::ModelError;

pub type RealFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;
/// Draws `X_t` given `(θ, X_{t−1})`.
pub type FamilySampler<T> = Arc<dyn Fn(T, T, &mut SimRng) -> T + Send + Sync>;
type PairFn<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;

/// Conditionally additive exponential family of Markov transitions,
/// `f(y; θ, x) = h(x, y) exp(θ m(y, x) − γ(θ) h(x))`, with scalar θ.
///
/// The conditional Fisher information factorizes as `I_t(θ) = γ̈(θ) H_t`
/// with `H_t = Σ_{s≤t} h(X_{s−1})`.
#[derive(Clone)]
pub struct AdditiveExpFamily<T> {
    name: String,
    gamma: RealFn<T>,
    gdot: RealFn<T>,
    gddot: RealFn<T>,
    h: RealFn<T>,
    m: PairFn<T>,
    sampler: FamilySampler<T>,
}

impl<T: Scalar> AdditiveExpFamily<T> {
    /// Grid on which supplied derivatives and sign constraints are validated.
    pub const VALIDATION_RANGE: (f64, f64) = (-3.0, 3.0);
    pub const VALIDATION_POINTS: usize = 25;

    /// Builds a family after checking `γ̇`, `γ̈` against central differences
    /// of `γ`, `γ̇` and checking `γ̈ ≥ 0`, `h ≥ 0` on the validation grid.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        gamma: impl Fn(T) -> T + Send + Sync + 'static,
        gdot: impl Fn(T) -> T + Send + Sync + 'static,
        gddot: impl Fn(T) -> T + Send + Sync + 'static,
        h: impl Fn(T) -> T + Send + Sync + 'static,
        m: impl Fn(T, T) -> T + Send + Sync + 'static,
        sampler: impl Fn(T, T, &mut SimRng) -> T + Send + Sync + 'static,
    ) -> Result<Self, ModelError> {
        let fam = Self {
            name: name.into(),
            gamma: Arc::new(gamma),
            gdot: Arc::new(gdot),
            gddot: Arc::new(gddot),
            h: Arc::new(h),
            m: Arc::new(m),
            sampler: Arc::new(sampler),
        };
        fam.validate()?;
        Ok(fam)
    }

    fn validate(&self) -> Result<(), ModelError> {
        let eps = T::epsilon().as_f64();
        let tol = (100.0 * eps.powf(2.0 / 3.0)).max(1e-6);
        let (lo, hi) = Self::VALIDATION_RANGE;
        let n = Self::VALIDATION_POINTS;
        for i in 0..n {
            let v = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            let step = eps.cbrt() * v.abs().max(1.0);
            let x = T::lit(v);
            let fd = |f: &RealFn<T>| {
                ((f(T::lit(v + step)) - f(T::lit(v - step))).as_f64()) / (2.0 * step)
            };
            for (which, supplied, fdv) in [
                ("first derivative", self.gdot(x).as_f64(), fd(&self.gamma)),
                ("second derivative", self.gddot(x).as_f64(), fd(&self.gdot)),
            ] {
                if (supplied - fdv).abs() > tol * supplied.abs().max(1.0) {
                    return Err(ModelError::InconsistentDerivative {
                        which,
                        at: v,
                        supplied,
                        finite_difference: fdv,
                    });
                }
            }
            let curv = self.gddot(x).as_f64();
            if curv < 0.0 {
                return Err(ModelError::NegativeCurvature { at: v, value: curv });
            }
            let w = self.h(x).as_f64();
            if w < 0.0 {
                return Err(ModelError::NegativeWeight { at: v, value: w });
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn gamma(&self, theta: T) -> T {
        (self.gamma)(theta)
    }

    pub fn gdot(&self, theta: T) -> T {
        (self.gdot)(theta)
    }

    pub fn gddot(&self, theta: T) -> T {
        (self.gddot)(theta)
    }

    pub fn h(&self, x: T) -> T {
        (self.h)(x)
    }

    /// Sufficient statistic `m(y, x)` for the transition `x → y`.
    pub fn m(&self, y: T, x: T) -> T {
        (self.m)(y, x)
    }

    pub fn sample(&self, theta: T, x_prev: T, rng: &mut SimRng) -> T {
        (self.sampler)(theta, x_prev, rng)
    }

    /// Treats `γ̇` as linear when `γ̈` is constant on the validation grid.
    pub fn has_linear_gdot(&self) -> bool {
        let (lo, hi) = Self::VALIDATION_RANGE;
        let n = Self::VALIDATION_POINTS;
        let first = self.gddot(T::lit(lo)).as_f64();
        (1..n).all(|i| {
            let v = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            (self.gddot(T::lit(v)).as_f64() - first).abs() <= 1e-12 * first.abs().max(1.0)
        })
    }

    /// Recursive scheme with `ψ_t = l_t` and `Γ_t = γ̈(θ) H_t`, started at `x0`.
    pub fn scheme(&self, x0: T) -> AdditiveScheme<T> {
        AdditiveScheme {
            family: self.clone(),
            x0,
        }
    }
}

impl<T> fmt::Debug for AdditiveExpFamily<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdditiveExpFamily")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

/// Score `l_t(θ) = m(x_t, x_prev) − γ̇(θ) h(x_prev)`.
pub fn additive_score<T: Scalar>(fam: &AdditiveExpFamily<T>, theta: T, x: T, x_prev: T) -> T {
    fam.m(x, x_prev) - fam.gdot(theta) * fam.h(x_prev)
}

/// Drift `b_t(θ, u) = h(x_prev)(γ̇(θ) − γ̇(θ + u))`.
pub fn additive_b<T: Scalar>(fam: &AdditiveExpFamily<T>, theta: T, u: T, x_prev: T) -> T {
    fam.h(x_prev) * (fam.gdot(theta) - fam.gdot(theta + u))
}

/// `E_θ{l_t²(θ + u) | past} = γ̈(θ) h(x_prev) + b_t²(θ, u)`.
pub fn additive_second_moment<T: Scalar>(
    fam: &AdditiveExpFamily<T>,
    theta: T,
    u: T,
    x_prev: T,
) -> T {
    let b = additive_b(fam, theta, u, x_prev);
    fam.gddot(theta) * fam.h(x_prev) + b * b
}

/// Likelihood recursion for an [`AdditiveExpFamily`].
///
/// The accumulator holds `H_t`; `Γ_t(θ) = γ̈(θ) H_t`. With `X_0 = 0` and
/// `h(0) = 0` (as for AR(1)), `Γ_1 = 0` and the first step is skipped.
#[derive(Debug, Clone)]
pub struct AdditiveScheme<T> {
    family: AdditiveExpFamily<T>,
    x0: T,
}

impl<T: Scalar> AdditiveScheme<T> {
    pub fn family(&self) -> &AdditiveExpFamily<T> {
        &self.family
    }

    pub fn x0(&self) -> T {
        self.x0
    }

    /// `X_{t−1}` given `X_1..X_{t−1}`.
    pub fn previous(&self, observations: &[T]) -> T {
        observations.last().copied().unwrap_or(self.x0)
    }

    /// Full path `X_0, X_1, …` for the given observations.
    pub fn path(&self, observations: &[T]) -> Vec<T> {
        std::iter::once(self.x0)
            .chain(observations.iter().copied())
            .collect()
    }
}

impl<T: Scalar> EstimatingScheme<T> for AdditiveScheme<T> {
    fn dim(&self) -> usize {
        1
    }

    fn name(&self) -> &str {
        self.family.name()
    }

    fn accumulate(&self, _t: usize, observations: &[T]) -> SquareMatrix<T> {
        SquareMatrix::scalar(self.family.h(self.previous(observations)))
    }

    fn psi(&self, _t: usize, theta: &ParamVec<T>, x: T, past: &Past<'_, T>) -> ParamVec<T> {
        let x_prev = self.previous(past.observations);
        ParamVec::scalar(additive_score(&self.family, theta.first(), x, x_prev))
    }

    fn gamma(&self, _t: usize, theta: &ParamVec<T>, past: &Past<'_, T>) -> SquareMatrix<T> {
        SquareMatrix::scalar(self.family.gddot(theta.first()) * past.accumulated.first())
    }

    fn sample(
        &self,
        _t: usize,
        theta_true: &ParamVec<T>,
        past: &Past<'_, T>,
        rng: &mut SimRng,
    ) -> T {
        let x_prev = self.previous(past.observations);
        self.family.sample(theta_true.first(), x_prev, rng)
    }

    fn drift(
        &self,
        _t: usize,
        theta: &ParamVec<T>,
        u: &ParamVec<T>,
        past: &Past<'_, T>,
    ) -> Option<ParamVec<T>> {
        let x_prev = self.previous(past.observations);
        Some(ParamVec::scalar(additive_b(
            &self.family,
            theta.first(),
            u.first(),
            x_prev,
        )))
    }

    fn psi_second_moment(
        &self,
        _t: usize,
        theta: &ParamVec<T>,
        u: &ParamVec<T>,
        past: &Past<'_, T>,
    ) -> Option<SquareMatrix<T>> {
        let x_prev = self.previous(past.observations);
        Some(SquareMatrix::scalar(additive_second_moment(
            &self.family,
            theta.first(),
            u.first(),
            x_prev,
        )))
    }
}
