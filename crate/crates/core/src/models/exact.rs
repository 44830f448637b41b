use crate::engine::{EstimatingScheme, Past};
use crate::linalg::{ParamVec, SquareMatrix};
use crate::rng::SimRng;
use crate::scalar::Scalar;

use super::additive::{additive_score, AdditiveScheme};
use super::cauchy::{cauchy_psi, cauchy_sample, CauchyLocation, CAUCHY_FISHER_INFORMATION};

/// A conditional model given by its score and one-step Fisher information.
pub trait ConditionalModel<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    /// `l_t(θ)` at observation `x` given `X_1..X_{t−1}`.
    fn score(&self, t: usize, theta: &ParamVec<T>, x: T, before: &[T]) -> ParamVec<T>;

    /// `i_t(θ) = E_θ{l_t l_tᵀ | X_1..X_{t−1}}`.
    fn information(&self, t: usize, theta: &ParamVec<T>, before: &[T]) -> SquareMatrix<T>;

    fn draw(&self, t: usize, theta: &ParamVec<T>, before: &[T], rng: &mut SimRng) -> T;
}

/// Maximum-likelihood recursion `Γ_t(θ) = Σ_{s≤t} i_s(θ)` recomputed at
/// every new θ. Each step costs O(t); intended for models whose
/// information does not factorize.
#[derive(Debug, Clone)]
pub struct ExactInformationScheme<M> {
    model: M,
}

impl<M> ExactInformationScheme<M> {
    pub fn new(model: M) -> Self {
        Self { model }
    }

    pub fn model(&self) -> &M {
        &self.model
    }
}

impl<T: Scalar, M: ConditionalModel<T>> EstimatingScheme<T> for ExactInformationScheme<M> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn name(&self) -> &str {
        "exact-information"
    }

    fn psi(&self, t: usize, theta: &ParamVec<T>, x: T, past: &Past<'_, T>) -> ParamVec<T> {
        self.model.score(t, theta, x, past.observations)
    }

    fn gamma(&self, t: usize, theta: &ParamVec<T>, past: &Past<'_, T>) -> SquareMatrix<T> {
        let obs = past.observations;
        (1..=t).fold(SquareMatrix::zeros(self.model.dim()), |acc, s| {
            acc + self.model.information(s, theta, &obs[..s - 1])
        })
    }

    fn sample(
        &self,
        t: usize,
        theta_true: &ParamVec<T>,
        past: &Past<'_, T>,
        rng: &mut SimRng,
    ) -> T {
        self.model.draw(t, theta_true, past.observations, rng)
    }
}

impl<T: Scalar> ConditionalModel<T> for AdditiveScheme<T> {
    fn dim(&self) -> usize {
        1
    }

    fn score(&self, _t: usize, theta: &ParamVec<T>, x: T, before: &[T]) -> ParamVec<T> {
        ParamVec::scalar(additive_score(
            self.family(),
            theta.first(),
            x,
            self.previous(before),
        ))
    }

    fn information(&self, _t: usize, theta: &ParamVec<T>, before: &[T]) -> SquareMatrix<T> {
        let fam = self.family();
        SquareMatrix::scalar(fam.gddot(theta.first()) * fam.h(self.previous(before)))
    }

    fn draw(&self, _t: usize, theta: &ParamVec<T>, before: &[T], rng: &mut SimRng) -> T {
        self.family()
            .sample(theta.first(), self.previous(before), rng)
    }
}

impl<T: Scalar> ConditionalModel<T> for CauchyLocation {
    fn dim(&self) -> usize {
        1
    }

    fn score(&self, _t: usize, theta: &ParamVec<T>, x: T, _before: &[T]) -> ParamVec<T> {
        ParamVec::scalar(cauchy_psi(theta.first(), x))
    }

    fn information(&self, _t: usize, _theta: &ParamVec<T>, _before: &[T]) -> SquareMatrix<T> {
        SquareMatrix::scalar(T::lit(CAUCHY_FISHER_INFORMATION))
    }

    fn draw(&self, _t: usize, theta: &ParamVec<T>, _before: &[T], rng: &mut SimRng) -> T {
        T::lit(cauchy_sample(theta.first().as_f64(), rng))
    }
}
