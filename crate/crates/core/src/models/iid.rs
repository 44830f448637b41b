use std::fmt;
use std::sync::Arc;

use crate::engine::{EstimatingScheme, Past};
use crate::linalg::{ParamVec, SquareMatrix};
use crate::rng::SimRng;
use crate::scalar::Scalar;

type PsiFn<T> = Arc<dyn Fn(&ParamVec<T>, T) -> ParamVec<T> + Send + Sync>;
type MatrixFn<T> = Arc<dyn Fn(&ParamVec<T>) -> SquareMatrix<T> + Send + Sync>;
type SamplerFn<T> = Arc<dyn Fn(&ParamVec<T>, &mut SimRng) -> T + Send + Sync>;
type DriftFn<T> = Arc<dyn Fn(&ParamVec<T>, &ParamVec<T>) -> ParamVec<T> + Send + Sync>;
type MomentFn<T> = Arc<dyn Fn(&ParamVec<T>, &ParamVec<T>) -> SquareMatrix<T> + Send + Sync>;
type DensityFn<T> = Arc<dyn Fn(&ParamVec<T>, T) -> T + Send + Sync>;

/// I.i.d. observations with a fixed estimating function `ψ(θ, x)` and
/// normalizer `Γ_t(θ) = t·γ(θ)`.
///
/// The accumulated statistic is `t·1`, so `Γ_t` is formed in O(1).
#[derive(Clone)]
pub struct IidScheme<T> {
    name: String,
    dim: usize,
    psi: PsiFn<T>,
    gamma: MatrixFn<T>,
    sampler: Option<SamplerFn<T>>,
    drift: Option<DriftFn<T>>,
    second_moment: Option<MomentFn<T>>,
    density: Option<DensityFn<T>>,
}

/// Wraps an i.i.d. estimating function into a recursive scheme with
/// `Γ_t(θ) = t·γ(θ)`.
pub fn iid_scheme<T, P, G>(psi: P, gamma: G, dim: usize) -> IidScheme<T>
where
    T: Scalar,
    P: Fn(&ParamVec<T>, T) -> ParamVec<T> + Send + Sync + 'static,
    G: Fn(&ParamVec<T>) -> SquareMatrix<T> + Send + Sync + 'static,
{
    IidScheme {
        name: "iid".into(),
        dim,
        psi: Arc::new(psi),
        gamma: Arc::new(gamma),
        sampler: None,
        drift: None,
        second_moment: None,
        density: None,
    }
}

impl<T: Scalar> IidScheme<T> {
    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_sampler(
        mut self,
        f: impl Fn(&ParamVec<T>, &mut SimRng) -> T + Send + Sync + 'static,
    ) -> Self {
        self.sampler = Some(Arc::new(f));
        self
    }

    /// Closed form of `b(θ, u) = ∫ψ(θ + u, x) f(θ, x) dx`.
    pub fn with_drift(
        mut self,
        f: impl Fn(&ParamVec<T>, &ParamVec<T>) -> ParamVec<T> + Send + Sync + 'static,
    ) -> Self {
        self.drift = Some(Arc::new(f));
        self
    }

    /// Closed form of `∫ψ(θ + u, x)ψ(θ + u, x)ᵀ f(θ, x) dx`.
    pub fn with_second_moment(
        mut self,
        f: impl Fn(&ParamVec<T>, &ParamVec<T>) -> SquareMatrix<T> + Send + Sync + 'static,
    ) -> Self {
        self.second_moment = Some(Arc::new(f));
        self
    }

    /// Observation density `f(θ, x)`, used for quadrature fallbacks.
    pub fn with_density(
        mut self,
        f: impl Fn(&ParamVec<T>, T) -> T + Send + Sync + 'static,
    ) -> Self {
        self.density = Some(Arc::new(f));
        self
    }

    pub fn psi_at(&self, theta: &ParamVec<T>, x: T) -> ParamVec<T> {
        (self.psi)(theta, x)
    }

    /// The per-observation normalizer `γ(θ)`.
    pub fn unit_gamma(&self, theta: &ParamVec<T>) -> SquareMatrix<T> {
        (self.gamma)(theta)
    }

    pub fn closed_drift(&self, theta: &ParamVec<T>, u: &ParamVec<T>) -> Option<ParamVec<T>> {
        self.drift.as_ref().map(|f| f(theta, u))
    }

    pub fn closed_second_moment(
        &self,
        theta: &ParamVec<T>,
        u: &ParamVec<T>,
    ) -> Option<SquareMatrix<T>> {
        self.second_moment.as_ref().map(|f| f(theta, u))
    }

    pub fn density(&self, theta: &ParamVec<T>, x: T) -> Option<T> {
        self.density.as_ref().map(|f| f(theta, x))
    }

    pub fn has_density(&self) -> bool {
        self.density.is_some()
    }
}

impl<T: Scalar> EstimatingScheme<T> for IidScheme<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn accumulate(&self, _t: usize, _observations: &[T]) -> SquareMatrix<T> {
        SquareMatrix::identity(self.dim)
    }

    fn psi(&self, _t: usize, theta: &ParamVec<T>, x: T, _past: &Past<'_, T>) -> ParamVec<T> {
        (self.psi)(theta, x)
    }

    fn gamma(&self, _t: usize, theta: &ParamVec<T>, past: &Past<'_, T>) -> SquareMatrix<T> {
        *past.accumulated * (self.gamma)(theta)
    }

    fn sample(
        &self,
        _t: usize,
        theta_true: &ParamVec<T>,
        _past: &Past<'_, T>,
        rng: &mut SimRng,
    ) -> T {
        let sampler = self
            .sampler
            .as_ref()
            .unwrap_or_else(|| panic!("scheme `{}` has no sampler", self.name));
        sampler(theta_true, rng)
    }

    fn drift(
        &self,
        _t: usize,
        theta: &ParamVec<T>,
        u: &ParamVec<T>,
        _past: &Past<'_, T>,
    ) -> Option<ParamVec<T>> {
        self.closed_drift(theta, u)
    }

    fn psi_second_moment(
        &self,
        _t: usize,
        theta: &ParamVec<T>,
        u: &ParamVec<T>,
        _past: &Past<'_, T>,
    ) -> Option<SquareMatrix<T>> {
        self.closed_second_moment(theta, u)
    }
}

impl<T> fmt::Debug for IidScheme<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IidScheme")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("drift", &self.drift.is_some())
            .field("second_moment", &self.second_moment.is_some())
            .finish()
    }
}
