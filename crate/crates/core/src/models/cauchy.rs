use std::f64::consts::PI;

use crate::linalg::{ParamVec, SquareMatrix};
use crate::rng::SimRng;
use crate::scalar::Scalar;

use super::iid::{iid_scheme, IidScheme};

/// Fisher information of the standard-scale Cauchy location family.
pub const CAUCHY_FISHER_INFORMATION: f64 = 0.5;

/// Score of the location family, `2(x − θ)/(1 + (x − θ)²)`. Bounded by 1.
pub fn cauchy_psi<T: Scalar>(theta: T, x: T) -> T {
    let d = x - theta;
    T::lit(2.0) * d / (T::one() + d * d)
}

/// Drift `b(θ, u) = E_θ ψ(θ + u, X) = −2u/(4 + u²)`; independent of θ.
pub fn cauchy_b<T: Scalar>(u: T) -> T {
    -T::lit(2.0) * u / (T::lit(4.0) + u * u)
}

/// `E_θ ψ²(θ + u, X) = 2(4 + 3u²)/(4 + u²)²`; equals the Fisher information at `u = 0`.
pub fn cauchy_second_moment<T: Scalar>(u: T) -> T {
    let u2 = u * u;
    let den = T::lit(4.0) + u2;
    T::lit(2.0) * (T::lit(4.0) + T::lit(3.0) * u2) / (den * den)
}

pub fn cauchy_density<T: Scalar>(theta: T, x: T) -> T {
    let d = x - theta;
    T::one() / (T::lit(PI) * (T::one() + d * d))
}

/// Inverse CDF, `θ + tan(π(p − ½))`.
pub fn cauchy_quantile(theta: f64, p: f64) -> f64 {
    theta + libm::tan(PI * (p - 0.5))
}

pub fn cauchy_sample(theta: f64, rng: &mut SimRng) -> f64 {
    cauchy_quantile(theta, rng.uniform_open01())
}

/// Cauchy location model with unit scale.
#[derive(Debug, Clone, Copy, Default)]
pub struct CauchyLocation;

impl CauchyLocation {
    /// Maximum-likelihood recursion `θ̂_t = θ̂_{t−1} + (t·i)⁻¹ψ(θ̂_{t−1}, X_t)` with `i = ½`.
    pub fn scheme<T: Scalar>(&self) -> IidScheme<T> {
        iid_scheme(
            |theta: &ParamVec<T>, x: T| ParamVec::scalar(cauchy_psi(theta.first(), x)),
            |_theta: &ParamVec<T>| SquareMatrix::scalar(T::lit(CAUCHY_FISHER_INFORMATION)),
            1,
        )
        .named("cauchy")
        .with_sampler(|theta: &ParamVec<T>, rng: &mut SimRng| {
            T::lit(cauchy_sample(theta.first().as_f64(), rng))
        })
        .with_drift(|_theta: &ParamVec<T>, u: &ParamVec<T>| ParamVec::scalar(cauchy_b(u.first())))
        .with_second_moment(|_theta: &ParamVec<T>, u: &ParamVec<T>| {
            SquareMatrix::scalar(cauchy_second_moment(u.first()))
        })
        .with_density(|theta: &ParamVec<T>, x: T| cauchy_density(theta.first(), x))
    }
}
