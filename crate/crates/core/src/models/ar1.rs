use serde::Serialize;

use crate::rng::SimRng;
use crate::scalar::Scalar;

use super::additive::AdditiveExpFamily;

/// Gaussian AR(1), `X_t = θX_{t−1} + Z_t` with standard normal innovations:
/// `γ(θ) = θ²/2`, `h(x) = x²`, `m(y, x) = xy`.
///
/// With `X_0 = 0` the likelihood recursion coincides with recursive least
/// squares, `I_t = Σ_{s≤t} X_{s−1}²`.
pub fn gaussian_ar1<T: Scalar>() -> AdditiveExpFamily<T> {
    AdditiveExpFamily::new(
        "ar1",
        |v: T| v * v / T::lit(2.0),
        |v: T| v,
        |_| T::one(),
        |x: T| x * x,
        |y: T, x: T| x * y,
        |theta: T, x_prev: T, rng: &mut SimRng| {
            T::lit(ar1_sample(theta.as_f64(), x_prev.as_f64(), rng))
        },
    )
    .expect("AR(1) family is internally consistent")
}

pub fn ar1_sample(theta: f64, x_prev: f64, rng: &mut SimRng) -> f64 {
    theta * x_prev + rng.standard_normal()
}

/// Growth regime of the AR(1) Fisher information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ArRegime {
    Ergodic,
    UnitRoot,
    Explosive,
}

impl ArRegime {
    pub fn of<T: Scalar>(theta: T) -> Self {
        let a = theta.abs();
        if a < T::one() {
            Self::Ergodic
        } else if a == T::one() {
            Self::UnitRoot
        } else {
            Self::Explosive
        }
    }
}

/// Deterministic growth rate `κ_t(θ)` of `I_t`:
/// `t/(1−θ²)` for `|θ|<1`, `t²/2` for `|θ|=1`, `θ^{2t}/(θ²−1)²` for `|θ|>1`.
///
/// Overflows for large `t` in the explosive regime; see [`log_fisher_rate_kappa`].
pub fn fisher_rate_kappa<T: Scalar>(theta: T, t: usize) -> T {
    let tt = T::lit(t as f64);
    let th2 = theta * theta;
    match ArRegime::of(theta) {
        ArRegime::Ergodic => tt / (T::one() - th2),
        ArRegime::UnitRoot => tt * tt / T::lit(2.0),
        ArRegime::Explosive => {
            let d = th2 - T::one();
            th2.powi(t as i32) / (d * d)
        }
    }
}

/// `log κ_t(θ)`, finite for every `t ≥ 1`.
pub fn log_fisher_rate_kappa<T: Scalar>(theta: T, t: usize) -> T {
    let lt = T::lit(t as f64).ln();
    let th2 = theta * theta;
    match ArRegime::of(theta) {
        ArRegime::Ergodic => lt - (T::one() - th2).ln(),
        ArRegime::UnitRoot => T::lit(2.0) * lt - T::lit(2.0).ln(),
        ArRegime::Explosive => {
            T::lit(2.0 * t as f64) * theta.abs().ln() - T::lit(2.0) * (th2 - T::one()).ln()
        }
    }
}
