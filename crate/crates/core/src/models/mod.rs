//! Built-in statistical models and their estimating schemes.

mod additive;
mod ar1;
mod cauchy;
mod exact;
mod iid;
mod registry;

use thiserror::Error;

pub use additive::{
    additive_b, additive_score, additive_second_moment, AdditiveExpFamily, AdditiveScheme,
    FamilySampler, RealFn,
};
pub use ar1::{ar1_sample, fisher_rate_kappa, gaussian_ar1, log_fisher_rate_kappa, ArRegime};
pub use cauchy::{
    cauchy_b, cauchy_density, cauchy_psi, cauchy_quantile, cauchy_sample, cauchy_second_moment,
    CauchyLocation, CAUCHY_FISHER_INFORMATION,
};
pub use exact::{ConditionalModel, ExactInformationScheme};
pub use iid::{iid_scheme, IidScheme};
pub use registry::{Model, ModelRegistry};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("supplied {which} at {at} is {supplied}, finite difference gives {finite_difference}")]
    InconsistentDerivative {
        which: &'static str,
        at: f64,
        supplied: f64,
        finite_difference: f64,
    },
    #[error("second derivative of the cumulant is negative ({value}) at {at}")]
    NegativeCurvature { at: f64, value: f64 },
    #[error("weight function h is negative ({value}) at {at}")]
    NegativeWeight { at: f64, value: f64 },
}
