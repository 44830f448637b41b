use std::collections::BTreeMap;
use std::sync::Arc;

use crate::engine::EstimatingScheme;
use crate::scalar::Scalar;

use super::additive::AdditiveScheme;
use super::ar1::gaussian_ar1;
use super::cauchy::CauchyLocation;
use super::iid::IidScheme;
use super::ModelError;

/// A registered model. Diagnostics dispatch on the variant: i.i.d. checks
/// need `γ(θ)`, additive-family checks need the family functions.
#[derive(Clone)]
pub enum Model<T: Scalar> {
    Iid(Arc<IidScheme<T>>),
    Additive(Arc<AdditiveScheme<T>>),
    Custom(Arc<dyn EstimatingScheme<T>>),
}

impl<T: Scalar> Model<T> {
    pub fn scheme(&self) -> &dyn EstimatingScheme<T> {
        match self {
            Model::Iid(s) => s.as_ref(),
            Model::Additive(s) => s.as_ref(),
            Model::Custom(s) => s.as_ref(),
        }
    }

    pub fn as_iid(&self) -> Option<&IidScheme<T>> {
        match self {
            Model::Iid(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_additive(&self) -> Option<&AdditiveScheme<T>> {
        match self {
            Model::Additive(s) => Some(s),
            _ => None,
        }
    }
}

type Factory<T> = Arc<dyn Fn() -> Model<T> + Send + Sync>;

/// String-keyed model lookup. Built-ins: `cauchy`, `ar1`.
pub struct ModelRegistry<T: Scalar> {
    factories: BTreeMap<String, Factory<T>>,
}

impl<T: Scalar> Default for ModelRegistry<T> {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl<T: Scalar> ModelRegistry<T> {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        reg.register("cauchy", || Model::Iid(Arc::new(CauchyLocation.scheme())));
        reg.register("ar1", || {
            Model::Additive(Arc::new(gaussian_ar1().scheme(T::zero())))
        });
        reg
    }

    pub fn register(
        &mut self,
        name: impl Into<String>,
        factory: impl Fn() -> Model<T> + Send + Sync + 'static,
    ) {
        self.factories.insert(name.into(), Arc::new(factory));
    }

    pub fn get(&self, name: &str) -> Result<Model<T>, ModelError> {
        self.factories
            .get(name)
            .map(|f| f())
            .ok_or_else(|| ModelError::UnknownModel(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }
}
