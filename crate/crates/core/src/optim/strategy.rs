use std::collections::BTreeMap;
use std::fmt;

use super::sampling::EncodedImage;
use super::trainer::{aggregated_train, check_lambda, sl_train, visual_train, TrainConfig, TrainOutcome};
use crate::error::{Error, Result};
use crate::nn::Model;

/// A way of training a [`Model`].
pub trait TrainStrategy: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    /// Whether the model to train must carry a text head. Strategies answering `false`
    /// produce visual-only checkpoints.
    fn uses_text_branch(&self) -> bool;

    fn train(
        &self,
        model: Model,
        train: &[EncodedImage],
        val: &[EncodedImage],
        config: &TrainConfig,
    ) -> Result<TrainOutcome>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StochasticLoss;

impl TrainStrategy for StochasticLoss {
    fn name(&self) -> &str {
        "sl"
    }

    fn uses_text_branch(&self) -> bool {
        true
    }

    fn train(
        &self,
        model: Model,
        train: &[EncodedImage],
        val: &[EncodedImage],
        config: &TrainConfig,
    ) -> Result<TrainOutcome> {
        sl_train(model, train, val, config)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AggregatedLoss {
    lambda: f64,
}

impl AggregatedLoss {
    pub fn new(lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl TrainStrategy for AggregatedLoss {
    fn name(&self) -> &str {
        "aggregated"
    }

    fn uses_text_branch(&self) -> bool {
        true
    }

    fn train(
        &self,
        model: Model,
        train: &[EncodedImage],
        val: &[EncodedImage],
        config: &TrainConfig,
    ) -> Result<TrainOutcome> {
        aggregated_train(model, train, val, config, self.lambda)
    }
}

/// The text-to-visual regressor baseline. Any text head on the input model is dropped.
#[derive(Debug, Clone, Copy, Default)]
pub struct VisualRegression;

impl TrainStrategy for VisualRegression {
    fn name(&self) -> &str {
        "visreg"
    }

    fn uses_text_branch(&self) -> bool {
        false
    }

    fn train(
        &self,
        model: Model,
        train: &[EncodedImage],
        val: &[EncodedImage],
        config: &TrainConfig,
    ) -> Result<TrainOutcome> {
        visual_train(model.without_text_branch(), train, val, config)
    }
}

/// Knobs a strategy factory may read.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyParams {
    pub lambda: f64,
}

impl Default for StrategyParams {
    fn default() -> Self {
        Self { lambda: 1.0 }
    }
}

type Factory = Box<dyn Fn(&StrategyParams) -> Result<Box<dyn TrainStrategy>> + Send + Sync>;

/// Name-keyed strategy factories.
pub struct StrategyRegistry {
    factories: BTreeMap<String, Factory>,
}

impl fmt::Debug for StrategyRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StrategyRegistry").field("names", &self.names()).finish()
    }
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        Self { factories: BTreeMap::new() }
    }

    /// `sl`, `aggregated` and `visreg`.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("sl", |_| Ok(Box::new(StochasticLoss)));
        r.register("aggregated", |p| Ok(Box::new(AggregatedLoss::new(p.lambda)?)));
        r.register("visreg", |_| Ok(Box::new(VisualRegression)));
        r
    }

    /// Adds or replaces a factory.
    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&StrategyParams) -> Result<Box<dyn TrainStrategy>> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_owned(), Box::new(factory));
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }

    pub fn create(&self, name: &str, params: &StrategyParams) -> Result<Box<dyn TrainStrategy>> {
        let factory = self.factories.get(name).ok_or_else(|| Error::UnknownName {
            kind: "strategy",
            name: name.to_owned(),
            known: self.names().join(", "),
        })?;
        factory(params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_names() {
        let r = StrategyRegistry::builtin();
        assert_eq!(r.names(), ["aggregated", "sl", "visreg"]);
        for name in r.names() {
            assert_eq!(r.create(name, &StrategyParams::default()).unwrap().name(), name);
        }
    }

    #[test]
    fn unknown_name_lists_known() {
        let err = StrategyRegistry::builtin()
            .create("adagrad", &StrategyParams::default())
            .unwrap_err()
            .to_string();
        assert!(err.contains("adagrad") && err.contains("visreg"), "{err}");
    }

    #[test]
    fn aggregated_validates_lambda() {
        let r = StrategyRegistry::builtin();
        assert!(r.create("aggregated", &StrategyParams { lambda: f64::NAN }).is_err());
        assert!(r.create("sl", &StrategyParams { lambda: f64::NAN }).is_ok());
    }

    #[test]
    fn custom_registration_overrides() {
        let mut r = StrategyRegistry::empty();
        r.register("sl", |_| Ok(Box::new(VisualRegression)));
        let s = r.create("sl", &StrategyParams::default()).unwrap();
        assert!(!s.uses_text_branch());
    }
}
