//! Training: Adam, triple sampling, early stopping, and the three training strategies
//! (Stochastic Loss, aggregated loss, visual-only regression) behind a registry.

mod adam;
mod early_stop;
mod history;
mod sampling;
mod strategy;
mod trainer;

pub use adam::{Adam, AdamConfig};
pub use early_stop::{early_stop_check, EarlyStop};
pub use history::{TrainHistory, TrainRecord, HISTORY_HEADER};
pub use sampling::{encode_images, sample_pair, sample_triple, BatchSampler, EncodedImage, TrainTriple};
pub use strategy::{
    AggregatedLoss, StochasticLoss, StrategyParams, StrategyRegistry, TrainStrategy, VisualRegression,
};
pub use trainer::{
    aggregated_train, batch_gradient, sl_train, validation_loss, visual_train, TrainConfig, TrainOutcome,
    ValidationLoss,
};
