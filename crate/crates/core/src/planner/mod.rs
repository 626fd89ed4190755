//! Predictive query planner: OOD flagging and per-benchmark edge-gain
//! surrogates that stand in for retrieval once a benchmark is flagged.

mod buffer;
mod features;
mod regressor;
mod wasserstein;

pub use buffer::{OodFlag, OodFlags, ReplayBuffer, DEFAULT_BUFFER_CAPACITY};
pub use features::{EdgeFeature, FeatureLayout};
pub use regressor::{
    pretrain_regressor, EncodedSample, FineTuneHyper, GainRegressor, Gradient, RegressorHyper,
    CHECKPOINT_FORMAT, CHECKPOINT_VERSION,
};
pub use wasserstein::wasserstein_1d;

pub const DEFAULT_BETA_REL: f64 = 0.5;
pub const DEFAULT_K_PERSIST: usize = 5;
