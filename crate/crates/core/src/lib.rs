//! Knowledge-base driven refinement of discrete neural architectures.
//!
//! Benchmark records are organized as per-task modification gain graphs. To
//! refine a model for an unseen task, candidate 1-hop modifications are scored
//! by a similarity-weighted sum of benchmark gains; the similarity view is
//! updated by Bayes' rule as real gains are observed, and benchmarks that stay
//! dissimilar are served by learned gain surrogates instead of raw retrieval.

pub mod engine;
pub mod error;
pub mod graph;
pub mod planner;
pub mod similarity;
pub mod space;
pub mod store;

pub use engine::{EvaluationOracle, MemoOracle, RefinementConfig, RefinementReport, Refiner};
pub use error::{Error, Result};
pub use graph::{EdgeSample, GainGraph};
pub use similarity::{SimilarityView, TransferModel};
pub use space::{DesignDimension, DesignSpace, DesignTuple, Modification};
pub use store::{ArchId, KnowledgeStore};
