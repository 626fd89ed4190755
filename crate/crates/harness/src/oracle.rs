use std::sync::Arc;

use mdesign_core::engine::EvaluationOracle;
use mdesign_core::space::{DesignSpace, DesignTuple};
use mdesign_core::store::KnowledgeStore;
use mdesign_core::{Error, Result};

/// Replays stored performances of one task.
#[derive(Debug)]
pub struct ReplayOracle<'a> {
    store: &'a KnowledgeStore,
    task: usize,
    task_id: String,
}

impl<'a> ReplayOracle<'a> {
    pub fn new(store: &'a KnowledgeStore, task_id: &str) -> Result<Self> {
        Ok(Self {
            task: store.task_index(task_id)?,
            store,
            task_id: task_id.to_string(),
        })
    }
}

impl EvaluationOracle for ReplayOracle<'_> {
    fn evaluate(&mut self, theta: &DesignTuple) -> Result<f64> {
        self.store
            .performance_of(self.task, theta)
            .ok_or_else(|| Error::Oracle {
                tuple: theta.choices().to_vec(),
                message: format!("architecture {theta} is not recorded for task `{}`", self.task_id),
            })
    }
}

/// Evaluates a fully enumerated landscape table indexed by architecture rank.
#[derive(Debug, Clone)]
pub struct LandscapeOracle {
    space: Arc<DesignSpace>,
    table: Arc<Vec<f64>>,
}

impl LandscapeOracle {
    pub fn new(space: Arc<DesignSpace>, table: Arc<Vec<f64>>) -> Self {
        Self { space, table }
    }
}

impl EvaluationOracle for LandscapeOracle {
    fn evaluate(&mut self, theta: &DesignTuple) -> Result<f64> {
        self.space.validate(theta)?;
        Ok(self.table[self.space.rank(theta) as usize])
    }
}
