//! Run configuration files for the CLI. Relative paths resolve against the
//! directory of the configuration file.

use std::fs;
use std::path::{Path, PathBuf};

use mdesign_core::engine::RefinementConfig;
use mdesign_core::similarity::{init_similarity_kendall, SimilarityView};
use mdesign_core::store::{KnowledgeStore, StatTable};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitStrategy {
    #[default]
    Kendall,
    Uniform,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitConfig {
    pub strategy: InitStrategy,
    /// Statistics file holding the unseen task's row (Kendall).
    pub stats: Option<PathBuf>,
    /// Row of `stats` to use; defaults to the oracle task.
    pub task: Option<String>,
    /// Unnormalized weights in store task order (explicit).
    pub weights: Vec<f64>,
}

/// Record-replay oracle over a records file for the unseen task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub records: PathBuf,
    pub task: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub oracle: OracleConfig,
    #[serde(default)]
    pub init: InitConfig,
    #[serde(default)]
    pub refinement: RefinementConfig,
    /// Directory of pretrained regressor checkpoints, `<task_id>.ckpt`.
    #[serde(default)]
    pub checkpoints: Option<PathBuf>,
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Loads and resolves relative paths against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::parse(&read_text(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.oracle.records);
        if let Some(p) = cfg.init.stats.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.checkpoints.as_mut() {
            resolve(p);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serializes")
    }

    pub fn initial_view(&self, store: &KnowledgeStore) -> Result<SimilarityView> {
        let ids: Vec<String> = store.tasks().iter().map(|t| t.task_id.clone()).collect();
        match self.init.strategy {
            InitStrategy::Uniform => Ok(SimilarityView::uniform(ids)?),
            InitStrategy::Explicit => Ok(SimilarityView::from_scores(ids, &self.init.weights)?),
            InitStrategy::Kendall => {
                let path = self.init.stats.as_ref().ok_or_else(|| {
                    HarnessError::Config("kendall initialization needs `init.stats`".into())
                })?;
                let table = StatTable::parse(&read_text(path)?)?;
                if table.names != store.stat_names() {
                    return Err(mdesign_core::Error::SchemaMismatch(format!(
                        "unseen statistics {:?} do not match the store's {:?}",
                        table.names,
                        store.stat_names()
                    ))
                    .into());
                }
                let task = self.init.task.as_deref().unwrap_or(&self.oracle.task);
                let row = table.rows.get(task).ok_or_else(|| {
                    HarnessError::Config(format!("no statistics row for task `{task}` in {}", path.display()))
                })?;
                Ok(init_similarity_kendall(row, store)?)
            }
        }
    }
}
