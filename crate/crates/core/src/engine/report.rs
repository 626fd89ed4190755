use serde::{Deserialize, Serialize};

use super::weave::GainSource;
use crate::space::{DesignTuple, Modification};

/// One executed iteration. Per-task vectors follow `RefinementReport::task_ids`
/// and reflect the state after the update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub origin: DesignTuple,
    /// The origin was reached by the exhausted-neighborhood jump.
    pub jumped: bool,
    pub modification: Modification,
    pub architecture: DesignTuple,
    pub performance: f64,
    pub woven_gain: f64,
    pub actual_gain: f64,
    pub best_performance: f64,
    pub task_gains: Vec<Option<f64>>,
    pub sources: Vec<GainSource>,
    pub weights: Vec<f64>,
    pub flagged: Vec<bool>,
    pub gamma: Vec<f64>,
    pub sigma2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub task_ids: Vec<String>,
    pub initial_architecture: DesignTuple,
    pub initial_performance: f64,
    pub initial_weights: Vec<f64>,
    pub iterations: Vec<IterationRecord>,
    pub best_architecture: DesignTuple,
    pub best_performance: f64,
    pub oracle_calls: usize,
    /// The run stopped early because no unevaluated neighbor remained.
    pub exhausted: bool,
    /// Wall-clock per iteration; kept out of serialized reports.
    #[serde(skip)]
    pub step_seconds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub task_ids: Vec<String>,
    pub initial_architecture: DesignTuple,
    pub initial_performance: f64,
    pub best_architecture: DesignTuple,
    pub best_performance: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub oracle_calls: usize,
    pub exhausted: bool,
    pub final_weights: Vec<f64>,
}

impl RefinementReport {
    /// Evaluations including the initial model.
    pub fn evaluations(&self) -> usize {
        self.iterations.len() + 1
    }

    /// Performance of every evaluation in order, initial model first.
    pub fn performances(&self) -> Vec<f64> {
        std::iter::once(self.initial_performance)
            .chain(self.iterations.iter().map(|r| r.performance))
            .collect()
    }

    /// Best-so-far after each evaluation.
    pub fn best_trace(&self) -> Vec<f64> {
        let mut best = f64::NEG_INFINITY;
        self.performances()
            .into_iter()
            .map(|p| {
                best = best.max(p);
                best
            })
            .collect()
    }

    pub fn final_weights(&self) -> &[f64] {
        self.iterations
            .last()
            .map(|r| r.weights.as_slice())
            .unwrap_or(&self.initial_weights)
    }

    pub fn summary(&self) -> ReportSummary {
        ReportSummary {
            task_ids: self.task_ids.clone(),
            initial_architecture: self.initial_architecture.clone(),
            initial_performance: self.initial_performance,
            best_architecture: self.best_architecture.clone(),
            best_performance: self.best_performance,
            iterations: self.iterations.len(),
            evaluations: self.evaluations(),
            oracle_calls: self.oracle_calls,
            exhausted: self.exhausted,
            final_weights: self.final_weights().to_vec(),
        }
    }

    /// One JSON object per line: an `initial` record, one `iteration` record
    /// per step, then a `summary` record.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let initial = serde_json::json!({
            "kind": "initial",
            "architecture": self.initial_architecture,
            "performance": self.initial_performance,
            "weights": self.initial_weights,
        });
        out.push_str(&initial.to_string());
        out.push('\n');
        for rec in &self.iterations {
            let mut v = serde_json::to_value(rec).expect("records serialize");
            v.as_object_mut()
                .expect("record is an object")
                .insert("kind".into(), "iteration".into());
            out.push_str(&v.to_string());
            out.push('\n');
        }
        let mut v = serde_json::to_value(self.summary()).expect("summary serializes");
        v.as_object_mut()
            .expect("summary is an object")
            .insert("kind".into(), "summary".into());
        out.push_str(&v.to_string());
        out.push('\n');
        out
    }
}
