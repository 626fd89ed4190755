use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GainGraph;
use crate::planner::{GainRegressor, OodFlags};
use crate::similarity::SimilarityView;
use crate::space::{DesignTuple, Modification};
use crate::store::KnowledgeStore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GainSource {
    Retrieved,
    Predicted,
    Absent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub source: GainSource,
    pub value: Option<f64>,
}

/// Woven gain of one candidate; `contributions` follow the view's task order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WovenScore {
    pub modification: Modification,
    pub target: DesignTuple,
    pub score: f64,
    pub contributions: Vec<Contribution>,
}

impl WovenScore {
    /// Per-task gain values, `None` where absent.
    pub fn values(&self) -> Vec<Option<f64>> {
        self.contributions.iter().map(|c| c.value).collect()
    }
}

/// Weighted vote over each benchmark's best architecture, per dimension.
pub fn initial_model(view: &SimilarityView, store: &KnowledgeStore) -> Result<DesignTuple> {
    if store.num_tasks() == 0 {
        return Err(Error::Empty("store has no benchmark tasks"));
    }
    check_alignment(view, store)?;
    let space = store.space();
    let mut votes: Vec<Vec<f64>> = space.dimensions().iter().map(|d| vec![0.0; d.len()]).collect();
    for (t, &w) in view.weights().iter().enumerate() {
        let (best, _) = store
            .best_arch(t)
            .ok_or(Error::Empty("benchmark task has no performance records"))?;
        for (d, &c) in store.tuple(best).choices().iter().enumerate() {
            votes[d][c] += w;
        }
    }
    let choices = votes
        .iter()
        .map(|v| {
            let mut arg = 0;
            for (c, &x) in v.iter().enumerate() {
                if x > v[arg] {
                    arg = c;
                }
            }
            arg
        })
        .collect();
    Ok(DesignTuple::new(choices))
}

pub(crate) fn check_alignment(view: &SimilarityView, store: &KnowledgeStore) -> Result<()> {
    let same = view.len() == store.num_tasks()
        && view.task_ids().iter().zip(store.tasks()).all(|(a, b)| *a == b.task_id);
    if same {
        Ok(())
    } else {
        Err(Error::InvalidArgument(
            "similarity view tasks do not match the store's benchmark tasks".into(),
        ))
    }
}

/// Scores every candidate `(modification, target)` leaving `origin`.
///
/// Flagged tasks with a regressor contribute its prediction, all others
/// contribute the recorded gain or nothing.
pub fn weave_scores(
    view: &SimilarityView,
    flags: &OodFlags,
    origin: &DesignTuple,
    candidates: &[(Modification, DesignTuple)],
    graphs: &[GainGraph],
    regressors: &[Option<GainRegressor>],
) -> Result<Vec<WovenScore>> {
    let n = view.len();
    if graphs.len() != n || regressors.len() != n || flags.flags().len() != n {
        return Err(Error::InvalidArgument(format!(
            "view has {n} tasks, got {} graphs, {} regressors and {} flags",
            graphs.len(),
            regressors.len(),
            flags.flags().len()
        )));
    }
    let mut out: Vec<WovenScore> = candidates
        .iter()
        .map(|(m, target)| WovenScore {
            modification: *m,
            target: target.clone(),
            score: 0.0,
            contributions: Vec::with_capacity(n),
        })
        .collect();
    for (i, graph) in graphs.iter().enumerate() {
        let w = view.weights()[i];
        match (&regressors[i], flags.is_flagged(i)) {
            (Some(reg), true) => {
                for ws in out.iter_mut() {
                    let g = reg.predict(origin, &ws.target)?;
                    ws.score += w * g;
                    ws.contributions.push(Contribution {
                        source: GainSource::Predicted,
                        value: Some(g),
                    });
                }
            }
            _ => {
                for ws in out.iter_mut() {
                    let c = match graph.gain(origin, &ws.target) {
                        Some(g) => {
                            ws.score += w * g;
                            Contribution {
                                source: GainSource::Retrieved,
                                value: Some(g),
                            }
                        }
                        None => Contribution {
                            source: GainSource::Absent,
                            value: None,
                        },
                    };
                    ws.contributions.push(c);
                }
            }
        }
    }
    Ok(out)
}

/// Index of the maximal score; ties go to the smallest `(dimension, to)`.
pub fn select_modification(scores: &[WovenScore]) -> Result<usize> {
    let mut best: Option<usize> = None;
    for (k, s) in scores.iter().enumerate() {
        best = match best {
            None => Some(k),
            Some(b) => {
                let cur = &scores[b];
                let better = s.score > cur.score
                    || (s.score == cur.score
                        && (s.modification.dimension, s.modification.to)
                            < (cur.modification.dimension, cur.modification.to));
                Some(if better { k } else { b })
            }
        };
    }
    best.ok_or(Error::Empty("no unevaluated candidate modifications"))
}
