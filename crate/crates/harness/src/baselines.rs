//! Reference searchers sharing the refinement engine's evaluation accounting:
//! the budget counts every evaluation including the first.

use std::time::Instant;

use mdesign_core::engine::{initial_model, EvaluationOracle, MemoOracle, RefinementConfig, RefinementReport, Refiner};
use mdesign_core::similarity::SimilarityView;
use mdesign_core::space::{DesignSpace, DesignTuple};
use mdesign_core::store::KnowledgeStore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Random,
    StaticWeave,
    GreedyLocal,
}

/// Evaluations in order, with wall-clock per evaluation after the first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub evaluations: Vec<(DesignTuple, f64)>,
    pub step_seconds: Vec<f64>,
}

impl Trace {
    pub fn from_report(report: &RefinementReport) -> Self {
        let evaluations = std::iter::once((report.initial_architecture.clone(), report.initial_performance))
            .chain(report.iterations.iter().map(|r| (r.architecture.clone(), r.performance)))
            .collect();
        Self {
            evaluations,
            step_seconds: report.step_seconds.clone(),
        }
    }

    pub fn performances(&self) -> Vec<f64> {
        self.evaluations.iter().map(|(_, p)| *p).collect()
    }
}

/// Uniform sampling without replacement.
pub fn random_search(space: &DesignSpace, oracle: &mut dyn EvaluationOracle, evaluations: usize, seed: u64) -> Result<Trace> {
    let size = space.size().unwrap_or(u64::MAX).min(usize::MAX as u64) as usize;
    let k = evaluations.min(size);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = rand::seq::index::sample(&mut rng, size, k);
    let mut trace = Trace::default();
    for r in picks.iter() {
        let clock = Instant::now();
        let theta = space.unrank(r as u64);
        let p = oracle.evaluate(&theta)?;
        if !trace.evaluations.is_empty() {
            trace.step_seconds.push(clock.elapsed().as_secs_f64());
        }
        trace.evaluations.push((theta, p));
    }
    Ok(trace)
}

/// Best-improvement hill climbing on observed performance. Evaluates the
/// unevaluated neighbors of the current architecture and moves to the best if
/// it improves; stops at a local optimum or when the budget is spent.
pub fn greedy_local(
    space: &DesignSpace,
    oracle: &mut dyn EvaluationOracle,
    start: DesignTuple,
    evaluations: usize,
) -> Result<Trace> {
    let mut trace = Trace::default();
    if evaluations == 0 {
        return Ok(trace);
    }
    let mut memo = MemoOracle::new(oracle);
    let mut current = start;
    let mut current_perf = memo.evaluate(&current)?;
    trace.evaluations.push((current.clone(), current_perf));
    let mut seen = std::collections::HashSet::from([current.clone()]);
    loop {
        let mut best: Option<(DesignTuple, f64)> = None;
        for (_, nb) in space.neighbors(&current)? {
            if trace.evaluations.len() >= evaluations {
                return Ok(trace);
            }
            if !seen.insert(nb.clone()) {
                continue;
            }
            let clock = Instant::now();
            let p = memo.evaluate(&nb)?;
            trace.step_seconds.push(clock.elapsed().as_secs_f64());
            trace.evaluations.push((nb.clone(), p));
            if best.as_ref().is_none_or(|(_, bp)| p > *bp) {
                best = Some((nb, p));
            }
        }
        match best {
            Some((nb, p)) if p > current_perf => {
                current = nb;
                current_perf = p;
            }
            _ => return Ok(trace),
        }
    }
}

/// Refinement with the similarity view frozen at its initial value.
pub fn static_weave(
    store: &KnowledgeStore,
    config: &RefinementConfig,
    view: SimilarityView,
    oracle: &mut dyn EvaluationOracle,
) -> Result<RefinementReport> {
    let cfg = RefinementConfig {
        dynamic: false,
        ..config.clone()
    };
    Ok(Refiner::new(store, cfg)?.run(view, oracle)?)
}

/// Runs a baseline with the same total evaluation budget as a refinement run
/// under `config` (initial model plus `config.budget` iterations).
pub fn run_baseline(
    kind: BaselineKind,
    store: &KnowledgeStore,
    config: &RefinementConfig,
    view: SimilarityView,
    oracle: &mut dyn EvaluationOracle,
) -> Result<Trace> {
    let evaluations = config.budget + 1;
    match kind {
        BaselineKind::Random => random_search(store.space(), oracle, evaluations, config.seed),
        BaselineKind::GreedyLocal => {
            let start = initial_model(&view, store)?;
            greedy_local(store.space(), oracle, start, evaluations)
        }
        BaselineKind::StaticWeave => Ok(Trace::from_report(&static_weave(store, config, view, oracle)?)),
    }
}
