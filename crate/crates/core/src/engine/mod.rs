//! The refinement loop: weave benchmark gains under the current similarity
//! view, take the best 1-hop move, evaluate it on the unseen task, update.

mod oracle;
mod report;
mod weave;

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use oracle::{EvaluationOracle, MemoOracle};
pub use report::{IterationRecord, RefinementReport, ReportSummary};
pub use weave::{initial_model, select_modification, weave_scores, Contribution, GainSource, WovenScore};

use crate::error::{Error, Result};
use crate::graph::{EdgeSample, GainGraph};
use crate::planner::{
    pretrain_regressor, FineTuneHyper, GainRegressor, OodFlags, RegressorHyper, ReplayBuffer,
    DEFAULT_BETA_REL, DEFAULT_BUFFER_CAPACITY, DEFAULT_K_PERSIST,
};
use crate::similarity::{bayes_update, ObservationPair, SimilarityView, TransferModel, DEFAULT_SIGMA2_FLOOR};
use crate::space::{DesignTuple, Modification};
use crate::store::KnowledgeStore;

pub const DEFAULT_WINDOW: usize = 30;
pub const DEFAULT_WINDOW_OOD: usize = 40;
pub const DEFAULT_DORMANT_RATIO: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefinementConfig {
    /// Iterations after the initial model.
    pub budget: usize,
    /// Transfer-model window; defaults depend on `ood`.
    pub window: Option<usize>,
    pub beta_rel: f64,
    pub k_persist: usize,
    pub seed: u64,
    pub revert_on_regress: bool,
    /// Enable OOD flagging and predicted gains.
    pub ood: bool,
    /// Update the similarity view each iteration.
    pub dynamic: bool,
    pub sigma2_floor: f64,
    pub buffer_capacity: usize,
    /// Flagged tasks whose weight is below this fraction of the largest
    /// weight are dormant: their surrogates are neither trained nor tuned.
    pub dormant_ratio: f64,
    pub regressor: RegressorHyper,
    pub fine_tune: FineTuneHyper,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        Self {
            budget: 100,
            window: None,
            beta_rel: DEFAULT_BETA_REL,
            k_persist: DEFAULT_K_PERSIST,
            seed: 0,
            revert_on_regress: false,
            ood: true,
            dynamic: true,
            sigma2_floor: DEFAULT_SIGMA2_FLOOR,
            buffer_capacity: DEFAULT_BUFFER_CAPACITY,
            dormant_ratio: DEFAULT_DORMANT_RATIO,
            regressor: RegressorHyper::default(),
            fine_tune: FineTuneHyper::default(),
        }
    }
}

impl RefinementConfig {
    pub fn effective_window(&self) -> usize {
        self.window
            .unwrap_or(if self.ood { DEFAULT_WINDOW_OOD } else { DEFAULT_WINDOW })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.effective_window() == 0 {
            return bad("window must be at least 1");
        }
        if !(self.beta_rel > 0.0 && self.beta_rel.is_finite()) {
            return bad("beta_rel must be positive");
        }
        if self.k_persist == 0 {
            return bad("k_persist must be at least 1");
        }
        if !(self.sigma2_floor > 0.0 && self.sigma2_floor.is_finite()) {
            return bad("sigma2_floor must be positive");
        }
        if !(0.0..1.0).contains(&self.dormant_ratio) {
            return bad("dormant_ratio must lie in [0, 1)");
        }
        if self.buffer_capacity == 0 {
            return bad("buffer_capacity must be at least 1");
        }
        if self.regressor.hidden == 0 || self.regressor.batch_size == 0 {
            return bad("regressor hidden width and batch size must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RefinementState {
    current: DesignTuple,
    current_perf: f64,
    best: (DesignTuple, f64),
    evaluated: BTreeMap<DesignTuple, f64>,
    t: usize,
    budget: usize,
    view: SimilarityView,
    transfers: Vec<TransferModel>,
    flags: OodFlags,
    buffer: ReplayBuffer,
    regressors: Vec<Option<GainRegressor>>,
}

impl RefinementState {
    pub fn current(&self) -> &DesignTuple {
        &self.current
    }

    pub fn current_performance(&self) -> f64 {
        self.current_perf
    }

    pub fn best(&self) -> (&DesignTuple, f64) {
        (&self.best.0, self.best.1)
    }

    pub fn evaluated(&self) -> &BTreeMap<DesignTuple, f64> {
        &self.evaluated
    }

    pub fn iteration(&self) -> usize {
        self.t
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn view(&self) -> &SimilarityView {
        &self.view
    }

    pub fn transfers(&self) -> &[TransferModel] {
        &self.transfers
    }

    pub fn flags(&self) -> &OodFlags {
        &self.flags
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn regressors(&self) -> &[Option<GainRegressor>] {
        &self.regressors
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Moved(Box<IterationRecord>),
    /// Every evaluated architecture's neighborhood is fully evaluated.
    Exhausted,
}

/// Runs refinement against one knowledge store.
pub struct Refiner<'a> {
    store: &'a KnowledgeStore,
    config: RefinementConfig,
    graphs: Vec<GainGraph>,
    /// Outer `None`: not attempted yet. Inner `None`: no edges to learn from.
    pretrained: Vec<Option<Option<GainRegressor>>>,
    edge_cache: Vec<Option<Vec<EdgeSample>>>,
}

impl<'a> Refiner<'a> {
    pub fn new(store: &'a KnowledgeStore, config: RefinementConfig) -> Result<Self> {
        config.validate()?;
        if store.num_tasks() == 0 {
            return Err(Error::Empty("store has no benchmark tasks"));
        }
        let graphs = store
            .tasks()
            .iter()
            .map(|t| GainGraph::build(store, &t.task_id))
            .collect::<Result<Vec<_>>>()?;
        let n = graphs.len();
        Ok(Self {
            store,
            config,
            graphs,
            pretrained: vec![None; n],
            edge_cache: vec![None; n],
        })
    }

    pub fn config(&self) -> &RefinementConfig {
        &self.config
    }

    pub fn graphs(&self) -> &[GainGraph] {
        &self.graphs
    }

    /// Supplies a pretrained regressor (for example a loaded checkpoint).
    pub fn set_regressor(&mut self, task_id: &str, regressor: GainRegressor) -> Result<()> {
        let i = self.store.task_index(task_id)?;
        if regressor.space_fingerprint() != self.store.space().fingerprint() {
            return Err(Error::SpaceMismatch {
                found: regressor.space_fingerprint().to_string(),
                expected: self.store.space().fingerprint(),
            });
        }
        self.pretrained[i] = Some(Some(regressor));
        Ok(())
    }

    /// Pretrained regressor for task `i`, training it on first use.
    pub fn pretrained(&mut self, i: usize) -> Option<&GainRegressor> {
        if self.pretrained[i].is_none() {
            let mut hyper = self.config.regressor.clone();
            hyper.seed = mix(hyper.seed, i as u64, 0);
            let reg = pretrain_regressor(&self.graphs[i], &hyper).ok().map(|(r, _)| r);
            self.pretrained[i] = Some(reg);
        }
        self.pretrained[i].as_ref().and_then(Option::as_ref)
    }

    fn edge_samples(&mut self, i: usize) -> &[EdgeSample] {
        if self.edge_cache[i].is_none() {
            self.edge_cache[i] = Some(self.graphs[i].edge_samples(true));
        }
        self.edge_cache[i].as_deref().unwrap_or(&[])
    }

    /// Evaluates `start` and returns the initial state.
    pub fn start(
        &self,
        view: SimilarityView,
        start: DesignTuple,
        oracle: &mut dyn EvaluationOracle,
    ) -> Result<RefinementState> {
        weave::check_alignment(&view, self.store)?;
        self.store.space().validate(&start)?;
        let perf = oracle.evaluate(&start)?;
        if !perf.is_finite() {
            return Err(Error::Oracle {
                tuple: start.choices().to_vec(),
                message: format!("non-finite performance {perf}"),
            });
        }
        let n = view.len();
        let window = self.config.effective_window();
        let mut evaluated = BTreeMap::new();
        evaluated.insert(start.clone(), perf);
        Ok(RefinementState {
            current: start.clone(),
            current_perf: perf,
            best: (start, perf),
            evaluated,
            t: 0,
            budget: self.config.budget,
            view,
            transfers: vec![TransferModel::new(window, self.config.sigma2_floor); n],
            flags: OodFlags::new(n),
            buffer: ReplayBuffer::new(self.config.buffer_capacity),
            regressors: vec![None; n],
        })
    }

    fn fresh_neighbors(&self, state: &RefinementState, theta: &DesignTuple) -> Result<Vec<(Modification, DesignTuple)>> {
        Ok(self
            .store
            .space()
            .neighbors(theta)?
            .into_iter()
            .filter(|(_, nb)| !state.evaluated.contains_key(nb))
            .collect())
    }

    fn has_fresh_neighbor(&self, state: &RefinementState, theta: &DesignTuple) -> Result<bool> {
        Ok(self
            .store
            .space()
            .neighbors(theta)?
            .iter()
            .any(|(_, nb)| !state.evaluated.contains_key(nb)))
    }

    /// One iteration. On error `state` is left untouched.
    pub fn step(&mut self, state: &mut RefinementState, oracle: &mut dyn EvaluationOracle) -> Result<StepOutcome> {
        if state.t >= state.budget {
            return Err(Error::InvalidArgument(format!(
                "iteration budget of {} already spent",
                state.budget
            )));
        }
        let mut origin = state.current.clone();
        let mut origin_perf = state.current_perf;
        let mut jumped = false;
        let mut candidates = self.fresh_neighbors(state, &origin)?;
        if candidates.is_empty() {
            let mut target: Option<(&DesignTuple, f64)> = None;
            for (theta, &p) in &state.evaluated {
                if target.is_none_or(|(_, bp)| p > bp) && self.has_fresh_neighbor(state, theta)? {
                    target = Some((theta, p));
                }
            }
            let Some((theta, p)) = target else {
                return Ok(StepOutcome::Exhausted);
            };
            origin = theta.clone();
            origin_perf = p;
            jumped = true;
            candidates = self.fresh_neighbors(state, &origin)?;
        }

        let mut scores = weave_scores(
            &state.view,
            &state.flags,
            &origin,
            &candidates,
            &self.graphs,
            &state.regressors,
        )?;
        let k = select_modification(&scores)?;
        let chosen = scores.swap_remove(k);
        let next = chosen.target.clone();

        let perf = oracle.evaluate(&next)?;
        if !perf.is_finite() {
            return Err(Error::Oracle {
                tuple: next.choices().to_vec(),
                message: format!("non-finite performance {perf}"),
            });
        }
        let delta_u = perf - origin_perf;
        let values = chosen.values();
        let view = if self.config.dynamic {
            bayes_update(&state.view, &state.transfers, delta_u, &values)?
        } else {
            state.view.advanced()
        };
        let flags = if self.config.ood {
            state.flags.update(&view, self.config.beta_rel, self.config.k_persist)
        } else {
            state.flags.clone()
        };

        // Nothing below can fail; commit.
        for (tm, v) in state.transfers.iter_mut().zip(&values) {
            if let Some(delta_i) = *v {
                tm.push(ObservationPair { delta_u, delta_i });
            }
        }
        state.view = view;
        state.flags = flags;
        state
            .buffer
            .push(origin.clone(), next.clone(), delta_u)
            .expect("chosen target is a 1-hop neighbor of the origin");
        let t = state.t;
        let top = state.view.weights().iter().copied().fold(0.0, f64::max);
        for i in 0..state.regressors.len() {
            let w = state.view.weights()[i];
            if !state.flags.is_flagged(i) || w == 0.0 || w < self.config.dormant_ratio * top {
                continue;
            }
            if state.regressors[i].is_none() {
                state.regressors[i] = self.pretrained(i).cloned();
            }
            let Some(reg) = state.regressors[i].take() else {
                continue;
            };
            let mut hyper = self.config.fine_tune.clone();
            hyper.seed = mix(self.config.seed ^ hyper.seed, i as u64, t as u64 + 1);
            let bench = self.edge_samples(i);
            let tuned = reg.fine_tune(&state.buffer, bench, &hyper).unwrap_or(reg);
            state.regressors[i] = Some(tuned);
        }
        state.evaluated.insert(next.clone(), perf);
        if perf > state.best.1 {
            state.best = (next.clone(), perf);
        }
        state.t += 1;
        if self.config.revert_on_regress && delta_u < 0.0 {
            state.current = origin.clone();
            state.current_perf = origin_perf;
        } else {
            state.current = next.clone();
            state.current_perf = perf;
        }

        Ok(StepOutcome::Moved(Box::new(IterationRecord {
            iteration: state.t,
            origin,
            jumped,
            modification: chosen.modification,
            architecture: next,
            performance: perf,
            woven_gain: chosen.score,
            actual_gain: delta_u,
            best_performance: state.best.1,
            task_gains: values,
            sources: chosen.contributions.iter().map(|c| c.source).collect(),
            weights: state.view.weights().to_vec(),
            flagged: state.flags.flags().iter().map(|f| f.flagged).collect(),
            gamma: state.transfers.iter().map(TransferModel::gamma).collect(),
            sigma2: state.transfers.iter().map(TransferModel::sigma2).collect(),
        })))
    }

    /// Full run from the weighted-vote initial model.
    pub fn run<O: EvaluationOracle>(&mut self, view: SimilarityView, oracle: O) -> Result<RefinementReport> {
        let start = initial_model(&view, self.store)?;
        self.run_from(view, start, oracle)
    }

    pub fn run_from<O: EvaluationOracle>(
        &mut self,
        view: SimilarityView,
        start: DesignTuple,
        oracle: O,
    ) -> Result<RefinementReport> {
        let mut oracle = MemoOracle::new(oracle);
        let mut state = self.start(view, start, &mut oracle)?;
        let mut report = RefinementReport {
            task_ids: state.view.task_ids().to_vec(),
            initial_architecture: state.current.clone(),
            initial_performance: state.current_perf,
            initial_weights: state.view.weights().to_vec(),
            iterations: Vec::new(),
            best_architecture: state.best.0.clone(),
            best_performance: state.best.1,
            oracle_calls: 0,
            exhausted: false,
            step_seconds: Vec::new(),
        };
        while state.t < state.budget {
            let clock = Instant::now();
            match self.step(&mut state, &mut oracle)? {
                StepOutcome::Moved(rec) => {
                    report.step_seconds.push(clock.elapsed().as_secs_f64());
                    report.iterations.push(*rec);
                }
                StepOutcome::Exhausted => {
                    report.exhausted = true;
                    break;
                }
            }
        }
        report.best_architecture = state.best.0;
        report.best_performance = state.best.1;
        report.oracle_calls = oracle.calls();
        Ok(report)
    }
}

/// Deterministic seed mixing (splitmix64 finalizer).
fn mix(a: u64, b: u64, c: u64) -> u64 {
    let mut z = a
        .wrapping_add(b.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(c.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
