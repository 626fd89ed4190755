//! Edge-gain regressor: a tanh perceptron with one hidden layer, trained with
//! an L1 objective and hand-written backpropagation.
//!
//! The raw network `f` scores a directed edge. Predictions are antisymmetrized,
//! `g(a, b) = (f(a->b) - f(b->a)) / 2`, so `g(a, b) = -g(b, a)` holds exactly
//! and the output bias cancels.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::buffer::ReplayBuffer;
use super::features::{EdgeFeature, FeatureLayout};
use crate::error::{Error, Result};
use crate::graph::{EdgeSample, GainGraph};
use crate::space::{DesignSpace, DesignTuple};

pub const CHECKPOINT_FORMAT: &str = "mdesign-regressor";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegressorHyper {
    pub hidden: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Lower bound on optimizer steps, so tiny graphs still converge.
    pub min_steps: usize,
    pub seed: u64,
}

impl Default for RegressorHyper {
    fn default() -> Self {
        Self {
            hidden: 64,
            learning_rate: 1e-2,
            epochs: 40,
            batch_size: 64,
            min_steps: 500,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FineTuneHyper {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Benchmark edges mixed in per buffer entry.
    pub mix_ratio: f64,
    pub seed: u64,
}

impl Default for FineTuneHyper {
    fn default() -> Self {
        Self {
            epochs: 30,
            learning_rate: 5e-3,
            mix_ratio: 0.5,
            seed: 0,
        }
    }
}

/// Parameter-shaped gradient (or parameter) blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    /// `input_dim x hidden`, row-major by input index.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainRegressor {
    layout: FeatureLayout,
    fingerprint: String,
    hidden: usize,
    /// Flat `[w1 | b1 | w2 | b2]`.
    params: Vec<f64>,
}

/// A training pair encoded in both orientations.
#[derive(Debug, Clone)]
pub struct EncodedSample {
    forward: EdgeFeature,
    backward: EdgeFeature,
    target: f64,
}

impl GainRegressor {
    /// Random first layer, zero output layer: predicts 0 everywhere.
    pub fn new(space: &DesignSpace, hidden: usize, seed: u64) -> Self {
        assert!(hidden > 0, "hidden width must be positive");
        let layout = FeatureLayout::new(space);
        let d = layout.input_dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = (3.0 / layout.active_entries() as f64).sqrt();
        let mut params = vec![0.0; d * hidden + 2 * hidden + 1];
        for w in &mut params[..d * hidden] {
            *w = rng.random_range(-scale..scale);
        }
        Self {
            layout,
            fingerprint: space.fingerprint(),
            hidden,
            params,
        }
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn space_fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.params.len());
        self.params.copy_from_slice(params);
    }

    fn w1_len(&self) -> usize {
        self.layout.input_dim() * self.hidden
    }

    pub fn encode(&self, sample: &EdgeSample) -> Result<EncodedSample> {
        Ok(EncodedSample {
            forward: self.layout.encode(&sample.from, &sample.to)?,
            backward: self.layout.encode(&sample.to, &sample.from)?,
            target: sample.gain,
        })
    }

    pub fn encode_all(&self, samples: &[EdgeSample]) -> Result<Vec<EncodedSample>> {
        samples.iter().map(|s| self.encode(s)).collect()
    }

    /// Raw directed score; fills `act` with hidden activations.
    fn raw(&self, x: &EdgeFeature, act: &mut [f64]) -> f64 {
        let h = self.hidden;
        let n1 = self.w1_len();
        act.copy_from_slice(&self.params[n1..n1 + h]);
        for &(j, v) in x.entries() {
            let row = &self.params[j * h..(j + 1) * h];
            for (a, w) in act.iter_mut().zip(row) {
                *a += v * w;
            }
        }
        let w2 = &self.params[n1 + h..n1 + 2 * h];
        let mut out = self.params[n1 + 2 * h];
        for (a, w) in act.iter_mut().zip(w2) {
            *a = a.tanh();
            out += *a * w;
        }
        out
    }

    fn predict_encoded(&self, s: &EncodedSample, scratch: &mut [f64]) -> f64 {
        let f = self.raw(&s.forward, scratch);
        let r = self.raw(&s.backward, scratch);
        0.5 * (f - r)
    }

    /// Antisymmetrized gain estimate for the 1-hop pair `from -> to`.
    pub fn predict(&self, from: &DesignTuple, to: &DesignTuple) -> Result<f64> {
        let mut scratch = vec![0.0; self.hidden];
        let f = self.raw(&self.layout.encode(from, to)?, &mut scratch);
        let r = self.raw(&self.layout.encode(to, from)?, &mut scratch);
        Ok(0.5 * (f - r))
    }

    pub fn mae(&self, samples: &[EdgeSample]) -> Result<f64> {
        if samples.is_empty() {
            return Err(Error::Empty("no samples to evaluate"));
        }
        Ok(self.mae_encoded(&self.encode_all(samples)?))
    }

    fn mae_encoded(&self, batch: &[EncodedSample]) -> f64 {
        let mut scratch = vec![0.0; self.hidden];
        let total: f64 = batch
            .iter()
            .map(|s| (self.predict_encoded(s, &mut scratch) - s.target).abs())
            .sum();
        total / batch.len() as f64
    }

    /// Mean absolute error over `batch` and its subgradient (sign(0) = 0).
    pub fn loss_and_gradient(&self, batch: &[EncodedSample]) -> (f64, Gradient) {
        let mut flat = vec![0.0; self.params.len()];
        let loss = self.accumulate(batch.iter(), batch.len(), &mut flat);
        (loss, self.split(&flat))
    }

    fn accumulate<'a>(&self, batch: impl Iterator<Item = &'a EncodedSample>, n: usize, grad: &mut [f64]) -> f64 {
        let h = self.hidden;
        let n1 = self.w1_len();
        let mut act_f = vec![0.0; h];
        let mut act_b = vec![0.0; h];
        let mut dz = vec![0.0; h];
        let inv = 1.0 / n as f64;
        let mut loss = 0.0;
        for s in batch {
            let f = self.raw(&s.forward, &mut act_f);
            let r = self.raw(&s.backward, &mut act_b);
            let resid = 0.5 * (f - r) - s.target;
            loss += resid.abs() * inv;
            let sign = if resid > 0.0 {
                1.0
            } else if resid < 0.0 {
                -1.0
            } else {
                continue;
            };
            for (x, act, df) in [(&s.forward, &act_f, 0.5 * sign * inv), (&s.backward, &act_b, -0.5 * sign * inv)] {
                grad[n1 + 2 * h] += df;
                for k in 0..h {
                    grad[n1 + h + k] += df * act[k];
                    dz[k] = df * self.params[n1 + h + k] * (1.0 - act[k] * act[k]);
                    grad[n1 + k] += dz[k];
                }
                for &(j, v) in x.entries() {
                    let row = &mut grad[j * h..(j + 1) * h];
                    for (g, d) in row.iter_mut().zip(&dz) {
                        *g += v * d;
                    }
                }
            }
        }
        loss
    }

    fn split(&self, flat: &[f64]) -> Gradient {
        let h = self.hidden;
        let n1 = self.w1_len();
        Gradient {
            w1: flat[..n1].to_vec(),
            b1: flat[n1..n1 + h].to_vec(),
            w2: flat[n1 + h..n1 + 2 * h].to_vec(),
            b2: flat[n1 + 2 * h],
        }
    }

    /// Parameters in the same block layout as [`Gradient`].
    pub fn param_blocks(&self) -> Gradient {
        self.split(&self.params)
    }

    /// One round of online adaptation on the replay buffer plus a seeded
    /// subsample of `mix_ratio * |buffer|` benchmark edges.
    ///
    /// Full-batch Adam with step rejection: a step that raises the round's L1
    /// objective is undone and the step size halved, so the objective is
    /// non-increasing within a round.
    pub fn fine_tune(
        &self,
        buffer: &ReplayBuffer,
        benchmark_samples: &[EdgeSample],
        hyper: &FineTuneHyper,
    ) -> Result<GainRegressor> {
        if buffer.is_empty() {
            return Err(Error::Empty("replay buffer is empty"));
        }
        let mut samples: Vec<EdgeSample> = buffer.samples().collect();
        let k = ((hyper.mix_ratio.max(0.0) * buffer.len() as f64).round() as usize).min(benchmark_samples.len());
        if k > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
            let picked = rand::seq::index::sample(&mut rng, benchmark_samples.len(), k);
            let mut idx = picked.into_vec();
            idx.sort_unstable();
            samples.extend(idx.into_iter().map(|i| benchmark_samples[i].clone()));
        }
        let batch = self.encode_all(&samples)?;

        let mut model = self.clone();
        let mut adam = Adam::new(model.params.len());
        let mut lr = hyper.learning_rate;
        let mut grad = vec![0.0; model.params.len()];
        let mut loss = model.mae_encoded(&batch);
        for _ in 0..hyper.epochs {
            grad.iter_mut().for_each(|g| *g = 0.0);
            model.accumulate(batch.iter(), batch.len(), &mut grad);
            let saved = (model.params.clone(), adam.clone());
            adam.step(&mut model.params, &grad, lr);
            let next = model.mae_encoded(&batch);
            if next <= loss {
                loss = next;
            } else {
                model.params = saved.0;
                adam = saved.1;
                lr *= 0.5;
            }
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path, task_id: &str) -> Result<()> {
        let ckpt = Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            task_id: task_id.to_string(),
            space_fingerprint: self.fingerprint.clone(),
            hidden: self.hidden,
            params: self.params.clone(),
        };
        let mut bytes = serde_json::to_vec(&ckpt).expect("checkpoint serialization cannot fail");
        bytes.push(b'\n');
        fs::write(path, bytes)?;
        Ok(())
    }

    /// Loads a checkpoint, refusing one written for a different space.
    pub fn load(path: &Path, space: &DesignSpace) -> Result<(String, GainRegressor)> {
        let bytes = fs::read(path)?;
        let corrupt = |message: String| Error::Corrupt {
            path: path.to_path_buf(),
            message,
        };
        let ckpt: Checkpoint = serde_json::from_slice(&bytes).map_err(|e| corrupt(e.to_string()))?;
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(corrupt(format!("unexpected format tag `{}`", ckpt.format)));
        }
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::VersionMismatch {
                found: ckpt.version,
                expected: CHECKPOINT_VERSION,
            });
        }
        let expected = space.fingerprint();
        if ckpt.space_fingerprint != expected {
            return Err(Error::SpaceMismatch {
                found: ckpt.space_fingerprint,
                expected,
            });
        }
        let mut reg = GainRegressor::new(space, ckpt.hidden.max(1), 0);
        if ckpt.hidden == 0 || ckpt.params.len() != reg.params.len() {
            return Err(corrupt("parameter count does not match the space".into()));
        }
        reg.params = ckpt.params;
        Ok((ckpt.task_id, reg))
    }
}

/// Trains a fresh regressor on the directionized edges of `graph`. Returns the
/// model and its final training MAE.
pub fn pretrain_regressor(graph: &GainGraph, hyper: &RegressorHyper) -> Result<(GainRegressor, f64)> {
    let samples = graph.edge_samples(true);
    if samples.is_empty() {
        return Err(Error::Empty("gain graph has no edges"));
    }
    let mut model = GainRegressor::new(graph.space(), hyper.hidden, hyper.seed);
    let batch = model.encode_all(&samples)?;
    let bs = hyper.batch_size.max(1);
    let steps_per_epoch = batch.len().div_ceil(bs);
    let epochs = hyper.epochs.max(hyper.min_steps.div_ceil(steps_per_epoch));
    let total = (epochs * steps_per_epoch).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed ^ 0x5eed);
    let mut order: Vec<usize> = (0..batch.len()).collect();
    let mut adam = Adam::new(model.params.len());
    let mut grad = vec![0.0; model.params.len()];
    let mut step = 0;
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(bs) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            model.accumulate(chunk.iter().map(|&i| &batch[i]), chunk.len(), &mut grad);
            let lr = cosine_lr(hyper.learning_rate, step, total);
            adam.step(&mut model.params, &grad, lr);
            step += 1;
        }
    }
    let mae = model.mae_encoded(&batch);
    Ok((model, mae))
}

/// Cosine decay from `base` to `base / 100`.
fn cosine_lr(base: f64, step: usize, total: usize) -> f64 {
    let min = base * 0.01;
    let t = step as f64 / total as f64;
    min + 0.5 * (base - min) * (1.0 + (PI * t).cos())
}

#[derive(Debug, Clone)]
struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grad)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
            *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    task_id: String,
    space_fingerprint: String,
    hidden: usize,
    params: Vec<f64>,
}
