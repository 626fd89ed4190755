//! Dynamic task-similarity views.
//!
//! A view is a normalized belief over benchmark tasks. It starts from a
//! statistics-based prior and is updated by Bayes' rule each iteration, using
//! a Gaussian likelihood of the observed unseen-task gain given each
//! benchmark's gain for the same modification.

mod kendall;
mod transfer;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use kendall::kendall_tau;
pub use transfer::{ObservationPair, TransferModel, DEFAULT_SIGMA2_FLOOR};

use crate::error::{Error, Result};
use crate::store::KnowledgeStore;

/// Normalized weights over benchmark tasks, in store task order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityView {
    task_ids: Vec<String>,
    weights: Vec<f64>,
    iteration: usize,
}

impl SimilarityView {
    pub fn uniform(task_ids: Vec<String>) -> Result<Self> {
        let n = task_ids.len();
        if n == 0 {
            return Err(Error::Empty("similarity view needs at least one task"));
        }
        Ok(Self {
            task_ids,
            weights: vec![1.0 / n as f64; n],
            iteration: 0,
        })
    }

    /// Normalizes nonnegative scores; all-zero scores give the uniform view.
    pub fn from_scores(task_ids: Vec<String>, scores: &[f64]) -> Result<Self> {
        if task_ids.len() != scores.len() {
            return Err(Error::InvalidArgument(format!(
                "{} tasks but {} scores",
                task_ids.len(),
                scores.len()
            )));
        }
        if scores.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::InvalidArgument("similarity scores must be finite and nonnegative".into()));
        }
        let total: f64 = scores.iter().sum();
        if total == 0.0 {
            return Self::uniform(task_ids);
        }
        Ok(Self {
            task_ids,
            weights: scores.iter().map(|s| s / total).collect(),
            iteration: 0,
        })
    }

    pub fn task_ids(&self) -> &[String] {
        &self.task_ids
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, task_id: &str) -> Option<f64> {
        self.task_ids
            .iter()
            .position(|t| t == task_id)
            .map(|i| self.weights[i])
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Same weights, iteration advanced. Used when updates are disabled.
    pub fn advanced(&self) -> Self {
        let mut next = self.clone();
        next.iteration += 1;
        next
    }

    /// Bayes' rule with linear-domain likelihoods. If every numerator is zero
    /// the prior is kept.
    pub fn apply_likelihoods(&self, likelihoods: &[f64]) -> Self {
        let logs: Vec<f64> = likelihoods.iter().map(|l| l.ln()).collect();
        self.apply_log_likelihoods(&logs)
    }

    /// Bayes' rule in the log domain; invariant to a common additive shift of
    /// the log-likelihoods.
    pub fn apply_log_likelihoods(&self, log_likelihoods: &[f64]) -> Self {
        assert_eq!(log_likelihoods.len(), self.weights.len());
        let log_num: Vec<f64> = self
            .weights
            .iter()
            .zip(log_likelihoods)
            .map(|(&p, &l)| if p > 0.0 && !l.is_nan() { p.ln() + l } else { f64::NEG_INFINITY })
            .collect();
        let max = log_num.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut next = self.clone();
        next.iteration += 1;
        if !max.is_finite() {
            return next;
        }
        let num: Vec<f64> = log_num.iter().map(|&l| (l - max).exp()).collect();
        let z: f64 = num.iter().sum();
        next.weights = num.into_iter().map(|v| v / z).collect();
        next
    }
}

/// `N(delta_u; gamma * delta_i, sigma2)`.
pub fn gaussian_likelihood(pair: ObservationPair, gamma: f64, sigma2: f64) -> Result<f64> {
    Ok(log_gaussian_likelihood(pair, gamma, sigma2)?.exp())
}

pub fn log_gaussian_likelihood(pair: ObservationPair, gamma: f64, sigma2: f64) -> Result<f64> {
    if !sigma2.is_finite() || sigma2 <= 0.0 {
        return Err(Error::InvalidArgument(format!("variance must be positive, got {sigma2}")));
    }
    let r = pair.delta_u - gamma * pair.delta_i;
    Ok(-0.5 * (2.0 * PI * sigma2).ln() - r * r / (2.0 * sigma2))
}

/// One Bayes update of `view`.
///
/// Each task with a retrieved gain is scored by the Gaussian likelihood under
/// its transfer model's current `gamma` and `sigma2`. Tasks without a gain get
/// the mean of the computed likelihoods (1 if none), which leaves their
/// relative weight untouched.
pub fn bayes_update(
    view: &SimilarityView,
    transfers: &[TransferModel],
    observed: f64,
    retrieved: &[Option<f64>],
) -> Result<SimilarityView> {
    if transfers.len() != view.len() || retrieved.len() != view.len() {
        return Err(Error::InvalidArgument(format!(
            "view has {} tasks, got {} transfer models and {} gains",
            view.len(),
            transfers.len(),
            retrieved.len()
        )));
    }
    let mut logs = vec![f64::NAN; view.len()];
    let mut available = Vec::new();
    for (i, (tm, g)) in transfers.iter().zip(retrieved).enumerate() {
        if let Some(delta_i) = *g {
            let pair = ObservationPair {
                delta_u: observed,
                delta_i,
            };
            logs[i] = log_gaussian_likelihood(pair, tm.gamma(), tm.sigma2())?;
            available.push(logs[i]);
        }
    }
    let neutral = log_mean_exp(&available).unwrap_or(0.0);
    for l in logs.iter_mut().filter(|l| l.is_nan()) {
        *l = neutral;
    }
    Ok(view.apply_log_likelihoods(&logs))
}

fn log_mean_exp(logs: &[f64]) -> Option<f64> {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if logs.is_empty() {
        return None;
    }
    if !max.is_finite() {
        return Some(max);
    }
    let s: f64 = logs.iter().map(|l| (l - max).exp()).sum();
    Some(max + (s / logs.len() as f64).ln())
}

/// Initial view from Kendall's tau between the unseen task's statistics and
/// each benchmark's, mapped to `(tau + 1) / 2` and normalized.
pub fn init_similarity_kendall(unseen_stats: &[f64], store: &KnowledgeStore) -> Result<SimilarityView> {
    if store.num_tasks() == 0 {
        return Err(Error::Empty("store has no benchmark tasks"));
    }
    if unseen_stats.len() != store.stat_names().len() {
        return Err(Error::SchemaMismatch(format!(
            "unseen task has {} statistics, store schema has {}",
            unseen_stats.len(),
            store.stat_names().len()
        )));
    }
    if unseen_stats.len() < 2 {
        return Err(Error::InvalidArgument(
            "Kendall initialization needs at least two statistics".into(),
        ));
    }
    let scores = store
        .tasks()
        .iter()
        .map(|t| kendall_tau(unseen_stats, &t.features).map(|tau| (tau + 1.0) / 2.0))
        .collect::<Result<Vec<_>>>()?;
    SimilarityView::from_scores(store.tasks().iter().map(|t| t.task_id.clone()).collect(), &scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::DesignSpace;
    use crate::store::StatTable;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("t{i}")).collect()
    }

    #[test]
    fn likelihood_values() {
        let p = ObservationPair {
            delta_u: 0.6,
            delta_i: 0.3,
        };
        let peak = gaussian_likelihood(p, 2.0, 1.0 / (2.0 * PI)).unwrap();
        assert!((peak - 1.0).abs() < 1e-14);
        let std = gaussian_likelihood(p, 2.0, 1.0).unwrap();
        assert!((std - 0.398_942_280_401_432_7).abs() < 1e-14);
        let off = ObservationPair {
            delta_u: 1.6,
            delta_i: 0.3,
        };
        let v = gaussian_likelihood(off, 2.0, 1.0).unwrap();
        assert!((v - (-0.5f64).exp() / (2.0 * PI).sqrt()).abs() < 1e-14);
        assert!((v - 0.241_970_724_519_143_37).abs() < 1e-14);
        assert!(gaussian_likelihood(p, 1.0, 0.0).is_err());
        assert!(gaussian_likelihood(p, 1.0, -1.0).is_err());
    }

    #[test]
    fn bayes_arithmetic() {
        let v = SimilarityView::uniform(ids(2)).unwrap();
        let post = v.apply_likelihoods(&[0.4, 0.1]);
        assert!((post.weights()[0] - 0.8).abs() < 1e-15);
        assert!((post.weights()[1] - 0.2).abs() < 1e-15);
        assert_eq!(post.iteration(), 1);

        let same = v.apply_likelihoods(&[0.3, 0.3]);
        assert_eq!(same.weights(), v.weights());

        let prior = SimilarityView::from_scores(ids(2), &[0.9, 0.1]).unwrap();
        let post = prior.apply_likelihoods(&[0.1, 0.9]);
        assert!((post.weights()[0] - 0.5).abs() < 1e-15);
        assert!((post.weights()[1] - 0.5).abs() < 1e-15);

        let kept = prior.apply_likelihoods(&[0.0, 0.0]);
        assert_eq!(kept.weights(), prior.weights());
    }

    #[test]
    fn missing_gain_keeps_relative_weight() {
        let view = SimilarityView::from_scores(ids(3), &[0.5, 0.3, 0.2]).unwrap();
        let transfers = vec![TransferModel::new(30, 1e-6); 3];
        let post = bayes_update(&view, &transfers, 0.01, &[Some(0.01), Some(0.05), None]).unwrap();
        let l0 = gaussian_likelihood(ObservationPair { delta_u: 0.01, delta_i: 0.01 }, 1.0, 1e-3).unwrap();
        let l1 = gaussian_likelihood(ObservationPair { delta_u: 0.01, delta_i: 0.05 }, 1.0, 1e-3).unwrap();
        let ln = (l0 + l1) / 2.0;
        let z = 0.5 * l0 + 0.3 * l1 + 0.2 * ln;
        for (w, e) in post.weights().iter().zip([0.5 * l0 / z, 0.3 * l1 / z, 0.2 * ln / z]) {
            assert!((w - e).abs() < 1e-12);
        }
        let none = bayes_update(&view, &transfers, 0.01, &[None, None, None]).unwrap();
        for (a, b) in none.weights().iter().zip(view.weights()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_scores_give_uniform() {
        let v = SimilarityView::from_scores(ids(4), &[0.0; 4]).unwrap();
        assert_eq!(v.weights(), &[0.25; 4]);
        assert!(SimilarityView::from_scores(ids(2), &[1.0, -1.0]).is_err());
    }

    #[test]
    fn kendall_initialization() {
        let space = Arc::new(DesignSpace::parse("a: [x, y]").unwrap());
        let stats = StatTable::parse("task_id,s1,s2,s3\nsame,1,2,3\nrev,3,2,1\nswap,1,3,2\n").unwrap();
        let recs = "task_id,a,performance\nsame,x,1\nrev,x,1\nswap,x,1\n";
        let store = KnowledgeStore::ingest_with(space, recs, Some(&stats), None).unwrap();
        let v = init_similarity_kendall(&[1.0, 2.0, 3.0], &store).unwrap();
        // scores: rev 0, same 1, swap 2/3
        let total = 1.0 + 2.0 / 3.0;
        assert_eq!(v.weight("rev"), Some(0.0));
        assert!((v.weight("same").unwrap() - 1.0 / total).abs() < 1e-15);
        assert!((v.weight("swap").unwrap() - (2.0 / 3.0) / total).abs() < 1e-15);

        assert!(matches!(
            init_similarity_kendall(&[1.0, 2.0], &store),
            Err(Error::SchemaMismatch(_))
        ));
    }

    proptest! {
        #[test]
        fn posterior_normalized_and_scale_invariant(
            prior in prop::collection::vec(0.01f64..1.0, 1..8),
            raw in prop::collection::vec(1e-3f64..10.0, 8),
            scale in 1e-3f64..1e3,
        ) {
            let n = prior.len();
            let view = SimilarityView::from_scores(ids(n), &prior).unwrap();
            let l = &raw[..n];
            let a = view.apply_likelihoods(l);
            let scaled: Vec<f64> = l.iter().map(|v| v * scale).collect();
            let b = view.apply_likelihoods(&scaled);
            prop_assert!((a.weights().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            for (x, y) in a.weights().iter().zip(b.weights()) {
                prop_assert!(*x >= 0.0);
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
    }
}
