use serde::{Deserialize, Serialize};

/// Best-so-far and regret trajectories of one run against a known optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub method: String,
    pub optimum: f64,
    pub best_trajectory: Vec<f64>,
    pub regret: Vec<f64>,
    pub final_regret: f64,
    pub target: f64,
    /// `None` means the target was never reached.
    pub evaluations_to_target: Option<usize>,
    pub evaluations_to_optimum: Option<usize>,
    #[serde(skip)]
    pub step_seconds: Vec<f64>,
}

impl RunMetrics {
    /// `target` defaults to the best value after half of the evaluations.
    pub fn from_performances(
        method: &str,
        performances: &[f64],
        optimum: f64,
        target: Option<f64>,
        step_seconds: Vec<f64>,
    ) -> Self {
        let mut best = f64::NEG_INFINITY;
        let best_trajectory: Vec<f64> = performances
            .iter()
            .map(|&p| {
                best = best.max(p);
                best
            })
            .collect();
        let regret: Vec<f64> = best_trajectory.iter().map(|b| (optimum - b).max(0.0)).collect();
        let target = target.unwrap_or_else(|| {
            best_trajectory
                .get(best_trajectory.len().div_ceil(2).saturating_sub(1))
                .copied()
                .unwrap_or(f64::NEG_INFINITY)
        });
        let first = |v: f64| best_trajectory.iter().position(|&b| b >= v).map(|i| i + 1);
        Self {
            method: method.to_string(),
            optimum,
            final_regret: regret.last().copied().unwrap_or(f64::INFINITY),
            evaluations_to_target: first(target),
            evaluations_to_optimum: first(optimum),
            best_trajectory,
            regret,
            target,
            step_seconds,
        }
    }
}

pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty sample");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Counts as reals, never-reached as infinity.
pub fn counts_as_reals(counts: &[Option<usize>]) -> Vec<f64> {
    counts
        .iter()
        .map(|c| c.map_or(f64::INFINITY, |c| c as f64))
        .collect()
}
