use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

pub const DEFAULT_SIGMA2_FLOOR: f64 = 1e-6;

/// One executed modification's gain on the unseen task and on a benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationPair {
    pub delta_u: f64,
    pub delta_i: f64,
}

/// Sliding-window estimate of the transfer slope `gamma` and residual
/// variance `sigma2` between the unseen task and one benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferModel {
    window: VecDeque<ObservationPair>,
    capacity: usize,
    gamma: f64,
    sigma2: f64,
    sigma2_floor: f64,
}

impl TransferModel {
    /// Cold model: `gamma = 1`, `sigma2 = 1000 * floor`.
    pub fn new(capacity: usize, sigma2_floor: f64) -> Self {
        assert!(capacity >= 1, "window capacity must be positive");
        assert!(sigma2_floor > 0.0, "sigma2 floor must be positive");
        Self {
            window: VecDeque::with_capacity(capacity),
            capacity,
            gamma: 1.0,
            sigma2: sigma2_floor * 1e3,
            sigma2_floor,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn sigma2_floor(&self) -> f64 {
        self.sigma2_floor
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn window(&self) -> &VecDeque<ObservationPair> {
        &self.window
    }

    /// Pushes a pair (evicting the oldest past capacity) and re-estimates.
    pub fn push(&mut self, pair: ObservationPair) {
        if self.window.len() == self.capacity {
            self.window.pop_front();
        }
        self.window.push_back(pair);
        self.refit();
    }

    fn refit(&mut self) {
        if self.window.len() < 2 {
            self.gamma = 1.0;
            self.sigma2 = self.sigma2_floor * 1e3;
            return;
        }
        let (sui, sii) = self
            .window
            .iter()
            .fold((0.0, 0.0), |(a, b), p| (a + p.delta_u * p.delta_i, b + p.delta_i * p.delta_i));
        self.gamma = if sii == 0.0 { 1.0 } else { sui / sii };
        let sse: f64 = self
            .window
            .iter()
            .map(|p| {
                let r = p.delta_u - self.gamma * p.delta_i;
                r * r
            })
            .sum();
        self.sigma2 = (sse / self.window.len() as f64).max(self.sigma2_floor);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(u: f64, i: f64) -> ObservationPair {
        ObservationPair { delta_u: u, delta_i: i }
    }

    #[test]
    fn cold_start() {
        let mut m = TransferModel::new(30, 1e-6);
        assert_eq!((m.gamma(), m.sigma2()), (1.0, 1e-3));
        m.push(pair(5.0, 1.0));
        assert_eq!((m.gamma(), m.sigma2()), (1.0, 1e-3));
    }

    #[test]
    fn exact_line_hits_floor() {
        let mut m = TransferModel::new(30, 1e-6);
        m.push(pair(2.0, 1.0));
        m.push(pair(4.0, 2.0));
        assert_eq!(m.gamma(), 2.0);
        assert_eq!(m.sigma2(), 1e-6);
    }

    #[test]
    fn degenerate_regressor() {
        let mut m = TransferModel::new(30, 1e-6);
        m.push(pair(1.0, 0.0));
        m.push(pair(2.0, 0.0));
        assert_eq!(m.gamma(), 1.0);
        assert!((m.sigma2() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn three_point_closed_form() {
        let mut m = TransferModel::new(30, 1e-6);
        for (u, i) in [(1.0, 1.0), (3.0, 2.0), (2.0, 3.0)] {
            m.push(pair(u, i));
        }
        let g = 13.0 / 14.0;
        assert!((m.gamma() - g).abs() < 1e-15);
        let s2 = ((1.0 - g).powi(2) + (3.0 - 2.0 * g).powi(2) + (2.0 - 3.0 * g).powi(2)) / 3.0;
        assert!((m.sigma2() - s2).abs() < 1e-15);
    }

    #[test]
    fn window_evicts_oldest() {
        let mut m = TransferModel::new(2, 1e-6);
        m.push(pair(100.0, 1.0));
        m.push(pair(2.0, 1.0));
        m.push(pair(4.0, 2.0));
        assert_eq!(m.window().len(), 2);
        assert_eq!(m.gamma(), 2.0);
    }
}
