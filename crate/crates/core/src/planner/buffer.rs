use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::EdgeSample;
use crate::similarity::SimilarityView;
use crate::space::DesignTuple;

pub const DEFAULT_BUFFER_CAPACITY: usize = 256;

/// Bounded FIFO of executed modifications and their observed gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayBuffer {
    entries: VecDeque<(DesignTuple, DesignTuple, f64)>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "buffer capacity must be positive");
        Self {
            entries: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn push(&mut self, from: DesignTuple, to: DesignTuple, gain: f64) -> Result<()> {
        if from.modification_to(&to).is_none() {
            return Err(Error::NotNeighbors(from.to_string(), to.to_string()));
        }
        if !gain.is_finite() {
            return Err(Error::InvalidArgument("non-finite gain".into()));
        }
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back((from, to, gain));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn samples(&self) -> impl Iterator<Item = EdgeSample> + '_ {
        self.entries.iter().map(|(a, b, g)| EdgeSample {
            from: a.clone(),
            to: b.clone(),
            gain: *g,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OodFlag {
    pub flagged: bool,
    pub consecutive_low: usize,
}

/// Out-of-distribution flags, one per benchmark task in view order.
///
/// A task is low in an iteration when its weight is below `beta_rel / N`. It
/// becomes flagged after `k_persist` consecutive low iterations and stays
/// flagged for the rest of the run; its counter is frozen at that point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OodFlags {
    flags: Vec<OodFlag>,
}

impl OodFlags {
    pub fn new(n: usize) -> Self {
        Self {
            flags: vec![OodFlag::default(); n],
        }
    }

    pub fn flags(&self) -> &[OodFlag] {
        &self.flags
    }

    pub fn is_flagged(&self, task: usize) -> bool {
        self.flags[task].flagged
    }

    pub fn num_flagged(&self) -> usize {
        self.flags.iter().filter(|f| f.flagged).count()
    }

    pub fn update(&self, view: &SimilarityView, beta_rel: f64, k_persist: usize) -> OodFlags {
        assert_eq!(view.len(), self.flags.len());
        let threshold = beta_rel / view.len() as f64;
        let flags = self
            .flags
            .iter()
            .zip(view.weights())
            .map(|(f, &w)| {
                if f.flagged {
                    return *f;
                }
                let consecutive_low = if w < threshold { f.consecutive_low + 1 } else { 0 };
                OodFlag {
                    flagged: consecutive_low >= k_persist,
                    consecutive_low,
                }
            })
            .collect();
        OodFlags { flags }
    }
}
