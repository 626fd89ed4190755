use crate::error::{Error, Result};
use crate::space::{DesignSpace, DesignTuple};

/// Encoding layout for edge features over a design space: a one-hot block of
/// the source tuple followed by a signed per-dimension delta block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureLayout {
    offsets: Vec<usize>,
    total_candidates: usize,
}

/// Sparse edge feature: `(index, value)` pairs, sorted by index.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFeature {
    entries: Vec<(usize, f64)>,
    dim: usize,
}

impl FeatureLayout {
    pub fn new(space: &DesignSpace) -> Self {
        let mut offsets = Vec::with_capacity(space.num_dimensions());
        let mut acc = 0;
        for d in space.dimensions() {
            offsets.push(acc);
            acc += d.len();
        }
        Self {
            offsets,
            total_candidates: acc,
        }
    }

    /// Feature length, `2 * total candidates`.
    pub fn input_dim(&self) -> usize {
        2 * self.total_candidates
    }

    /// Number of nonzero entries of every valid edge feature.
    pub fn active_entries(&self) -> usize {
        self.offsets.len() + 2
    }

    pub fn encode(&self, from: &DesignTuple, to: &DesignTuple) -> Result<EdgeFeature> {
        if from.len() != self.offsets.len() {
            return Err(Error::InvalidTuple {
                tuple: from.choices().to_vec(),
                reason: "dimension count does not match the feature layout".into(),
            });
        }
        let m = from
            .modification_to(to)
            .ok_or_else(|| Error::NotNeighbors(from.to_string(), to.to_string()))?;
        let mut entries = Vec::with_capacity(self.active_entries());
        for (&c, &off) in from.choices().iter().zip(&self.offsets) {
            entries.push((off + c, 1.0));
        }
        let base = self.total_candidates + self.offsets[m.dimension];
        let (lo, hi) = if m.from < m.to {
            ((base + m.from, -1.0), (base + m.to, 1.0))
        } else {
            ((base + m.to, 1.0), (base + m.from, -1.0))
        };
        entries.push(lo);
        entries.push(hi);
        Ok(EdgeFeature {
            entries,
            dim: self.input_dim(),
        })
    }
}

impl EdgeFeature {
    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for &(i, x) in &self.entries {
            v[i] = x;
        }
        v
    }
}
