//! Discrete architecture space: dimensions, design tuples and 1-hop modifications.
//!
//! A space is a flat product of categorical dimensions. Dimension order is the
//! order of the config file and is canonical afterwards: tuple encodings,
//! neighbor enumeration and every tie-break in the engine follow it.
//!
//! Config format, one dimension per line:
//!
//! ```text
//! # message passing
//! activation: [relu, prelu, swish]
//! layers: [2, 4, 6, 8]
//! ```

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignDimension {
    name: String,
    candidates: Vec<String>,
}

impl DesignDimension {
    pub fn new<S: Into<String>>(name: S, candidates: Vec<String>) -> Result<Self> {
        let name = name.into();
        if candidates.len() < 2 {
            return Err(Error::SingleCandidate(name));
        }
        let mut seen = HashSet::new();
        for c in &candidates {
            if !seen.insert(c.as_str()) {
                return Err(Error::DuplicateCandidate {
                    dimension: name,
                    candidate: c.clone(),
                });
            }
        }
        Ok(Self { name, candidates })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn candidates(&self) -> &[String] {
        &self.candidates
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.candidates.iter().position(|c| c == label)
    }
}

/// Ordered product of categorical dimensions. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignSpace {
    dimensions: Vec<DesignDimension>,
}

/// One choice index per dimension, in canonical dimension order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DesignTuple(Vec<usize>);

/// A single-dimension change `from -> to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Modification {
    pub dimension: usize,
    pub from: usize,
    pub to: usize,
}

impl DesignSpace {
    pub fn new(dimensions: Vec<DesignDimension>) -> Result<Self> {
        if dimensions.is_empty() {
            return Err(Error::EmptySpace);
        }
        let mut seen = HashSet::new();
        for d in &dimensions {
            if !seen.insert(d.name.as_str()) {
                return Err(Error::DuplicateDimension(d.name.clone()));
            }
        }
        Ok(Self { dimensions })
    }

    /// Parses the `name: [a, b, ...]` config format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut dimensions = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: &str| Error::SpaceParse {
                line: line_no,
                message: message.to_string(),
            };
            let (name, rest) = line.split_once(':').ok_or_else(|| err("expected `name: [choices]`"))?;
            let name = name.trim();
            if name.is_empty() {
                return Err(err("empty dimension name"));
            }
            let rest = rest.trim();
            let inner = rest
                .strip_prefix('[')
                .and_then(|r| r.strip_suffix(']'))
                .ok_or_else(|| err("candidate list must be enclosed in [ ]"))?;
            let candidates = inner
                .split(',')
                .map(|c| c.trim().trim_matches(|q| q == '"' || q == '\'').to_string())
                .collect::<Vec<_>>();
            if candidates.iter().any(|c| c.is_empty()) {
                return Err(err("empty candidate label"));
            }
            dimensions.push(DesignDimension::new(name, candidates)?);
        }
        Self::new(dimensions)
    }

    /// Canonical config text; `parse(to_config_text())` reproduces the space.
    pub fn to_config_text(&self) -> String {
        let mut out = String::new();
        for d in &self.dimensions {
            out.push_str(&d.name);
            out.push_str(": [");
            out.push_str(&d.candidates.join(", "));
            out.push_str("]\n");
        }
        out
    }

    /// Hex digest of the canonical config text.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_config_text().as_bytes());
        hex::encode(&digest[..16])
    }

    pub fn dimensions(&self) -> &[DesignDimension] {
        &self.dimensions
    }

    pub fn num_dimensions(&self) -> usize {
        self.dimensions.len()
    }

    pub fn dimension_index(&self, name: &str) -> Option<usize> {
        self.dimensions.iter().position(|d| d.name == name)
    }

    /// Product of candidate counts, `None` on overflow.
    pub fn size(&self) -> Option<u64> {
        self.dimensions
            .iter()
            .try_fold(1u64, |acc, d| acc.checked_mul(d.len() as u64))
    }

    /// Total number of candidate labels across dimensions.
    pub fn total_candidates(&self) -> usize {
        self.dimensions.iter().map(DesignDimension::len).sum()
    }

    /// Number of 1-hop neighbors of any tuple.
    pub fn neighbor_count(&self) -> usize {
        self.dimensions.iter().map(|d| d.len() - 1).sum()
    }

    pub fn validate(&self, theta: &DesignTuple) -> Result<()> {
        if theta.0.len() != self.dimensions.len() {
            return Err(Error::InvalidTuple {
                tuple: theta.0.clone(),
                reason: format!("expected {} choices", self.dimensions.len()),
            });
        }
        for (d, (&c, dim)) in theta.0.iter().zip(&self.dimensions).enumerate() {
            if c >= dim.len() {
                return Err(Error::InvalidTuple {
                    tuple: theta.0.clone(),
                    reason: format!("choice {c} out of range for dimension {d}"),
                });
            }
        }
        Ok(())
    }

    /// All tuples one modification away from `theta`, dimension-major then by
    /// target candidate index.
    pub fn neighbors(&self, theta: &DesignTuple) -> Result<Vec<(Modification, DesignTuple)>> {
        self.validate(theta)?;
        let mut out = Vec::with_capacity(self.neighbor_count());
        for (d, dim) in self.dimensions.iter().enumerate() {
            let from = theta.0[d];
            for to in (0..dim.len()).filter(|&c| c != from) {
                let m = Modification {
                    dimension: d,
                    from,
                    to,
                };
                let mut next = theta.0.clone();
                next[d] = to;
                out.push((m, DesignTuple(next)));
            }
        }
        Ok(out)
    }

    /// Mixed-radix index of `theta`; dimension 0 is most significant, so rank
    /// order equals lexicographic tuple order.
    pub fn rank(&self, theta: &DesignTuple) -> u64 {
        theta
            .0
            .iter()
            .zip(&self.dimensions)
            .fold(0u64, |acc, (&c, d)| acc * d.len() as u64 + c as u64)
    }

    pub fn unrank(&self, mut rank: u64) -> DesignTuple {
        let mut choices = vec![0; self.dimensions.len()];
        for (slot, d) in choices.iter_mut().zip(&self.dimensions).rev() {
            let n = d.len() as u64;
            *slot = (rank % n) as usize;
            rank /= n;
        }
        DesignTuple(choices)
    }

    /// Every tuple in rank order. Panics if the space size overflows `u64`.
    pub fn iter(&self) -> impl Iterator<Item = DesignTuple> + '_ {
        let n = self.size().expect("design space size overflows u64");
        (0..n).map(move |r| self.unrank(r))
    }

    /// Resolves labels (in dimension order) to a tuple.
    pub fn tuple_from_labels<S: AsRef<str>>(&self, labels: &[S]) -> Result<DesignTuple> {
        if labels.len() != self.dimensions.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} labels, got {}",
                self.dimensions.len(),
                labels.len()
            )));
        }
        let choices = labels
            .iter()
            .zip(&self.dimensions)
            .map(|(l, d)| {
                d.index_of(l.as_ref()).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "unknown choice `{}` for dimension `{}`",
                        l.as_ref(),
                        d.name
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DesignTuple(choices))
    }

    pub fn labels<'a>(&'a self, theta: &DesignTuple) -> Vec<&'a str> {
        theta
            .0
            .iter()
            .zip(&self.dimensions)
            .map(|(&c, d)| d.candidates[c].as_str())
            .collect()
    }
}

impl DesignTuple {
    pub fn new(choices: Vec<usize>) -> Self {
        Self(choices)
    }

    pub fn choices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Applies `m`; fails if the tuple no longer holds `m.from`.
    pub fn apply(&self, m: &Modification) -> Result<DesignTuple> {
        let actual = *self.0.get(m.dimension).ok_or_else(|| Error::InvalidTuple {
            tuple: self.0.clone(),
            reason: format!("no dimension {}", m.dimension),
        })?;
        if actual != m.from {
            return Err(Error::StaleModification {
                dimension: m.dimension,
                expected: m.from,
                actual,
            });
        }
        let mut next = self.0.clone();
        next[m.dimension] = m.to;
        Ok(DesignTuple(next))
    }

    /// The modification taking `self` to `other`, if they differ in exactly one
    /// dimension.
    pub fn modification_to(&self, other: &DesignTuple) -> Option<Modification> {
        if self.0.len() != other.0.len() {
            return None;
        }
        let mut found = None;
        for (d, (&a, &b)) in self.0.iter().zip(&other.0).enumerate() {
            if a != b {
                if found.is_some() {
                    return None;
                }
                found = Some(Modification {
                    dimension: d,
                    from: a,
                    to: b,
                });
            }
        }
        found
    }
}

impl fmt::Display for DesignTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl Modification {
    pub fn new(dimension: usize, from: usize, to: usize) -> Result<Self> {
        if from == to {
            return Err(Error::InvalidArgument(format!(
                "identity modification on dimension {dimension}"
            )));
        }
        Ok(Self {
            dimension,
            from,
            to,
        })
    }

    pub fn reverse(&self) -> Self {
        Self {
            dimension: self.dimension,
            from: self.to,
            to: self.from,
        }
    }
}

impl fmt::Display for Modification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d{}:{}->{}", self.dimension, self.from, self.to)
    }
}
