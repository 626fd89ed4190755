use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::space::DesignTuple;

/// Performance of an architecture on the unseen task.
pub trait EvaluationOracle {
    fn evaluate(&mut self, theta: &DesignTuple) -> Result<f64>;
}

impl<F> EvaluationOracle for F
where
    F: FnMut(&DesignTuple) -> Result<f64>,
{
    fn evaluate(&mut self, theta: &DesignTuple) -> Result<f64> {
        self(theta)
    }
}

impl EvaluationOracle for &mut dyn EvaluationOracle {
    fn evaluate(&mut self, theta: &DesignTuple) -> Result<f64> {
        (**self).evaluate(theta)
    }
}

/// Memoizing wrapper; `calls` counts distinct architectures evaluated.
#[derive(Debug)]
pub struct MemoOracle<O> {
    inner: O,
    cache: HashMap<DesignTuple, f64>,
    calls: usize,
}

impl<O: EvaluationOracle> MemoOracle<O> {
    pub fn new(inner: O) -> Self {
        Self {
            inner,
            cache: HashMap::new(),
            calls: 0,
        }
    }

    pub fn calls(&self) -> usize {
        self.calls
    }

    pub fn into_inner(self) -> O {
        self.inner
    }
}

impl<O: EvaluationOracle> EvaluationOracle for MemoOracle<O> {
    fn evaluate(&mut self, theta: &DesignTuple) -> Result<f64> {
        if let Some(&p) = self.cache.get(theta) {
            return Ok(p);
        }
        let p = self.inner.evaluate(theta)?;
        if !p.is_finite() {
            return Err(Error::Oracle {
                tuple: theta.choices().to_vec(),
                message: format!("non-finite performance {p}"),
            });
        }
        self.cache.insert(theta.clone(), p);
        self.calls += 1;
        Ok(p)
    }
}
