#![allow(dead_code)]

use std::fmt::Write as _;
use std::sync::Arc;

use mdesign_core::space::{DesignSpace, DesignTuple};
use mdesign_core::store::KnowledgeStore;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn space(text: &str) -> Arc<DesignSpace> {
    Arc::new(DesignSpace::parse(text).unwrap())
}

/// Space with dimensions `d0..` of the given sizes and candidates `c0..`.
pub fn sized_space(sizes: &[usize]) -> Arc<DesignSpace> {
    let mut text = String::new();
    for (d, &n) in sizes.iter().enumerate() {
        let cands: Vec<String> = (0..n).map(|c| format!("c{c}")).collect();
        writeln!(text, "d{d}: [{}]", cands.join(", ")).unwrap();
    }
    space(&text)
}

/// Records CSV covering every architecture for which `perf` returns `Some`.
pub fn records_csv(
    space: &DesignSpace,
    tasks: &[&str],
    mut perf: impl FnMut(usize, &DesignTuple) -> Option<f64>,
) -> String {
    let names: Vec<&str> = space.dimensions().iter().map(|d| d.name()).collect();
    let mut out = format!("task_id,{},performance\n", names.join(","));
    for (t, id) in tasks.iter().enumerate() {
        for theta in space.iter() {
            if let Some(p) = perf(t, &theta) {
                writeln!(out, "{id},{},{p}", space.labels(&theta).join(",")).unwrap();
            }
        }
    }
    out
}

pub fn store(
    space: &Arc<DesignSpace>,
    tasks: &[&str],
    perf: impl FnMut(usize, &DesignTuple) -> Option<f64>,
) -> KnowledgeStore {
    KnowledgeStore::ingest(space.clone(), &records_csv(space, tasks, perf)).unwrap()
}

/// Random additive utilities, one table per dimension.
pub fn utilities(space: &DesignSpace, rng: &mut ChaCha8Rng, scale: f64) -> Vec<Vec<f64>> {
    space
        .dimensions()
        .iter()
        .map(|d| (0..d.len()).map(|_| rng.random_range(-scale..scale)).collect())
        .collect()
}

pub fn additive(u: &[Vec<f64>], theta: &DesignTuple) -> f64 {
    theta.choices().iter().zip(u).map(|(&c, t)| t[c]).sum()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
