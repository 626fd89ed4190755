//! Synthetic benchmark landscapes with exhaustive ground truth.
//!
//! Every task's performance is an additive potential over design choices plus
//! optional pairwise interactions and per-architecture noise. The unseen task
//! mixes benchmark performances with an independent potential of its own.

use std::fmt::Write as _;
use std::sync::Arc;

use mdesign_core::space::{DesignSpace, DesignTuple};
use mdesign_core::store::{KnowledgeStore, Manifest, StatTable, TaskMeta};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::oracle::LandscapeOracle;

pub const MAX_EXHAUSTIVE: u64 = 1_000_000;
pub const UNSEEN_TASK: &str = "unseen";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandscapeSpec {
    /// Candidate count per dimension.
    pub dims: Vec<usize>,
    pub benchmarks: usize,
    /// Standard deviation of per-choice utilities.
    pub utility_scale: f64,
    /// Standard deviation of pairwise interaction terms.
    pub interaction_scale: f64,
    /// Per-architecture noise on benchmark performances.
    pub benchmark_noise: f64,
    /// Fraction of benchmark architectures recorded.
    pub coverage: f64,
    /// Length of each task's statistic vector.
    pub statistics: usize,
    pub unseen: UnseenSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UnseenSpec {
    /// Coefficients over benchmark performances; missing entries are 0.
    pub mix: Vec<f64>,
    /// Weight of an independent potential drawn like a benchmark's.
    pub independent: f64,
    pub noise: f64,
    /// Interpret `noise` as a fraction of the median absolute edge gain of the
    /// noiseless unseen landscape.
    pub relative_noise: bool,
}

impl Default for LandscapeSpec {
    fn default() -> Self {
        Self {
            dims: vec![4, 4, 3, 3, 3],
            benchmarks: 5,
            utility_scale: 0.05,
            interaction_scale: 0.01,
            benchmark_noise: 0.0,
            coverage: 1.0,
            statistics: 8,
            unseen: UnseenSpec::default(),
        }
    }
}

impl Default for UnseenSpec {
    fn default() -> Self {
        Self {
            mix: vec![1.0],
            independent: 0.0,
            noise: 0.0,
            relative_noise: false,
        }
    }
}

impl LandscapeSpec {
    pub fn space(&self) -> Result<DesignSpace> {
        let mut text = String::new();
        for (d, &n) in self.dims.iter().enumerate() {
            let cands: Vec<String> = (0..n).map(|c| format!("c{c}")).collect();
            let _ = writeln!(text, "d{d}: [{}]", cands.join(", "));
        }
        Ok(DesignSpace::parse(&text)?)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.benchmarks == 0 {
            return bad("at least one benchmark is required");
        }
        if !(self.coverage > 0.0 && self.coverage <= 1.0) {
            return bad("coverage must lie in (0, 1]");
        }
        let scales = [
            self.utility_scale,
            self.interaction_scale,
            self.benchmark_noise,
            self.unseen.independent,
            self.unseen.noise,
        ];
        if scales.iter().any(|s| !s.is_finite()) || self.unseen.mix.iter().any(|m| !m.is_finite()) {
            return bad("scales and mixing coefficients must be finite");
        }
        if self.unseen.mix.len() > self.benchmarks {
            return bad("more mixing coefficients than benchmarks");
        }
        if [self.utility_scale, self.interaction_scale, self.benchmark_noise, self.unseen.noise]
            .iter()
            .any(|&s| s < 0.0)
        {
            return bad("scales must be nonnegative");
        }
        Ok(())
    }
}

/// A generated suite: fully enumerated benchmark tables, the unseen task's
/// table and its optimum.
#[derive(Debug, Clone)]
pub struct SyntheticSuite {
    pub spec: LandscapeSpec,
    pub seed: u64,
    pub space: Arc<DesignSpace>,
    /// Performance by architecture rank, per benchmark.
    pub benchmark_perf: Vec<Vec<f64>>,
    /// Which benchmark architectures are recorded.
    pub recorded: Vec<Vec<bool>>,
    pub unseen_perf: Arc<Vec<f64>>,
    pub benchmark_stats: Vec<Vec<f64>>,
    pub unseen_stats: Vec<f64>,
    optimum_rank: u64,
}

struct Potential {
    utilities: Vec<Vec<f64>>,
    interactions: Vec<(usize, usize, Vec<Vec<f64>>)>,
}

impl Potential {
    fn draw(dims: &[usize], utility: f64, interaction: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut normal = |sd: f64| -> f64 {
            let z: f64 = StandardNormal.sample(rng);
            sd * z
        };
        let utilities = dims.iter().map(|&n| (0..n).map(|_| normal(utility)).collect()).collect();
        let mut interactions = Vec::new();
        if interaction > 0.0 {
            for a in 0..dims.len() {
                for b in a + 1..dims.len() {
                    let table = (0..dims[a])
                        .map(|_| (0..dims[b]).map(|_| normal(interaction)).collect())
                        .collect();
                    interactions.push((a, b, table));
                }
            }
        }
        Self {
            utilities,
            interactions,
        }
    }

    fn value(&self, c: &[usize]) -> f64 {
        let mut v: f64 = c.iter().zip(&self.utilities).map(|(&x, u)| u[x]).sum();
        for (a, b, t) in &self.interactions {
            v += t[c[*a]][c[*b]];
        }
        v
    }
}

fn median_abs_edge_gain(space: &DesignSpace, table: &[f64]) -> f64 {
    let mut gains = Vec::new();
    for theta in space.iter() {
        let r = space.rank(&theta);
        for (_, nb) in space.neighbors(&theta).expect("enumerated tuples are valid") {
            let s = space.rank(&nb);
            if s > r {
                gains.push((table[s as usize] - table[r as usize]).abs());
            }
        }
    }
    if gains.is_empty() {
        return 0.0;
    }
    gains.sort_by(f64::total_cmp);
    let n = gains.len();
    if n % 2 == 1 {
        gains[n / 2]
    } else {
        0.5 * (gains[n / 2 - 1] + gains[n / 2])
    }
}

/// Draws a suite. Deterministic in `(spec, seed)`.
pub fn generate_landscapes(spec: &LandscapeSpec, seed: u64) -> Result<SyntheticSuite> {
    spec.validate()?;
    let space = spec.space()?;
    let size = space.size().filter(|&s| s <= MAX_EXHAUSTIVE).ok_or(HarnessError::SpaceTooLarge(
        space.size().unwrap_or(u64::MAX),
    ))?;
    let n = size as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tuples: Vec<DesignTuple> = space.iter().collect();

    let mut benchmark_perf = Vec::with_capacity(spec.benchmarks);
    for _ in 0..spec.benchmarks {
        let pot = Potential::draw(&spec.dims, spec.utility_scale, spec.interaction_scale, &mut rng);
        let mut table: Vec<f64> = tuples.iter().map(|t| pot.value(t.choices())).collect();
        if spec.benchmark_noise > 0.0 {
            let noise = Normal::new(0.0, spec.benchmark_noise).expect("validated scale");
            for v in table.iter_mut() {
                *v += noise.sample(&mut rng);
            }
        }
        benchmark_perf.push(table);
    }
    let independent = Potential::draw(&spec.dims, spec.utility_scale, spec.interaction_scale, &mut rng);
    let mut unseen: Vec<f64> = (0..n)
        .map(|r| {
            let mut v = 0.0;
            for (k, &m) in spec.unseen.mix.iter().enumerate() {
                if m != 0.0 {
                    v += m * benchmark_perf[k][r];
                }
            }
            if spec.unseen.independent != 0.0 {
                v += spec.unseen.independent * independent.value(tuples[r].choices());
            }
            v
        })
        .collect();
    let sd = if spec.unseen.relative_noise {
        spec.unseen.noise * median_abs_edge_gain(&space, &unseen)
    } else {
        spec.unseen.noise
    };
    if sd > 0.0 {
        let noise = Normal::new(0.0, sd).expect("validated scale");
        for v in unseen.iter_mut() {
            *v += noise.sample(&mut rng);
        }
    }

    let recorded = (0..spec.benchmarks)
        .map(|_| {
            (0..n)
                .map(|_| spec.coverage >= 1.0 || rng.random_bool(spec.coverage))
                .collect()
        })
        .collect();

    let m = spec.statistics;
    let benchmark_stats: Vec<Vec<f64>> = (0..spec.benchmarks)
        .map(|_| (0..m).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let own: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
    let unseen_stats = (0..m)
        .map(|j| {
            let mut v = spec.unseen.independent * own[j];
            for (k, &c) in spec.unseen.mix.iter().enumerate() {
                v += c * benchmark_stats[k][j];
            }
            v
        })
        .collect();

    let mut optimum_rank = 0;
    for (r, &v) in unseen.iter().enumerate() {
        if v > unseen[optimum_rank] {
            optimum_rank = r;
        }
    }

    Ok(SyntheticSuite {
        spec: spec.clone(),
        seed,
        space: Arc::new(space),
        benchmark_perf,
        recorded,
        unseen_perf: Arc::new(unseen),
        benchmark_stats,
        unseen_stats,
        optimum_rank: optimum_rank as u64,
    })
}

impl SyntheticSuite {
    pub fn task_ids(&self) -> Vec<String> {
        (0..self.benchmark_perf.len()).map(|k| format!("b{k}")).collect()
    }

    pub fn stat_names(&self) -> Vec<String> {
        (0..self.spec.statistics).map(|j| format!("s{j}")).collect()
    }

    fn header(&self) -> String {
        let names: Vec<&str> = self.space.dimensions().iter().map(|d| d.name()).collect();
        format!("task_id,{},performance\n", names.join(","))
    }

    fn row(&self, out: &mut String, task: &str, rank: usize, perf: f64) {
        let theta = self.space.unrank(rank as u64);
        let _ = writeln!(out, "{task},{},{perf}", self.space.labels(&theta).join(","));
    }

    pub fn records_csv(&self) -> String {
        let mut out = self.header();
        for (k, id) in self.task_ids().iter().enumerate() {
            for (r, &p) in self.benchmark_perf[k].iter().enumerate() {
                if self.recorded[k][r] {
                    self.row(&mut out, id, r, p);
                }
            }
        }
        out
    }

    pub fn unseen_records_csv(&self) -> String {
        let mut out = self.header();
        for (r, &p) in self.unseen_perf.iter().enumerate() {
            self.row(&mut out, UNSEEN_TASK, r, p);
        }
        out
    }

    pub fn stats_table(&self) -> StatTable {
        StatTable {
            names: self.stat_names(),
            rows: self
                .task_ids()
                .into_iter()
                .zip(self.benchmark_stats.iter().cloned())
                .collect(),
        }
    }

    pub fn unseen_stats_table(&self) -> StatTable {
        StatTable {
            names: self.stat_names(),
            rows: [(UNSEEN_TASK.to_string(), self.unseen_stats.clone())].into_iter().collect(),
        }
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            space_size: self.space.size(),
            tasks: self
                .task_ids()
                .into_iter()
                .map(|id| {
                    let meta = TaskMeta {
                        dataset_id: Some(format!("synthetic-{}", self.seed)),
                        task_type: "synthetic".into(),
                        ..TaskMeta::default()
                    };
                    (id, meta)
                })
                .collect(),
        }
    }

    /// The benchmark knowledge store, ingested from the generated files.
    pub fn store(&self) -> Result<KnowledgeStore> {
        Ok(KnowledgeStore::ingest_with(
            self.space.clone(),
            &self.records_csv(),
            Some(&self.stats_table()),
            Some(&self.manifest()),
        )?)
    }

    pub fn unseen_store(&self) -> Result<KnowledgeStore> {
        Ok(KnowledgeStore::ingest(self.space.clone(), &self.unseen_records_csv())?)
    }

    pub fn oracle(&self) -> LandscapeOracle {
        LandscapeOracle::new(self.space.clone(), self.unseen_perf.clone())
    }

    pub fn unseen(&self, theta: &DesignTuple) -> f64 {
        self.unseen_perf[self.space.rank(theta) as usize]
    }

    pub fn benchmark(&self, k: usize, theta: &DesignTuple) -> f64 {
        self.benchmark_perf[k][self.space.rank(theta) as usize]
    }

    /// Unseen-task optimum; ties go to the lowest rank.
    pub fn optimum(&self) -> (DesignTuple, f64) {
        (
            self.space.unrank(self.optimum_rank),
            self.unseen_perf[self.optimum_rank as usize],
        )
    }
}
