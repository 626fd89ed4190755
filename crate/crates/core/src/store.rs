//! The model knowledge base: tasks, architectures and modification gains.
//!
//! Performance records are the only stored facts. Gains are a view derived from
//! them on demand, stored once per unordered neighbor pair in canonical
//! direction (lower arch id first); reverse lookups negate.
//!
//! Ingestion is order-independent: tasks are sorted by id and architecture ids
//! are assigned densely in lexicographic tuple order after all rows are read.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{DesignSpace, DesignTuple};

pub const STORE_FORMAT: &str = "mdesign-store";
pub const STORE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArchId(pub usize);

impl fmt::Display for ArchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub task_id: String,
    pub dataset_id: String,
    pub task_type: String,
    pub metric: String,
    pub higher_is_better: bool,
    /// Values aligned with the store's statistic names.
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerfRecord {
    pub arch: ArchId,
    pub performance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainRecord {
    pub task_id: String,
    pub from: ArchId,
    pub to: ArchId,
    pub gain: f64,
}

/// Per-task metadata declared alongside a records file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub space_size: Option<u64>,
    #[serde(default)]
    pub tasks: BTreeMap<String, TaskMeta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskMeta {
    #[serde(default = "default_metric")]
    pub metric: String,
    #[serde(default = "default_true")]
    pub higher_is_better: bool,
    pub dataset_id: Option<String>,
    #[serde(default = "default_task_type")]
    pub task_type: String,
}

fn default_metric() -> String {
    "performance".into()
}

fn default_true() -> bool {
    true
}

fn default_task_type() -> String {
    "unspecified".into()
}

impl Default for TaskMeta {
    fn default() -> Self {
        Self {
            metric: default_metric(),
            higher_is_better: true,
            dataset_id: None,
            task_type: default_task_type(),
        }
    }
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Manifest(e.to_string()))
    }
}

/// Statistic table: `task_id,<stat names...>`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StatTable {
    pub names: Vec<String>,
    pub rows: BTreeMap<String, Vec<f64>>,
}

impl StatTable {
    pub fn parse(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader.headers()?.clone();
        if headers.get(0) != Some("task_id") {
            return Err(Error::MissingColumn("task_id".into()));
        }
        let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut rows = BTreeMap::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            let row = i + 1;
            let task = rec.get(0).unwrap_or_default().to_string();
            let values = rec
                .iter()
                .skip(1)
                .map(|v| parse_real(v, row))
                .collect::<Result<Vec<_>>>()?;
            if values.len() != names.len() {
                return Err(Error::Record {
                    row,
                    message: format!("expected {} statistics, got {}", names.len(), values.len()),
                });
            }
            if rows.insert(task.clone(), values).is_some() {
                return Err(Error::Record {
                    row,
                    message: format!("duplicate statistics for task `{task}`"),
                });
            }
        }
        Ok(Self { names, rows })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("task_id");
        for n in &self.names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (task, values) in &self.rows {
            out.push_str(task);
            for v in values {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

fn parse_real(text: &str, row: usize) -> Result<f64> {
    let v: f64 = text.trim().parse().map_err(|_| Error::Record {
        row,
        message: format!("`{text}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Record {
            row,
            message: format!("non-finite value `{text}`"),
        });
    }
    Ok(v)
}

/// Accumulates records before canonical id assignment.
#[derive(Debug)]
pub struct StoreBuilder {
    space: Arc<DesignSpace>,
    stat_names: Vec<String>,
    tasks: BTreeMap<String, TaskRecord>,
    perf: BTreeMap<(String, DesignTuple), f64>,
}

impl StoreBuilder {
    pub fn new(space: Arc<DesignSpace>) -> Self {
        Self {
            space,
            stat_names: Vec::new(),
            tasks: BTreeMap::new(),
            perf: BTreeMap::new(),
        }
    }

    pub fn stat_names(mut self, names: Vec<String>) -> Self {
        self.stat_names = names;
        self
    }

    /// Registers (or replaces) a task's metadata.
    pub fn task(&mut self, record: TaskRecord) -> Result<()> {
        if record.features.len() != self.stat_names.len() {
            return Err(Error::SchemaMismatch(format!(
                "task `{}` has {} statistics, store schema has {}",
                record.task_id,
                record.features.len(),
                self.stat_names.len()
            )));
        }
        self.tasks.insert(record.task_id.clone(), record);
        Ok(())
    }

    /// Adds one performance record. `row` is used for diagnostics only.
    pub fn perf(&mut self, task_id: &str, theta: DesignTuple, performance: f64, row: usize) -> Result<()> {
        self.space.validate(&theta)?;
        if !performance.is_finite() {
            return Err(Error::Record {
                row,
                message: "non-finite performance".into(),
            });
        }
        let key = (task_id.to_string(), theta);
        if self.perf.contains_key(&key) {
            return Err(Error::Record {
                row,
                message: format!("duplicate record for task `{}` and architecture {}", key.0, key.1),
            });
        }
        self.perf.insert(key, performance);
        Ok(())
    }

    pub fn build(mut self) -> Result<KnowledgeStore> {
        for (task, _) in self.perf.keys() {
            if !self.tasks.contains_key(task) {
                if !self.stat_names.is_empty() {
                    return Err(Error::SchemaMismatch(format!("no statistics for task `{task}`")));
                }
                self.tasks.insert(
                    task.clone(),
                    TaskRecord {
                        task_id: task.clone(),
                        dataset_id: task.clone(),
                        task_type: default_task_type(),
                        metric: default_metric(),
                        higher_is_better: true,
                        features: Vec::new(),
                    },
                );
            }
        }
        let archs: Vec<DesignTuple> = self
            .perf
            .keys()
            .map(|(_, t)| t.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let tasks: Vec<TaskRecord> = self.tasks.into_values().collect();
        let task_index: HashMap<&str, usize> = tasks
            .iter()
            .enumerate()
            .map(|(i, t)| (t.task_id.as_str(), i))
            .collect();
        let arch_index: HashMap<DesignTuple, ArchId> = archs
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), ArchId(i)))
            .collect();
        let mut perf = vec![BTreeMap::new(); tasks.len()];
        for ((task, theta), p) in self.perf {
            perf[task_index[task.as_str()]].insert(arch_index[&theta], p);
        }
        Ok(KnowledgeStore {
            space: self.space,
            stat_names: self.stat_names,
            tasks,
            archs,
            arch_index,
            perf,
        })
    }
}

/// Immutable knowledge base. Cheap to share behind `Arc`.
#[derive(Debug, Clone)]
pub struct KnowledgeStore {
    space: Arc<DesignSpace>,
    stat_names: Vec<String>,
    tasks: Vec<TaskRecord>,
    archs: Vec<DesignTuple>,
    arch_index: HashMap<DesignTuple, ArchId>,
    perf: Vec<BTreeMap<ArchId, f64>>,
}

impl PartialEq for KnowledgeStore {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space
            && self.stat_names == other.stat_names
            && self.tasks == other.tasks
            && self.archs == other.archs
            && self.perf == other.perf
    }
}

impl KnowledgeStore {
    /// Ingests a records file `task_id,<dimension names...>,performance`.
    pub fn ingest(space: Arc<DesignSpace>, records: &str) -> Result<Self> {
        Self::ingest_with(space, records, None, None)
    }

    /// Ingests records plus optional statistics and manifest. Tasks declared
    /// lower-is-better in the manifest are negated on the way in.
    pub fn ingest_with(
        space: Arc<DesignSpace>,
        records: &str,
        stats: Option<&StatTable>,
        manifest: Option<&Manifest>,
    ) -> Result<Self> {
        if let Some(declared) = manifest.and_then(|m| m.space_size) {
            if Some(declared) != space.size() {
                return Err(Error::Manifest(format!(
                    "declared space size {declared} but the design space has {:?}",
                    space.size()
                )));
            }
        }
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(records.as_bytes());
        let headers = reader.headers()?.clone();
        let column = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::MissingColumn(name.to_string()))
        };
        let task_col = column("task_id")?;
        let perf_col = column("performance")?;
        let dim_cols = space
            .dimensions()
            .iter()
            .map(|d| column(d.name()))
            .collect::<Result<Vec<_>>>()?;

        let meta_for = |task: &str| -> TaskMeta {
            manifest
                .and_then(|m| m.tasks.get(task).cloned())
                .unwrap_or_default()
        };

        let mut builder = StoreBuilder::new(space.clone())
            .stat_names(stats.map(|s| s.names.clone()).unwrap_or_default());
        let mut seen_tasks = BTreeSet::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            let row = i + 1;
            let field = |c: usize| {
                rec.get(c).ok_or_else(|| Error::Record {
                    row,
                    message: format!("missing field {}", c + 1),
                })
            };
            let task = field(task_col)?.to_string();
            if task.is_empty() {
                return Err(Error::Record {
                    row,
                    message: "empty task_id".into(),
                });
            }
            let mut choices = Vec::with_capacity(dim_cols.len());
            for (dim, &c) in space.dimensions().iter().zip(&dim_cols) {
                let label = field(c)?;
                let idx = dim.index_of(label).ok_or_else(|| Error::Record {
                    row,
                    message: format!("unknown choice `{label}` for dimension `{}`", dim.name()),
                })?;
                choices.push(idx);
            }
            let meta = meta_for(&task);
            let mut value = parse_real(field(perf_col)?, row)?;
            if !meta.higher_is_better {
                value = -value;
            }
            builder.perf(&task, DesignTuple::new(choices), value, row)?;
            seen_tasks.insert(task);
        }

        if let Some(m) = manifest {
            if let Some(missing) = m.tasks.keys().find(|t| !seen_tasks.contains(*t)) {
                return Err(Error::Manifest(format!("task `{missing}` has no records")));
            }
        }
        for task in &seen_tasks {
            let features = match stats {
                Some(s) => s
                    .rows
                    .get(task)
                    .cloned()
                    .ok_or_else(|| Error::SchemaMismatch(format!("no statistics for task `{task}`")))?,
                None => Vec::new(),
            };
            let meta = meta_for(task);
            builder.task(TaskRecord {
                task_id: task.clone(),
                dataset_id: meta.dataset_id.unwrap_or_else(|| task.clone()),
                task_type: meta.task_type,
                metric: meta.metric,
                higher_is_better: meta.higher_is_better,
                features,
            })?;
        }
        builder.build()
    }

    pub fn space(&self) -> &Arc<DesignSpace> {
        &self.space
    }

    pub fn stat_names(&self) -> &[String] {
        &self.stat_names
    }

    pub fn tasks(&self) -> &[TaskRecord] {
        &self.tasks
    }

    pub fn num_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn task_index(&self, task_id: &str) -> Result<usize> {
        self.tasks
            .binary_search_by(|t| t.task_id.as_str().cmp(task_id))
            .map_err(|_| Error::UnknownTask(task_id.to_string()))
    }

    pub fn archs(&self) -> &[DesignTuple] {
        &self.archs
    }

    pub fn arch_id(&self, theta: &DesignTuple) -> Option<ArchId> {
        self.arch_index.get(theta).copied()
    }

    pub fn tuple(&self, arch: ArchId) -> &DesignTuple {
        &self.archs[arch.0]
    }

    /// Performance of `arch` on the task at `task` index.
    pub fn performance(&self, task: usize, arch: ArchId) -> Option<f64> {
        self.perf[task].get(&arch).copied()
    }

    pub fn performance_of(&self, task: usize, theta: &DesignTuple) -> Option<f64> {
        self.arch_id(theta).and_then(|a| self.performance(task, a))
    }

    pub fn perf_records(&self, task: usize) -> impl Iterator<Item = PerfRecord> + '_ {
        self.perf[task].iter().map(|(&arch, &performance)| PerfRecord { arch, performance })
    }

    pub fn num_perf_records(&self) -> usize {
        self.perf.iter().map(BTreeMap::len).sum()
    }

    /// Best recorded architecture of a task; ties go to the lower arch id.
    pub fn best_arch(&self, task: usize) -> Option<(ArchId, f64)> {
        self.perf[task]
            .iter()
            .fold(None, |best: Option<(ArchId, f64)>, (&a, &p)| match best {
                Some((_, bp)) if bp >= p => best,
                _ => Some((a, p)),
            })
    }

    /// One record per recorded neighbor pair, canonical direction, sorted.
    pub fn derive_gains(&self, task_id: &str) -> Result<Vec<GainRecord>> {
        let t = self.task_index(task_id)?;
        let records = &self.perf[t];
        let mut out = Vec::new();
        for (&a, &pa) in records {
            for (_, nb) in self.space.neighbors(&self.archs[a.0])? {
                let Some(&b) = self.arch_index.get(&nb) else {
                    continue;
                };
                if b <= a {
                    continue;
                }
                if let Some(&pb) = records.get(&b) {
                    out.push(GainRecord {
                        task_id: task_id.to_string(),
                        from: a,
                        to: b,
                        gain: pb - pa,
                    });
                }
            }
        }
        out.sort_by_key(|g| (g.from, g.to));
        Ok(out)
    }

    /// Signed gain of `from -> to`; `None` if either endpoint is unrecorded.
    pub fn lookup_gain(&self, task_id: &str, from: ArchId, to: ArchId) -> Result<Option<f64>> {
        let t = self.task_index(task_id)?;
        let (a, b) = (self.tuple(from), self.tuple(to));
        if a.modification_to(b).is_none() {
            return Err(Error::NotNeighbors(a.to_string(), b.to_string()));
        }
        let (lo, hi, sign) = if from < to { (from, to, 1.0) } else { (to, from, -1.0) };
        let stored = match (self.performance(t, lo), self.performance(t, hi)) {
            (Some(pl), Some(ph)) => Some(ph - pl),
            _ => None,
        };
        Ok(stored.map(|g| sign * g))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let file = StoreFile {
            format: STORE_FORMAT.into(),
            version: STORE_VERSION,
            space: (*self.space).clone(),
            stat_names: self.stat_names.clone(),
            tasks: self.tasks.clone(),
            archs: self.archs.clone(),
            perf: self
                .perf
                .iter()
                .map(|m| m.iter().map(|(&a, &p)| (a, p)).collect())
                .collect(),
        };
        let mut bytes = serde_json::to_vec(&file).expect("store serialization cannot fail");
        bytes.push(b'\n');
        bytes
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let corrupt = |message: String| Error::Corrupt {
            path: path.to_path_buf(),
            message,
        };
        let header: FileHeader = serde_json::from_slice(bytes).map_err(|e| corrupt(e.to_string()))?;
        if header.format != STORE_FORMAT {
            return Err(corrupt(format!("unexpected format tag `{}`", header.format)));
        }
        if header.version != STORE_VERSION {
            return Err(Error::VersionMismatch {
                found: header.version,
                expected: STORE_VERSION,
            });
        }
        let file: StoreFile = serde_json::from_slice(bytes).map_err(|e| corrupt(e.to_string()))?;
        let space = DesignSpace::new(file.space.dimensions().to_vec()).map_err(|e| corrupt(e.to_string()))?;
        let space = Arc::new(space);
        if file.perf.len() != file.tasks.len() {
            return Err(corrupt("task and performance tables differ in length".into()));
        }
        if !file.tasks.windows(2).all(|w| w[0].task_id < w[1].task_id) {
            return Err(corrupt("tasks are not in canonical order".into()));
        }
        if !file.archs.windows(2).all(|w| w[0] < w[1]) {
            return Err(corrupt("architectures are not in canonical order".into()));
        }
        for a in &file.archs {
            space.validate(a).map_err(|e| corrupt(e.to_string()))?;
        }
        let mut perf = Vec::with_capacity(file.perf.len());
        for rows in file.perf {
            let mut m = BTreeMap::new();
            for (a, p) in rows {
                if a.0 >= file.archs.len() || !p.is_finite() || m.insert(a, p).is_some() {
                    return Err(corrupt(format!("bad performance record for arch {a}")));
                }
            }
            perf.push(m);
        }
        for t in &file.tasks {
            if t.features.len() != file.stat_names.len() {
                return Err(corrupt(format!("task `{}` statistic count mismatch", t.task_id)));
            }
        }
        let arch_index = file
            .archs
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), ArchId(i)))
            .collect();
        Ok(Self {
            space,
            stat_names: file.stat_names,
            tasks: file.tasks,
            archs: file.archs,
            arch_index,
            perf,
        })
    }

    pub fn persist(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)?;
        Self::from_bytes(&bytes, path)
    }
}

#[derive(Deserialize)]
struct FileHeader {
    format: String,
    version: u32,
}

#[derive(Serialize, Deserialize)]
struct StoreFile {
    format: String,
    version: u32,
    space: DesignSpace,
    stat_names: Vec<String>,
    tasks: Vec<TaskRecord>,
    archs: Vec<DesignTuple>,
    perf: Vec<Vec<(ArchId, f64)>>,
}
