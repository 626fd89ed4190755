//! `mdesign` command-line interface.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use mdesign_core::engine::{RefinementConfig, RefinementReport, Refiner};
use mdesign_core::graph::GainGraph;
use mdesign_core::planner::{pretrain_regressor, GainRegressor, RegressorHyper};
use mdesign_core::space::{DesignSpace, DesignTuple};
use mdesign_core::store::{KnowledgeStore, Manifest, StatTable};
use serde::Serialize;

use crate::baselines::{run_baseline, BaselineKind, Trace};
use crate::config::{read_text, InitConfig, InitStrategy, OracleConfig, RunConfig};
use crate::error::{HarnessError, Result};
use crate::metrics::RunMetrics;
use crate::oracle::ReplayOracle;
use crate::stats::{consistency_stats, shared_gains, ConsistencyStats};
use crate::synth::{generate_landscapes, LandscapeSpec, UNSEEN_TASK};

#[derive(Debug, Parser)]
#[command(name = "mdesign", version, about = "Knowledge-base driven architecture refinement")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a persisted store from records, statistics and a manifest.
    Ingest {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        stats: Option<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pretrain one gain regressor per benchmark task.
    Pretrain {
        #[command(flatten)]
        common: StoreArgs,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Refine a model for the unseen task of a run configuration.
    Refine {
        #[command(flatten)]
        common: StoreArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run a baseline searcher under a run configuration.
    Baseline {
        #[arg(long, value_enum)]
        kind: BaselineKind,
        #[command(flatten)]
        common: StoreArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Gain-consistency statistics between the unseen task and each benchmark.
    Stats {
        #[command(flatten)]
        common: StoreArgs,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic suite with store, unseen records and run config.
    Synth {
        /// Landscape specification; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct StoreArgs {
    #[arg(long)]
    pub store: PathBuf,
    /// Design space to check the store against.
    #[arg(long)]
    pub space: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest {
            space,
            records,
            stats,
            manifest,
            out,
        } => ingest(&space, &records, stats.as_deref(), manifest.as_deref(), &out),
        Command::Pretrain {
            common,
            config,
            seed,
            out,
        } => pretrain(&common, config.as_deref(), seed, &out),
        Command::Refine { common, run } => refine(&common, &run),
        Command::Baseline { kind, common, run } => baseline(kind, &common, &run),
        Command::Stats { common, config, out } => stats(&common, &config, out.as_deref()),
        Command::Synth {
            config,
            seed,
            budget,
            window,
            out,
        } => synth(config.as_deref(), seed, budget, window, &out),
    }
}

fn write(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| HarnessError::io(&path, e))
}

fn load_store(args: &StoreArgs) -> Result<KnowledgeStore> {
    let store = KnowledgeStore::load(&args.store)?;
    if let Some(path) = &args.space {
        let space = DesignSpace::parse(&read_text(path)?)?;
        if space.fingerprint() != store.space().fingerprint() {
            return Err(mdesign_core::Error::SpaceMismatch {
                found: store.space().fingerprint(),
                expected: space.fingerprint(),
            }
            .into());
        }
    }
    Ok(store)
}

fn ingest(space: &Path, records: &Path, stats: Option<&Path>, manifest: Option<&Path>, out: &Path) -> Result<()> {
    let space = Arc::new(DesignSpace::parse(&read_text(space)?)?);
    let stats = stats.map(|p| read_text(p).and_then(|t| Ok(StatTable::parse(&t)?))).transpose()?;
    let manifest = manifest
        .map(|p| read_text(p).and_then(|t| Ok(Manifest::parse(&t)?)))
        .transpose()?;
    let store = KnowledgeStore::ingest_with(space, &read_text(records)?, stats.as_ref(), manifest.as_ref())?;
    fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
    store.persist(&out.join("store.json"))?;
    println!(
        "ingested {} tasks, {} architectures, {} records",
        store.num_tasks(),
        store.archs().len(),
        store.num_perf_records()
    );
    Ok(())
}

fn pretrain(common: &StoreArgs, config: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<()> {
    let store = load_store(common)?;
    let mut hyper = match config {
        Some(p) => RunConfig::load(p)?.refinement.regressor,
        None => RegressorHyper::default(),
    };
    if let Some(s) = seed {
        hyper.seed = s;
    }
    let mut table = String::from("task_id,edges,mae\n");
    for task in store.tasks() {
        let graph = GainGraph::build(&store, &task.task_id)?;
        match pretrain_regressor(&graph, &hyper) {
            Ok((reg, mae)) => {
                fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
                reg.save(&out.join(format!("{}.ckpt", task.task_id)), &task.task_id)?;
                let _ = writeln!(table, "{},{},{mae}", task.task_id, graph.edge_count());
            }
            Err(mdesign_core::Error::Empty(_)) => {
                eprintln!("skipping `{}`: no recorded edges", task.task_id);
            }
            Err(e) => return Err(e.into()),
        }
    }
    write(out, "pretrain.csv", table)
}

struct Prepared {
    cfg: RunConfig,
    unseen: KnowledgeStore,
}

fn prepare(store: &KnowledgeStore, run: &RunArgs) -> Result<Prepared> {
    let mut cfg = RunConfig::load(&run.config)?;
    if let Some(s) = run.seed {
        cfg.refinement.seed = s;
    }
    if let Some(b) = run.budget {
        cfg.refinement.budget = b;
    }
    if let Some(w) = run.window {
        cfg.refinement.window = Some(w);
    }
    cfg.refinement.validate()?;
    let unseen = KnowledgeStore::ingest(store.space().clone(), &read_text(&cfg.oracle.records)?)?;
    unseen.task_index(&cfg.oracle.task)?;
    Ok(Prepared { cfg, unseen })
}

fn unseen_optimum(unseen: &KnowledgeStore, task: &str) -> Result<f64> {
    let t = unseen.task_index(task)?;
    Ok(unseen
        .best_arch(t)
        .map(|(_, p)| p)
        .ok_or(mdesign_core::Error::Empty("unseen task has no records"))?)
}

fn trajectory_csv(space: &DesignSpace, trace: &Trace, metrics: &RunMetrics) -> String {
    let mut out = String::from("evaluation,architecture,performance,best,regret\n");
    for (i, (theta, p)) in trace.evaluations.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{p},{},{}",
            i + 1,
            space.labels(theta).join("|"),
            metrics.best_trajectory[i],
            metrics.regret[i]
        );
    }
    out
}

fn timing_csv(seconds: &[f64]) -> String {
    let mut out = String::from("iteration,seconds\n");
    for (i, s) in seconds.iter().enumerate() {
        let _ = writeln!(out, "{},{s}", i + 1);
    }
    out
}

fn weights_csv(report: &RefinementReport) -> String {
    let mut out = String::from("iteration,task_id,weight,flagged\n");
    for (k, id) in report.task_ids.iter().enumerate() {
        let _ = writeln!(out, "0,{id},{},false", report.initial_weights[k]);
    }
    for rec in &report.iterations {
        for (k, id) in report.task_ids.iter().enumerate() {
            let _ = writeln!(out, "{},{id},{},{}", rec.iteration, rec.weights[k], rec.flagged[k]);
        }
    }
    out
}

fn load_checkpoints(refiner: &mut Refiner<'_>, store: &KnowledgeStore, dir: &Path) -> Result<()> {
    for task in store.tasks() {
        let path = dir.join(format!("{}.ckpt", task.task_id));
        if path.exists() {
            let (id, reg) = GainRegressor::load(&path, store.space())?;
            if id != task.task_id {
                return Err(HarnessError::Config(format!(
                    "{} holds a regressor for `{id}`",
                    path.display()
                )));
            }
            refiner.set_regressor(&task.task_id, reg)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct RefineSummary<'a> {
    #[serde(flatten)]
    report: mdesign_core::engine::ReportSummary,
    best_labels: Vec<&'a str>,
    optimum: f64,
    final_regret: f64,
    evaluations_to_target: Option<usize>,
    evaluations_to_optimum: Option<usize>,
    config: &'a RefinementConfig,
}

fn refine(common: &StoreArgs, run: &RunArgs) -> Result<()> {
    let store = load_store(common)?;
    let Prepared { cfg, unseen } = prepare(&store, run)?;
    let view = cfg.initial_view(&store)?;
    let mut refiner = Refiner::new(&store, cfg.refinement.clone())?;
    if let Some(dir) = &cfg.checkpoints {
        load_checkpoints(&mut refiner, &store, dir)?;
    }
    let oracle = ReplayOracle::new(&unseen, &cfg.oracle.task)?;
    let report = refiner.run(view, oracle)?;
    let trace = Trace::from_report(&report);
    let optimum = unseen_optimum(&unseen, &cfg.oracle.task)?;
    let metrics = RunMetrics::from_performances("mdesign", &trace.performances(), optimum, None, vec![]);
    let summary = RefineSummary {
        report: report.summary(),
        best_labels: store.space().labels(&report.best_architecture),
        optimum,
        final_regret: metrics.final_regret,
        evaluations_to_target: metrics.evaluations_to_target,
        evaluations_to_optimum: metrics.evaluations_to_optimum,
        config: &cfg.refinement,
    };
    write(&run.out, "report.jsonl", report.to_jsonl())?;
    write(&run.out, "summary.json", to_json(&summary) + "\n")?;
    write(&run.out, "weights.csv", weights_csv(&report))?;
    write(&run.out, "trajectory.csv", trajectory_csv(store.space(), &trace, &metrics))?;
    write(&run.out, "timing.csv", timing_csv(&report.step_seconds))?;
    println!(
        "best {} = {} after {} evaluations (regret {})",
        store.space().labels(&report.best_architecture).join(","),
        report.best_performance,
        report.evaluations(),
        metrics.final_regret
    );
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("summaries serialize")
}

fn baseline(kind: BaselineKind, common: &StoreArgs, run: &RunArgs) -> Result<()> {
    let store = load_store(common)?;
    let Prepared { cfg, unseen } = prepare(&store, run)?;
    let view = cfg.initial_view(&store)?;
    let mut oracle = ReplayOracle::new(&unseen, &cfg.oracle.task)?;
    let trace = run_baseline(kind, &store, &cfg.refinement, view, &mut oracle)?;
    let optimum = unseen_optimum(&unseen, &cfg.oracle.task)?;
    let name = serde_json::to_value(kind).expect("kind serializes");
    let name = name.as_str().unwrap_or("baseline");
    let metrics = RunMetrics::from_performances(name, &trace.performances(), optimum, None, vec![]);
    write(&run.out, "trajectory.csv", trajectory_csv(store.space(), &trace, &metrics))?;
    write(&run.out, "summary.json", to_json(&metrics) + "\n")?;
    write(&run.out, "timing.csv", timing_csv(&trace.step_seconds))?;
    println!(
        "{name}: best {} after {} evaluations (regret {})",
        metrics.best_trajectory.last().copied().unwrap_or(f64::NAN),
        trace.evaluations.len(),
        metrics.final_regret
    );
    Ok(())
}

#[derive(Serialize)]
struct StatsRecord {
    task_id: String,
    #[serde(flatten)]
    stats: ConsistencyStats,
}

fn stats(common: &StoreArgs, config: &Path, out: Option<&Path>) -> Result<()> {
    let store = load_store(common)?;
    let cfg = RunConfig::load(config)?;
    let unseen = KnowledgeStore::ingest(store.space().clone(), &read_text(&cfg.oracle.records)?)?;
    let unseen_graph = GainGraph::build(&unseen, &cfg.oracle.task)?;
    let mut jsonl = String::new();
    let mut csv = String::from("task_id,edges,gamma,r_squared,normality_p,kendall\n");
    for task in store.tasks() {
        let graph = GainGraph::build(&store, &task.task_id)?;
        let (u, b) = shared_gains(&unseen_graph, &graph);
        let rec = StatsRecord {
            task_id: task.task_id.clone(),
            stats: consistency_stats(&u, &b)?,
        };
        let line = serde_json::to_string(&rec).expect("records serialize");
        println!("{line}");
        jsonl.push_str(&line);
        jsonl.push('\n');
        let s = &rec.stats;
        let p = s.normality_p.map(|p| p.to_string()).unwrap_or_default();
        let _ = writeln!(csv, "{},{},{},{},{p},{}", rec.task_id, s.edges, s.gamma, s.r_squared, s.kendall);
    }
    if let Some(dir) = out {
        write(dir, "stats.jsonl", jsonl)?;
        write(dir, "stats.csv", csv)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct OptimumRecord<'a> {
    architecture: &'a DesignTuple,
    labels: Vec<&'a str>,
    performance: f64,
}

fn synth(config: Option<&Path>, seed: u64, budget: Option<usize>, window: Option<usize>, out: &Path) -> Result<()> {
    let spec: LandscapeSpec = match config {
        Some(p) => toml::from_str(&read_text(p)?).map_err(|e| HarnessError::Config(e.to_string()))?,
        None => LandscapeSpec::default(),
    };
    let suite = generate_landscapes(&spec, seed)?;
    let store = suite.store()?;
    let mut refinement = RefinementConfig {
        seed,
        ..RefinementConfig::default()
    };
    if let Some(b) = budget {
        refinement.budget = b;
    }
    refinement.window = window;
    let run = RunConfig {
        oracle: OracleConfig {
            records: "unseen_records.csv".into(),
            task: UNSEEN_TASK.into(),
        },
        init: InitConfig {
            strategy: InitStrategy::Kendall,
            stats: Some("unseen_stats.csv".into()),
            task: None,
            weights: vec![],
        },
        refinement,
        checkpoints: None,
    };
    let (opt, perf) = suite.optimum();
    write(out, "space.txt", suite.space.to_config_text())?;
    write(out, "records.csv", suite.records_csv())?;
    write(out, "stats.csv", suite.stats_table().to_csv())?;
    write(
        out,
        "manifest.toml",
        toml::to_string(&suite.manifest()).expect("manifest serializes"),
    )?;
    write(out, "unseen_records.csv", suite.unseen_records_csv())?;
    write(out, "unseen_stats.csv", suite.unseen_stats_table().to_csv())?;
    write(out, "landscape.toml", toml::to_string(&spec).expect("spec serializes"))?;
    write(out, "run.toml", run.to_toml())?;
    let optimum = OptimumRecord {
        architecture: &opt,
        labels: suite.space.labels(&opt),
        performance: perf,
    };
    write(out, "optimum.json", to_json(&optimum) + "\n")?;
    store.persist(&out.join("store.json"))?;
    println!(
        "synthesized {} benchmarks over {} architectures into {}",
        store.num_tasks(),
        suite.space.size().unwrap_or(0),
        out.display()
    );
    Ok(())
}
