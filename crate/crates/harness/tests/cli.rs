use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mdesign(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdesign"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = mdesign(args, cwd);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn small_suite(dir: &Path, budget: usize) {
    fs::write(
        dir.join("landscape.toml"),
        "dims = [3, 3, 2]\nbenchmarks = 3\n\n[unseen]\nmix = [1.0]\n",
    )
    .unwrap();
    let budget = budget.to_string();
    ok(
        &["synth", "--config", "landscape.toml", "--seed", "2", "--budget", &budget, "--out", "suite"],
        dir,
    );
}

fn lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().map(str::to_string).collect()
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        &[][..],
        &["refine", "--config", "run.toml", "--out", "x"][..],
        &["frobnicate"][..],
        &["baseline", "--kind", "annealing", "--store", "s", "--config", "c", "--out", "o"][..],
    ] {
        let out = mdesign(args, tmp.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert!(stderr.contains("Usage") || stderr.contains("invalid value"), "{args:?}: {stderr}");
    }
}

#[test]
fn data_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    small_suite(dir, 3);
    let out = mdesign(&["refine", "--store", "suite/store.json", "--config", "missing.toml", "--out", "r"], dir);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    fs::write(dir.join("broken.json"), "{not json").unwrap();
    let out = mdesign(&["refine", "--store", "broken.json", "--config", "suite/run.toml", "--out", "r"], dir);
    assert_eq!(out.status.code(), Some(1));

    // an oracle that cannot answer for the initial model
    let run = fs::read_to_string(dir.join("suite/run.toml")).unwrap();
    fs::write(dir.join("suite/empty.csv"), "task_id,d0,d1,d2,performance\n").unwrap();
    fs::write(
        dir.join("suite/bad_run.toml"),
        run.replace("unseen_records.csv", "empty.csv"),
    )
    .unwrap();
    let out = mdesign(&["refine", "--store", "suite/store.json", "--config", "suite/bad_run.toml", "--out", "r"], dir);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn refine_writes_one_record_per_evaluation() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    small_suite(dir, 7);
    let stdout = ok(&["refine", "--store", "suite/store.json", "--config", "suite/run.toml", "--out", "r"], dir);
    assert!(stdout.contains("after 8 evaluations"));

    let report = lines(&dir.join("r/report.jsonl"));
    let kinds: Vec<String> = report
        .iter()
        .map(|l| serde_json::from_str::<Value>(l).unwrap()["kind"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(kinds.len(), 9);
    assert_eq!(kinds[0], "initial");
    assert!(kinds[1..8].iter().all(|k| k == "iteration"));
    assert_eq!(kinds[8], "summary");

    assert_eq!(lines(&dir.join("r/trajectory.csv")).len(), 1 + 8);
    assert_eq!(lines(&dir.join("r/weights.csv")).len(), 1 + 8 * 3);
    assert_eq!(lines(&dir.join("r/timing.csv")).len(), 1 + 7);
    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.join("r/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["evaluations"], 8);
    assert_eq!(summary["iterations"], 7);
    assert_eq!(summary["config"]["budget"], 7);

    // flag overrides
    ok(
        &["refine", "--store", "suite/store.json", "--config", "suite/run.toml", "--budget", "2", "--seed", "9", "--out", "r2"],
        dir,
    );
    assert_eq!(lines(&dir.join("r2/report.jsonl")).len(), 4);
}

#[test]
fn stats_on_an_exact_copy() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    small_suite(dir, 1);
    let stdout = ok(&["stats", "--store", "suite/store.json", "--config", "suite/run.toml", "--out", "st"], dir);
    let rows: Vec<Value> = stdout.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["task_id"], "b0");
    assert_eq!(rows[0]["r_squared"], 1.0);
    assert_eq!(rows[0]["gamma"], 1.0);
    assert_eq!(rows[0]["kendall"], 1.0);
    assert!(rows[1]["r_squared"].as_f64().unwrap() < 1.0);
    assert_eq!(lines(&dir.join("st/stats.jsonl")).len(), 3);
    assert_eq!(lines(&dir.join("st/stats.csv")).len(), 4);
}

#[test]
fn ingest_reproduces_the_synthesized_store() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    small_suite(dir, 3);
    ok(
        &[
            "ingest",
            "--space",
            "suite/space.txt",
            "--records",
            "suite/records.csv",
            "--stats",
            "suite/stats.csv",
            "--manifest",
            "suite/manifest.toml",
            "--out",
            "again",
        ],
        dir,
    );
    assert_eq!(fs::read(dir.join("again/store.json")).unwrap(), fs::read(dir.join("suite/store.json")).unwrap());
    // checking against the wrong space is a data error
    fs::write(dir.join("other.txt"), "a: [x, y]\n").unwrap();
    let out = mdesign(
        &["stats", "--store", "again/store.json", "--space", "other.txt", "--config", "suite/run.toml"],
        dir,
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn pretrained_checkpoints_feed_refinement() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    small_suite(dir, 12);
    ok(&["pretrain", "--store", "suite/store.json", "--seed", "1", "--out", "ckpt"], dir);
    for t in ["b0", "b1", "b2"] {
        assert!(dir.join(format!("ckpt/{t}.ckpt")).is_file());
    }
    assert_eq!(lines(&dir.join("ckpt/pretrain.csv")).len(), 4);

    let run = fs::read_to_string(dir.join("suite/run.toml")).unwrap();
    fs::write(dir.join("suite/ckpt_run.toml"), format!("checkpoints = \"../ckpt\"\n{run}")).unwrap();
    ok(&["refine", "--store", "suite/store.json", "--config", "suite/ckpt_run.toml", "--out", "r"], dir);

    fs::write(dir.join("ckpt/b1.ckpt"), "garbage").unwrap();
    let out = mdesign(&["refine", "--store", "suite/store.json", "--config", "suite/ckpt_run.toml", "--out", "r"], dir);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn baselines_write_trajectories() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    small_suite(dir, 6);
    for kind in ["random", "static-weave", "greedy-local"] {
        let out = format!("b-{kind}");
        ok(
            &["baseline", "--kind", kind, "--store", "suite/store.json", "--config", "suite/run.toml", "--out", &out],
            dir,
        );
        let traj = lines(&dir.join(format!("{out}/trajectory.csv")));
        assert!(traj.len() >= 2 && traj.len() <= 1 + 7, "{kind}: {} rows", traj.len());
        let summary: Value =
            serde_json::from_str(&fs::read_to_string(dir.join(format!("{out}/summary.json"))).unwrap()).unwrap();
        assert!(summary["final_regret"].as_f64().unwrap() >= 0.0);
    }
}

#[test]
fn runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    small_suite(dir, 10);
    let args = |out: &'static str| {
        vec!["refine", "--store", "suite/store.json", "--config", "suite/run.toml", "--out", out]
    };
    ok(&args("a"), dir);
    ok(&args("b"), dir);
    for f in ["report.jsonl", "summary.json", "trajectory.csv", "weights.csv"] {
        assert_eq!(fs::read(dir.join("a").join(f)).unwrap(), fs::read(dir.join("b").join(f)).unwrap(), "{f}");
    }
}
