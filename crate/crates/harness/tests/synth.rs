use mdesign_core::graph::GainGraph;
use mdesign_core::{DesignTuple, EvaluationOracle};
use mdesign_harness::stats::{consistency_stats, shared_gains};
use mdesign_harness::synth::{generate_landscapes, LandscapeSpec, UnseenSpec, MAX_EXHAUSTIVE, UNSEEN_TASK};
use mdesign_harness::HarnessError;

fn spec(mix: Vec<f64>) -> LandscapeSpec {
    LandscapeSpec {
        dims: vec![3, 3, 2, 2],
        benchmarks: 3,
        unseen: UnseenSpec {
            mix,
            ..Default::default()
        },
        ..Default::default()
    }
}

#[test]
fn copies_are_exact() {
    let one = generate_landscapes(&spec(vec![1.0]), 3).unwrap();
    let two = generate_landscapes(&spec(vec![2.0]), 3).unwrap();
    for theta in one.space.iter() {
        assert_eq!(one.unseen(&theta), one.benchmark(0, &theta));
        assert_eq!(two.unseen(&theta), 2.0 * two.benchmark(0, &theta));
    }
    assert_eq!(one.benchmark_perf, two.benchmark_perf);
}

#[test]
fn deterministic_in_seed() {
    let s = spec(vec![0.5, 0.5]);
    let a = generate_landscapes(&s, 9).unwrap();
    let b = generate_landscapes(&s, 9).unwrap();
    assert_eq!(a.records_csv(), b.records_csv());
    assert_eq!(a.unseen_records_csv(), b.unseen_records_csv());
    assert_eq!(a.stats_table().to_csv(), b.stats_table().to_csv());
    let c = generate_landscapes(&s, 10).unwrap();
    assert_ne!(a.records_csv(), c.records_csv());
}

#[test]
fn mixed_slope_matches_coefficient() {
    // unseen = 0.6 b0 + 0.4 b1 with independent b0, b1: the through-origin
    // slope on b0 gains estimates 0.6
    let mut s = spec(vec![0.6, 0.4]);
    s.dims = vec![4, 4, 3, 3, 3];
    s.interaction_scale = 0.0;
    let mut slopes = Vec::new();
    for seed in 0..20 {
        let suite = generate_landscapes(&s, seed).unwrap();
        let bench = GainGraph::build(&suite.store().unwrap(), "b0").unwrap();
        let unseen = GainGraph::build(&suite.unseen_store().unwrap(), UNSEEN_TASK).unwrap();
        let (u, b) = shared_gains(&unseen, &bench);
        slopes.push(consistency_stats(&u, &b).unwrap().gamma);
    }
    let n = slopes.len() as f64;
    let mean = slopes.iter().sum::<f64>() / n;
    let sd = (slopes.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let se = sd / n.sqrt();
    assert!((mean - 0.6).abs() <= 3.0 * se, "mean slope {mean}, se {se}");
}

#[test]
fn coverage_and_statistics() {
    let mut s = spec(vec![1.0]);
    s.coverage = 0.5;
    s.statistics = 6;
    let suite = generate_landscapes(&s, 1).unwrap();
    let store = suite.store().unwrap();
    let size = suite.space.size().unwrap() as usize;
    for (k, rec) in suite.recorded.iter().enumerate() {
        let recorded = rec.iter().filter(|&&r| r).count();
        assert_eq!(store.perf_records(k).count(), recorded);
        assert!(recorded > size / 5 && recorded < size * 4 / 5);
    }
    assert_eq!(store.stat_names().len(), 6);
    // a pure copy carries the copied benchmark's statistics
    assert_eq!(suite.unseen_stats, suite.benchmark_stats[0]);
    assert_eq!(suite.unseen_store().unwrap().num_perf_records(), size);
}

#[test]
fn relative_noise_scales_with_gains() {
    let mut s = spec(vec![1.0]);
    s.unseen.noise = 0.1;
    s.unseen.relative_noise = true;
    let noisy = generate_landscapes(&s, 4).unwrap();
    let diffs: Vec<f64> = noisy
        .space
        .iter()
        .map(|t| noisy.unseen(&t) - noisy.benchmark(0, &t))
        .collect();
    let sd = (diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64).sqrt();
    // utilities have scale 0.05, so the median |edge gain| is a few hundredths
    assert!(sd > 1e-4 && sd < 2e-2, "noise sd {sd}");
}

#[test]
fn optimum_is_the_maximum() {
    let suite = generate_landscapes(&spec(vec![0.3, -0.7]), 5).unwrap();
    let (theta, best) = suite.optimum();
    assert_eq!(suite.unseen(&theta), best);
    assert!(suite.space.iter().all(|t| suite.unseen(&t) <= best));
}

#[test]
fn rejects_bad_specs() {
    let huge = LandscapeSpec {
        dims: vec![10; 7],
        ..Default::default()
    };
    match generate_landscapes(&huge, 0) {
        Err(HarnessError::SpaceTooLarge(n)) => assert!(n > MAX_EXHAUSTIVE),
        other => panic!("expected SpaceTooLarge, got {other:?}"),
    }
    let mut bad = spec(vec![1.0, 0.0, 0.0, 1.0]);
    assert!(generate_landscapes(&bad, 0).is_err());
    bad.unseen.mix = vec![1.0];
    bad.coverage = 0.0;
    assert!(generate_landscapes(&bad, 0).is_err());
    bad.coverage = 1.0;
    bad.utility_scale = -1.0;
    assert!(generate_landscapes(&bad, 0).is_err());
}

#[test]
fn oracle_replays_the_table() {
    let suite = generate_landscapes(&spec(vec![1.0]), 2).unwrap();
    let mut oracle = suite.oracle();
    let theta = DesignTuple::new(vec![2, 1, 0, 1]);
    assert_eq!(oracle.evaluate(&theta).unwrap(), suite.unseen(&theta));
    assert!(oracle.evaluate(&DesignTuple::new(vec![3, 0, 0, 0])).is_err());
}
