use mdesign_harness::stats::{consistency_stats, shapiro_wilk, SHAPIRO_MAX_N};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn check(x: &[f64], w: f64, p: f64) {
    let (gw, gp) = shapiro_wilk(x).unwrap().unwrap();
    assert!((gw - w).abs() <= 1e-4, "W {gw} vs {w}");
    assert!((gp - p).abs() <= 1e-3, "p {gp} vs {p}");
}

// Reference values from scipy.stats.shapiro.
#[test]
fn shapiro_matches_reference() {
    check(&[1.0, 2.0, 4.0], 0.9642857142857142, 0.6368868450289689);
    check(&[2.1, 3.4, 1.9, 5.6, 4.4], 0.9320849391953863, 0.6106559022604845);
    check(
        &[0.3, -1.2, 2.5, 0.8, 0.1, -0.4, 1.9, 3.3],
        0.9658802815215225,
        0.8638667402268241,
    );
    check(
        &[148.0, 154.0, 158.0, 160.0, 161.0, 162.0, 166.0, 170.0, 182.0, 195.0, 236.0],
        0.7888146948631716,
        0.006703814061898823,
    );
    check(
        &[
            0.0, 3.075, -0.5666, -2.4774, 1.8823, 2.8955, -1.4996, -1.1544, 3.3775, 2.0902, -1.8842, 0.653, 4.1994,
            0.9741, -1.5154, 2.5772, 4.2378, -0.0569, -0.3851, 4.22,
        ],
        0.9335389185874401,
        0.18058972486216707,
    );
    let exp: Vec<f64> = (0..30)
        .map(|i| {
            let v = (3.0 * i as f64 / 29.0).exp();
            (v * 1e6).round() / 1e6
        })
        .collect();
    check(&exp, 0.8630617333196389, 0.0011784901340413437);
}

#[test]
fn shapiro_edge_cases() {
    assert!(shapiro_wilk(&[1.0, 2.0]).is_err());
    assert_eq!(shapiro_wilk(&[3.0; 10]).unwrap(), None);
    // invariant to location and scale
    let x = [0.3, -1.2, 2.5, 0.8, 0.1, -0.4, 1.9, 3.3];
    let y: Vec<f64> = x.iter().map(|v| 7.0 * v - 2.0).collect();
    let (a, b) = (shapiro_wilk(&x).unwrap().unwrap(), shapiro_wilk(&y).unwrap().unwrap());
    assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
    let big = vec![0.0; SHAPIRO_MAX_N + 1];
    assert!(shapiro_wilk(&big).is_err());
}

#[test]
fn shapiro_power_and_size() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let trials = 100;
    let mut uniform_rejects = 0;
    let mut normal_rejects = 0;
    for _ in 0..trials {
        let u: Vec<f64> = (0..200).map(|_| rng.random_range(0.0..1.0)).collect();
        if shapiro_wilk(&u).unwrap().unwrap().1 < 0.05 {
            uniform_rejects += 1;
        }
        let z: Vec<f64> = (0..200).map(|_| StandardNormal.sample(&mut rng)).collect();
        if shapiro_wilk(&z).unwrap().unwrap().1 < 0.05 {
            normal_rejects += 1;
        }
    }
    assert!(uniform_rejects >= 80, "uniform rejected {uniform_rejects}/{trials}");
    assert!(normal_rejects <= 15, "normal rejected {normal_rejects}/{trials}");
}

#[test]
fn consistency_of_exact_copies() {
    let b = [0.1, -0.3, 0.25, 0.05, -0.12];
    let s = consistency_stats(&b, &b).unwrap();
    assert_eq!((s.edges, s.gamma, s.r_squared, s.kendall), (5, 1.0, 1.0, 1.0));
    assert_eq!(s.normality_p, None);
    let doubled: Vec<f64> = b.iter().map(|x| 2.0 * x).collect();
    let s = consistency_stats(&doubled, &b).unwrap();
    assert_eq!(s.gamma, 2.0);
    assert!((s.r_squared - 1.0).abs() < 1e-15);
    let flipped: Vec<f64> = b.iter().map(|x| -x).collect();
    let s = consistency_stats(&flipped, &b).unwrap();
    assert_eq!((s.gamma, s.kendall), (-1.0, -1.0));
    assert!(consistency_stats(&b[..2], &b[..2]).is_err());
    assert!(consistency_stats(&b, &b[..4]).is_err());
    assert_eq!(consistency_stats(&[0.0; 4], &[0.0; 4]).unwrap().r_squared, 0.0);
}

#[test]
fn permuted_gains_are_inconsistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let b: Vec<f64> = (0..500).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut u = b.clone();
    u.shuffle(&mut rng);
    let s = consistency_stats(&u, &b).unwrap();
    assert!(s.r_squared <= 0.1, "r2 {}", s.r_squared);
    assert!(s.kendall.abs() <= 0.1);
    // normal residuals should not be rejected
    assert!(s.normality_p.unwrap() > 0.01);
}
