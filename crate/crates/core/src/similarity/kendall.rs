//! Tie-corrected Kendall rank correlation (tau-b) in O(n log n).

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Kendall's tau-b of two equally long samples.
///
/// Uses Knight's merge-sort formulation: sort by `(x, y)`, count the
/// inversions left in `y`, and correct for ties in `x`, `y` and both. Returns
/// 0 when either sample is constant.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "kendall_tau: lengths differ ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidArgument("kendall_tau needs at least two observations".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("kendall_tau: non-finite value".into()));
    }

    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let tied_x = tie_pairs(&pairs, |a, b| a.0 == b.0);
    let tied_xy = tie_pairs(&pairs, |a, b| a.0 == b.0 && a.1 == b.1);

    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let swaps = count_inversions(&mut ys);
    let tied_y = tie_pairs(&ys, |a, b| a == b);

    let denom = ((n0 - tied_x) as f64) * ((n0 - tied_y) as f64);
    if denom == 0.0 {
        return Ok(0.0);
    }
    let numer = n0 as f64 - tied_x as f64 - tied_y as f64 + tied_xy as f64 - 2.0 * swaps as f64;
    Ok((numer / denom.sqrt()).clamp(-1.0, 1.0))
}

/// Sum of `t(t-1)/2` over runs of equal neighbors in a sorted slice.
fn tie_pairs<T>(sorted: &[T], same: impl Fn(&T, &T) -> bool) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if same(&w[0], &w[1]) {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Bottom-up merge sort returning the number of strict inversions.
fn count_inversions(v: &mut Vec<f64>) -> u64 {
    let n = v.len();
    let mut buf = vec![0.0; n];
    let mut swaps = 0u64;
    let mut width = 1;
    while width < n {
        let mut lo = 0;
        while lo < n {
            let mid = (lo + width).min(n);
            let hi = (lo + 2 * width).min(n);
            let (mut i, mut j, mut k) = (lo, mid, lo);
            while i < mid && j < hi {
                if v[i].total_cmp(&v[j]) != Ordering::Greater {
                    buf[k] = v[i];
                    i += 1;
                } else {
                    buf[k] = v[j];
                    j += 1;
                    swaps += (mid - i) as u64;
                }
                k += 1;
            }
            buf[k..k + (mid - i)].copy_from_slice(&v[i..mid]);
            k += mid - i;
            buf[k..k + (hi - j)].copy_from_slice(&v[j..hi]);
            lo = hi;
        }
        std::mem::swap(v, &mut buf);
        width *= 2;
    }
    swaps
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// O(n^2) pair counting.
    fn brute(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len();
        let (mut c, mut d, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
        for i in 0..n {
            for j in i + 1..n {
                let sx = (x[i] - x[j]).signum() * if x[i] == x[j] { 0.0 } else { 1.0 };
                let sy = (y[i] - y[j]).signum() * if y[i] == y[j] { 0.0 } else { 1.0 };
                if sx == 0.0 {
                    tx += 1;
                }
                if sy == 0.0 {
                    ty += 1;
                }
                match (sx * sy).partial_cmp(&0.0).unwrap() {
                    Ordering::Greater => c += 1,
                    Ordering::Less => d += 1,
                    Ordering::Equal => {}
                }
            }
        }
        let n0 = (n * (n - 1) / 2) as i64;
        let denom = ((n0 - tx) * (n0 - ty)) as f64;
        if denom == 0.0 {
            0.0
        } else {
            (c - d) as f64 / denom.sqrt()
        }
    }

    #[test]
    fn known_values() {
        assert_eq!(kendall_tau(&[1., 2., 3., 4.], &[1., 2., 3., 4.]).unwrap(), 1.0);
        assert_eq!(kendall_tau(&[1., 2., 3., 4.], &[4., 3., 2., 1.]).unwrap(), -1.0);
        let t = kendall_tau(&[1., 2., 3., 4.], &[1., 2., 4., 3.]).unwrap();
        assert!((t - 2.0 / 3.0).abs() < 1e-15);
        let t = kendall_tau(&[1., 2., 3.], &[1., 3., 2.]).unwrap();
        assert!((t - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(kendall_tau(&[1., 1., 1.], &[1., 2., 3.]).unwrap(), 0.0);
    }

    #[test]
    fn errors() {
        assert!(kendall_tau(&[1., 2.], &[1.]).is_err());
        assert!(kendall_tau(&[1.], &[1.]).is_err());
    }

    proptest! {
        #[test]
        fn matches_pair_counting(v in prop::collection::vec((0u8..6, 0u8..6), 2..40)) {
            let x: Vec<f64> = v.iter().map(|p| p.0 as f64).collect();
            let y: Vec<f64> = v.iter().map(|p| p.1 as f64).collect();
            let fast = kendall_tau(&x, &y).unwrap();
            prop_assert!((fast - brute(&x, &y)).abs() < 1e-12);
            prop_assert!((fast - kendall_tau(&y, &x).unwrap()).abs() < 1e-12);
            let ex: Vec<f64> = x.iter().map(|v| v.exp() * 3.0 + 1.0).collect();
            prop_assert!((fast - kendall_tau(&ex, &y).unwrap()).abs() < 1e-12);
        }
    }
}
