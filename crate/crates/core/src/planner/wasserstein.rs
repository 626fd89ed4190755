use crate::error::{Error, Result};

/// 1-D Wasserstein-1 distance between two empirical samples.
///
/// Equal sizes match sorted samples pairwise; otherwise the integral of the
/// absolute difference of the empirical CDFs is taken over the merged support.
pub fn wasserstein_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("wasserstein_1d needs nonempty samples"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("wasserstein_1d: non-finite sample".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    if a.len() == b.len() {
        let s: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
        return Ok(s / a.len() as f64);
    }

    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut prev = a[0].min(b[0]);
    let mut total = 0.0;
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        let diff = (i as f64 / na - j as f64 / nb).abs();
        total += diff * (next - prev);
        while i < a.len() && a[i] == next {
            i += 1;
        }
        while j < b.len() && b[j] == next {
            j += 1;
        }
        prev = next;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_values() {
        assert_eq!(wasserstein_1d(&[0.3, 0.1, 0.2], &[0.2, 0.3, 0.1]).unwrap(), 0.0);
        let d = wasserstein_1d(&[1.0, 2.0, 5.0], &[1.5, 2.5, 5.5]).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
        assert_eq!(wasserstein_1d(&[0.0, 1.0], &[0.0, 3.0]).unwrap(), 1.0);
        assert!(wasserstein_1d(&[], &[1.0]).is_err());
    }

    #[test]
    fn unequal_sizes() {
        // point mass at 0 vs uniform on {0, 1}: half the mass moves by 1
        assert!((wasserstein_1d(&[0.0], &[0.0, 1.0]).unwrap() - 0.5).abs() < 1e-15);
        // {0,0,1} vs {0,1}: CDFs 2/3 vs 1/2 on [0,1)
        assert!((wasserstein_1d(&[0.0, 0.0, 1.0], &[0.0, 1.0]).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        // duplicated samples define the same distribution
        let a = [0.2, 0.7, 1.3];
        let aa = [0.2, 0.2, 0.7, 0.7, 1.3, 1.3];
        assert!(wasserstein_1d(&a, &aa).unwrap().abs() < 1e-15);
    }
}
