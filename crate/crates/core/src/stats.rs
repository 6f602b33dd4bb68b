//! Order-fixed summary statistics.

use alloc::vec::Vec;

/// Pairwise (cascade) summation; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().fold(0.0, |a, b| a + b);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStderr {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

/// Sample mean and `sd / sqrt(n)` with the unbiased standard deviation.
pub fn mean_stderr(xs: &[f64]) -> MeanStderr {
    let n = xs.len();
    if n == 0 {
        return MeanStderr { mean: f64::NAN, stderr: f64::NAN, count: 0 };
    }
    if xs.iter().all(|&x| x == xs[0]) {
        return MeanStderr { mean: xs[0], stderr: if n < 2 { f64::NAN } else { 0.0 }, count: n };
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n < 2 {
        return MeanStderr { mean, stderr: f64::NAN, count: n };
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    MeanStderr { mean, stderr: libm::sqrt(var / n as f64), count: n }
}

/// Sample covariance of paired observations with a delta-method standard
/// error computed from the centred products.
pub fn covariance_stderr(xs: &[f64], ys: &[f64]) -> MeanStderr {
    assert_eq!(xs.len(), ys.len());
    let mx = pairwise_sum(xs) / xs.len() as f64;
    let my = pairwise_sum(ys) / ys.len() as f64;
    let prods: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let mut r = mean_stderr(&prods);
    let n = xs.len() as f64;
    r.mean *= n / (n - 1.0);
    r
}

/// `|a - b| <= k * sqrt(sa^2 + sb^2)`.
pub fn within_sigma(a: f64, b: f64, sa: f64, sb: f64, k: f64) -> bool {
    (a - b).abs() <= k * libm::sqrt(sa * sa + sb * sb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let xs: Vec<f64> = (1..=1000).map(|k| k as f64).collect();
        assert_eq!(pairwise_sum(&xs), 500500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn mean_and_stderr() {
        let r = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(r.mean, 2.5);
        assert!((r.stderr - libm::sqrt(5.0 / 3.0 / 4.0)).abs() < 1e-15);
        assert_eq!(mean_stderr(&[2.0, 2.0, 2.0]).stderr, 0.0);
    }

    #[test]
    fn covariance_of_copy_is_variance() {
        let xs = vec![1.0, 3.0, 2.0, 6.0];
        let c = covariance_stderr(&xs, &xs);
        assert!((c.mean - 14.0 / 3.0).abs() < 1e-12);
    }
}
