//! Small aggregation helpers for Monte Carlo reductions.
//!
//! Sums are pairwise so the reduction is both accurate and a pure function
//! of the (trial-ordered) inputs.

/// Pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// Sample mean.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Two-pass sample mean and unbiased variance (ddof = 1).
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n < 2 {
        return (mean(xs), 0.0);
    }
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (m, var)
}

/// Standard error of the sample mean: s / sqrt(n).
pub fn stderr_of_mean(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let (_, var) = mean_var(xs);
    (var / n as f64).sqrt()
}

/// Standard error of a binomial proportion `p` estimated from `trials` draws.
pub fn binomial_stderr(p: f64, trials: usize) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    (p * (1.0 - p) / trials as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive() {
        let xs: Vec<f64> = (0..1001).map(|i| i as f64 * 0.25).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-9);
    }

    #[test]
    fn mean_var_known_values() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let (m, v) = mean_var(&xs);
        assert!((m - 2.5).abs() < 1e-15);
        assert!((v - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(pairwise_sum(&[]), 0.0);
        let (m, v) = mean_var(&[3.0]);
        assert_eq!(m, 3.0);
        assert_eq!(v, 0.0);
        assert_eq!(stderr_of_mean(&[1.0]), 0.0);
    }
}
