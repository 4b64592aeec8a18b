//! Probabilistic and matrix-analytic bounds, each paired with a randomized
//! empirical check.
//!
//! Covered here:
//!
//! - the Chernoff bound on the total power of i.i.d. complex Gaussian
//!   vectors, `P[sum |X_i|^2 >= n(rho + delta)] <= ((1 + d) e^-d)^n` with
//!   `d = delta / rho`;
//! - operator-norm domination: `|A| I - A >= 0` for Hermitian `A`;
//! - log-det subadditivity: `log det(A + B) <= log det A +
//!   log det(I + B / lambda_min(A))`;
//! - the double geometric sums bounded by `n / (1 - alpha)`.

use rayon::prelude::*;

use crate::error::Error;
use crate::matrix::{
    cholesky_psd, eigh, logdet_hermitian_pd, operator_norm, sample_with_factor,
    standard_complex_gaussian, ComplexMatrix, HermitianMatrix, PSD_PIVOT_TOL,
};
use crate::rng::SeedSequence;
use crate::Result;

/// Slack accepted on the matrix-lemma margins.
pub const LEMMA_SLACK: f64 = 1e-9;

/// One cell of the power-tail verification grid.
#[derive(Debug, Clone, Copy)]
pub struct TailBoundReport {
    /// Trace of the covariance used for the draws.
    pub rho: f64,
    pub delta: f64,
    pub n: usize,
    pub trials: usize,
    /// Analytic Chernoff bound.
    pub bound: f64,
    /// Monte Carlo exceedance frequency.
    pub empirical: f64,
}

impl TailBoundReport {
    /// Binomial standard error of the empirical frequency.
    pub fn stderr(&self) -> f64 {
        crate::stats::binomial_stderr(self.empirical, self.trials)
    }

    /// True when the empirical rate respects the bound, with binomial slack
    /// only where the two are within noise of each other.
    pub fn holds(&self) -> bool {
        self.empirical <= self.bound + 3.0 * self.stderr()
            && (self.empirical <= self.bound || (self.bound - self.empirical).abs() <= 3.0 * self.stderr())
    }
}

/// The Chernoff tail bound `((1 + delta/rho) * 2^(-delta/(ln2 rho)))^n`,
/// evaluated as `exp(n (ln(1 + d) - d))` with `d = delta / rho`.
pub fn power_tail_bound(rho: f64, delta: f64, n: usize) -> Result<f64> {
    if rho <= 0.0 || delta <= 0.0 || n == 0 {
        return Err(Error::InvalidParams(format!(
            "need rho > 0, delta > 0, n >= 1; got rho = {rho}, delta = {delta}, n = {n}"
        )));
    }
    let d = delta / rho;
    Ok((n as f64 * (d.ln_1p() - d)).exp())
}

/// Monte Carlo estimate of `P[sum_{i=1..n} |X_i|^2 >= n (rho + delta)]` with
/// `X_i ~ N_C(0, cov)` and `rho = tr(cov)`, reported next to the analytic
/// bound.
pub fn power_tail_empirical(
    cov: &HermitianMatrix,
    n: usize,
    delta: f64,
    trials: usize,
    seed: SeedSequence,
) -> Result<TailBoundReport> {
    if delta <= 0.0 || n == 0 || trials == 0 {
        return Err(Error::InvalidParams(format!(
            "need delta > 0, n >= 1, trials >= 1; got delta = {delta}, n = {n}, trials = {trials}"
        )));
    }
    let rho = cov.trace();
    let factor = cholesky_psd(cov, PSD_PIVOT_TOL)?;
    let threshold = n as f64 * (rho + delta);

    const CHUNK: usize = 256;
    let chunks = trials.div_ceil(CHUNK);
    let exceed: usize = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = seed.substream(chunk as u64);
            let count = CHUNK.min(trials - chunk * CHUNK);
            let mut hits = 0usize;
            for _ in 0..count {
                let mut total = 0.0;
                for _ in 0..n {
                    let x = sample_with_factor(&factor, &mut rng);
                    total += x.iter().map(|z| z.norm_sqr()).sum::<f64>();
                }
                if total >= threshold {
                    hits += 1;
                }
            }
            hits
        })
        .sum();

    // A zero covariance draws only zero vectors; the bound degenerates to
    // its delta/rho -> infinity limit, which is zero.
    let bound = if rho == 0.0 {
        0.0
    } else {
        power_tail_bound(rho, delta, n)?
    };
    Ok(TailBoundReport {
        rho,
        delta,
        n,
        trials,
        bound,
        empirical: exceed as f64 / trials as f64,
    })
}

/// Outcome of the randomized matrix-lemma suites.
#[derive(Debug, Clone, Copy)]
pub struct MatrixLemmaReport {
    pub trials: usize,
    /// Trials where `lambda_min(|A| I - A)` fell below `-1e-10`.
    pub norm_dom_violations: usize,
    /// Smallest observed `lambda_min(|A| I - A)`.
    pub worst_norm_dom_margin: f64,
    /// Trials where the log-det subadditivity slack fell below `-1e-9`.
    pub logdet_violations: usize,
    /// Smallest observed `rhs - lhs` of the log-det inequality.
    pub worst_logdet_slack: f64,
}

impl MatrixLemmaReport {
    pub fn passed(&self) -> bool {
        self.norm_dom_violations == 0 && self.logdet_violations == 0
    }
}

fn random_hermitian(dim: usize, rng: &mut impl rand::Rng) -> HermitianMatrix {
    let m = ComplexMatrix::from_fn(dim, dim, |_, _| standard_complex_gaussian(rng));
    HermitianMatrix::part_of(&m)
}

fn random_psd(dim: usize, rng: &mut impl rand::Rng) -> HermitianMatrix {
    let a = ComplexMatrix::from_fn(dim, dim, |_, _| standard_complex_gaussian(rng));
    HermitianMatrix::part_of(&a.mul(&a.adjoint()).expect("square"))
}

/// Randomized check of the two appendix matrix inequalities on Hermitian
/// test matrices of dimensions cycling through 2..=6. Failures are counted,
/// never panicked.
pub fn check_matrix_lemmas(trials: usize, seed: SeedSequence) -> MatrixLemmaReport {
    let results: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = seed.substream(trial as u64);
            let dim = 2 + trial % 5;

            // lambda_min(|A| I - A) >= 0 for Hermitian A.
            let a = random_hermitian(dim, &mut rng);
            let dom = HermitianMatrix::scaled_identity(dim, operator_norm(a.as_matrix()))
                .sub(&a)
                .expect("same dim");
            let (w, _) = eigh(&dom);
            let norm_margin = w[0];

            // log det(A + B) <= log det A + log det(I + B / lambda_min(A))
            // for PD A and PSD B.
            let base = random_hermitian(dim, &mut rng);
            let (wb, _) = eigh(&base);
            let a_pd = base
                .add(&HermitianMatrix::scaled_identity(dim, wb[0].abs() + 0.1))
                .expect("same dim");
            let b = random_psd(dim, &mut rng);
            let (wa, _) = eigh(&a_pd);
            let lhs = logdet_hermitian_pd(&a_pd.add(&b).expect("same dim")).expect("PD");
            let shifted = HermitianMatrix::identity(dim)
                .add(&b.scale(1.0 / wa[0]))
                .expect("same dim");
            let rhs = logdet_hermitian_pd(&a_pd).expect("PD")
                + logdet_hermitian_pd(&shifted).expect("PD");
            (norm_margin, rhs - lhs)
        })
        .collect();

    let mut report = MatrixLemmaReport {
        trials,
        norm_dom_violations: 0,
        worst_norm_dom_margin: f64::INFINITY,
        logdet_violations: 0,
        worst_logdet_slack: f64::INFINITY,
    };
    for (margin, slack) in results {
        report.worst_norm_dom_margin = report.worst_norm_dom_margin.min(margin);
        report.worst_logdet_slack = report.worst_logdet_slack.min(slack);
        if margin < -1e-10 {
            report.norm_dom_violations += 1;
        }
        if slack < -LEMMA_SLACK {
            report.logdet_violations += 1;
        }
    }
    report
}

/// The two double geometric sums and their shared bound `n / (1 - alpha)`.
#[derive(Debug, Clone, Copy)]
pub struct GeometricSums {
    /// `sum_{i=1..n} sum_{k<i} alpha^(i-k)`, by direct summation.
    pub lower_sum: f64,
    /// `sum_{i=1..n} sum_{k>i} alpha^(k-i)`, by direct summation.
    pub upper_sum: f64,
    pub bound: f64,
}

impl GeometricSums {
    pub fn within_bound(&self) -> bool {
        self.lower_sum <= self.bound + LEMMA_SLACK && self.upper_sum <= self.bound + LEMMA_SLACK
    }
}

/// Direct summation of both double geometric sums for `0 < alpha < 1`.
pub fn geometric_sum_bounds(alpha: f64, n: usize) -> Result<GeometricSums> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::InvalidParams(format!(
            "geometric sums need 0 < alpha < 1, got {alpha}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParams("n must be >= 1".into()));
    }
    let mut lower = 0.0;
    for i in 1..=n {
        for k in 1..i {
            lower += alpha.powi((i - k) as i32);
        }
    }
    let mut upper = 0.0;
    for i in 1..=n {
        for k in (i + 1)..=n {
            upper += alpha.powi((k - i) as i32);
        }
    }
    Ok(GeometricSums {
        lower_sum: lower,
        upper_sum: upper,
        bound: n as f64 / (1.0 - alpha),
    })
}
