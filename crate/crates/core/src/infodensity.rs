//! Information densities of the fading channel with receiver-side gain
//! knowledge, and the Monte Carlo experiments built on them.
//!
//! For i.i.d. inputs `T_i ~ N_C(0, Q)` the per-symbol density has the closed
//! form
//!
//! ```text
//! i(t; z, G) = log2 det(I + (1/s2) G Q G^H)
//!            - |z - G t|^2 / (ln2 s2)
//!            + z^H (I + (1/s2) G Q G^H)^-1 z / (ln2 s2),
//! ```
//!
//! and the block density is the sum of per-symbol terms. Its mean per symbol
//! equals `phi(Q)` for every memory factor, while its variance decays like
//! `1/n`; both facts are what [`variance_experiment`] and
//! [`correlation_decay_experiment`] measure.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::capacity::{phi_mc, received_covariance, InputCovariance};
use crate::channel::{transmit, ChannelParams, GainSampler};
use crate::error::Error;
use crate::matrix::{cholesky_psd, sample_with_factor, ComplexMatrix, PSD_PIVOT_TOL};
use crate::rng::SeedSequence;
use crate::stats;
use crate::{Result, LOG2_E};

/// Samples used for the reference `phi` estimate carried in the reports.
const PHI_REFERENCE_SAMPLES: usize = 100_000;

/// Per-symbol information density in bits.
pub fn info_density_symbol(
    t: &[Complex64],
    z: &[Complex64],
    g: &ComplexMatrix,
    q: &InputCovariance,
    sigma2: f64,
) -> Result<f64> {
    if sigma2 <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "information density needs sigma2 > 0, got {sigma2}"
        )));
    }
    if t.len() != g.cols() || z.len() != g.rows() || q.dim() != g.cols() {
        return Err(Error::DimensionMismatch(format!(
            "t: {}, z: {}, g: {}x{}, q: {}",
            t.len(),
            z.len(),
            g.rows(),
            g.cols(),
            q.dim()
        )));
    }
    let factor = received_covariance(g, q.matrix(), sigma2)?;
    let term1 = factor.logdet_bits();

    let gt = g.matvec(t)?;
    let resid_sq: f64 = z
        .iter()
        .zip(&gt)
        .map(|(zi, gi)| (zi - gi).norm_sqr())
        .sum();

    let x = factor.solve_vec(z)?;
    let quad: f64 = z.iter().zip(&x).map(|(zi, xi)| (zi.conj() * xi).re).sum();

    let inv_ln2_s2 = LOG2_E / sigma2;
    Ok(term1 - resid_sq * inv_ln2_s2 + quad * inv_ln2_s2)
}

/// Block information density: the sum of per-symbol densities.
pub fn info_density_sequence(
    t_seq: &[Vec<Complex64>],
    z_seq: &[Vec<Complex64>],
    gains: &[ComplexMatrix],
    q: &InputCovariance,
    sigma2: f64,
) -> Result<f64> {
    if t_seq.len() != z_seq.len() || t_seq.len() != gains.len() {
        return Err(Error::DimensionMismatch(format!(
            "t: {}, z: {}, gains: {}",
            t_seq.len(),
            z_seq.len(),
            gains.len()
        )));
    }
    let mut total = 0.0;
    for ((t, z), g) in t_seq.iter().zip(z_seq).zip(gains) {
        total += info_density_symbol(t, z, g, q, sigma2)?;
    }
    Ok(total)
}

/// Summary of a normalized-information-density experiment at one block
/// length.
#[derive(Debug, Clone, Copy)]
pub struct InfoDensityStats {
    pub n: usize,
    pub alpha: f64,
    pub trials: usize,
    /// Mean of `i / n` over trials, in bits.
    pub mean_bits: f64,
    /// Variance of `i / n` over trials, in bits^2.
    pub var: f64,
    /// Reference Monte Carlo `phi(Q)` with its own substream.
    pub phi_bits: f64,
    /// `var * n`; flat in `n` when the variance decays like `1/n`.
    pub kappa_fit: f64,
}

impl InfoDensityStats {
    /// Standard error of `mean_bits`.
    pub fn mean_stderr(&self) -> f64 {
        (self.var / self.trials as f64).sqrt()
    }
}

/// Sample full blocks (gain path, i.i.d. Gaussian inputs, channel outputs)
/// and report mean and variance of the normalized information density.
pub fn variance_experiment(
    params: &ChannelParams,
    q: &InputCovariance,
    n: usize,
    trials: usize,
    seed: SeedSequence,
) -> Result<InfoDensityStats> {
    if trials < 100 {
        return Err(Error::InvalidParams(format!(
            "variance experiment needs at least 100 trials, got {trials}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParams("block length must be >= 1".into()));
    }
    let values = normalized_density_trials(params, q, n, trials, seed)?;
    let (mean_bits, var) = stats::mean_var(&values);
    let phi = phi_mc(q, params, PHI_REFERENCE_SAMPLES, seed.child(0x504849))?; // "PHI"
    Ok(InfoDensityStats {
        n,
        alpha: params.alpha(),
        trials,
        mean_bits,
        var,
        phi_bits: phi.value,
        kappa_fit: var * n as f64,
    })
}

/// One normalized block density per trial, trial-indexed substreams.
pub fn normalized_density_trials(
    params: &ChannelParams,
    q: &InputCovariance,
    n: usize,
    trials: usize,
    seed: SeedSequence,
) -> Result<Vec<f64>> {
    let sampler = GainSampler::new(params)?;
    let input_factor = cholesky_psd(q.matrix(), PSD_PIVOT_TOL)?;
    let sigma2 = params.sigma2();
    (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = seed.substream(trial as u64);
            let seq = sampler.sequence(n, &mut rng)?;
            let inputs: Vec<Vec<Complex64>> = (0..n)
                .map(|_| sample_with_factor(&input_factor, &mut rng))
                .collect();
            let outputs = transmit(&seq, &inputs, sigma2, &mut rng)?;
            let density = info_density_sequence(&inputs, &outputs, &seq.gains, q, sigma2)?;
            Ok(density / n as f64)
        })
        .collect()
}

/// Lag-covariance estimate of the per-symbol log-det statistic.
#[derive(Debug, Clone, Copy)]
pub struct LagCovariance {
    pub lag: usize,
    /// Sample covariance of `log2 det(I + (1/s2) G_i Q G_i^H)` at distance
    /// `lag` along the gain path.
    pub cov: f64,
    /// Standard error of the covariance estimate.
    pub stderr: f64,
    /// Fitted upper-bound shape `c' * alpha^(lag/2)`; zero until a fit ran.
    pub bound_shape: f64,
}

/// Fit of the correlation decay against the geometric shape
/// `c' * sqrt(alpha)^lag`.
#[derive(Debug, Clone)]
pub struct CorrelationDecay {
    pub lags: Vec<LagCovariance>,
    /// Least-squares `c'` over lags whose estimate clears twice its standard
    /// error; zero when no lag does.
    pub c_prime: f64,
}

/// Estimate lag covariances of the log-det statistic along the gain path.
/// Valid for any memory factor, including zero (where every lag >= 1 is an
/// estimate of an exact zero).
pub fn lag_covariance_mc(
    params: &ChannelParams,
    q: &InputCovariance,
    lags: &[usize],
    trials: usize,
    seed: SeedSequence,
) -> Result<Vec<LagCovariance>> {
    if lags.is_empty() {
        return Err(Error::InvalidParams("lag list is empty".into()));
    }
    if trials < 2 {
        return Err(Error::InvalidParams("need at least 2 trials".into()));
    }
    if params.sigma2() <= 0.0 {
        return Err(Error::InvalidParams(
            "lag covariance needs sigma2 > 0".into(),
        ));
    }
    let max_lag = *lags.iter().max().expect("non-empty");
    let sampler = GainSampler::new(params)?;
    let sigma2 = params.sigma2();

    // Per trial, the log-det statistic at positions 1 and 1 + lag.
    let rows: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = seed.substream(trial as u64);
            let seq = sampler.sequence(max_lag + 1, &mut rng)?;
            seq.gains
                .iter()
                .map(|g| crate::capacity::logdet_term(g, q.matrix(), sigma2))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let column = |j: usize| -> Vec<f64> { rows.iter().map(|r| r[j]).collect() };
    let x0 = column(0);
    let x0_mean = stats::mean(&x0);
    let mut out = Vec::with_capacity(lags.len());
    for &lag in lags {
        let xl = column(lag);
        let xl_mean = stats::mean(&xl);
        let products: Vec<f64> = x0
            .iter()
            .zip(&xl)
            .map(|(a, b)| (a - x0_mean) * (b - xl_mean))
            .collect();
        let cov = stats::pairwise_sum(&products) / (trials - 1) as f64;
        let stderr = stats::stderr_of_mean(&products);
        out.push(LagCovariance {
            lag,
            cov,
            stderr,
            bound_shape: 0.0,
        });
    }
    Ok(out)
}

/// Estimate lag covariances and fit `c'` in the geometric envelope
/// `c' sqrt(alpha)^lag`. Rejects `alpha = 0`, where the covariance is
/// identically zero and the fit is meaningless; use [`lag_covariance_mc`]
/// to check the exact-zero path.
pub fn correlation_decay_experiment(
    params: &ChannelParams,
    q: &InputCovariance,
    lags: &[usize],
    trials: usize,
    seed: SeedSequence,
) -> Result<CorrelationDecay> {
    if params.alpha() == 0.0 {
        return Err(Error::InvalidParams(
            "correlation decay fit requires alpha > 0; at alpha = 0 the lag covariance is exactly zero".into(),
        ));
    }
    let mut estimates = lag_covariance_mc(params, q, lags, trials, seed)?;
    let half_log_alpha = 0.5 * params.alpha().ln();

    // Least squares for ln c' with the slope pinned at ln sqrt(alpha),
    // over lags >= 1 whose estimate clears the noise floor.
    let usable: Vec<&LagCovariance> = estimates
        .iter()
        .filter(|e| e.lag >= 1 && e.cov.abs() > 2.0 * e.stderr)
        .collect();
    let c_prime = if usable.is_empty() {
        0.0
    } else {
        let logs: Vec<f64> = usable
            .iter()
            .map(|e| e.cov.abs().ln() - e.lag as f64 * half_log_alpha)
            .collect();
        stats::mean(&logs).exp()
    };
    for e in estimates.iter_mut() {
        e.bound_shape = c_prime * (e.lag as f64 * half_log_alpha).exp();
    }
    Ok(CorrelationDecay {
        lags: estimates,
        c_prime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::HermitianMatrix;

    fn unit_q() -> InputCovariance {
        InputCovariance::new(HermitianMatrix::identity(1), 1.0).unwrap()
    }

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn symbol_density_zero_gain_is_zero() {
        let g = ComplexMatrix::zeros(2, 2);
        let q = InputCovariance::new(HermitianMatrix::identity(2), 2.0).unwrap();
        let t = vec![Complex64::new(0.3, -1.2), Complex64::new(2.0, 0.1)];
        let z = vec![Complex64::new(-0.7, 0.4), Complex64::new(1.5, 2.5)];
        let d = info_density_symbol(&t, &z, &g, &q, 1.0).unwrap();
        assert!(d.abs() < 1e-12, "density {d}");
    }

    #[test]
    fn symbol_density_siso_point_values() {
        let mut g = ComplexMatrix::zeros(1, 1);
        g.set(0, 0, one());
        // t = 1, z = 1: 1 + 1/(2 ln 2).
        let d = info_density_symbol(&[one()], &[one()], &g, &unit_q(), 1.0).unwrap();
        let want = 1.0 + 0.5 * LOG2_E;
        assert!((d - want).abs() < 1e-12, "density {d}, want {want}");
        assert!((want - 1.7213475204444817).abs() < 1e-15);
        // t = 0, z = 0: only the log-det term survives.
        let zero = Complex64::new(0.0, 0.0);
        let d0 = info_density_symbol(&[zero], &[zero], &g, &unit_q(), 1.0).unwrap();
        assert!((d0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symbol_density_dimension_checks() {
        let g = ComplexMatrix::zeros(2, 1);
        let q = unit_q();
        let bad_t = vec![one(), one()];
        let z = vec![one(), one()];
        assert!(matches!(
            info_density_symbol(&bad_t, &z, &g, &q, 1.0),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(info_density_symbol(&[one()], &z, &g, &q, 0.0).is_err());
    }

    #[test]
    fn sequence_density_single_symbol_and_zero_gains() {
        let mut g = ComplexMatrix::zeros(1, 1);
        g.set(0, 0, one());
        let t = vec![vec![one()]];
        let z = vec![vec![one()]];
        let seq = info_density_sequence(&t, &z, std::slice::from_ref(&g), &unit_q(), 1.0).unwrap();
        let sym = info_density_symbol(&t[0], &z[0], &g, &unit_q(), 1.0).unwrap();
        assert_eq!(seq, sym);

        let zeros: Vec<ComplexMatrix> = (0..4).map(|_| ComplexMatrix::zeros(1, 1)).collect();
        let ts = vec![vec![one()]; 4];
        let zs = vec![vec![Complex64::new(0.5, -0.5)]; 4];
        let total = info_density_sequence(&ts, &zs, &zeros, &unit_q(), 1.0).unwrap();
        assert!(total.abs() < 1e-12);
    }

    #[test]
    fn variance_experiment_mean_matches_phi() {
        let params = ChannelParams::siso(1.0, 1.0, 0.0).unwrap();
        let stats =
            variance_experiment(&params, &unit_q(), 64, 2000, SeedSequence::new(60)).unwrap();
        let tol = 3.0 * stats.mean_stderr().hypot(0.004);
        assert!(
            (stats.mean_bits - stats.phi_bits).abs() <= tol,
            "mean {} vs phi {}",
            stats.mean_bits,
            stats.phi_bits
        );
    }

    #[test]
    fn variance_halves_when_block_doubles() {
        let params = ChannelParams::siso(1.0, 1.0, 0.0).unwrap();
        let s1 = variance_experiment(&params, &unit_q(), 64, 2000, SeedSequence::new(61)).unwrap();
        let s2 = variance_experiment(&params, &unit_q(), 128, 2000, SeedSequence::new(62)).unwrap();
        let ratio = s1.var / s2.var;
        assert!(
            (1.4..=2.8).contains(&ratio),
            "variance ratio {ratio} outside [1.4, 2.8]"
        );
    }

    #[test]
    fn mean_is_alpha_invariant() {
        let q = unit_q();
        let p0 = ChannelParams::siso(1.0, 1.0, 0.0).unwrap();
        let p9 = ChannelParams::siso(1.0, 1.0, 0.9).unwrap();
        let s0 = variance_experiment(&p0, &q, 64, 2000, SeedSequence::new(63)).unwrap();
        let s9 = variance_experiment(&p9, &q, 64, 2000, SeedSequence::new(64)).unwrap();
        let tol = 3.0 * s0.mean_stderr().hypot(s9.mean_stderr());
        assert!(
            (s0.mean_bits - s9.mean_bits).abs() <= tol,
            "alpha 0 mean {} vs alpha 0.9 mean {}",
            s0.mean_bits,
            s9.mean_bits
        );
    }

    #[test]
    fn variance_experiment_requires_trials() {
        let params = ChannelParams::siso(1.0, 1.0, 0.0).unwrap();
        assert!(matches!(
            variance_experiment(&params, &unit_q(), 8, 99, SeedSequence::new(65)),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn lag_zero_covariance_is_variance() {
        let params = ChannelParams::siso(1.0, 1.0, 0.81).unwrap();
        let est =
            lag_covariance_mc(&params, &unit_q(), &[0, 1], 20_000, SeedSequence::new(66)).unwrap();
        assert_eq!(est[0].lag, 0);
        assert!(est[0].cov > 0.0);
        // Lag 0 covariance is the variance of the statistic, strictly above
        // any lag >= 1 covariance magnitude.
        assert!(est[0].cov > est[1].cov.abs());
    }

    #[test]
    fn iid_gains_have_zero_lag_covariance() {
        let params = ChannelParams::siso(1.0, 1.0, 0.0).unwrap();
        let est = lag_covariance_mc(
            &params,
            &unit_q(),
            &[1, 2, 3],
            50_000,
            SeedSequence::new(67),
        )
        .unwrap();
        for e in &est {
            assert!(
                e.cov.abs() <= 3.0 * e.stderr,
                "lag {} covariance {} exceeds noise floor {}",
                e.lag,
                e.cov,
                3.0 * e.stderr
            );
        }
        assert!(correlation_decay_experiment(
            &params,
            &unit_q(),
            &[1, 2],
            1000,
            SeedSequence::new(68)
        )
        .is_err());
    }

    #[test]
    fn correlation_decays_like_sqrt_alpha() {
        // alpha = 0.81: successive lag covariances shrink by about 0.9.
        let params = ChannelParams::siso(1.0, 1.0, 0.81).unwrap();
        let lags = [1usize, 2, 3, 4, 5, 6];
        let decay = correlation_decay_experiment(
            &params,
            &unit_q(),
            &lags,
            100_000,
            SeedSequence::new(69),
        )
        .unwrap();
        assert!(decay.c_prime > 0.0);
        // Free-slope fit of ln|cov| against lag.
        let pts: Vec<(f64, f64)> = decay
            .lags
            .iter()
            .filter(|e| e.cov.abs() > 2.0 * e.stderr)
            .map(|e| (e.lag as f64, e.cov.abs().ln()))
            .collect();
        assert!(pts.len() >= 4, "only {} usable lags", pts.len());
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let ratio = slope.exp();
        assert!(
            (ratio - 0.9).abs() <= 0.25 * 0.9,
            "fitted per-lag ratio {ratio}, want ~0.9"
        );
    }
}
