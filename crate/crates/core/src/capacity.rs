//! The ergodic capacity objective and its maximization.
//!
//! The objective is
//!
//! ```text
//! phi(Q) = E[ log2 det( I + (1/sigma2) G Q G^H ) ],   vec(G) ~ N_C(0, K),
//! ```
//!
//! maximized over the trace-constrained PSD set `{Q >= 0, tr Q <= P}`.
//! The maximization is a sample-average approximation: a fixed pool of gain
//! draws (common random numbers) makes the inner problem deterministic, so
//! projected gradient ascent with Armijo backtracking provably ascends and
//! the run is reproducible from its seed. Fresh draws are used only for the
//! final reported estimate.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{ChannelParams, GainSampler};
use crate::error::Error;
use crate::matrix::{eigh, project_psd_trace, CholeskyFactor, ComplexMatrix, HermitianMatrix};
use crate::rng::SeedSequence;
use crate::stats;
use crate::{Result, LOG2_E};

/// Feasibility slack on the PSD and trace constraints.
pub const FEASIBILITY_TOL: f64 = 1e-10;

/// Samples per substream chunk in parallel Monte Carlo averages.
const MC_CHUNK: usize = 256;

/// Hermitian PSD input covariance with trace at most the power budget.
#[derive(Debug, Clone)]
pub struct InputCovariance {
    q: HermitianMatrix,
}

impl InputCovariance {
    /// Validates `q >= 0` (min eigenvalue >= -1e-10) and `tr q <= power + 1e-10`.
    pub fn new(q: HermitianMatrix, power: f64) -> Result<Self> {
        let (w, _) = eigh(&q);
        if w[0] < -FEASIBILITY_TOL {
            return Err(Error::InvalidParams(format!(
                "input covariance has eigenvalue {:.3e} below -{FEASIBILITY_TOL:.0e}",
                w[0]
            )));
        }
        if q.trace() > power + FEASIBILITY_TOL {
            return Err(Error::InvalidParams(format!(
                "input covariance trace {:.12} exceeds budget {power}",
                q.trace()
            )));
        }
        Ok(Self { q })
    }

    /// The isotropic allocation `(power / n_tx) I`.
    pub fn isotropic(n_tx: usize, power: f64) -> Result<Self> {
        if power < 0.0 {
            return Err(Error::InvalidParams(format!(
                "power must be non-negative, got {power}"
            )));
        }
        let q = HermitianMatrix::scaled_identity(n_tx, power / n_tx as f64);
        Self::new(q, power)
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.q
    }

    pub fn dim(&self) -> usize {
        self.q.dim()
    }

    pub fn trace(&self) -> f64 {
        self.q.trace()
    }
}

/// A Monte Carlo scalar with its standard error and provenance.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    /// Estimate in bits.
    pub value: f64,
    /// Sample standard deviation divided by sqrt(samples), in bits.
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
}

/// `log2 det(I + (1/sigma2) G q G^H)` for one gain draw.
pub(crate) fn logdet_term(g: &ComplexMatrix, q: &HermitianMatrix, sigma2: f64) -> Result<f64> {
    Ok(received_covariance(g, q, sigma2)?.logdet_bits())
}

/// Cholesky factor of `I + (1/sigma2) G q G^H`, which is always Hermitian
/// positive definite.
pub(crate) fn received_covariance(
    g: &ComplexMatrix,
    q: &HermitianMatrix,
    sigma2: f64,
) -> Result<CholeskyFactor> {
    let gq = g.mul(q.as_matrix())?;
    let gqgh = gq.mul(&g.adjoint())?;
    let a = ComplexMatrix::identity(g.rows()).add(&gqgh.scale(Complex64::new(1.0 / sigma2, 0.0)))?;
    CholeskyFactor::new(&HermitianMatrix::part_of(&a))
}

fn check_sigma2(params: &ChannelParams) -> Result<()> {
    if params.sigma2() <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "capacity objective needs sigma2 > 0, got {}",
            params.sigma2()
        )));
    }
    Ok(())
}

fn check_dims(q: &InputCovariance, params: &ChannelParams) -> Result<()> {
    if q.dim() != params.n_tx() {
        return Err(Error::DimensionMismatch(format!(
            "input covariance dim {} vs n_tx {}",
            q.dim(),
            params.n_tx()
        )));
    }
    Ok(())
}

/// Monte Carlo estimate of `phi(q)` from fresh stationary gain draws.
///
/// Draws are partitioned into fixed-size chunks, one seed substream per
/// chunk, so the estimate is identical whatever the thread count.
pub fn phi_mc(
    q: &InputCovariance,
    params: &ChannelParams,
    samples: usize,
    seed: SeedSequence,
) -> Result<McEstimate> {
    check_sigma2(params)?;
    check_dims(q, params)?;
    if samples == 0 {
        return Err(Error::InvalidParams("samples must be >= 1".into()));
    }
    let sampler = GainSampler::new(params)?;
    let sigma2 = params.sigma2();
    let chunks = samples.div_ceil(MC_CHUNK);
    let values: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = seed.substream(chunk as u64);
            let count = MC_CHUNK.min(samples - chunk * MC_CHUNK);
            let mut out = Vec::with_capacity(count);
            for _ in 0..count {
                let g = sampler.stationary_draw(&mut rng);
                out.push(logdet_term(&g, q.matrix(), sigma2)?);
            }
            Ok::<Vec<f64>, Error>(out)
        })
        .collect::<Result<Vec<Vec<f64>>>>()?
        .into_iter()
        .flatten()
        .collect();
    let mean = stats::mean(&values);
    Ok(McEstimate {
        value: mean,
        stderr: stats::stderr_of_mean(&values),
        samples,
        seed: seed.master(),
    })
}

/// Deterministic sample-average objective over a fixed pool of gain draws.
pub fn phi_saa(
    q: &InputCovariance,
    params: &ChannelParams,
    gain_draws: &[ComplexMatrix],
) -> Result<f64> {
    check_sigma2(params)?;
    check_dims(q, params)?;
    if gain_draws.is_empty() {
        return Err(Error::InvalidParams("gain draw pool is empty".into()));
    }
    let sigma2 = params.sigma2();
    let values: Vec<f64> = gain_draws
        .par_iter()
        .map(|g| logdet_term(g, q.matrix(), sigma2))
        .collect::<Result<Vec<f64>>>()?;
    Ok(stats::mean(&values))
}

/// Gradient of the sample-average objective in bits:
///
/// ```text
/// grad phi(q) = log2(e) * avg_G (1/sigma2) G^H (I + (1/sigma2) G q G^H)^-1 G,
/// ```
///
/// symmetrized to remove arithmetic-level asymmetry.
pub fn phi_gradient_mc(
    q: &InputCovariance,
    params: &ChannelParams,
    gain_draws: &[ComplexMatrix],
) -> Result<HermitianMatrix> {
    check_sigma2(params)?;
    check_dims(q, params)?;
    if gain_draws.is_empty() {
        return Err(Error::InvalidParams("gain draw pool is empty".into()));
    }
    let sigma2 = params.sigma2();
    let per_draw: Vec<ComplexMatrix> = gain_draws
        .par_iter()
        .map(|g| {
            let factor = received_covariance(g, q.matrix(), sigma2)?;
            let x = factor.solve_mat(g)?;
            g.adjoint().mul(&x)
        })
        .collect::<Result<Vec<ComplexMatrix>>>()?;
    let n_tx = params.n_tx();
    let mut acc = ComplexMatrix::zeros(n_tx, n_tx);
    for m in &per_draw {
        acc = acc.add(m)?;
    }
    let scale = LOG2_E / (sigma2 * gain_draws.len() as f64);
    Ok(HermitianMatrix::part_of(&acc.scale(Complex64::new(scale, 0.0))))
}

/// Fixed pool of stationary gain draws for common-random-number objectives.
pub fn gain_draw_pool(
    params: &ChannelParams,
    count: usize,
    seed: SeedSequence,
) -> Result<Vec<ComplexMatrix>> {
    if count == 0 {
        return Err(Error::InvalidParams("draw pool must be non-empty".into()));
    }
    let sampler = GainSampler::new(params)?;
    let chunks = count.div_ceil(MC_CHUNK);
    Ok((0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = seed.substream(chunk as u64);
            let take = MC_CHUNK.min(count - chunk * MC_CHUNK);
            (0..take)
                .map(|_| sampler.stationary_draw(&mut rng))
                .collect::<Vec<_>>()
        })
        .collect::<Vec<Vec<_>>>()
        .into_iter()
        .flatten()
        .collect())
}

/// Settings for [`optimize_capacity`].
#[derive(Debug, Clone)]
pub struct OptimizerOptions {
    /// Size of the common-random-number draw pool.
    pub pool_size: usize,
    pub max_iters: usize,
    /// Stop when the iterate moves less than `tol_factor * power` in
    /// Frobenius norm.
    pub tol_factor: f64,
    /// Armijo sufficient-increase coefficient.
    pub armijo_c: f64,
    /// Smallest backtracking step before declaring stationarity.
    pub min_step: f64,
    /// Fresh-draw samples for the final reported estimate.
    pub final_samples: usize,
    pub seed: u64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            pool_size: 4096,
            max_iters: 500,
            tol_factor: 1e-6,
            armijo_c: 1e-4,
            min_step: 1e-12,
            final_samples: 100_000,
            seed: 1,
        }
    }
}

/// Outcome of a capacity optimization run.
#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub q: InputCovariance,
    /// Fresh-draw estimate of `phi` at the returned maximizer.
    pub estimate: McEstimate,
    /// Accepted ascent iterations.
    pub iterations: usize,
    /// False when the run stopped at `max_iters` without meeting the
    /// movement tolerance.
    pub converged: bool,
    /// Sample-average objective after each accepted iteration (index 0 is
    /// the start), non-decreasing by construction.
    pub saa_values: Vec<f64>,
}

/// Real Frobenius inner product of two Hermitian matrices.
fn inner(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
    let mut s = 0.0;
    for c in 0..a.dim() {
        for r in 0..a.dim() {
            s += (a.get(r, c).conj() * b.get(r, c)).re;
        }
    }
    s
}

/// Maximize `phi` over `{Q >= 0, tr Q <= P}` by projected gradient ascent on
/// a sample-average approximation.
pub fn optimize_capacity(params: &ChannelParams, opts: &OptimizerOptions) -> Result<OptimizeResult> {
    check_sigma2(params)?;
    let power = params.power();
    let seed = SeedSequence::new(opts.seed);
    let pool = gain_draw_pool(params, opts.pool_size, seed.child(0x504f4f4c))?; // "POOL"

    let mut q = InputCovariance::isotropic(params.n_tx(), power)?;
    let mut f = phi_saa(&q, params, &pool)?;
    let mut saa_values = vec![f];
    let tol = opts.tol_factor * power;
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..opts.max_iters {
        let grad = phi_gradient_mc(&q, params, &pool)?;
        let mut step = 1.0;
        let mut accepted: Option<(InputCovariance, f64, f64)> = None;
        while step >= opts.min_step {
            let shifted = q.matrix().add(&grad.scale(step))?;
            let projected = project_psd_trace(&shifted, power)?;
            let candidate = InputCovariance::new(projected, power)?;
            let fc = phi_saa(&candidate, params, &pool)?;
            let move_inner = inner(&grad, &candidate.matrix().sub(q.matrix())?);
            if fc >= f + opts.armijo_c * move_inner && fc >= f {
                let dq = candidate.matrix().sub(q.matrix())?.frobenius_norm();
                accepted = Some((candidate, fc, dq));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            None => {
                // No feasible ascent step: projected-gradient stationary.
                converged = true;
                break;
            }
            Some((candidate, fc, dq)) => {
                assert!(
                    fc + 1e-12 >= f,
                    "SAA objective decreased: {f} -> {fc}"
                );
                q = candidate;
                f = fc;
                saa_values.push(f);
                iterations += 1;
                if dq <= tol {
                    converged = true;
                    break;
                }
            }
        }
    }

    let estimate = phi_mc(&q, params, opts.final_samples, seed.child(0x46494e41))?; // "FINA"
    Ok(OptimizeResult {
        q,
        estimate,
        iterations,
        converged,
        saa_values,
    })
}

// ---------------------------------------------------------------------------
// SISO closed form
// ---------------------------------------------------------------------------

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive_simpson(f, a, m, fa, flm, fm, left, tol * 0.5, depth - 1)
        + adaptive_simpson(f, m, b, fm, frm, fb, right, tol * 0.5, depth - 1)
}

fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    adaptive_simpson(&f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Capacity of the unit-gain single-antenna channel at SNR `rho`, by
/// adaptive quadrature of `int_0^inf log2(1 + rho x) e^-x dx` to 1e-9
/// absolute. Equal to `log2(e) * exp(1/rho) * E1(1/rho)`.
pub fn siso_capacity_closed_form(rho: f64) -> Result<f64> {
    if rho <= 0.0 || !rho.is_finite() {
        return Err(Error::InvalidParams(format!(
            "SNR must be positive and finite, got {rho}"
        )));
    }
    // Tail beyond x = 70 is below e^-70 * log(1 + 70 rho), negligible at
    // every SNR of interest.
    let nat = integrate(|x| (1.0 + rho * x).ln() * (-x).exp(), 0.0, 70.0, 1e-13);
    Ok(nat * LOG2_E)
}
