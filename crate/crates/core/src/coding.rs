//! Random-coding simulation with threshold decoding.
//!
//! Codebooks hold `ceil(2^(n R))` codewords of i.i.d. `N_C(0, Q)` symbols,
//! rejection-resampled into the average-power set
//! `E_n = { t : (1/n) sum |t_i|^2 <= P }`. The decoder declares the unique
//! codeword whose block information density against the received pair
//! `(z^n, G^n)` exceeds a threshold, and an erasure when no codeword or more
//! than one does. Erasures count as errors.
//!
//! Books above [`MAX_CODEBOOK`] codewords cannot be materialized. The error
//! simulation then samples the random-coding ensemble per trial instead: a
//! fresh transmitted codeword plus a bounded batch of impostor codewords.
//! The impostor batch under-counts multi-candidate erasures by at most the
//! union-bound residual `2^(-n gamma)`, which is negligible everywhere the
//! threshold experiment is informative.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::capacity::{phi_mc, InputCovariance};
use crate::channel::{transmit, ChannelParams, GainSampler};
use crate::error::Error;
use crate::infodensity::info_density_sequence;
use crate::matrix::{cholesky_psd, sample_with_factor, ComplexMatrix, PSD_PIVOT_TOL};
use crate::rng::SeedSequence;
use crate::Result;

/// Largest codebook that will be materialized.
pub const MAX_CODEBOOK: usize = 1 << 20;

const REJECTION_ATTEMPTS: usize = 100;

/// A materialized transmission code.
#[derive(Debug, Clone)]
pub struct Codebook {
    /// One `n_tx x n` matrix per codeword.
    pub codewords: Vec<ComplexMatrix>,
    pub rate_bits: f64,
    pub n: usize,
    /// Generating input covariance; also the decoder's density reference.
    pub q: InputCovariance,
}

impl Codebook {
    pub fn size(&self) -> usize {
        self.codewords.len()
    }
}

/// Number of codewords at rate `rate_bits` and block length `n`:
/// `max(1, ceil(2^(n rate)))`, as a float since it overflows integers long
/// before it stops being meaningful.
pub fn codebook_size(rate_bits: f64, n: usize) -> f64 {
    (2.0_f64).powf(rate_bits * n as f64).ceil().max(1.0)
}

fn draw_codeword(
    factor: &ComplexMatrix,
    n_tx: usize,
    n: usize,
    power: f64,
    rng: &mut impl Rng,
) -> Result<ComplexMatrix> {
    for _ in 0..REJECTION_ATTEMPTS {
        let mut data = Vec::with_capacity(n_tx * n);
        for _ in 0..n {
            data.extend(sample_with_factor(factor, rng));
        }
        let avg_power: f64 = data.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
        if avg_power <= power {
            return ComplexMatrix::from_column_major(n_tx, n, data);
        }
    }
    Err(Error::RejectionExhausted {
        attempts: REJECTION_ATTEMPTS,
        n,
    })
}

/// Generate a codebook of i.i.d. Gaussian codewords inside the power set.
pub fn build_codebook(
    rate_bits: f64,
    n: usize,
    q: &InputCovariance,
    params: &ChannelParams,
    rng: &mut impl Rng,
) -> Result<Codebook> {
    if rate_bits < 0.0 || !rate_bits.is_finite() {
        return Err(Error::InvalidParams(format!(
            "rate must be finite and non-negative, got {rate_bits}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParams("block length must be >= 1".into()));
    }
    if q.dim() != params.n_tx() {
        return Err(Error::DimensionMismatch(format!(
            "codebook covariance dim {} vs n_tx {}",
            q.dim(),
            params.n_tx()
        )));
    }
    let size_f = codebook_size(rate_bits, n);
    if size_f > MAX_CODEBOOK as f64 {
        return Err(Error::CodebookTooLarge {
            exponent: rate_bits * n as f64,
            cap_log2: 20,
        });
    }
    let size = size_f as usize;
    let factor = cholesky_psd(q.matrix(), PSD_PIVOT_TOL)?;
    let mut codewords = Vec::with_capacity(size);
    for _ in 0..size {
        codewords.push(draw_codeword(
            &factor,
            params.n_tx(),
            n,
            params.power(),
            rng,
        )?);
    }
    Ok(Codebook {
        codewords,
        rate_bits,
        n,
        q: q.clone(),
    })
}

fn codeword_columns(m: &ComplexMatrix) -> Vec<Vec<Complex64>> {
    (0..m.cols()).map(|c| m.column(c)).collect()
}

/// Threshold decoder: the unique codeword whose block information density
/// exceeds `threshold_bits`, or `None` (erasure) when no codeword or more
/// than one does.
pub fn threshold_decode(
    z_seq: &[Vec<Complex64>],
    gains: &[ComplexMatrix],
    book: &Codebook,
    sigma2: f64,
    threshold_bits: f64,
) -> Result<Option<usize>> {
    if z_seq.len() != book.n || gains.len() != book.n {
        return Err(Error::DimensionMismatch(format!(
            "received block length {} / gain length {} vs codebook n {}",
            z_seq.len(),
            gains.len(),
            book.n
        )));
    }
    let mut winner: Option<usize> = None;
    for (idx, codeword) in book.codewords.iter().enumerate() {
        let t_seq = codeword_columns(codeword);
        let density = info_density_sequence(&t_seq, z_seq, gains, &book.q, sigma2)?;
        if density > threshold_bits {
            if winner.is_some() {
                return Ok(None);
            }
            winner = Some(idx);
        }
    }
    Ok(winner)
}

/// Knobs for [`simulate_error_probability`].
#[derive(Debug, Clone)]
pub struct CodingOptions {
    /// Threshold margin; `None` derives `(C_hat - rate)/4` clamped to 0.01.
    pub gamma: Option<f64>,
    /// Impostor codewords sampled per trial when the conceptual book exceeds
    /// [`MAX_CODEBOOK`].
    pub impostor_cap: usize,
    /// Samples for the internal capacity estimate behind the default gamma.
    pub capacity_samples: usize,
}

impl Default for CodingOptions {
    fn default() -> Self {
        Self {
            gamma: None,
            impostor_cap: 128,
            capacity_samples: 4096,
        }
    }
}

/// Outcome of an error-rate run at one (rate, block length) point.
#[derive(Debug, Clone, Copy)]
pub struct CodingResult {
    pub rate_bits: f64,
    pub n: usize,
    /// Conceptual codebook size `ceil(2^(n rate))`.
    pub codebook_size: f64,
    /// Threshold margin actually used.
    pub gamma: f64,
    pub trials: usize,
    pub errors: usize,
    pub error_rate: f64,
}

/// Estimate the block error rate of threshold decoding at rate `rate_bits`.
///
/// Per trial: a fresh gain path, a uniformly chosen message, one channel
/// transmission, and a threshold decode at `(rate + gamma) n` bits. An
/// erasure or a wrong index counts as an error. Codewords come from the
/// isotropic covariance `(P / n_tx) I`.
pub fn simulate_error_probability(
    params: &ChannelParams,
    rate_bits: f64,
    n: usize,
    trials: usize,
    opts: &CodingOptions,
    seed: SeedSequence,
) -> Result<CodingResult> {
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be >= 1".into()));
    }
    if rate_bits < 0.0 || !rate_bits.is_finite() {
        return Err(Error::InvalidParams(format!(
            "rate must be finite and non-negative, got {rate_bits}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParams("block length must be >= 1".into()));
    }
    let q = InputCovariance::isotropic(params.n_tx(), params.power())?;
    let gamma = match opts.gamma {
        Some(g) if g > 0.0 => g,
        Some(g) => {
            return Err(Error::InvalidParams(format!(
                "gamma must be positive, got {g}"
            )))
        }
        None => {
            let cap = phi_mc(&q, params, opts.capacity_samples, seed.child(0x43415048))?; // "CAPH"
            ((cap.value - rate_bits) / 4.0).max(0.01)
        }
    };
    let threshold = (rate_bits + gamma) * n as f64;
    let size_f = codebook_size(rate_bits, n);
    let sigma2 = params.sigma2();
    let sampler = GainSampler::new(params)?;
    let trial_seed = seed.child(0x5452_4941); // "TRIA"

    let errors: usize = if size_f <= MAX_CODEBOOK as f64 {
        let mut book_rng = seed.child(0x424f4f4b).substream(0); // "BOOK"
        let book = build_codebook(rate_bits, n, &q, params, &mut book_rng)?;
        let flags = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = trial_seed.substream(trial as u64);
                let seq = sampler.sequence(n, &mut rng)?;
                let msg = rng.gen_range(0..book.size());
                let inputs = codeword_columns(&book.codewords[msg]);
                let z = transmit(&seq, &inputs, sigma2, &mut rng)?;
                let decoded = threshold_decode(&z, &seq.gains, &book, sigma2, threshold)?;
                Ok(decoded != Some(msg))
            })
            .collect::<Result<Vec<bool>>>()?;
        flags.into_iter().filter(|&e| e).count()
    } else {
        // Ensemble path: the conceptual book cannot be materialized, so each
        // trial draws the transmitted codeword and a bounded impostor batch
        // fresh from the generating ensemble.
        let factor = cholesky_psd(q.matrix(), PSD_PIVOT_TOL)?;
        let impostors = opts.impostor_cap;
        let flags = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = trial_seed.substream(trial as u64);
                let seq = sampler.sequence(n, &mut rng)?;
                let sent = draw_codeword(&factor, params.n_tx(), n, params.power(), &mut rng)?;
                let inputs = codeword_columns(&sent);
                let z = transmit(&seq, &inputs, sigma2, &mut rng)?;
                let sent_density = info_density_sequence(&inputs, &z, &seq.gains, &q, sigma2)?;
                if sent_density <= threshold {
                    return Ok(true);
                }
                for _ in 0..impostors {
                    let other =
                        draw_codeword(&factor, params.n_tx(), n, params.power(), &mut rng)?;
                    let cols = codeword_columns(&other);
                    let density = info_density_sequence(&cols, &z, &seq.gains, &q, sigma2)?;
                    if density > threshold {
                        return Ok(true);
                    }
                }
                Ok(false)
            })
            .collect::<Result<Vec<bool>>>()?;
        flags.into_iter().filter(|&e| e).count()
    };

    Ok(CodingResult {
        rate_bits,
        n,
        codebook_size: size_f,
        gamma,
        trials,
        errors,
        error_rate: errors as f64 / trials as f64,
    })
}
