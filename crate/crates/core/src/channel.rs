//! The time-varying fading channel: a first-order Gauss-Markov gain process
//! applied symbol-by-symbol with additive circularly-symmetric noise.
//!
//! The gain recursion is
//!
//! ```text
//! G_i = sqrt(alpha) G_{i-1} + sqrt(1 - alpha) W_i,    i = 2..n,
//! ```
//!
//! with `vec(G_1)` and every `vec(W_i)` drawn i.i.d. from `N_C(0, K)`. The
//! innovations are retained with the gains so the telescoped closed forms can
//! be checked exactly against the recursion rather than statistically.

use num_complex::Complex64;
use rand::Rng;

use crate::error::Error;
use crate::matrix::{
    cholesky_psd, sample_with_factor, ComplexMatrix, HermitianMatrix, PSD_PIVOT_TOL,
};
use crate::Result;

/// Model constants: antenna counts, noise variance, power budget, memory
/// factor, and the covariance `K` of `vec(G)`.
#[derive(Debug, Clone)]
pub struct ChannelParams {
    n_tx: usize,
    n_rx: usize,
    sigma2: f64,
    power: f64,
    alpha: f64,
    gain_cov: HermitianMatrix,
}

impl ChannelParams {
    pub fn new(
        n_tx: usize,
        n_rx: usize,
        sigma2: f64,
        power: f64,
        alpha: f64,
        gain_cov: HermitianMatrix,
    ) -> Result<Self> {
        if n_tx == 0 || n_rx == 0 {
            return Err(Error::InvalidParams(
                "antenna counts must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::InvalidParams(format!(
                "memory factor must satisfy 0 <= alpha < 1, got {alpha}"
            )));
        }
        if sigma2 < 0.0 || !sigma2.is_finite() {
            return Err(Error::InvalidParams(format!(
                "noise variance must be finite and non-negative, got {sigma2}"
            )));
        }
        if power < 0.0 || !power.is_finite() {
            return Err(Error::InvalidParams(format!(
                "power budget must be finite and non-negative, got {power}"
            )));
        }
        if gain_cov.dim() != n_rx * n_tx {
            return Err(Error::DimensionMismatch(format!(
                "gain covariance has dim {}, expected n_rx * n_tx = {}",
                gain_cov.dim(),
                n_rx * n_tx
            )));
        }
        Ok(Self {
            n_tx,
            n_rx,
            sigma2,
            power,
            alpha,
            gain_cov,
        })
    }

    /// Single-antenna channel with unit gain covariance.
    pub fn siso(sigma2: f64, power: f64, alpha: f64) -> Result<Self> {
        Self::new(1, 1, sigma2, power, alpha, HermitianMatrix::identity(1))
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gain_cov(&self) -> &HermitianMatrix {
        &self.gain_cov
    }
}

/// A realized gain path `G_1..G_n` together with the draws that produced it:
/// `innovations[0] = G_1` and `innovations[i-1] = W_i` for `i >= 2`.
#[derive(Debug, Clone)]
pub struct GainSequence {
    pub gains: Vec<ComplexMatrix>,
    pub innovations: Vec<ComplexMatrix>,
}

impl GainSequence {
    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }
}

/// Reusable sampler holding the Cholesky factor of `K`; one factorization
/// serves every trial of an experiment.
pub struct GainSampler {
    factor: ComplexMatrix,
    n_tx: usize,
    n_rx: usize,
    alpha: f64,
}

impl GainSampler {
    pub fn new(params: &ChannelParams) -> Result<Self> {
        Ok(Self {
            factor: cholesky_psd(&params.gain_cov, PSD_PIVOT_TOL)?,
            n_tx: params.n_tx,
            n_rx: params.n_rx,
            alpha: params.alpha,
        })
    }

    /// One draw from the stationary gain law: `vec(G) ~ N_C(0, K)` reshaped
    /// column-major to `n_rx x n_tx`.
    pub fn stationary_draw(&self, rng: &mut impl Rng) -> ComplexMatrix {
        let v = sample_with_factor(&self.factor, rng);
        ComplexMatrix::from_column_major(self.n_rx, self.n_tx, v)
            .expect("factor dimension fixed at construction")
    }

    /// A length-`n` path of the recursion with its innovations.
    pub fn sequence(&self, n: usize, rng: &mut impl Rng) -> Result<GainSequence> {
        if n == 0 {
            return Err(Error::InvalidParams("sequence length must be >= 1".into()));
        }
        let sqrt_a = self.alpha.sqrt();
        let sqrt_1a = (1.0 - self.alpha).sqrt();
        let mut gains = Vec::with_capacity(n);
        let mut innovations = Vec::with_capacity(n);
        let g1 = self.stationary_draw(rng);
        gains.push(g1.clone());
        innovations.push(g1);
        for _ in 1..n {
            let w = self.stationary_draw(rng);
            let prev = gains.last().expect("non-empty");
            let g = prev
                .scale(Complex64::new(sqrt_a, 0.0))
                .add(&w.scale(Complex64::new(sqrt_1a, 0.0)))?;
            gains.push(g);
            innovations.push(w);
        }
        Ok(GainSequence { gains, innovations })
    }
}

/// Draw a gain path for `params`; see [`GainSampler::sequence`].
pub fn sample_gain_sequence(
    params: &ChannelParams,
    n: usize,
    rng: &mut impl Rng,
) -> Result<GainSequence> {
    GainSampler::new(params)?.sequence(n, rng)
}

/// Telescoped closed form of the recursion from the stored innovations:
///
/// ```text
/// G_i = sqrt(alpha)^(i-1) G_1 + sqrt(1-alpha) sum_{j=2..i} sqrt(alpha)^(i-j) W_j.
/// ```
///
/// `i` is 1-based. Requires `0 < alpha < 1`; at `alpha = 0` the recursion is
/// already the identity `G_i = W_i`.
pub fn gain_closed_form(seq: &GainSequence, alpha: f64, i: usize) -> Result<ComplexMatrix> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::InvalidParams(format!(
            "closed form requires 0 < alpha < 1, got {alpha}"
        )));
    }
    if i == 0 || i > seq.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: seq.len(),
        });
    }
    let sqrt_a = alpha.sqrt();
    let sqrt_1a = (1.0 - alpha).sqrt();
    let mut acc = seq.innovations[0].scale(Complex64::new(sqrt_a.powi(i as i32 - 1), 0.0));
    for j in 2..=i {
        let coeff = sqrt_1a * sqrt_a.powi((i - j) as i32);
        acc = acc.add(&seq.innovations[j - 1].scale(Complex64::new(coeff, 0.0)))?;
    }
    Ok(acc)
}

/// Two-index form anchored at an interior gain:
///
/// ```text
/// G_{i2} = sqrt(alpha)^(i2-i1) G_{i1} + sqrt(1-alpha) sum_{j=i1+1..i2} sqrt(alpha)^(i2-j) W_j.
/// ```
///
/// Indices are 1-based and must satisfy `i1 < i2`.
pub fn two_index_form(
    seq: &GainSequence,
    alpha: f64,
    i1: usize,
    i2: usize,
) -> Result<ComplexMatrix> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::InvalidParams(format!(
            "two-index form requires 0 < alpha < 1, got {alpha}"
        )));
    }
    if i1 == 0 || i2 > seq.len() {
        return Err(Error::IndexOutOfRange {
            index: if i1 == 0 { i1 } else { i2 },
            len: seq.len(),
        });
    }
    if i1 >= i2 {
        return Err(Error::InvalidOrder { i1, i2 });
    }
    let sqrt_a = alpha.sqrt();
    let sqrt_1a = (1.0 - alpha).sqrt();
    let mut acc = seq.gains[i1 - 1].scale(Complex64::new(sqrt_a.powi((i2 - i1) as i32), 0.0));
    for j in (i1 + 1)..=i2 {
        let coeff = sqrt_1a * sqrt_a.powi((i2 - j) as i32);
        acc = acc.add(&seq.innovations[j - 1].scale(Complex64::new(coeff, 0.0)))?;
    }
    Ok(acc)
}

/// Pass inputs through the realized channel: `z_i = G_i t_i + xi_i` with
/// `xi_i ~ N_C(0, sigma2 I)`.
pub fn transmit(
    seq: &GainSequence,
    inputs: &[Vec<Complex64>],
    sigma2: f64,
    rng: &mut impl Rng,
) -> Result<Vec<Vec<Complex64>>> {
    if inputs.len() != seq.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} inputs for a length-{} gain sequence",
            inputs.len(),
            seq.len()
        )));
    }
    if sigma2 < 0.0 {
        return Err(Error::InvalidParams(format!(
            "noise variance must be non-negative, got {sigma2}"
        )));
    }
    let sigma = sigma2.sqrt();
    let mut outputs = Vec::with_capacity(inputs.len());
    for (g, t) in seq.gains.iter().zip(inputs) {
        let mut z = g.matvec(t)?;
        if sigma > 0.0 {
            for zi in z.iter_mut() {
                *zi += crate::matrix::standard_complex_gaussian(rng) * sigma;
            }
        }
        outputs.push(z);
    }
    Ok(outputs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedSequence;
    use crate::stats;

    fn siso_params(alpha: f64) -> ChannelParams {
        ChannelParams::siso(1.0, 1.0, alpha).unwrap()
    }

    #[test]
    fn params_reject_bad_alpha() {
        assert!(ChannelParams::siso(1.0, 1.0, 1.0).is_err());
        assert!(ChannelParams::siso(1.0, 1.0, -0.1).is_err());
    }

    #[test]
    fn params_reject_covariance_dim() {
        let k = HermitianMatrix::identity(3);
        assert!(ChannelParams::new(2, 2, 1.0, 1.0, 0.5, k).is_err());
    }

    #[test]
    fn alpha_zero_gains_are_innovations() {
        let params = siso_params(0.0);
        let mut rng = SeedSequence::new(21).substream(0);
        let seq = sample_gain_sequence(&params, 16, &mut rng).unwrap();
        for (g, w) in seq.gains.iter().zip(&seq.innovations) {
            assert_eq!(g.get(0, 0), w.get(0, 0));
        }
    }

    #[test]
    fn one_step_recursion_exact() {
        // At alpha = 0.25: G_2 = 0.5 G_1 + sqrt(0.75) W_2.
        let params = siso_params(0.25);
        let mut rng = SeedSequence::new(22).substream(0);
        let seq = sample_gain_sequence(&params, 2, &mut rng).unwrap();
        let want = seq.gains[0].get(0, 0) * 0.5 + seq.innovations[1].get(0, 0) * 0.75_f64.sqrt();
        assert!((seq.gains[1].get(0, 0) - want).norm() < 1e-15);
        let cf = gain_closed_form(&seq, 0.25, 2).unwrap();
        assert!((cf.get(0, 0) - want).norm() < 1e-15);
    }

    #[test]
    fn closed_form_base_case_is_g1() {
        let params = siso_params(0.5);
        let mut rng = SeedSequence::new(23).substream(0);
        let seq = sample_gain_sequence(&params, 4, &mut rng).unwrap();
        let g1 = gain_closed_form(&seq, 0.5, 1).unwrap();
        assert_eq!(g1.get(0, 0), seq.gains[0].get(0, 0));
    }

    #[test]
    fn closed_forms_match_recursion() {
        let seq_master = SeedSequence::new(24);
        for (s, &alpha) in [0.1, 0.5, 0.9].iter().enumerate() {
            let k = HermitianMatrix::identity(4);
            let params = ChannelParams::new(2, 2, 1.0, 1.0, alpha, k).unwrap();
            let mut rng = seq_master.substream(s as u64);
            let seq = sample_gain_sequence(&params, 64, &mut rng).unwrap();
            for i in 1..=64 {
                let cf = gain_closed_form(&seq, alpha, i).unwrap();
                let err = cf.sub(&seq.gains[i - 1]).unwrap().frobenius_norm();
                let scale = seq.gains[i - 1].frobenius_norm().max(f64::MIN_POSITIVE);
                assert!(err <= 1e-10 * scale, "alpha {alpha}, i {i}: {err}");
            }
            for i1 in 1..32 {
                for i2 in (i1 + 1)..=32 {
                    let tf = two_index_form(&seq, alpha, i1, i2).unwrap();
                    let err = tf.sub(&seq.gains[i2 - 1]).unwrap().frobenius_norm();
                    let scale = seq.gains[i2 - 1].frobenius_norm().max(f64::MIN_POSITIVE);
                    assert!(err <= 1e-10 * scale, "alpha {alpha}, ({i1},{i2}): {err}");
                }
            }
        }
    }

    #[test]
    fn two_index_single_step_reduces_to_recursion() {
        let params = siso_params(0.36);
        let mut rng = SeedSequence::new(25).substream(0);
        let seq = sample_gain_sequence(&params, 8, &mut rng).unwrap();
        for i in 2..=8 {
            let tf = two_index_form(&seq, 0.36, i - 1, i).unwrap();
            // sqrt(0.36) = 0.6, sqrt(0.64) = 0.8
            let want = seq.gains[i - 2].get(0, 0) * 0.6 + seq.innovations[i - 1].get(0, 0) * 0.8;
            assert!((tf.get(0, 0) - want).norm() < 1e-14);
        }
    }

    #[test]
    fn index_errors() {
        let params = siso_params(0.5);
        let mut rng = SeedSequence::new(26).substream(0);
        let seq = sample_gain_sequence(&params, 4, &mut rng).unwrap();
        assert!(matches!(
            gain_closed_form(&seq, 0.5, 0),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            gain_closed_form(&seq, 0.5, 5),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            two_index_form(&seq, 0.5, 3, 3),
            Err(Error::InvalidOrder { .. })
        ));
        assert!(gain_closed_form(&seq, 0.0, 2).is_err());
    }

    #[test]
    fn transmit_noiseless_is_exact() {
        let k = HermitianMatrix::identity(4);
        let params = ChannelParams::new(2, 2, 0.0, 1.0, 0.3, k).unwrap();
        let mut rng = SeedSequence::new(27).substream(0);
        let seq = sample_gain_sequence(&params, 5, &mut rng).unwrap();
        let inputs: Vec<Vec<Complex64>> = (0..5)
            .map(|i| {
                vec![
                    Complex64::new(i as f64, 1.0),
                    Complex64::new(-0.5, i as f64),
                ]
            })
            .collect();
        let z = transmit(&seq, &inputs, 0.0, &mut rng).unwrap();
        for (i, zi) in z.iter().enumerate() {
            let want = seq.gains[i].matvec(&inputs[i]).unwrap();
            for (a, b) in zi.iter().zip(&want) {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn transmit_zero_gain_noise_variance() {
        // With G = 0 the output is pure noise of per-component variance sigma2.
        let k = HermitianMatrix::zeros(1);
        let params = ChannelParams::new(1, 1, 0.25, 1.0, 0.0, k).unwrap();
        let mut rng = SeedSequence::new(28).substream(0);
        let trials = 100_000;
        let seq = sample_gain_sequence(&params, 1, &mut rng).unwrap();
        let input = vec![vec![Complex64::new(1.0, 0.0)]];
        let mut sq = Vec::with_capacity(trials);
        for _ in 0..trials {
            let z = transmit(&seq, &input, 0.25, &mut rng).unwrap();
            sq.push(z[0][0].norm_sqr());
        }
        let mean = stats::mean(&sq);
        assert!((mean - 0.25).abs() < 0.05 * 0.25, "mean power {mean}");
    }

    #[test]
    fn transmit_siso_unit_power() {
        // g = 1, t = 1, sigma2 = 1: E|z|^2 = |g t|^2 + sigma2 = 2.
        let mut rng = SeedSequence::new(29).substream(0);
        let trials = 100_000;
        let mut sq = Vec::with_capacity(trials);
        let mut g1 = ComplexMatrix::zeros(1, 1);
        g1.set(0, 0, Complex64::new(1.0, 0.0));
        let seq = GainSequence {
            gains: vec![g1.clone()],
            innovations: vec![g1],
        };
        let input = vec![vec![Complex64::new(1.0, 0.0)]];
        for _ in 0..trials {
            let z = transmit(&seq, &input, 1.0, &mut rng).unwrap();
            sq.push(z[0][0].norm_sqr());
        }
        let mean = stats::mean(&sq);
        assert!((mean - 2.0).abs() < 0.05 * 2.0, "mean power {mean}");
    }

    #[test]
    fn transmit_rejects_length_mismatch() {
        let params = siso_params(0.0);
        let mut rng = SeedSequence::new(30).substream(0);
        let seq = sample_gain_sequence(&params, 3, &mut rng).unwrap();
        let inputs = vec![vec![Complex64::new(1.0, 0.0)]; 2];
        assert!(matches!(
            transmit(&seq, &inputs, 1.0, &mut rng),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn identical_seed_identical_sequence() {
        let k = HermitianMatrix::identity(2);
        let params = ChannelParams::new(2, 1, 1.0, 1.0, 0.7, k).unwrap();
        let seq_a =
            sample_gain_sequence(&params, 32, &mut SeedSequence::new(31).substream(5)).unwrap();
        let seq_b =
            sample_gain_sequence(&params, 32, &mut SeedSequence::new(31).substream(5)).unwrap();
        for (a, b) in seq_a.gains.iter().zip(&seq_b.gains) {
            assert_eq!(a.data(), b.data());
        }
    }
}
