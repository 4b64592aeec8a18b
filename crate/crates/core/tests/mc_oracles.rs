//! Monte Carlo estimates cross-checked against independent closed-form or
//! quadrature oracles, plus the larger statistical invariants that tie the
//! modules together.

use num_complex::Complex64;
use gmcap_core::capacity::{phi_mc, InputCovariance};
use gmcap_core::channel::{ChannelParams, GainSampler};
use gmcap_core::coding::{simulate_error_probability, CodingOptions};
use gmcap_core::infodensity::{info_density_symbol, variance_experiment};
use gmcap_core::matrix::{cholesky_psd, sample_with_factor, HermitianMatrix, PSD_PIVOT_TOL};
use gmcap_core::rng::SeedSequence;
use gmcap_core::stats;
use rayon::prelude::*;

/// Quadrature value of `E log2 det(I_2 + G G^H)` for a 2x2 standard complex
/// Gaussian G, i.e. `int log2(1 + x)(1 + (1 - x)^2) e^-x dx` over the
/// unordered eigenvalue density of the 2x2 unit Wishart matrix. Evaluated to
/// 30 digits ahead of time and frozen.
const WISHART_2X2_PHI: f64 = 2.581042146812658;

#[test]
fn phi_mc_matches_wishart_quadrature_2x2() {
    let k = HermitianMatrix::identity(4);
    let params = ChannelParams::new(2, 2, 1.0, 2.0, 0.0, k).unwrap();
    let q = InputCovariance::new(HermitianMatrix::identity(2), 2.0).unwrap();
    let est = phi_mc(&q, &params, 100_000, SeedSequence::new(200)).unwrap();
    assert!(
        (est.value - WISHART_2X2_PHI).abs() <= 3.0 * est.stderr,
        "MC {} +- {} vs quadrature {WISHART_2X2_PHI}",
        est.value,
        est.stderr
    );
}

/// Mean of the per-symbol information density over independent draws of
/// (T, G, xi) equals phi(Q).
#[test]
fn per_symbol_density_mean_equals_phi() {
    let k = HermitianMatrix::identity(4);
    let params = ChannelParams::new(2, 2, 1.0, 2.0, 0.0, k).unwrap();
    let q = InputCovariance::new(HermitianMatrix::diagonal(&[1.2, 0.8]), 2.0).unwrap();
    let draws = 100_000usize;
    let seed = SeedSequence::new(201);
    let sampler = GainSampler::new(&params).unwrap();
    let lq = cholesky_psd(q.matrix(), PSD_PIVOT_TOL).unwrap();
    let values: Vec<f64> = (0..draws)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed.substream(t as u64);
            let g = sampler.stationary_draw(&mut rng);
            let t_vec = sample_with_factor(&lq, &mut rng);
            let mut z = g.matvec(&t_vec).unwrap();
            for zi in z.iter_mut() {
                *zi += gmcap_core::matrix::standard_complex_gaussian(&mut rng);
            }
            info_density_symbol(&t_vec, &z, &g, &q, 1.0).unwrap()
        })
        .collect();
    let mean = stats::mean(&values);
    let stderr = stats::stderr_of_mean(&values);
    let phi = phi_mc(&q, &params, 100_000, SeedSequence::new(202)).unwrap();
    let tol = 3.0 * stderr.hypot(phi.stderr);
    assert!(
        (mean - phi.value).abs() <= tol,
        "density mean {mean} vs phi {} (tol {tol})",
        phi.value
    );
}

/// `var(i/n) * n` stays within 1.5x of its value fitted at n = 64, for every
/// memory factor probed: the variance of the normalized density decays like
/// 1/n.
#[test]
fn normalized_density_variance_scales_inversely_with_n() {
    let q = InputCovariance::new(HermitianMatrix::identity(1), 1.0).unwrap();
    for (ai, alpha) in [0.0, 0.5, 0.9].into_iter().enumerate() {
        let params = ChannelParams::siso(1.0, 1.0, alpha).unwrap();
        let kappa64 = variance_experiment(
            &params,
            &q,
            64,
            2000,
            SeedSequence::new(210 + 10 * ai as u64),
        )
        .unwrap()
        .kappa_fit;
        for (ni, n) in [128usize, 256, 512].into_iter().enumerate() {
            let kappa = variance_experiment(
                &params,
                &q,
                n,
                2000,
                SeedSequence::new(211 + 10 * ai as u64 + ni as u64),
            )
            .unwrap()
            .kappa_fit;
            assert!(
                kappa <= 1.5 * kappa64,
                "alpha {alpha}, n {n}: kappa {kappa} vs 1.5 x kappa64 {kappa64}"
            );
        }
    }
}

/// Below capacity the block error rate does not grow with block length
/// (within twice the binomial noise), and capacity separates low from high
/// rates by a wide error-rate gap.
#[test]
fn coding_error_trends_with_block_length_and_rate() {
    let params = ChannelParams::siso(1.0, 1.0, 0.0).unwrap();
    let opts = CodingOptions::default();
    let trials = 400;
    // C is about 0.86 bits; probe well below it.
    let rate = 0.4;
    let mut previous: Option<(f64, f64)> = None;
    for (ni, n) in [64usize, 128, 256].into_iter().enumerate() {
        let res = simulate_error_probability(
            &params,
            rate,
            n,
            trials,
            &opts,
            SeedSequence::new(220 + ni as u64),
        )
        .unwrap();
        let se = stats::binomial_stderr(res.error_rate, trials);
        if let Some((prev_rate, prev_se)) = previous {
            assert!(
                res.error_rate <= prev_rate + 2.0 * prev_se.hypot(se),
                "error rate rose from {prev_rate} to {} at n = {n}",
                res.error_rate
            );
        }
        previous = Some((res.error_rate, se));
    }

    let low = simulate_error_probability(&params, 0.43, 128, trials, &opts, SeedSequence::new(230))
        .unwrap();
    let high =
        simulate_error_probability(&params, 1.29, 128, trials, &opts, SeedSequence::new(231))
            .unwrap();
    assert!(
        high.error_rate - low.error_rate >= 0.5,
        "rate gap too small: {} at 1.5C vs {} at 0.5C",
        high.error_rate,
        low.error_rate
    );
}

/// Experiment-level determinism: the full variance experiment is bit-stable
/// across thread pools.
#[test]
fn experiments_bit_stable_across_thread_pools() {
    let params = ChannelParams::siso(1.0, 1.0, 0.5).unwrap();
    let q = InputCovariance::new(HermitianMatrix::identity(1), 1.0).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            variance_experiment(&params, &q, 32, 500, SeedSequence::new(240)).unwrap()
        })
    };
    let a = run(1);
    let b = run(6);
    assert_eq!(a.mean_bits.to_bits(), b.mean_bits.to_bits());
    assert_eq!(a.var.to_bits(), b.var.to_bits());
    assert_eq!(a.phi_bits.to_bits(), b.phi_bits.to_bits());
}

/// Empirical operator-norm moments of the stationary gain are finite and of
/// sane magnitude through fourth order; the tail-heavy moments exist.
#[test]
fn gain_norm_moments_finite_through_fourth_order() {
    let k = HermitianMatrix::identity(4);
    let params = ChannelParams::new(2, 2, 1.0, 1.0, 0.0, k).unwrap();
    let sampler = GainSampler::new(&params).unwrap();
    let seed = SeedSequence::new(242);
    let norms: Vec<f64> = (0..50_000)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed.substream(t as u64);
            gmcap_core::matrix::operator_norm(&sampler.stationary_draw(&mut rng))
        })
        .collect();
    for ell in 1..=4 {
        let powered: Vec<f64> = norms.iter().map(|x| x.powi(ell)).collect();
        let moment = stats::mean(&powered);
        assert!(moment.is_finite() && moment > 0.0, "ell = {ell}: {moment}");
    }
    // Second moment sits between tr(G G^H)/2 = 2 and tr(G G^H) = 4.
    let second = stats::mean(&norms.iter().map(|x| x * x).collect::<Vec<_>>());
    assert!((2.0..4.0).contains(&second), "E|G|^2 = {second}");
}

/// Sanity anchor for the channel noise convention used throughout: a
/// standard complex Gaussian has unit mean square norm.
#[test]
fn standard_complex_gaussian_unit_power() {
    let mut rng = SeedSequence::new(241).substream(0);
    let sq: Vec<f64> = (0..100_000)
        .map(|_| {
            let z: Complex64 = gmcap_core::matrix::standard_complex_gaussian(&mut rng);
            z.norm_sqr()
        })
        .collect();
    let mean = stats::mean(&sq);
    assert!((mean - 1.0).abs() <= 5.0 * stats::stderr_of_mean(&sq));
}
