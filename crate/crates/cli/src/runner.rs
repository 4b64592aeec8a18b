//! Per-subcommand experiment runners and their CSV emission.
//!
//! Every run is deterministic in `(config, seed)`: trials draw from
//! substreams indexed by trial number and rows are written in a fixed
//! order, so output files are byte-identical whatever the thread count.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use gmcap_core::bounds::{check_matrix_lemmas, geometric_sum_bounds, power_tail_empirical};
use gmcap_core::capacity::{optimize_capacity, phi_mc, InputCovariance, OptimizerOptions};
use gmcap_core::channel::ChannelParams;
use gmcap_core::coding::{simulate_error_probability, CodingOptions};
use gmcap_core::infodensity::{correlation_decay_experiment, variance_experiment};
use gmcap_core::matrix::{ComplexMatrix, HermitianMatrix};
use gmcap_core::rng::SeedSequence;

use crate::config::{ExperimentConfig, GainCovSpec};

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("bad gain covariance file {path}: {message}")]
    GainCovFile { path: PathBuf, message: String },
    #[error("{context}: {source}")]
    Core {
        context: String,
        source: gmcap_core::Error,
    },
}

fn core_err(context: impl Into<String>) -> impl FnOnce(gmcap_core::Error) -> RunnerError {
    let context = context.into();
    move |source| RunnerError::Core { context, source }
}

/// The experiment families the tool can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Capacity,
    Optimize,
    Infodensity,
    Bounds,
    Coding,
    Lemmas,
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Subcommand::Capacity => "capacity",
            Subcommand::Optimize => "optimize",
            Subcommand::Infodensity => "infodensity",
            Subcommand::Bounds => "bounds",
            Subcommand::Coding => "coding",
            Subcommand::Lemmas => "lemmas",
        };
        f.write_str(name)
    }
}

impl FromStr for Subcommand {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "capacity" => Ok(Subcommand::Capacity),
            "optimize" => Ok(Subcommand::Optimize),
            "infodensity" => Ok(Subcommand::Infodensity),
            "bounds" => Ok(Subcommand::Bounds),
            "coding" => Ok(Subcommand::Coding),
            "lemmas" => Ok(Subcommand::Lemmas),
            other => Err(format!("unknown subcommand `{other}`")),
        }
    }
}

/// What a run produced: the CSV files written and how many checks failed.
/// A nonzero failure count maps to a nonzero process exit.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub failures: usize,
}

/// Floating-point CSV formatting: 12 significant digits.
pub fn fmt12(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.11e}")
    }
}

fn load_gain_cov(spec: &GainCovSpec, dim: usize) -> Result<HermitianMatrix, RunnerError> {
    match spec {
        GainCovSpec::Identity => Ok(HermitianMatrix::identity(dim)),
        GainCovSpec::Scaled(c) => Ok(HermitianMatrix::scaled_identity(dim, *c)),
        GainCovSpec::File(path) => {
            let text = fs::read_to_string(path).map_err(|source| RunnerError::Io {
                path: path.clone(),
                source,
            })?;
            let numbers: Result<Vec<f64>, _> =
                text.split_whitespace().map(str::parse::<f64>).collect();
            let numbers = numbers.map_err(|e| RunnerError::GainCovFile {
                path: path.clone(),
                message: format!("unparsable entry: {e}"),
            })?;
            if numbers.len() != 2 * dim * dim {
                return Err(RunnerError::GainCovFile {
                    path: path.clone(),
                    message: format!(
                        "expected {} re/im values for a {dim}x{dim} matrix, found {}",
                        2 * dim * dim,
                        numbers.len()
                    ),
                });
            }
            // Row-major re/im pairs.
            let m = ComplexMatrix::from_fn(dim, dim, |r, c| {
                let k = 2 * (r * dim + c);
                gmcap_core::Complex64::new(numbers[k], numbers[k + 1])
            });
            HermitianMatrix::from_matrix(&m).map_err(core_err(format!(
                "gain covariance from {}",
                path.display()
            )))
        }
    }
}

fn build_channel(cfg: &ExperimentConfig) -> Result<ChannelParams, RunnerError> {
    let k = load_gain_cov(&cfg.gain_cov, cfg.nrx * cfg.ntx)?;
    ChannelParams::new(cfg.ntx, cfg.nrx, cfg.sigma2, cfg.power, cfg.alpha, k)
        .map_err(core_err("channel parameters"))
}

struct CsvFile {
    path: PathBuf,
    rows: Vec<String>,
}

impl CsvFile {
    fn new(dir: &Path, name: &str, header: &str) -> Self {
        Self {
            path: dir.join(name),
            rows: vec![header.to_string()],
        }
    }

    fn push(&mut self, row: String) {
        self.rows.push(row);
    }

    fn write(self) -> Result<PathBuf, RunnerError> {
        let body = self.rows.join("\n") + "\n";
        fs::write(&self.path, body).map_err(|source| RunnerError::Io {
            path: self.path.clone(),
            source,
        })?;
        Ok(self.path)
    }
}

/// Execute one experiment family, write its CSV file(s) into
/// `cfg.out_dir`, and print a one-line summary per result row.
pub fn run_experiment(sub: Subcommand, cfg: &ExperimentConfig) -> Result<RunSummary, RunnerError> {
    fs::create_dir_all(&cfg.out_dir).map_err(|source| RunnerError::Io {
        path: cfg.out_dir.clone(),
        source,
    })?;
    match cfg.threads {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| RunnerError::Io {
                    path: cfg.out_dir.clone(),
                    source: std::io::Error::other(e),
                })?;
            pool.install(|| dispatch(sub, cfg))
        }
        None => dispatch(sub, cfg),
    }
}

fn dispatch(sub: Subcommand, cfg: &ExperimentConfig) -> Result<RunSummary, RunnerError> {
    match sub {
        Subcommand::Capacity => run_capacity(cfg),
        Subcommand::Optimize => run_optimize(cfg),
        Subcommand::Infodensity => run_infodensity(cfg),
        Subcommand::Bounds => run_bounds(cfg),
        Subcommand::Coding => run_coding(cfg),
        Subcommand::Lemmas => run_lemmas(cfg),
    }
}

fn run_capacity(cfg: &ExperimentConfig) -> Result<RunSummary, RunnerError> {
    let params = build_channel(cfg)?;
    let q = InputCovariance::isotropic(cfg.ntx, cfg.power).map_err(core_err("input covariance"))?;
    let est = phi_mc(&q, &params, cfg.samples, SeedSequence::new(cfg.seed))
        .map_err(core_err("capacity estimate"))?;
    let mut csv = CsvFile::new(
        &cfg.out_dir,
        "capacity.csv",
        "ntx,nrx,alpha,power,sigma2,samples,seed,estimate_bits,stderr_bits",
    );
    csv.push(format!(
        "{},{},{},{},{},{},{},{},{}",
        cfg.ntx,
        cfg.nrx,
        fmt12(cfg.alpha),
        fmt12(cfg.power),
        fmt12(cfg.sigma2),
        cfg.samples,
        cfg.seed,
        fmt12(est.value),
        fmt12(est.stderr)
    ));
    println!(
        "capacity: ntx={} nrx={} alpha={} estimate={} bits (stderr {}, {} samples)",
        cfg.ntx,
        cfg.nrx,
        fmt12(cfg.alpha),
        fmt12(est.value),
        fmt12(est.stderr),
        cfg.samples
    );
    Ok(RunSummary {
        files: vec![csv.write()?],
        failures: 0,
    })
}

fn run_optimize(cfg: &ExperimentConfig) -> Result<RunSummary, RunnerError> {
    let params = build_channel(cfg)?;
    let opts = OptimizerOptions {
        pool_size: cfg.pool,
        max_iters: cfg.max_iters,
        final_samples: cfg.samples,
        seed: cfg.seed,
        ..OptimizerOptions::default()
    };
    let out = optimize_capacity(&params, &opts).map_err(core_err("capacity optimization"))?;
    let mut csv = CsvFile::new(
        &cfg.out_dir,
        "optimize.csv",
        "ntx,nrx,power,sigma2,iters,converged,capacity_bits,stderr_bits,trace_q",
    );
    csv.push(format!(
        "{},{},{},{},{},{},{},{},{}",
        cfg.ntx,
        cfg.nrx,
        fmt12(cfg.power),
        fmt12(cfg.sigma2),
        out.iterations,
        out.converged,
        fmt12(out.estimate.value),
        fmt12(out.estimate.stderr),
        fmt12(out.q.trace())
    ));
    println!(
        "optimize: ntx={} nrx={} capacity={} bits (stderr {}), trace(Q*)={}, {} iters, converged={}",
        cfg.ntx,
        cfg.nrx,
        fmt12(out.estimate.value),
        fmt12(out.estimate.stderr),
        fmt12(out.q.trace()),
        out.iterations,
        out.converged
    );
    Ok(RunSummary {
        files: vec![csv.write()?],
        failures: 0,
    })
}

fn run_infodensity(cfg: &ExperimentConfig) -> Result<RunSummary, RunnerError> {
    let params = build_channel(cfg)?;
    let q = InputCovariance::isotropic(cfg.ntx, cfg.power).map_err(core_err("input covariance"))?;
    let seed = SeedSequence::new(cfg.seed);
    let mut files = Vec::new();

    let mut csv = CsvFile::new(
        &cfg.out_dir,
        "infodensity.csv",
        "n,alpha,trials,seed,mean_bits,phi_bits,var,kappa_fit",
    );
    for (i, &n) in cfg.block_lengths.iter().enumerate() {
        let stats = variance_experiment(&params, &q, n, cfg.trials, seed.child(i as u64))
            .map_err(core_err(format!("variance experiment at n = {n}")))?;
        csv.push(format!(
            "{},{},{},{},{},{},{},{}",
            stats.n,
            fmt12(stats.alpha),
            stats.trials,
            cfg.seed,
            fmt12(stats.mean_bits),
            fmt12(stats.phi_bits),
            fmt12(stats.var),
            fmt12(stats.kappa_fit)
        ));
        println!(
            "infodensity: n={} alpha={} mean={} bits phi={} bits var={} kappa={}",
            stats.n,
            fmt12(stats.alpha),
            fmt12(stats.mean_bits),
            fmt12(stats.phi_bits),
            fmt12(stats.var),
            fmt12(stats.kappa_fit)
        );
    }
    files.push(csv.write()?);

    if cfg.alpha > 0.0 {
        let decay = correlation_decay_experiment(
            &params,
            &q,
            &cfg.lags,
            cfg.trials,
            seed.child(0x4c4147), // "LAG"
        )
        .map_err(core_err("correlation decay experiment"))?;
        let mut lag_csv = CsvFile::new(
            &cfg.out_dir,
            "lagcov.csv",
            "alpha,lag,trials,cov,fit_cprime",
        );
        for e in &decay.lags {
            lag_csv.push(format!(
                "{},{},{},{},{}",
                fmt12(cfg.alpha),
                e.lag,
                cfg.trials,
                fmt12(e.cov),
                fmt12(decay.c_prime)
            ));
            println!(
                "lagcov: alpha={} lag={} cov={} (c'={})",
                fmt12(cfg.alpha),
                e.lag,
                fmt12(e.cov),
                fmt12(decay.c_prime)
            );
        }
        files.push(lag_csv.write()?);
    } else {
        println!("lagcov: skipped (alpha = 0 has exactly zero lag covariance)");
    }

    Ok(RunSummary { files, failures: 0 })
}

fn run_bounds(cfg: &ExperimentConfig) -> Result<RunSummary, RunnerError> {
    let seed = SeedSequence::new(cfg.seed);
    let mut csv = CsvFile::new(
        &cfg.out_dir,
        "bounds.csv",
        "rho,delta,n,trials,bound,empirical",
    );
    let mut failures = 0;
    let mut cell = 0u64;
    for &rho in &cfg.rhos {
        for &delta in &cfg.deltas {
            for &n in &cfg.bound_ns {
                let cov = HermitianMatrix::diagonal(&[rho]);
                let report = power_tail_empirical(&cov, n, delta, cfg.trials, seed.child(cell))
                    .map_err(core_err(format!(
                        "tail bound at rho = {rho}, delta = {delta}, n = {n}"
                    )))?;
                cell += 1;
                let ok = report.holds();
                if !ok {
                    failures += 1;
                }
                csv.push(format!(
                    "{},{},{},{},{},{}",
                    fmt12(report.rho),
                    fmt12(report.delta),
                    report.n,
                    report.trials,
                    fmt12(report.bound),
                    fmt12(report.empirical)
                ));
                println!(
                    "bounds: rho={} delta={} n={} empirical={} bound={} [{}]",
                    fmt12(report.rho),
                    fmt12(report.delta),
                    report.n,
                    fmt12(report.empirical),
                    fmt12(report.bound),
                    if ok { "ok" } else { "VIOLATED" }
                );
            }
        }
    }
    Ok(RunSummary {
        files: vec![csv.write()?],
        failures,
    })
}

fn run_coding(cfg: &ExperimentConfig) -> Result<RunSummary, RunnerError> {
    let params = build_channel(cfg)?;
    let opts = CodingOptions {
        gamma: cfg.gamma,
        ..CodingOptions::default()
    };
    let seed = SeedSequence::new(cfg.seed);
    let mut csv = CsvFile::new(
        &cfg.out_dir,
        "coding.csv",
        "rate_bits,n,codebook,gamma,trials,errors,error_rate",
    );
    for (i, &rate) in cfg.rates.iter().enumerate() {
        let res = simulate_error_probability(
            &params,
            rate,
            cfg.coding_n,
            cfg.trials,
            &opts,
            seed.child(i as u64),
        )
        .map_err(core_err(format!("error simulation at rate {rate}")))?;
        csv.push(format!(
            "{},{},{},{},{},{},{}",
            fmt12(res.rate_bits),
            res.n,
            fmt12(res.codebook_size),
            fmt12(res.gamma),
            res.trials,
            res.errors,
            fmt12(res.error_rate)
        ));
        println!(
            "coding: rate={} bits n={} error_rate={} ({}/{} errors, gamma={})",
            fmt12(res.rate_bits),
            res.n,
            fmt12(res.error_rate),
            res.errors,
            res.trials,
            fmt12(res.gamma)
        );
    }
    Ok(RunSummary {
        files: vec![csv.write()?],
        failures: 0,
    })
}

fn run_lemmas(cfg: &ExperimentConfig) -> Result<RunSummary, RunnerError> {
    let seed = SeedSequence::new(cfg.seed);
    let mut csv = CsvFile::new(
        &cfg.out_dir,
        "lemmas.csv",
        "check,alpha,n,trials,violations,worst_margin",
    );
    let mut failures = 0;

    let report = check_matrix_lemmas(cfg.lemma_trials, seed);
    for (name, violations, margin) in [
        (
            "norm_dominance",
            report.norm_dom_violations,
            report.worst_norm_dom_margin,
        ),
        (
            "logdet_subadditivity",
            report.logdet_violations,
            report.worst_logdet_slack,
        ),
    ] {
        if violations > 0 {
            failures += 1;
        }
        csv.push(format!(
            "{name},,,{},{},{}",
            report.trials,
            violations,
            fmt12(margin)
        ));
        println!(
            "lemmas: {name} violations={violations}/{} worst margin={}",
            report.trials,
            fmt12(margin)
        );
    }

    for &alpha in &cfg.geo_alphas {
        for &n in &cfg.geo_ns {
            let sums = geometric_sum_bounds(alpha, n)
                .map_err(core_err(format!("geometric sums at alpha = {alpha}, n = {n}")))?;
            let ok = sums.within_bound();
            if !ok {
                failures += 1;
            }
            let margin = sums.bound - sums.lower_sum.max(sums.upper_sum);
            csv.push(format!(
                "geometric_sums,{},{},1,{},{}",
                fmt12(alpha),
                n,
                usize::from(!ok),
                fmt12(margin)
            ));
            println!(
                "lemmas: geometric_sums alpha={} n={} margin={} [{}]",
                fmt12(alpha),
                n,
                fmt12(margin),
                if ok { "ok" } else { "VIOLATED" }
            );
        }
    }

    Ok(RunSummary {
        files: vec![csv.write()?],
        failures,
    })
}
