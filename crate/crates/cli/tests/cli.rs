//! End-to-end tests of the `gmcap` binary: argument handling, exit codes,
//! config diagnostics, and the CSV contract.

use std::fs;
use std::path::Path;
use std::process::Command;

fn gmcap() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gmcap"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("exp.conf");
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn capacity_run_writes_expected_row() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "channel.ntx = 1\nchannel.nrx = 1\nchannel.sigma2 = 1\nchannel.power = 1\nchannel.alpha = 0\nseed = 5\nsamples = 100000\n",
    );
    let out = gmcap()
        .args(["capacity", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("capacity.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "ntx,nrx,alpha,power,sigma2,samples,seed,estimate_bits,stderr_bits"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "1");
    assert_eq!(row[6], "5");
    let estimate: f64 = row[7].parse().unwrap();
    // Quadrature value of the unit-SNR single-antenna capacity.
    assert!(
        (estimate - 0.860347382270886).abs() < 0.02,
        "estimate {estimate}"
    );
}

#[test]
fn bounds_default_grid_all_rows_hold() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "seed = 9\ntrials = 20000\n");
    let out = gmcap()
        .args(["bounds", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("bounds.csv")).unwrap();
    let mut rows = 0;
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let bound: f64 = cols[4].parse().unwrap();
        let empirical: f64 = cols[5].parse().unwrap();
        assert!(empirical <= bound, "row {line}");
        rows += 1;
    }
    assert_eq!(rows, 18, "default grid is 3 rhos x 2 deltas x 3 ns");
}

#[test]
fn invalid_config_lists_every_violation_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "channel.alpha = 1.5\nmystery_key = 3\ntrials = 0\n",
    );
    let out = gmcap()
        .args(["capacity", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("0 <= alpha < 1"), "{stderr}");
    assert!(stderr.contains("mystery_key"), "{stderr}");
    assert!(stderr.contains("trials"), "{stderr}");
    assert!(stderr.contains("3 configuration problem"), "{stderr}");
}

#[test]
fn missing_config_exits_2() {
    let out = gmcap()
        .args(["capacity", "--config", "/definitely/not/here.conf"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gain_covariance_from_file() {
    let dir = tempfile::tempdir().unwrap();
    // 2x2 Hermitian dump, row-major re/im pairs.
    let kpath = dir.path().join("k.txt");
    fs::write(&kpath, "1.0 0.0   0.3 0.1\n0.3 -0.1  0.5 0.0\n").unwrap();
    let config = write_config(
        dir.path(),
        &format!(
            "channel.ntx = 2\nchannel.nrx = 1\nchannel.power = 2\nchannel.k = file:{}\nsamples = 2000\nseed = 11\n",
            kpath.display()
        ),
    );
    let out = gmcap()
        .args(["capacity", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    // A non-Hermitian dump is rejected.
    fs::write(&kpath, "1.0 0.0   0.3 0.1\n0.9 -0.1  0.5 0.0\n").unwrap();
    let out = gmcap()
        .args(["capacity", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Hermitian"));
}

#[test]
fn seed_override_and_env_threads() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "seed = 1\nsamples = 5000\n");
    let run = |extra_env: Option<(&str, &str)>, args: &[&str]| {
        let mut cmd = gmcap();
        cmd.args(["capacity", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(dir.path())
            .args(args);
        if let Some((k, v)) = extra_env {
            cmd.env(k, v);
        }
        let out = cmd.output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        fs::read_to_string(dir.path().join("capacity.csv")).unwrap()
    };
    let a = run(None, &["--seed", "123"]);
    let b = run(Some(("GMCAP_THREADS", "2")), &["--seed", "123"]);
    assert_eq!(a, b, "seed override + env thread count must not change output");
    let c = run(None, &["--seed", "124"]);
    assert_ne!(a, c, "different seed should change the estimate");
}
