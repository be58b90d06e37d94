use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::DMatrix;
use serde_json::Value;

use sicf::io::{read_factor, read_matrix};

fn sicf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sicf")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = sicf(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn simulate(dir: &Path, extra: &[&str]) -> PathBuf {
    let out = dir.join("sim");
    let mut args = vec!["simulate", "--out-dir", p(&out)];
    args.extend_from_slice(extra);
    ok(&args);
    out
}

fn sample_cov(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows() as f64;
    let mean = x.row_mean();
    let mut c = x.clone();
    for mut r in c.row_iter_mut() {
        r -= &mean;
    }
    c.transpose() * &c / n
}

#[test]
fn simulate_is_reproducible_and_shaped() {
    let t = tempfile::tempdir().unwrap();
    let a = t.path().join("a");
    let b = t.path().join("b");
    for dir in [&a, &b] {
        ok(&["simulate", "--grid", "4x5", "--nrep", "7", "--seed", "11", "--out-dir", p(dir)]);
    }
    let ya = std::fs::read(a.join("Y.csv")).unwrap();
    assert_eq!(ya, std::fs::read(b.join("Y.csv")).unwrap());

    let y = read_matrix(&a.join("Y.csv")).unwrap();
    assert_eq!(y.shape(), (7, 20));
    let sigma = read_matrix(&a.join("sigma_true.csv")).unwrap();
    assert!((&sigma - sigma.transpose()).abs().max() < 1e-12);
    assert!(sigma.diagonal().iter().all(|&v| (v - 1.0).abs() < 1e-12));

    let c = t.path().join("c");
    ok(&["simulate", "--grid", "4x5", "--nrep", "7", "--seed", "12", "--out-dir", p(&c)]);
    assert_ne!(ya, std::fs::read(c.join("Y.csv")).unwrap());
}

#[test]
fn two_by_two_grid_lands_on_the_corners() {
    let t = tempfile::tempdir().unwrap();
    let sim = simulate(t.path(), &["--grid", "2x2", "--nrep", "3"]);
    let locs = read_matrix(&sim.join("locations.csv")).unwrap();
    let mut pts: Vec<(f64, f64)> = locs.row_iter().map(|r| (r[0], r[1])).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(pts, vec![(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)]);
}

#[test]
fn eb_fit_writes_a_positive_theta_and_the_factor() {
    let t = tempfile::tempdir().unwrap();
    let sim = simulate(t.path(), &["--grid", "6x6", "--nrep", "20", "--seed", "3"]);
    let fit = t.path().join("fit");
    ok(&[
        "fit", "--y", p(&sim.join("Y.csv")), "--locations", p(&sim.join("locations.csv")),
        "--m-max", "10", "--out-dir", p(&fit),
    ]);
    let s = json(&fit.join("summary.json"));
    assert_eq!(s["mode"], "eb");
    for k in ["theta1", "theta2", "theta3"] {
        assert!(s["theta"][k].as_f64().unwrap() > 0.0, "{k}");
    }
    let m = s["m"].as_u64().unwrap();
    assert!((1..=10).contains(&m));
    let factor = read_factor(&fit).unwrap();
    assert_eq!(factor.n(), 36);
    assert!(fit.join("ordering.csv").exists());
}

#[test]
fn bayes_fit_chain_is_reproducible() {
    let t = tempfile::tempdir().unwrap();
    let sim = simulate(t.path(), &["--grid", "5x5", "--nrep", "15"]);
    let run = |name: &str| {
        let dir = t.path().join(name);
        ok(&[
            "fit", "--y", p(&sim.join("Y.csv")), "--locations", p(&sim.join("locations.csv")),
            "--mode", "bayes", "--n-iter", "400", "--thin", "2", "--m-max", "8",
            "--seed", "9", "--out-dir", p(&dir),
        ]);
        dir
    };
    let a = run("a");
    let b = run("b");
    let chain = std::fs::read(a.join("chain.csv")).unwrap();
    assert_eq!(chain, std::fs::read(b.join("chain.csv")).unwrap());
    let s = json(&a.join("summary.json"));
    assert_eq!(s["mcmc"]["kept"].as_u64().unwrap(), 100);
    let rate = s["mcmc"]["acceptance_rate"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&rate));
}

#[test]
fn map_samples_reproduce_the_fitted_covariance() {
    let t = tempfile::tempdir().unwrap();
    let sim = simulate(t.path(), &["--random", "10", "--nrep", "30", "--seed", "5"]);
    let fit = t.path().join("fit");
    ok(&[
        "fit", "--y", p(&sim.join("Y.csv")), "--locations", p(&sim.join("locations.csv")),
        "--m-max", "9", "--out-dir", p(&fit),
    ]);
    let draws = t.path().join("draws");
    ok(&["sample", "--fit-dir", p(&fit), "--count", "100000", "--seed", "2", "--out-dir", p(&draws)]);
    let x = read_matrix(&draws.join("samples.csv")).unwrap();
    assert_eq!(x.shape(), (100_000, 10));
    let sigma = read_factor(&fit).unwrap().dense_covariance().unwrap();
    let s = sample_cov(&x);
    // entrywise standard error of a sample covariance is at most sqrt(2 / N) * max variance
    let tol = 5.0 * (2.0f64 / 1e5).sqrt() * sigma.diagonal().max();
    let err = (&s - &sigma).abs().max();
    assert!(err < tol, "{err} vs {tol}");
}

#[test]
fn zero_count_writes_only_a_header() {
    let t = tempfile::tempdir().unwrap();
    let sim = simulate(t.path(), &["--grid", "3x3", "--nrep", "10"]);
    let fit = t.path().join("fit");
    ok(&[
        "fit", "--y", p(&sim.join("Y.csv")), "--locations", p(&sim.join("locations.csv")),
        "--m-max", "5", "--out-dir", p(&fit),
    ]);
    let draws = t.path().join("draws");
    ok(&["sample", "--fit-dir", p(&fit), "--count", "0", "--out-dir", p(&draws)]);
    let text = std::fs::read_to_string(draws.join("samples.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("site_0,"));
}

#[test]
fn bayes_sampling_needs_a_chain_and_data() {
    let t = tempfile::tempdir().unwrap();
    let sim = simulate(t.path(), &["--grid", "4x4", "--nrep", "12"]);
    let fit = t.path().join("fit");
    let y = sim.join("Y.csv");
    ok(&["fit", "--y", p(&y), "--locations", p(&sim.join("locations.csv")), "--m-max", "6", "--out-dir", p(&fit)]);
    let draws = t.path().join("draws");
    let out = sicf(&["sample", "--fit-dir", p(&fit), "--mode", "bayes", "--y", p(&y), "--out-dir", p(&draws)]);
    assert_eq!(out.status.code(), Some(2));

    let bfit = t.path().join("bfit");
    ok(&[
        "fit", "--y", p(&y), "--locations", p(&sim.join("locations.csv")), "--m-max", "6",
        "--mode", "bayes", "--n-iter", "200", "--out-dir", p(&bfit),
    ]);
    ok(&["sample", "--fit-dir", p(&bfit), "--mode", "bayes", "--y", p(&y), "--count", "5", "--out-dir", p(&draws)]);
    let x = read_matrix(&draws.join("samples.csv")).unwrap();
    assert_eq!(x.shape(), (5, 16));
    assert!(x.iter().all(|v| v.is_finite()));
}

#[test]
fn benchmark_tables_are_complete_and_deterministic() {
    let t = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let dir = t.path().join(name);
        ok(&[
            "benchmark", "--grid", "5x5", "--nreps", "10,40", "--seeds", "2", "--m-max", "8",
            "--n-iter", "200", "--test-nrep", "20", "--seed", "1", "--out-dir", p(&dir),
        ]);
        dir
    };
    let a = run("a");
    let b = run("b");
    for f in ["kl_table.csv", "logscore_table.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let text = std::fs::read_to_string(a.join("kl_table.csv")).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    // six estimators, two sample sizes, two seeds
    assert_eq!(rows.len(), 24);
    for r in &rows {
        let v = r[4];
        match (r[1], r[2]) {
            // 10 replicates at 25 sites leave the sample covariance singular
            ("scov", "10") => assert_eq!(v, "inf"),
            _ => assert!(v.parse::<f64>().unwrap() >= 0.0, "{r:?}"),
        }
    }
    assert!(rows.iter().any(|r| r[1] == "ours-map"));
}

#[test]
fn gibbs_writes_chain_latent_field_and_manifest() {
    let t = tempfile::tempdir().unwrap();
    let sim = simulate(t.path(), &["--grid", "4x4", "--nrep", "8"]);
    let g = t.path().join("gibbs");
    ok(&[
        "gibbs", "--w", p(&sim.join("Y.csv")), "--locations", p(&sim.join("locations.csv")),
        "--sweeps", "60", "--n-burn", "20", "--m-max", "6", "--out-dir", p(&g),
    ]);
    let chain = read_matrix(&g.join("gibbs_chain.csv")).unwrap();
    assert_eq!(chain.shape(), (40, 5));
    assert!(chain.column(4).iter().all(|&t| t > 0.0));
    let latent = read_matrix(&g.join("latent_mean.csv")).unwrap();
    assert_eq!(latent.shape(), (8, 16));
    assert_eq!(json(&g.join("manifest.json"))["command"], "gibbs");
    assert_eq!(json(&g.join("summary.json"))["noise"], "unknown");

    let fixed = t.path().join("fixed");
    ok(&[
        "gibbs", "--w", p(&sim.join("Y.csv")), "--locations", p(&sim.join("locations.csv")),
        "--sweeps", "10", "--tau2", "0.05", "--m-max", "6", "--out-dir", p(&fixed),
    ]);
    let chain = read_matrix(&fixed.join("gibbs_chain.csv")).unwrap();
    assert!(chain.column(4).iter().all(|&t| t == 0.05));
}

#[test]
fn manifest_replays_the_run() {
    let t = tempfile::tempdir().unwrap();
    let first = t.path().join("first");
    ok(&["simulate", "--model", "cauchy", "--random", "12", "--nrep", "4", "--seed", "21", "--out-dir", p(&first)]);
    let manifest = json(&first.join("manifest.json"));
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["config"]["model"], "cauchy");
    assert_eq!(manifest["config"]["seed"], "21");

    let again = t.path().join("again");
    ok(&["simulate", "--config", p(&first.join("manifest.json")), "--out-dir", p(&again)]);
    assert_eq!(std::fs::read(first.join("Y.csv")).unwrap(), std::fs::read(again.join("Y.csv")).unwrap());

    // a manifest only replays its own subcommand
    let out = sicf(&["fit", "--config", p(&first.join("manifest.json")), "--y", "a", "--locations", "b"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn key_value_config_fills_missing_flags() {
    let t = tempfile::tempdir().unwrap();
    let cfg = t.path().join("run.cfg");
    std::fs::write(&cfg, "# small grid\ngrid = 3x3\nnrep=5\nseed = 8\n").unwrap();
    let a = t.path().join("a");
    ok(&["simulate", "--config", p(&cfg), "--nrep", "6", "--out-dir", p(&a)]);
    let y = read_matrix(&a.join("Y.csv")).unwrap();
    assert_eq!(y.shape(), (6, 9));

    std::fs::write(&cfg, "no-such-flag = 1\n").unwrap();
    assert_eq!(sicf(&["simulate", "--config", p(&cfg), "--out-dir", p(&a)]).status.code(), Some(2));
}

#[test]
fn bad_usage_exits_with_two() {
    let t = tempfile::tempdir().unwrap();
    assert_eq!(sicf(&["fit", "--bogus"]).status.code(), Some(2));
    assert_eq!(sicf(&["simulate", "--grid", "3by3", "--out-dir", p(t.path())]).status.code(), Some(2));
    let sim = simulate(t.path(), &["--grid", "3x3", "--nrep", "4"]);
    let other = simulate(&t.path().join("o"), &["--grid", "2x2", "--nrep", "4"]);
    let out = sicf(&[
        "fit", "--y", p(&sim.join("Y.csv")), "--locations", p(&other.join("locations.csv")),
        "--out-dir", p(&t.path().join("f")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(sicf(&["benchmark", "--estimators", "oracle", "--out-dir", p(t.path())]).status.code(), Some(2));
}
