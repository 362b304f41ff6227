use std::fs;
use std::path::Path;
use std::process::Command;

use kernel_misspec::harness::{
    report, run_experiment, CheckStatus, ExperimentConfig, Manifest, FAILED_MARKER,
};
use kernel_misspec::spectral_analysis::read_reports_csv;
use kernel_misspec::spectral_kernels::matern_periodic_spectrum;
use kernel_misspec::Error;

const SCAN: &str = r#"
kind = "lebesgue-scan"
tau = [1e-1, 1e-2, 1e-3]
[kernel]
family = "matern"
nu = 1.5
count = 256
"#;

const ONLINE: &str = r#"
kind = "online-regret"
seed = 2
eps = [0.0]
seeds = [0, 1, 2]
[kernel]
family = "matern"
nu = 1.5
count = 65
[online]
horizon = 256
alpha = 3.0
"#;

fn cfg(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml(text).unwrap()
}

#[test]
fn spectrum_run_matches_the_generator_row_for_row() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg("kind = \"spectrum\"\n[kernel]\nfamily = \"matern\"\nnu = 1.5\ncount = 100\n");
    run_experiment(&c, Path::new("."), dir.path(), 1).unwrap();
    let mut golden = Vec::new();
    matern_periodic_spectrum(1.5, 100, true)
        .unwrap()
        .write_csv(&mut golden)
        .unwrap();
    assert_eq!(fs::read(dir.path().join("spectrum.csv")).unwrap(), golden);
    assert!(report(dir.path()).unwrap().all_pass());
}

#[test]
fn single_tau_gives_one_report_row() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg("kind = \"lebesgue-scan\"\ntau = [0.01]\n[kernel]\nfamily = \"matern\"\nnu = 0.5\ncount = 128\n");
    run_experiment(&c, Path::new("."), dir.path(), 1).unwrap();
    let rows = read_reports_csv(
        &fs::read(dir.path().join("lebesgue.csv")).unwrap()[..],
        "lebesgue.csv",
    )
    .unwrap();
    assert_eq!(rows.len(), 1);
}

#[test]
fn report_margins_match_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&cfg(SCAN), Path::new("."), dir.path(), 1).unwrap();
    let rep = report(dir.path()).unwrap();
    assert!(rep.all_pass(), "{rep}");
    let rows = read_reports_csv(
        &fs::read(dir.path().join("lebesgue.csv")).unwrap()[..],
        "csv",
    )
    .unwrap();
    assert_eq!(rep.margins.len(), rows.len());
    for (m, r) in rep.margins.iter().zip(&rows) {
        assert_eq!(m.tau, r.tau);
        assert_eq!(
            m.abel_margin,
            r.abel_bound - (r.lebesgue_est - r.lebesgue_tol)
        );
        assert_eq!(
            m.sqrt_margin,
            r.sqrt_bound - (r.lebesgue_est - r.lebesgue_tol)
        );
    }
    let json: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["margins"].as_array().unwrap().len(), 3);
}

#[test]
fn corrupted_csv_is_invalid_input_not_fail() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&cfg(SCAN), Path::new("."), dir.path(), 1).unwrap();
    fs::write(dir.path().join("lebesgue.csv"), "tau,d_eff\n0.1,oops\n").unwrap();
    let rep = report(dir.path()).unwrap();
    assert_eq!(rep.checks[0].status, CheckStatus::InvalidInput);
}

#[test]
fn missing_manifest_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        report(dir.path()),
        Err(Error::InvalidInput { .. })
    ));
}

#[test]
fn identical_configs_give_identical_csvs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let c = cfg(ONLINE);
    let ma = run_experiment(&c, Path::new("."), a.path(), 1).unwrap();
    let mb = run_experiment(&c, Path::new("."), b.path(), 2).unwrap();
    assert_eq!(ma.config_hash, mb.config_hash);
    assert_eq!(ma.files, mb.files);
    for f in ma
        .files
        .iter()
        .filter(|f| f.ends_with(".csv") || f.ends_with(".toml"))
    {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    assert!(!a.path().join(FAILED_MARKER).exists());
}

#[test]
fn online_manifest_carries_the_reference_slope() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&cfg(ONLINE), Path::new("."), dir.path(), 1).unwrap();
    let m: Manifest =
        serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    let r = m.reference_slope.unwrap();
    assert!((r - 5.0 / 8.0).abs() < 1e-15);
    assert_eq!(m.seeds, vec![0, 1, 2]);
    let rep = report(dir.path()).unwrap();
    assert_eq!(rep.checks[0].name, "census bound");
    assert_eq!(rep.checks[0].status, CheckStatus::Pass);
}

#[test]
fn adding_a_seed_leaves_other_runs_untouched() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_experiment(&cfg(ONLINE), Path::new("."), a.path(), 1).unwrap();
    let more = ONLINE.replace("seeds = [0, 1, 2]", "seeds = [0, 1, 2, 3]");
    run_experiment(&cfg(&more), Path::new("."), b.path(), 1).unwrap();
    for s in 0..3 {
        let f = format!("regret_{s}.csv");
        assert_eq!(
            fs::read(a.path().join(&f)).unwrap(),
            fs::read(b.path().join(&f)).unwrap()
        );
    }
}

#[test]
fn runtime_failure_leaves_a_marker() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir_all(dir.path().join("spectrum.csv")).unwrap();
    let c = cfg("kind = \"spectrum\"\n[kernel]\nfamily = \"matern\"\nnu = 1.5\ncount = 8\n");
    let e = run_experiment(&c, Path::new("."), dir.path(), 1).unwrap_err();
    assert!(!matches!(e, Error::Config(_)));
    assert!(dir.path().join(FAILED_MARKER).exists());
    assert!(!dir.path().join("manifest.json").exists());
}

#[test]
fn config_errors_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let c = cfg("kind = \"lebesgue-scan\"\n[kernel]\nfamily = \"matern\"\nnu = 1.5\n");
    assert!(matches!(
        run_experiment(&c, Path::new("."), &out, 1),
        Err(Error::Config(_))
    ));
    let c = cfg("kind = \"spectrum\"\n[kernel]\nfamily = \"matern\"\nnu = -1.0\n");
    assert!(matches!(
        run_experiment(&c, Path::new("."), &out, 1),
        Err(Error::Config(_))
    ));
    assert!(!out.exists());
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_kmisspec"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("scan.toml");
    fs::write(&good, SCAN).unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(
        &bad,
        "kind = \"histogram\"\n[kernel]\nfamily = \"matern\"\nnu = 1.5\n",
    )
    .unwrap();
    let run = dir.path().join("run");
    let run_s = run.to_str().unwrap();

    let o = cli(&[
        "lebesgue",
        "--config",
        bad.to_str().unwrap(),
        "--out",
        run_s,
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(String::from_utf8_lossy(&o.stderr).lines().count(), 1);
    assert!(!run.exists());

    let o = cli(&["online", "--config", good.to_str().unwrap(), "--out", run_s]);
    assert_eq!(o.status.code(), Some(2));

    let o = cli(&[
        "lebesgue",
        "--config",
        good.to_str().unwrap(),
        "--out",
        run_s,
        "--seed",
        "4",
        "--jobs",
        "1",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let o = cli(&["report", "--out", run_s]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS"));

    let o = cli(&[
        "report",
        "--out",
        dir.path().join("nowhere").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}
