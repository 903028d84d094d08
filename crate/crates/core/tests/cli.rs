use std::path::Path;
use std::process::{Command, Output};

fn bivemos(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bivemos")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = bivemos(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> Option<i32> {
    bivemos(args).status.code()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn simulate(dir: &Path, name: &str, seed: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    ok(&["simulate", "--spec", "aladin", "--seed", seed, "--stations", "3", "--days", "14", "--out", p(&path)]);
    path
}

#[test]
fn simulate_calibrate_verify_bench() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "data.csv", "1");
    let history = simulate(dir.path(), "history.csv", "2");
    let header = std::fs::read_to_string(&data).unwrap();
    assert!(header.starts_with("date,station,obs_wind,obs_temp,m1_wind,m1_temp,"));

    let models = dir.path().join("models");
    let common = ["--data", p(&data), "--groups", "1,10", "--train-days", "8", "--max-days", "3", "--out", p(&models)];
    for method in ["bivariate-emos", "independent-emos", "raw"] {
        let mut args = vec!["calibrate", "--method", method, "--optimizer", "quasi-newton"];
        args.extend(common);
        ok(&args);
        assert!(models.join(format!("{method}.json")).exists());
        assert!(models.join(format!("{method}_timings.tsv")).exists());
    }
    let mut args = vec!["calibrate", "--method", "copula", "--history", p(&history), "--history-margins", "pooled"];
    args.extend(common);
    ok(&args);

    let report = dir.path().join("report.tsv");
    ok(&[
        "verify", "--models", p(&models), "--data", p(&data), "--es-samples", "300", "--rank-samples", "20",
        "--out", p(&report),
    ]);
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.starts_with("method\tcases\tES\tDelta\tDS"));
    assert_eq!(text.lines().count(), 5, "{text}");
    for label in ["Bivariate EMOS", "Independent EMOS", "Gaussian copula", "Raw ensemble"] {
        assert!(text.contains(label), "{label} missing from {text}");
    }
    assert!(dir.path().join("report_rank_histograms.tsv").exists());

    let table = ok(&[
        "bench", "--data", p(&data), "--groups", "1,10", "--train-days", "8", "--max-days", "2", "--optimizer",
        "simplex,quasi-newton",
    ]);
    for row in ["median", "mean", "std.dev"] {
        assert!(table.contains(row), "{table}");
    }
}

#[test]
fn experiment_writes_all_tables() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "data.csv", "3");
    let out = dir.path().join("exp");
    ok(&[
        "experiment", "--data", p(&data), "--groups", "1,10", "--train-days", "8", "--max-days", "2", "--methods",
        "bivariate-emos,raw", "--es-samples", "200", "--rank-samples", "10", "--serial", "--out", p(&out),
    ]);
    for f in ["report.tsv", "rank_histograms.tsv", "timings.tsv", "timing_summary.tsv"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn configuration_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "data.csv", "4");
    let out = dir.path().join("m");
    let base = ["--data", p(&data), "--train-days", "8", "--out", p(&out)];
    let run = |extra: &[&str]| {
        let mut args = vec!["calibrate"];
        args.extend(extra);
        args.extend(base);
        code(&args)
    };
    assert_eq!(run(&["--method", "copula", "--groups", "1,10"]), Some(2));
    assert_eq!(run(&["--method", "magic", "--groups", "1,10"]), Some(2));
    assert_eq!(run(&["--method", "raw", "--groups", "1,4"]), Some(2));
    assert_eq!(run(&["--method", "raw", "--groups", "one,ten"]), Some(2));
    assert_ne!(code(&["simulate", "--spec", "no-such-preset", "--out", p(&out)]), Some(0));
    assert_ne!(code(&["verify", "--models", p(&dir.path().join("none")), "--data", p(&data), "--out", p(&out)]), Some(0));
}
