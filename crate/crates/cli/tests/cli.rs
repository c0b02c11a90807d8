//! End-to-end runs of the `mqh` binary: subcommand examples, exit codes, manifests,
//! configuration precedence and golden-seed reproducibility.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mqhawkes::manifest::{Manifest, MANIFEST_FILE};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn mqh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mqh")).args(args).env_remove("MQH_THREADS").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(args: &[&str]) -> String {
    let o = mqh(args);
    assert!(o.status.success(), "{args:?} failed: {}", stderr(&o));
    stdout(&o)
}

/// Value after `key` in aligned `key value` output.
fn field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(key).filter(|rest| rest.starts_with(' ')).map(|rest| rest.trim().to_string()))
        .unwrap_or_else(|| panic!("no {key} in\n{text}"))
}

fn verdict_score(text: &str, check: &str) -> f64 {
    let l = text
        .lines()
        .find(|l| l.starts_with(&format!("verdict check={check} ")))
        .unwrap_or_else(|| panic!("no {check} verdict in\n{text}"));
    let s = l.split_whitespace().find_map(|w| w.strip_prefix("score=")).expect("score");
    s.parse().unwrap()
}

fn simulate(spec: &str, horizon: &str, seed: &str, out: &Path) -> String {
    ok(&[
        "simulate",
        "--spec",
        data(spec).to_str().unwrap(),
        "--horizon",
        horizon,
        "--seed",
        seed,
        "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn help_is_available_for_every_subcommand() {
    for sub in ["simulate", "estimate", "tail", "sde", "exponents", "endogeneity"] {
        let text = ok(&[sub, "--help"]);
        assert!(text.contains("Usage: mqh"), "{sub}: {text}");
    }
    let text = ok(&["--help"]);
    for sub in ["simulate", "estimate", "tail", "sde", "exponents", "endogeneity"] {
        assert!(text.contains(sub));
    }
}

#[test]
fn poisson_stream_has_expected_size() {
    let dir = tempfile::tempdir().unwrap();
    let text = simulate("poisson.toml", "5000", "1", dir.path());
    let n: f64 = field(&text, "events").parse().unwrap();
    // Rate 2 over 5000: mean 10^4, standard deviation 100.
    assert!((n - 1e4).abs() < 300.0, "{n}");
    let csv = std::fs::read_to_string(dir.path().join("events.csv")).unwrap();
    assert_eq!(csv.lines().count() as f64, n + 1.0);
    assert!(csv.lines().skip(1).all(|l| l.split(',').nth(1) == Some("0")));
}

#[test]
fn simulate_writes_verifiable_manifest() {
    let dir = tempfile::tempdir().unwrap();
    simulate("hawkes.toml", "100", "5", dir.path());
    let m = Manifest::read(&dir.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(m.command, "simulate");
    assert_eq!(m.seed, Some(5));
    assert_eq!(m.config["horizon"], 100.0);
    assert_eq!(m.inputs.len(), 1);
    let names: Vec<&str> = m.outputs.iter().map(|o| o.path.as_str()).collect();
    assert_eq!(names, ["events.csv", "events.meta.json"]);
    m.verify_outputs(dir.path()).unwrap();
}

#[test]
fn explosive_spec_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = mqh(&["simulate", "--spec", data("explosive.toml").to_str().unwrap(), "--horizon", "1e6", "--out"])
        .status
        .code();
    assert_eq!(o, Some(2), "missing value is a usage error");
    let out = mqh(&[
        "simulate",
        "--spec",
        data("explosive.toml").to_str().unwrap(),
        "--horizon",
        "1e6",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("at t = "), "{}", stderr(&out));
}

#[test]
fn invalid_inputs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let invalid = data("invalid.toml");
    let cases: Vec<Vec<&str>> = vec![
        vec!["simulate", "--spec", "/nonexistent.toml", "--horizon", "1", "--out", d],
        vec!["endogeneity", "--spec", invalid.to_str().unwrap()],
        vec!["simulate", "--horizon", "1", "--out", d],
        vec!["tail", "--nz", "-1"],
        vec!["tail", "--gamma", "0.5"],
        vec!["exponents", "--eps-d", "1.5", "--eps-o", "0.5", "--rho-d", "1", "--rho-o", "1", "--rho-x", "1"],
        vec!["tail", "--nz", "0.5", "--bogus"],
    ];
    for args in cases {
        assert_eq!(mqh(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn golden_seed_is_byte_identical() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/hawkes_seed7.csv");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    simulate("hawkes.toml", "200", "7", a.path());
    simulate("hawkes.toml", "200", "7", b.path());
    let first = std::fs::read(a.path().join("events.csv")).unwrap();
    let second = std::fs::read(b.path().join("events.csv")).unwrap();
    assert_eq!(first, second);
    if std::env::var_os("MQH_BLESS").is_some() {
        std::fs::write(&golden, &first).unwrap();
    }
    let blessed = std::fs::read(&golden).expect("golden file exists; run with MQH_BLESS=1 to create it");
    assert!(first == blessed, "events.csv differs from the blessed golden file");
    let other = tempfile::tempdir().unwrap();
    simulate("hawkes.toml", "200", "8", other.path());
    assert_ne!(std::fs::read(other.path().join("events.csv")).unwrap(), first);
}

#[test]
fn estimate_scores_match_and_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    simulate("zhawkes.toml", "400000", "2", &sim);
    let events = sim.join("events.csv");
    let run = |spec: &str, out: &str| {
        ok(&[
            "estimate",
            "--events",
            events.to_str().unwrap(),
            "--spec",
            data(spec).to_str().unwrap(),
            "--dt",
            "0.25",
            "--q",
            "24",
            "--check",
            "2pt",
            "--out",
            dir.path().join(out).to_str().unwrap(),
        ])
    };
    let matched = verdict_score(&run("zhawkes.toml", "matched"), "2pt");
    let mismatched = verdict_score(&run("hawkes_perturbed.toml", "mismatched"), "2pt");
    assert!(matched < 4.0, "{matched}");
    assert!(mismatched > matched, "{mismatched} vs {matched}");
    let m = Manifest::read(&dir.path().join("matched").join(MANIFEST_FILE)).unwrap();
    assert!(m.outputs.iter().any(|o| o.path == "correlations/c.csv"));
    assert!(m.outputs.iter().any(|o| o.path == "residuals_2pt.csv"));
    m.verify_outputs(&dir.path().join("matched")).unwrap();
}

#[test]
fn poisson_stream_fits_zero_kernel_spec() {
    let dir = tempfile::tempdir().unwrap();
    simulate("poisson.toml", "100000", "4", &dir.path().join("sim"));
    let text = ok(&[
        "estimate",
        "--events",
        dir.path().join("sim/events.csv").to_str().unwrap(),
        "--spec",
        data("poisson.toml").to_str().unwrap(),
        "--dt",
        "0.5",
        "--q",
        "10",
        "--check",
        "2pt",
        "--check",
        "3pt-diag",
        "--out",
        dir.path().join("est").to_str().unwrap(),
    ]);
    assert!(verdict_score(&text, "2pt") < 4.0, "{text}");
    assert!(verdict_score(&text, "3pt-diag") < 4.5, "{text}");
}

#[test]
fn short_stream_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    simulate("poisson.toml", "20", "1", &dir.path().join("sim"));
    let o = mqh(&[
        "estimate",
        "--events",
        dir.path().join("sim/events.csv").to_str().unwrap(),
        "--dt",
        "1",
        "--q",
        "16",
        "--out",
        dir.path().join("est").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn tail_exact_points() {
    let text = ok(&["tail", "--nz", "0.5", "--gamma", "1"]);
    assert_eq!(field(&text, "alpha"), "4.000000000");
    let text = ok(&["tail", "--nz", "0.4", "--gamma", "0"]);
    let alpha: f64 = field(&text, "alpha").parse().unwrap();
    assert!((alpha - 4.5).abs() < 1e-9, "{alpha}");
}

#[test]
fn tail_compare_prints_both_values() {
    let text = ok(&["tail", "--nz", "0.4", "--gamma", "0.2", "--compare", "small-gamma"]);
    let l = text.lines().find(|l| l.starts_with("compare SmallGamma alpha")).expect("comparison line");
    let get = |k: &str| -> f64 { l.split_whitespace().find_map(|w| w.strip_prefix(k)).unwrap().parse().unwrap() };
    let (numeric, closed) = (get("numeric="), get("closed_form="));
    let expected = 2.0 + 1.0 / 0.4 + 0.04 / 32.0 * (4.0 / 0.4 - 1.0 / 0.064);
    assert!((closed - expected).abs() < 1e-12);
    assert!((numeric - closed).abs() < 5e-3, "{numeric} vs {closed}");
}

#[test]
fn tail_json_and_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&[
        "--format",
        "json",
        "tail",
        "--nz",
        "10",
        "--gamma",
        "1",
        "--grid",
        "256",
        "--compare",
        "large-nz",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let sup = v["comparisons"].as_array().unwrap().iter().find(|c| c["quantity"] == "profile_sup_relative").unwrap();
    assert!(sup["numeric"].as_f64().unwrap() < 0.01);
    let profile = std::fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    assert_eq!(profile.lines().count(), 257);
    Manifest::read(&dir.path().join(MANIFEST_FILE)).unwrap().verify_outputs(dir.path()).unwrap();
}

#[test]
fn tail_problem_file_matches_symmetric_flags() {
    let dir = tempfile::tempdir().unwrap();
    let a = (2.0f64 * 0.6).sqrt();
    let x = 2.0 * 0.5 * 0.6;
    let path = dir.path().join("p.json");
    let problem = serde_json::json!({
        "omega": [1.0, 1.0], "a_z": [[a, a], [a, a]], "a_cross": [x, x], "baseline": [1.0, 1.0]
    });
    std::fs::write(&path, problem.to_string()).unwrap();
    let general: f64 = field(&ok(&["tail", "--problem", path.to_str().unwrap()]), "alpha").parse().unwrap();
    let symmetric: f64 = field(&ok(&["tail", "--nz", "0.6", "--gamma", "0.5"]), "alpha").parse().unwrap();
    assert!((general - symmetric).abs() < 1e-6, "{general} vs {symmetric}");
}

#[test]
fn sde_writes_overlay_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&[
        "sde",
        "--nz",
        "10",
        "--gamma",
        "1",
        "--dt",
        "0.001",
        "--steps",
        "2000000",
        "--seed",
        "3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(field(&text, "chi_square").contains("dof"));
    let hist = std::fs::read_to_string(dir.path().join("theta_hist.csv")).unwrap();
    let rows: Vec<Vec<f64>> =
        hist.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 32);
    let width = std::f64::consts::PI / 32.0;
    let density: f64 = rows.iter().map(|r| r[4] * width).sum();
    let solver: f64 = rows.iter().map(|r| r[5] * width).sum();
    assert!((density - 1.0).abs() < 1e-9 && (solver - 1.0).abs() < 1e-9);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("tail_report.json")).unwrap()).unwrap();
    assert!(report["alpha_solver"].as_f64().unwrap() > 2.0);
    assert!(report["chi_square"]["p_value"].as_f64().is_some());
}

#[test]
fn sde_ornstein_uhlenbeck_variance() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&[
        "--format",
        "json",
        "sde",
        "--problem",
        data("ou_problem.toml").to_str().unwrap(),
        "--dt",
        "0.01",
        "--steps",
        "2000000",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v["alpha_solver"].is_null());
    for k in 0..2 {
        let ms = v["mean_square"][k].as_f64().unwrap();
        // ω λ∞ / 2 with ω = λ∞ = 1.
        assert!((ms - 0.5).abs() < 0.05, "{ms}");
    }
}

#[test]
fn exponents_examples() {
    let text =
        ok(&["exponents", "--eps-d", "0.5", "--eps-o", "0.5", "--rho-d", "0.8", "--rho-o", "0.9", "--rho-x", "0.9"]);
    assert_eq!(field(&text, "beta_d"), "1.200000");
    let args = ["--eps-d", "0.1", "--eps-o", "0.1", "--rho-d", "1.6", "--rho-o", "1.6", "--rho-x", "1.6"];
    let text = ok(&[&["exponents", "--regime", "critical"], &args[..]].concat());
    assert_eq!(field(&text, "beta_d"), "0.800000");
    let text = ok(&[
        "--format",
        "json",
        "exponents",
        "--regime",
        "critical",
        "--eps-d",
        "0.2",
        "--eps-o",
        "0.3",
        "--rho-d",
        "1",
        "--rho-o",
        "1",
        "--rho-x",
        "1",
    ]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!((v["beta_d"].as_f64().unwrap() - 1.6).abs() < 1e-12);
    assert!(!v["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn endogeneity_reports_rates() {
    let text = ok(&["endogeneity", "--spec", data("zhawkes.toml").to_str().unwrap()]);
    let n_h: f64 = field(&text, "n_h").parse().unwrap();
    assert!((n_h - 0.5).abs() < 1e-12);
    assert_eq!(field(&text, "class"), "StationaryFiniteMean");
    assert_eq!(field(&text, "positive"), "true");
    // λ∞ / (1 - n_H - n_Z) = 1 / 0.4.
    let rate: f64 = field(&text, "mean_rates").parse().unwrap();
    assert!((rate - 2.5).abs() < 1e-9, "{rate}");
    let text = ok(&["endogeneity", "--spec", data("explosive.toml").to_str().unwrap()]);
    assert_eq!(field(&text, "class"), "Explosive");
    assert!(field(&text, "mean_rates").starts_with("undefined"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[tail]\nnz = 0.4\ngrid = 128\n").unwrap();
    let c = cfg.to_str().unwrap();
    let from_file: f64 = field(&ok(&["--config", c, "tail"]), "alpha").parse().unwrap();
    assert!((from_file - 4.5).abs() < 1e-9);
    let from_flag: f64 = field(&ok(&["--config", c, "tail", "--nz", "0.2"]), "alpha").parse().unwrap();
    assert!((from_flag - 7.0).abs() < 1e-9);
    std::fs::write(&cfg, "[tail]\nnzz = 0.4\n").unwrap();
    assert_eq!(mqh(&["--config", c, "tail"]).status.code(), Some(2));
}

#[test]
fn thread_cap_from_environment() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_mqh"))
            .args(["tail", "--nz", "0.4", "--grid", "64"])
            .env("MQH_THREADS", threads)
            .output()
            .unwrap()
    };
    assert!(run("2").status.success());
    assert_eq!(run("0").status.code(), Some(2));
}
