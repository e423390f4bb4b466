use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use stokes_kinetic::io::load_wave;
use stokes_kinetic::PropertyReport;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stokes-kinetic"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn solve(dir: &Path, height: &str, modes: &str) -> PathBuf {
    let out = run(
        dir,
        &[
            "solve", "--lambda", "10", "--height", height, "--modes", modes, "--out", "w",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    dir.join("w").join("wave.json")
}

fn csv_column(text: &str, col: usize) -> Vec<f64> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn solve_writes_converged_wave() {
    let dir = tempfile::tempdir().unwrap();
    let path = solve(dir.path(), "0.5", "64");
    let wave = load_wave(&path).unwrap();
    assert!(wave.residual_norm <= 1e-12);
    assert_eq!(wave.modes, 64);
    let profile = fs::read_to_string(dir.path().join("w/profile.csv")).unwrap();
    assert!(profile.starts_with("x,y\n"));

    let path = solve(dir.path(), "0", "8");
    let flat = load_wave(&path).unwrap();
    assert!(flat.coefficients.iter().all(|b| *b == 0.0));
}

#[test]
fn solve_rejects_steepness_above_cap() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["solve", "--lambda", "10", "--height", "3"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("continuation"));
}

#[test]
fn flags_and_config_errors_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["solve", "--lambda", "-1"]);
    assert_eq!(code(&out), 2);
    let out = run(dir.path(), &["solve", "--no-such-flag"]);
    assert_eq!(code(&out), 2);
    fs::write(
        dir.path().join("bad.json"),
        r#"{"wave": {"wavelenght": 3}}"#,
    )
    .unwrap();
    let out = run(dir.path(), &["solve", "--config", "bad.json"]);
    assert_eq!(code(&out), 2);
    let out = run(dir.path(), &["solve", "--config", "absent.json"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn help_documents_defaults() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in ["solve", "sweep", "trajectory", "verify"] {
        let out = run(dir.path(), &[cmd, "--help"]);
        assert_eq!(code(&out), 0);
        let text = String::from_utf8_lossy(&out.stdout);
        assert!(text.contains("[default: 10]"), "{cmd}");
        assert!(text.contains("[default: 64]"), "{cmd}");
    }
    let text = String::from_utf8_lossy(&run(dir.path(), &["sweep", "--help"]).stdout).into_owned();
    assert!(
        text.contains("[default: 33]")
            && text.contains("[default: log]")
            && text.contains("[default: 4N]")
    );
}

#[test]
fn sweep_outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let wave = solve(dir.path(), "0.5", "32");
    let wave = wave.to_str().unwrap();
    let args = [
        "sweep", "--wave", wave, "--kinds", "T,mu_s", "--s", "1,-1", "--out", "a",
    ];
    assert_eq!(code(&run(dir.path(), &args)), 0);
    let mut second = args;
    second[8] = "b";
    assert_eq!(code(&run(dir.path(), &second)), 0);
    for name in ["T.csv", "mu_s_s1.csv", "mu_s_s-1.csv"] {
        let a = fs::read(dir.path().join("a").join(name)).unwrap();
        let b = fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }

    let t = fs::read_to_string(dir.path().join("a/T.csv")).unwrap();
    assert!(t.starts_with("# kind=T, s=0, wave="));
    let p = csv_column(&t, 0);
    let values = csv_column(&t, 1);
    assert_eq!(p.len(), 34);
    assert_eq!(p[0], 0.0);
    let w = load_wave(Path::new(wave)).unwrap();
    let asymptote = w.lambda / w.c;
    assert!((values.last().unwrap() - asymptote).abs() < 1e-12 * asymptote);
    assert!(values[0] > asymptote * (1.0 + 1e-3));

    let mu = csv_column(
        &fs::read_to_string(dir.path().join("a/mu_s_s1.csv")).unwrap(),
        1,
    );
    assert!(mu.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
}

#[test]
fn sweep_unknown_kind_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["sweep", "--kinds", "bogus"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn trajectory_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let flat = solve(dir.path(), "0", "8");
    let out = run(
        dir.path(),
        &[
            "trajectory",
            "--wave",
            flat.to_str().unwrap(),
            "--y0",
            "-1",
            "--out",
            "flat",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("flat/path.csv")).unwrap();
    let xs = csv_column(&text, 1);
    let ys = csv_column(&text, 2);
    assert!(xs.iter().all(|x| (x - xs[0]).abs() < 1e-12));
    assert!(ys.iter().all(|y| (y + 1.0).abs() < 1e-12));
    assert!(text
        .trim_end()
        .lines()
        .last()
        .unwrap()
        .ends_with("closed=true"));

    let wave = solve(dir.path(), "0.5", "32");
    let wave = wave.to_str().unwrap();
    let out = run(
        dir.path(),
        &["trajectory", "--wave", wave, "--diagnostic", "--out", "s"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("s/path.csv")).unwrap();
    assert!(text.starts_with("t,x,y,q,p\n"));
    let summary = text.trim_end().lines().last().unwrap();
    let drift: f64 = summary
        .split(", ")
        .find_map(|kv| kv.strip_prefix("drift="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(drift > 0.0 && summary.ends_with("closed=false"));

    let out = run(dir.path(), &["trajectory", "--wave", wave, "--y0", "1.0"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn verify_flat_water_passes() {
    let dir = tempfile::tempdir().unwrap();
    let flat = solve(dir.path(), "0", "16");
    let out = run(
        dir.path(),
        &["verify", "--wave", flat.to_str().unwrap(), "--out", "v"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert!(dir.path().join("v/report.txt").exists());
}

#[test]
fn verify_solved_wave_reports_only_the_negative_exponent_energy() {
    let dir = tempfile::tempdir().unwrap();
    let wave = solve(dir.path(), "0.5", "64");
    let wave = wave.to_str().unwrap();
    let first = run(dir.path(), &["verify", "--wave", wave, "--out", "v1"]);
    let second = run(dir.path(), &["verify", "--wave", wave, "--out", "v2"]);
    assert_eq!(code(&first), 2);
    let load = |d: &str| -> PropertyReport {
        serde_json::from_str(&fs::read_to_string(dir.path().join(d).join("report.json")).unwrap())
            .unwrap()
    };
    let (a, mut b) = (load("v1"), load("v2"));
    let failed: Vec<&str> = a.failures().map(|c| c.name.as_str()).collect();
    assert_eq!(failed, ["E_s[s=-1].non_increasing"]);
    b.timestamp = a.timestamp.clone();
    assert_eq!(a, b);
    let _ = second;
}

#[test]
fn verify_corrupted_and_missing_waves() {
    let dir = tempfile::tempdir().unwrap();
    let path = solve(dir.path(), "0.5", "32");
    let mut json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let b1 = json["coefficients"][0].as_f64().unwrap();
    json["coefficients"][0] = serde_json::json!(b1 * 1.01);
    let corrupted = dir.path().join("corrupted.json");
    fs::write(&corrupted, serde_json::to_string(&json).unwrap()).unwrap();
    let out = run(
        dir.path(),
        &[
            "verify",
            "--wave",
            corrupted.to_str().unwrap(),
            "--out",
            "c",
        ],
    );
    assert_eq!(code(&out), 2);
    let text = fs::read_to_string(dir.path().join("c/report.txt")).unwrap();
    assert!(text
        .lines()
        .any(|l| l.starts_with("governing.bernoulli") && l.contains("FAIL")));

    let out = run(dir.path(), &["verify", "--wave", "missing.json"]);
    assert_eq!(code(&out), 3);
}
