use std::fs;
use std::process::{Command, Output};

fn robin_tri(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_robin-tri"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn equilateral_prints_ground_state() {
    let out = robin_tri(&["equilateral", "--alpha", "-1", "--area", "0.5773502691896258"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for key in ["t = ", "K = ", "L = ", "M = ", "lambda0 = "] {
        assert!(text.contains(key), "{text}");
    }
    let lambda: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("lambda0 = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((lambda + 7.251_687_898_118).abs() < 1e-9);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(robin_tri(&["nonsense"]).status.code(), Some(1));
    assert_eq!(robin_tri(&["equilateral"]).status.code(), Some(1));
    assert_eq!(robin_tri(&["equilateral", "--alpha", "0.5"]).status.code(), Some(1));
    assert_eq!(robin_tri(&["eigen", "--a", "0", "--alpha", "1"]).status.code(), Some(1));
    assert_eq!(robin_tri(&["scan", "--mode", "unknown-mode"]).status.code(), Some(1));
    assert_eq!(robin_tri(&["--help"]).status.code(), Some(0));
}

#[test]
fn eigen_reports_error_estimate() {
    let out = robin_tri(&["eigen", "--a", "0", "--alpha", "-0.5", "--tol", "1e-7"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("lambda1 = -3.27794"), "{text}");
    assert!(text.contains("error_estimate = "));
}

#[test]
fn scan_writes_identical_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scan.cfg");
    fs::write(
        &cfg,
        "mode = transplant-region\nalpha_range = -6, -0.1, 5\na_range = 0, 2, 5\nS = 0.5773502691896258\n",
    )
    .unwrap();
    let first = dir.path().join("first.csv");
    let second = dir.path().join("second.csv");
    for (path, workers) in [(&first, "1"), (&second, "2")] {
        let out = robin_tri(&[
            "scan",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            path.to_str().unwrap(),
            "--svg",
            "--workers",
            workers,
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = fs::read(&first).unwrap();
    let b = fs::read(&second).unwrap();
    assert!(!a.is_empty());
    // the output path is echoed in the header; compare the data lines
    let data = |bytes: &[u8]| {
        String::from_utf8_lossy(bytes)
            .lines()
            .filter(|l| !l.starts_with("# output_path"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(data(&a), data(&b));
    assert_eq!(data(&a).lines().filter(|l| !l.starts_with('#')).count(), 26);
    let svg_a = fs::read_to_string(first.with_extension("svg")).unwrap();
    let svg_b = fs::read_to_string(second.with_extension("svg")).unwrap();
    assert!(svg_a.starts_with("<svg"));
    assert_eq!(svg_a, svg_b);
}

#[test]
fn scan_rejects_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "alpha_range = -1, 2, 5\n").unwrap();
    let out = robin_tri(&["scan", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let missing = dir.path().join("missing.cfg");
    assert_eq!(robin_tri(&["scan", "--config", missing.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn scan_to_stdout_without_output_path() {
    let out = robin_tri(&["scan", "--mode", "g-curve"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("t,g,alpha_sqrt_area,verdict,error"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1000);
}

#[test]
fn verify_local_suite_passes() {
    let out = robin_tri(&["verify", "--suite", "local", "--alpha", "-0.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("holds"));
}

#[test]
fn verify_monotone_suite_passes() {
    let out = robin_tri(&["verify", "--suite", "monotone"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("ordering holds"));
}
