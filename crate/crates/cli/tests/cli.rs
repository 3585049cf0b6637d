use std::fs;
use std::process::{Command, Output};

fn dunkl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dunkl"))
        .args(args)
        .env_remove("DUNKL_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let i = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(i).unwrap().to_string()).collect()
}

#[test]
fn kernel_closed_form_at_one_and_zero() {
    let o = dunkl(&["kernel", "--kind", "Rank1", "--k", "1", "--lambda", "1", "--x", "1"]);
    assert!(o.status.success());
    let v: f64 = column(&stdout(&o), "value")[0].parse().unwrap();
    let e = std::f64::consts::E;
    assert!((v - (e - 1f64.sinh())).abs() < 1e-12, "{v}");

    let o = dunkl(&["kernel", "--kind", "Rank1", "--k", "1", "--lambda", "1", "--x", "0"]);
    assert_eq!(column(&stdout(&o), "value")[0], "1.0");
}

#[test]
fn kernel_route_residuals_on_default_grid() {
    let o = dunkl(&["kernel"]);
    let res = column(&stdout(&o), "route_residual");
    assert_eq!(res.len(), 21);
    for r in res {
        assert!(r.parse::<f64>().unwrap() < 1e-9, "{r}");
    }
}

#[test]
fn negative_points_parse() {
    let o = dunkl(&["kernel", "--x", "-2.5", "--x-grid", "-1:1:3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(column(&stdout(&o), "x_1"), ["-2.5"]);
}

#[test]
fn constants_gamma() {
    let o = dunkl(&["constants", "--kind", "A", "--rank", "3", "--k", "1"]);
    assert_eq!(column(&stdout(&o), "gamma"), ["3.0"]);
}

#[test]
fn experiment_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let o = dunkl(&[
            "experiment",
            "slln",
            "--preset",
            "rank1-dunkl-k1",
            "--out-dir",
            out.to_str().unwrap(),
            "--format",
            "json",
        ]);
        assert_eq!(o.status.code(), Some(0));
        let json = fs::read(out.join("slln_rank1-dunkl-k1.json")).unwrap();
        let csv = fs::read(out.join("slln_rank1-dunkl-k1.csv")).unwrap();
        (o.stdout, json, csv)
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    // the worker count must not matter either
    let out = dir.path().join("c");
    let o = dunkl(&[
        "--workers",
        "1",
        "experiment",
        "slln",
        "--preset",
        "rank1-dunkl-k1",
        "--out-dir",
        out.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(o.stdout, a.0);
}

#[test]
fn boundary_counterexample_exits_2() {
    let o = dunkl(&["experiment", "clt", "--preset", "boundary-counterexample"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains(",fail,"));
}

#[test]
fn config_merges_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"format": "json", "constants": {"kind": "B", "rank": 2, "k": [1, 2]}}"#).unwrap();
    let o = dunkl(&["--config", cfg.to_str().unwrap(), "constants", "--rank", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v[0]["kind"], "B");
    assert_eq!(v[0]["rank"], 3);
    // 3·k_short + 6·k_long
    assert_eq!(v[0]["gamma"], 15.0);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{\n  \"seed\": 1,\n  \"kernal\": {}\n}").unwrap();
    let o = dunkl(&["--config", cfg.to_str().unwrap(), "constants"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("kernal") && err.contains("line 3"), "{err}");
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(dunkl(&["-k", "1", "kernel"]).status.code(), Some(1));
    assert_eq!(dunkl(&["kernel", "--function", "jalpha"]).status.code(), Some(1));
    assert_eq!(dunkl(&["--help"]).status.code(), Some(0));
}

#[test]
fn output_file_and_environment_workers() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("paths.csv");
    let o = Command::new(env!("CARGO_BIN_EXE_dunkl"))
        .args(["simulate", "--x0", "0.5", "--lambda", "1", "--paths", "4", "--terminal", "--output"])
        .arg(&out)
        .env("DUNKL_WORKERS", "2")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(!text.contains('\r'));

    let o = Command::new(env!("CARGO_BIN_EXE_dunkl"))
        .arg("constants")
        .env("DUNKL_WORKERS", "lots")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}
