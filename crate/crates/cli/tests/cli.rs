use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn remotefc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_remotefc")).args(args).output().unwrap()
}

fn example() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models/binary.model")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn help_and_version_exit_zero() {
    assert!(remotefc(&["--help"]).status.success());
    assert!(remotefc(&["--version"]).status.success());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(remotefc(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(remotefc(&["fig3", "--grid", "many"]).status.code(), Some(1));
    assert_eq!(remotefc(&["validate", "/nonexistent/model"]).status.code(), Some(1));
}

#[test]
fn malformed_model_reports_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.model");
    let src = std::fs::read_to_string(example()).unwrap().replacen("\"0.5\", \"0.5\"", "\"0.5\", \"0.6\"", 1);
    std::fs::write(&bad, src).unwrap();
    let o = remotefc(&["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("bad.model:1:"), "{e}");
    assert!(e.contains("p_x"), "{e}");
}

#[test]
fn near_stochastic_rows_are_rescaled_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("near.model");
    let src = std::fs::read_to_string(example())
        .unwrap()
        .replacen("\"0.5\", \"0.5\"", "\"0.5\", \"0.5000000001\"", 1);
    std::fs::write(&m, src).unwrap();
    let out = dir.path().join("v.csv");
    let o = remotefc(&["validate", m.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning: rescaled"), "{}", stderr(&o));
    let meta = std::fs::read_to_string(dir.path().join("v.csv.meta")).unwrap();
    assert!(meta.contains("rescaled = "), "{meta}");
}

#[test]
fn enumeration_cap_exits_two() {
    let o = remotefc(&["simulate", example().to_str().unwrap(), "--n", "40", "--trials", "10"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn csv_goes_to_stdout_without_output_flag() {
    let o = remotefc(&["region-eval", example().to_str().unwrap()]);
    assert!(o.status.success());
    let out = String::from_utf8(o.stdout).unwrap();
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("system,R_s,R_w,R_dec,R_eve"));
    assert!(lines.next().is_some());
    assert!(!out.contains('\r'));
}

#[test]
fn fig3_matches_reported_decreases() {
    let o = remotefc(&["fig3"]);
    assert!(o.status.success());
    let out = String::from_utf8(o.stdout).unwrap();
    let last: Vec<f64> = out.lines().last().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(last[0], 3.0);
    assert!((last[3] - 31.45).abs() < 0.25, "{out}");
    assert!((last[4] - 58.68).abs() < 0.25, "{out}");
}

#[test]
fn meta_sidecar_records_invocation_without_timestamps() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = remotefc(&[
        "simulate",
        example().to_str().unwrap(),
        "--n",
        "4",
        "--trials",
        "200",
        "--seed",
        "9",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let meta = std::fs::read_to_string(dir.path().join("s.csv.meta")).unwrap();
    assert!(meta.starts_with("tool = remotefc "), "{meta}");
    assert!(meta.contains("seed = 9"), "{meta}");
    let data = std::fs::read_to_string(&out).unwrap();
    assert!(data.starts_with("n,trials,codes,errors,"));
    assert_eq!(data.lines().count(), 2);
}

#[test]
fn mf_eval_at_one_arm_matches_region_eval() {
    let m = example();
    let m = m.to_str().unwrap();
    let single = String::from_utf8(remotefc(&["region-eval", m]).stdout).unwrap();
    let multi = String::from_utf8(remotefc(&["mf-eval", m, "--J", "1"]).stdout).unwrap();
    let r_s: f64 = single.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    let mf_r_s: f64 = multi
        .lines()
        .find(|l| l.starts_with("R_s,"))
        .unwrap_or_else(|| panic!("{multi}"))
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!((r_s - mf_r_s).abs() < 1e-11);
}
