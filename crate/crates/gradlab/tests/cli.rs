use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gradlab"))
}

fn spec_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("specs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn gradlab")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn run_spec(spec: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", spec.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn golden_elliptic_1d() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_spec(&spec_path("elliptic_1d.toml"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("bound_report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["experiment"], "elliptic_bound");
    let bound = &report["runs"][0]["report"]["bound"];
    assert!((bound["measured"].as_f64().unwrap() - 0.5).abs() < 1e-6);
    assert!((bound["bound"].as_f64().unwrap() - 2.0 * std::f64::consts::E).abs() < 1e-12);
    let manifest = fs::read_to_string(dir.path().join("MANIFEST")).unwrap();
    assert!(manifest.contains("spec elliptic_1d.toml"));
    assert!(manifest.contains("seed 1"));
    assert!(manifest.lines().any(|l| l.starts_with("output sweep.csv ")));
}

#[test]
fn negative_h_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(spec_path("elliptic_1d.toml")).unwrap().replace("h = 1e-3", "h = -1e-3");
    let spec = dir.path().join("bad.toml");
    fs::write(&spec, text).unwrap();
    let o = run_spec(&spec, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("grid.h") && err.contains("must be > 0"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn syntax_errors_report_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.toml");
    fs::write(&spec, "name = \"x\"\nexperiment = \"elliptic_bound\"\n[grid\nh = 0.1\n").unwrap();
    let o = run_spec(&spec, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    fs::write(&spec, "name = \"x\"\nexperiment = \"elliptic_bound\"\nfoo = 1\n").unwrap();
    let o = run_spec(&spec, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("foo"), "{}", stderr(&o));

    let o = run_spec(&spec_path("elliptic_1d.toml"), dir.path(), &["--h-override", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failed_check_exits_one_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(spec_path("zscan_negative_control.toml"))
        .unwrap()
        .replace("expect_violation = true", "expect_violation = false");
    let spec = dir.path().join("undersized.toml");
    fs::write(&spec, text).unwrap();
    let out = dir.path().join("out");
    let o = run_spec(&spec, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("zscan_report.json run 0") && err.contains("two-point function"), "{err}");
    // artifacts are still written
    let report = run(&["report", out.to_str().unwrap()]);
    assert_eq!(report.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&report.stdout).contains("FAIL run 0"));
}

const SWEEP: &str = r#"
name = "disk50"
experiment = "elliptic_bound"
seed = 9

[domain]
kind = "disk"
radius = 1.0

[grid]
h = 0.1

[coefficients]
kind = "random"
k = 3.0
f = 2.0
cell = 0.25

[sweep]
count = 50
"#;

#[test]
fn fifty_seed_sweep_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("disk50.toml");
    fs::write(&spec, SWEEP).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(run_spec(&spec, &a, &["--threads", "1"]).status.code(), Some(0));
    assert_eq!(run_spec(&spec, &b, &["--threads", "3"]).status.code(), Some(0));
    let csv_a = fs::read(a.join("sweep.csv")).unwrap();
    assert_eq!(csv_a, fs::read(b.join("sweep.csv")).unwrap());
    assert_eq!(fs::read(a.join("bound_report.json")).unwrap(), fs::read(b.join("bound_report.json")).unwrap());
    assert_eq!(String::from_utf8(csv_a.clone()).unwrap().lines().count(), 51);

    let c = dir.path().join("c");
    assert_eq!(run_spec(&spec, &c, &["--seed", "10"]).status.code(), Some(0));
    assert_ne!(csv_a, fs::read(c.join("sweep.csv")).unwrap());
    assert!(fs::read_to_string(c.join("MANIFEST")).unwrap().contains("override seed=10"));
}

#[test]
fn output_root_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["run", spec_path("continuation_boundary.toml").to_str().unwrap()])
        .env("GRADLAB_OUTPUT_ROOT", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("continuation_boundary").join("continuation_report.json").exists());
}

#[test]
fn h_override_is_applied_and_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_spec(&spec_path("elliptic_1d.toml"), dir.path(), &["--h-override", "0.01"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().contains(",1e-2,101,"), "{csv}");
    assert!(fs::read_to_string(dir.path().join("MANIFEST")).unwrap().contains("override h=1e-2"));
}

#[test]
fn list_and_report() {
    let o = run(&["list-experiments"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    for k in ["elliptic_bound", "parabolic_bound", "z_scan", "multiplier", "landis1d", "continuation", "convergence_study"] {
        assert!(text.contains(k), "{k} missing");
    }

    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_spec(&spec_path("convergence_sine.toml"), dir.path(), &[]).status.code(), Some(0));
    let o = run(&["report", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("overall    PASS"));

    fs::write(dir.path().join("sweep.csv"), "edited\n").unwrap();
    let o = run(&["report", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("MODIFIED sweep.csv"));

    let o = run(&["report", dir.path().join("missing").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solution_fields_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(spec_path("elliptic_1d.toml")).unwrap().replace("h = 1e-3", "h = 0.1");
    let spec = dir.path().join("fields.toml");
    fs::write(&spec, format!("save_fields = true\n{text}")).unwrap();
    let out = dir.path().join("out");
    assert_eq!(run_spec(&spec, &out, &[]).status.code(), Some(0));
    let csv = fs::read_to_string(out.join("fields_0.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x,y,phi,grad_x,grad_y"));
    assert_eq!(csv.lines().count(), 12);
    assert!(fs::read_to_string(out.join("MANIFEST")).unwrap().contains("output fields_0.csv "));

    let heat = fs::read_to_string(spec_path("heat_1d.toml")).unwrap();
    fs::write(&spec, format!("save_fields = true\n{heat}")).unwrap();
    let o = run_spec(&spec, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("save_fields"));
}
