use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn hypcert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypcert")).args(args).env("RUST_BACKTRACE", "0").output().unwrap()
}

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name).to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn certify_doubling_with_seed_override() {
    let tmp = tempfile::tempdir().unwrap();
    let dir: PathBuf = tmp.path().join("out");
    let o = hypcert(&["certify", &config("doubling.toml"), "--seed", "99", "--report-dir", dir.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("verdict: expanding"));
    let r = report(&dir);
    assert_eq!(r["seed"], 99);
    assert_eq!(r["verdict"], "expanding");
    for f in ["summary.csv", "orbits.csv", "shadowing.csv"] {
        assert!(dir.join(f).is_file(), "{f}");
    }
    let summary = std::fs::read_to_string(dir.join("summary.csv")).unwrap();
    assert!(summary.starts_with("check,status,detail\n"));
}

#[test]
fn certify_cat_writes_splitting() {
    let tmp = tempfile::tempdir().unwrap();
    let o = hypcert(&["certify", &config("cat_map.toml"), "--report-dir", tmp.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report(tmp.path())["verdict"], "hyperbolic set");
    assert!(tmp.path().join("splitting.csv").is_file());
}

#[test]
fn seed_override_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let d = tmp.path().join(sub);
        let o = hypcert(&["--seed", "5", "certify", &config("perturbed_cat.toml"), "--report-dir", d.to_str().unwrap()]);
        assert!(o.status.success());
        std::fs::read(d.join("report.json")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn plot_circle_and_torus() {
    let tmp = tempfile::tempdir().unwrap();
    for (cfg, name) in [("perturbed_doubling_1_5.toml", "lift.svg"), ("cat_map.toml", "torus.svg")] {
        let out = tmp.path().join("plots").join(name);
        let o = hypcert(&["plot", &config(cfg), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let svg = std::fs::read_to_string(out).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains(r#"class="periodic""#));
    }
}

#[test]
fn selftest_subset() {
    let o = hypcert(&["selftest", "--only", "1,2"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert_eq!(s.matches("[PASS]").count(), 2);
    assert!(s.contains("2 passed, 0 failed"));
}

#[test]
fn selftest_reports_failure_exit_code() {
    let o = hypcert(&["selftest", "--only", "3", "--tighten", "1e6"]);
    assert!(!o.status.success());
    assert!(stdout(&o).contains("[FAIL]"));
}

#[test]
fn bad_inputs_fail_cleanly() {
    assert!(!hypcert(&["selftest", "--only", "11"]).status.success());
    assert!(!hypcert(&["certify", "/nonexistent/config.toml"]).status.success());
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "seed = 1\nmax_period = 0\n[model]\nfamily = \"doubling\"\n").unwrap();
    let o = hypcert(&["certify", bad.to_str().unwrap(), "--report-dir", tmp.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("max_period"));
}
