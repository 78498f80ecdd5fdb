use hypcert::certifier::{derive_verdict, emit_report, run_pipeline, CheckStatus, ConjugacyConfig, FamilyName, ModelSpec, RunConfig, Verdict};

fn config(family: FamilyName, s: Option<f64>, max_period: usize) -> RunConfig {
    RunConfig::new(ModelSpec { family, s }, max_period, 7)
}

fn constant(out: &hypcert::certifier::PipelineOutput, check: &str, key: &str) -> f64 {
    out.report.check(check).unwrap().constants[key].as_f64().unwrap()
}

#[test]
fn doubling_is_expanding() {
    let out = run_pipeline(&config(FamilyName::Doubling, None, 8)).unwrap();
    assert_eq!(out.report.verdict.verdict, Verdict::Expanding);
    assert_eq!(constant(&out, "nue", "varsigma"), 0.5);
    assert_eq!(constant(&out, "adapted_metric", "sigma"), 2.0);
}

#[test]
fn cat_map_is_hyperbolic() {
    let out = run_pipeline(&config(FamilyName::CatMap, None, 5)).unwrap();
    assert_eq!(out.report.verdict.verdict, Verdict::HyperbolicSet, "{}", out.report.to_json());
    assert!((constant(&out, "hyperbolic_set", "lambda") - 0.381966).abs() < 1e-6);
    assert!((constant(&out, "domination", "lambda") - 0.145898).abs() < 1e-6);
}

#[test]
fn perturbed_cat_is_hyperbolic() {
    let out = run_pipeline(&config(FamilyName::PerturbedCat, Some(0.3), 5)).unwrap();
    assert_eq!(out.report.verdict.verdict, Verdict::HyperbolicSet, "{}", out.report.to_json());
    assert!(out.report.verdict.conclusion_verified);
}

#[test]
fn critical_map_keeps_running_after_failure() {
    let mut cfg = config(FamilyName::PerturbedDoubling, Some(2.0), 8);
    cfg.conjugacy = Some(ConjugacyConfig { resolution: 1 << 10, ..ConjugacyConfig::default() });
    let out = run_pipeline(&cfg).unwrap();
    assert_eq!(out.report.verdict.verdict, Verdict::NotExpandingHypothesisViolated);
    assert_eq!(out.report.check("local_diffeo").unwrap().status, CheckStatus::Fail);
    // later independent stages still ran
    for id in ["nue", "pliss", "shadowing", "conjugacy", "holder", "eigenvalue_bound", "adapted_metric"] {
        assert_ne!(out.report.check(id).unwrap().status, CheckStatus::Skipped, "{id}");
    }
}

#[test]
fn verdict_is_a_function_of_the_checks() {
    for cfg in [config(FamilyName::PerturbedDoubling, Some(1.5), 8), config(FamilyName::CatMap, None, 4)] {
        let out = run_pipeline(&cfg).unwrap();
        assert_eq!(derive_verdict(&out.report.checks), out.report.verdict);
    }
}

#[test]
fn artifacts_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(FamilyName::PerturbedDoubling, Some(0.5), 6);
    cfg.conjugacy = Some(ConjugacyConfig { resolution: 1 << 8, ..ConjugacyConfig::default() });
    let out = run_pipeline(&cfg).unwrap();
    let files = emit_report(&out, dir.path()).unwrap();
    let names: Vec<_> = files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    assert_eq!(names, ["report.json", "summary.csv", "orbits.csv", "shadowing.csv", "conjugacy.txt"]);
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + out.report.checks.len() + 1);
}

#[test]
fn config_echo_round_trips() {
    let mut cfg = config(FamilyName::PerturbedCat, Some(0.3), 4);
    cfg.splitting.cone_width = 0.4;
    let out = run_pipeline(&cfg).unwrap();
    let echoed: RunConfig = serde_json::from_value(out.report.config.clone()).unwrap();
    assert_eq!(echoed, cfg);
}
