use std::path::{Path, PathBuf};

use hypcert::certifier::{run_pipeline, FamilyName, ModelSpec, RunConfig};
use serde_json::Value;

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("schema")
}

fn load(name: &str) -> Value {
    let text = std::fs::read_to_string(schema_dir().join(name)).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn type_matches(t: &str, v: &Value) -> bool {
    match t {
        "object" => v.is_object(),
        "array" => v.is_array(),
        "string" => v.is_string(),
        "boolean" => v.is_boolean(),
        "null" => v.is_null(),
        "integer" => v.is_u64() || v.is_i64(),
        "number" => v.is_number(),
        _ => panic!("unknown schema type {t}"),
    }
}

/// Subset of JSON Schema used by the shipped schemas: type, enum, required,
/// properties, additionalProperties = false, items, minimum and file `$ref`.
fn validate(schema: &Value, v: &Value, path: &str, errors: &mut Vec<String>) {
    if let Some(r) = schema.get("$ref").and_then(Value::as_str) {
        return validate(&load(r), v, path, errors);
    }
    match schema.get("type") {
        Some(Value::String(t)) if !type_matches(t, v) => return errors.push(format!("{path}: expected {t}, got {v}")),
        Some(Value::Array(ts)) if !ts.iter().any(|t| type_matches(t.as_str().unwrap(), v)) => {
            return errors.push(format!("{path}: type not in {ts:?}"))
        }
        _ => {}
    }
    if let Some(options) = schema.get("enum").and_then(Value::as_array) {
        if !options.contains(v) {
            errors.push(format!("{path}: {v} not in enum"));
        }
    }
    if let (Some(min), Some(x)) = (schema.get("minimum").and_then(Value::as_f64), v.as_f64()) {
        if x < min {
            errors.push(format!("{path}: {x} < {min}"));
        }
    }
    if let Some(obj) = v.as_object() {
        let props = schema.get("properties").and_then(Value::as_object);
        for key in schema.get("required").and_then(Value::as_array).into_iter().flatten() {
            if !obj.contains_key(key.as_str().unwrap()) {
                errors.push(format!("{path}: missing {key}"));
            }
        }
        for (k, child) in obj {
            match props.and_then(|p| p.get(k)) {
                Some(s) => validate(s, child, &format!("{path}.{k}"), errors),
                None if schema.get("additionalProperties") == Some(&Value::Bool(false)) => {
                    errors.push(format!("{path}: unexpected key {k}"))
                }
                None => {}
            }
        }
    }
    if let (Some(items), Some(arr)) = (schema.get("items"), v.as_array()) {
        for (i, child) in arr.iter().enumerate() {
            validate(items, child, &format!("{path}[{i}]"), errors);
        }
    }
}

fn check(schema: &str, v: &Value) {
    let mut errors = Vec::new();
    validate(&load(schema), v, "$", &mut errors);
    assert!(errors.is_empty(), "{schema}: {errors:#?}");
}

#[test]
fn shipped_configs_match_schema() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let text = std::fs::read_to_string(&path).unwrap();
            let raw: toml::Value = toml::from_str(&text).unwrap();
            check("config.schema.json", &serde_json::to_value(raw).unwrap());
            RunConfig::from_toml_str(&text).unwrap();
            n += 1;
        }
    }
    assert!(n >= 4);
}

#[test]
fn circle_report_matches_schema() {
    let mut cfg = RunConfig::new(ModelSpec { family: FamilyName::PerturbedDoubling, s: Some(0.5) }, 6, 3);
    cfg.conjugacy = Some(Default::default());
    let out = run_pipeline(&cfg).unwrap();
    check("report.schema.json", &serde_json::from_str(&out.report.to_json()).unwrap());
}

#[test]
fn torus_report_matches_schema() {
    let cfg = RunConfig::new(ModelSpec { family: FamilyName::CatMap, s: None }, 4, 3);
    let out = run_pipeline(&cfg).unwrap();
    check("report.schema.json", &serde_json::from_str(&out.report.to_json()).unwrap());
}

#[test]
fn validator_rejects_bad_documents() {
    let mut errors = Vec::new();
    let bad = serde_json::json!({"seed": -1, "max_period": 3, "model": {"family": "tent"}, "extra": 1});
    validate(&load("config.schema.json"), &bad, "$", &mut errors);
    assert_eq!(errors.len(), 3, "{errors:?}");
}
