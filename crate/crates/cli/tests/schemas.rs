//! Outputs checked against the shipped schemas: types, required keys,
//! enums, consts and local or sibling `$ref`s.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas")
}

fn load(name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(schema_dir().join(name)).unwrap()).unwrap()
}

fn type_ok(t: &str, v: &Value) -> bool {
    match t {
        "object" => v.is_object(),
        "array" => v.is_array(),
        "string" => v.is_string(),
        "integer" => v.is_i64() || v.is_u64(),
        "number" => v.is_number(),
        "boolean" => v.is_boolean(),
        "null" => v.is_null(),
        _ => false,
    }
}

fn check(root: &Value, s: &Value, v: &Value, at: &str, errs: &mut Vec<String>) {
    if let Some(r) = s.get("$ref").and_then(Value::as_str) {
        if let Some(name) = r.strip_prefix("#/$defs/") {
            check(root, &root["$defs"][name], v, at, errs);
        } else {
            let other = load(r);
            check(&other, &other, v, at, errs);
        }
    }
    if let Some(t) = s.get("type").and_then(Value::as_str) {
        if !type_ok(t, v) {
            errs.push(format!("{at}: expected {t}"));
            return;
        }
    }
    if let Some(c) = s.get("const") {
        if c != v {
            errs.push(format!("{at}: expected {c}"));
        }
    }
    if let Some(e) = s.get("enum").and_then(Value::as_array) {
        if !e.contains(v) {
            errs.push(format!("{at}: {v} not in {e:?}"));
        }
    }
    if let (Some(req), Some(obj)) = (s.get("required").and_then(Value::as_array), v.as_object()) {
        for k in req {
            if !obj.contains_key(k.as_str().unwrap()) {
                errs.push(format!("{at}: missing {k}"));
            }
        }
    }
    if let (Some(props), Some(obj)) = (s.get("properties").and_then(Value::as_object), v.as_object()) {
        for (k, sub) in props {
            if let Some(x) = obj.get(k) {
                check(root, sub, x, &format!("{at}.{k}"), errs);
            }
        }
    }
    if let (Some(items), Some(arr)) = (s.get("items"), v.as_array()) {
        for (i, x) in arr.iter().enumerate() {
            check(root, items, x, &format!("{at}[{i}]"), errs);
        }
    }
}

fn assert_valid(schema: &str, file: &Path) {
    let s = load(schema);
    let v: Value = serde_json::from_str(&fs::read_to_string(file).unwrap()).unwrap();
    let mut errs = Vec::new();
    check(&s, &s, &v, "$", &mut errs);
    assert!(errs.is_empty(), "{} against {schema}: {:?}", file.display(), &errs[..errs.len().min(5)]);
}

fn run(dir: &Path, args: &[&str]) {
    let o = Command::new(env!("CARGO_BIN_EXE_diffbasis")).args(args).env("DIFFBASIS_OUT_DIR", dir).output().unwrap();
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn schemas_are_json_with_titles() {
    for e in fs::read_dir(schema_dir()).unwrap() {
        let p = e.unwrap().path();
        let v: Value = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
        assert!(v["title"].is_string(), "{}", p.display());
    }
}

#[test]
fn outputs_match_schemas() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    run(d, &["build", "--p0", "2", "--depth", "2", "--rounds", "2"]);
    let basis = d.join("basis.json");
    let b = basis.to_str().unwrap();
    run(d, &["cover", "--eps", "1/4", "--d", "2", "--m", "1", "--rounds", "2", "--verify"]);
    run(d, &["verify", b]);
    run(d, &["probe-range", "--p0", "2"]);
    run(d, &["glue", "--a", b, "--b", "e1"]);
    run(d, &["transfer", "--basis", b, "--depth", "1"]);
    run(d, &["rdf", "show", "--m", "7"]);
    run(d, &["fixture", "e4", "--jmax", "5", "--n", "1"]);

    assert_valid("basis.schema.json", &basis);
    assert_valid("plan.schema.json", &d.join("plan.json"));
    assert_valid("verify.schema.json", &d.join("basis.verify.json"));
    assert_valid("probe.schema.json", &d.join("probe.json"));
    assert_valid("glue.schema.json", &d.join("glue.json"));
    assert_valid("transfer.schema.json", &d.join("transfer.json"));
    assert_valid("rdf.schema.json", &d.join("v_7.json"));
    assert_valid("e4.schema.json", &d.join("e4.json"));
    for m in ["basis", "plan", "basis.verify", "probe", "glue", "transfer", "v_7", "e4"] {
        assert_valid("manifest.schema.json", &d.join(format!("{m}.manifest.json")));
    }
}
