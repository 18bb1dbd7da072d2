use std::process::Command;

use serde_json::Value as Json;

use sci_workbench::cli::dispatch;
use sci_workbench::SciError;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sci-workbench"));
    c.env_remove("SCI_WORKBENCH_SEED");
    c
}

fn run_json(args: &[&str]) -> (i32, Json) {
    let out = bin().args(args).arg("--json").output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let json = serde_json::from_str(&text).unwrap_or(Json::Null);
    (out.status.code().unwrap(), json)
}

fn argv<'a>(args: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec!["sci-workbench"];
    v.extend_from_slice(args);
    v
}

#[test]
fn every_subcommand_passes_its_checks() {
    let cases: &[&[&str]] = &[
        &["integrate", "tower", "--interval", "-1", "3", "--function", "poly:0,0,1", "--n", "256"],
        &["integrate", "adversary", "--points", "0,1/3,1/2,7/8"],
        &["integrate", "adversary", "--random", "30"],
        &["integrate", "reduce", "--to", "-3/2", "1/2", "--samples", "20"],
        &["spectral", "decide", "--diagonal", "const:2", "--window", "1"],
        &["spectral", "decide", "--diagonal", "enum:0,1", "--window", "1/3"],
        &["spectral", "stabilize", "--diagonal", "harmonic:0,1", "--window", "1/2", "--stabilizer", "const:5"],
        &["spectral", "reduce", "--stabilizer", "const:5", "--samples", "20"],
        &["koopman", "finite", "--map", "2,1", "--eps", "0.25"],
        &["koopman", "finite", "--map", "1,1,2", "--weights", "1,2,1/2"],
        &["family", "classify", "--heights", "1,2,2", "--k", "2"],
        &["certify", "package", "--family", "integration", "--samples", "20"],
        &["certify", "saturate", "--family", "spectral", "--samples", "20"],
        &["degrees", "join", "--left", "int:0,1", "--right", "koopman:2", "--samples", "20"],
        &["degrees", "meet", "--left", "spec:0,1", "--right", "finite:P1", "--samples", "20"],
        &["degrees", "counterexample", "--class", "bor"],
        &["reduce", "verify", "--reduction", "affine:0,1->-1,3", "--samples", "20"],
        &["reduce", "compose", "--first", "stabilize:const:5", "--second", "unstabilize:const:5", "--samples", "20"],
        &["reduce", "pullback", "--to", "1/2", "5/4", "--n", "16"],
    ];
    for args in cases {
        let report = dispatch(argv(args)).unwrap_or_else(|e| panic!("{args:?}: {e}"));
        assert!(report.passed(), "{args:?}: {}", report.render_text());
        assert!(!report.checks.is_empty(), "{args:?} reports no checks");
        assert_eq!(report.schema_version, 1);
    }
}

#[test]
fn json_report_shape_and_exit_code() {
    let (code, json) = run_json(&["integrate", "tower", "--n", "16"]);
    assert_eq!(code, 0);
    for key in ["schema_version", "command", "parameters", "result", "checks", "seed"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert_eq!(json["command"], "integrate tower");
    assert_eq!(json["seed"], 0);
    let checks = json["checks"].as_array().unwrap();
    assert!(checks.iter().all(|c| c["passed"] == true && c.get("name").is_some()));
}

#[test]
fn seed_comes_from_flag_or_environment() {
    let (_, a) = run_json(&["integrate", "adversary", "--random", "10", "--seed", "7"]);
    let out = bin()
        .env("SCI_WORKBENCH_SEED", "7")
        .args(["integrate", "adversary", "--random", "10", "--json"])
        .output()
        .unwrap();
    let b: Json = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(a["seed"], 7);
    assert_eq!(a["result"], b["result"]);
    let (_, c) = run_json(&["integrate", "adversary", "--random", "10", "--seed", "8"]);
    assert_ne!(a["result"], c["result"]);
}

#[test]
fn dropped_clause_is_reported_as_a_failed_check() {
    for (clause, name) in [("c1", "C1"), ("c2", "C2"), ("c3", "C3")] {
        let (code, json) = run_json(&["certify", "package", "--family", "integration", "--drop", clause, "--samples", "10"]);
        assert_eq!(code, 0, "{clause}");
        assert!(json.to_string().contains(name), "{clause}: {json}");
    }
}

#[test]
fn usage_errors_exit_with_two() {
    let out = bin().args(["integrate", "tower", "--n"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["spectral", "decide", "--diagonal", "bogus:1", "--window", "0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(matches!(dispatch(["sci-workbench", "nonsense"]), Err(SciError::Usage(_))));
}

#[test]
fn catalog_flag_loads_a_file() {
    let dir = std::env::temp_dir().join(format!("sci-workbench-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let good = dir.join("good.json");
    std::fs::write(
        &good,
        r#"{"schema_version":1,"entries":[{"problem":"integration","params":{"interval":["0","3"]}}]}"#,
    )
    .unwrap();
    let (code, json) = run_json(&["--catalog", good.to_str().unwrap(), "certify", "package", "--family", "integration", "--samples", "10"]);
    assert_eq!(code, 0, "{json}");
    assert!(json.to_string().contains("int[0,3]"), "{json}");

    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"schema_version":1,"entries":[{"problem":"nope","params":{}}]}"#).unwrap();
    let out = bin().args(["--catalog", bad.to_str().unwrap(), "family", "classify", "--heights", "1", "--k", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("entries[0].problem"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let args = ["integrate", "adversary", "--random", "25", "--seed", "3", "--json"];
    let a = bin().args(args).output().unwrap().stdout;
    let b = bin().args(args).output().unwrap().stdout;
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn documented_examples() {
    // (n - 1) / (2n) for the left-endpoint sum of x
    let r = dispatch(argv(&["integrate", "tower", "--interval", "0", "1", "--function", "poly:0,1", "--n", "1024"])).unwrap();
    assert!(r.to_json().contains("1023/2048"), "{}", r.to_json());
    let r = dispatch(argv(&["family", "classify", "--heights", "0,2", "--k", "2"])).unwrap();
    assert_eq!(r.result["verdict"], "(F,T,T)");
    let r = dispatch(argv(&["degrees", "counterexample", "--class", "id"])).unwrap();
    assert!(r.to_json().contains("carrier_clash"), "{}", r.to_json());
}
