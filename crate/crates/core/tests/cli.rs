use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gbcodes::sim::{read_csv, CSV_HEADER};
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gbcodes"));
    c.env_remove("GBCODES_THREADS");
    c
}

fn code(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../codes")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn code_info_reports_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("info.json");
    let o = run(&[
        "code-info",
        "--code",
        s(&code("small_l9.json")),
        "--distance-limit",
        "4",
        "--json",
        s(&out),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v = json(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["n"], 18);
    assert_eq!(v["k"], 4);
    assert_eq!(v["girth"], 4);
    assert_eq!(v["distance"]["Exact"], 3);
    assert_eq!(v["claimed_consistent"], true);
    assert_eq!(v["classes"].as_array().unwrap().len(), 5);
}

#[test]
fn code_info_mismatched_claim_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.json");
    let text = fs::read_to_string(code("toy_l3.json")).unwrap();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    v["claimed_params"] = serde_json::json!([6, 3]);
    fs::write(&f, v.to_string()).unwrap();
    assert_eq!(run(&["code-info", "--code", s(&f)]).status.code(), Some(1));
}

#[test]
fn missing_input_exits_two() {
    let o = run(&["code-info", "--code", "/nonexistent/code.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn equivariance_battery_passes() {
    let dir = tempfile::tempdir().unwrap();
    for (m, n) in [("3", "3"), ("4", "4"), ("2", "4")] {
        let out = dir.path().join(format!("eq{m}{n}.json"));
        let o = run(&["equivariance-check", "--m", m, "--n", n, "--json", s(&out)]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stdout)
        );
        let v = json(&out);
        assert_eq!(v["pass"], true);
        assert_eq!(v["cases"][0]["decoder"], "isotropic");
        assert!(v["cases"][0]["first_violation"].is_null());
        assert!(!v["cases"][1]["first_violation"].is_null());
    }
}

#[test]
fn symmetry_report_json_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sym.json");
    let o = run(&["symmetry-report", "--family", "K3,3", "--json", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema_version"], 1);
    let none = &v["rows"][0];
    assert_eq!(none["coloring"], "none");
    assert_eq!(none["counts"], serde_json::json!([10, 46, 46, 0, 0]));
    assert_eq!(
        run(&["symmetry-report", "--family", "K9,9"]).status.code(),
        Some(2)
    );
}

#[test]
fn harmful_enum_lists_instances() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h.json");
    let o = run(&[
        "harmful-enum",
        "--code",
        s(&code("small_l9.json")),
        "--all-shapes",
        "--json",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&out);
    let inst = v["instances"].as_array().unwrap();
    assert!(!inst.is_empty());
    for i in inst {
        assert!(!i["syndrome"].as_array().unwrap().is_empty());
    }
}

fn write_decoders(dir: &Path, ensemble: &Path) -> PathBuf {
    let f = dir.join("decoders.json");
    let rel = ensemble.file_name().unwrap().to_str().unwrap();
    fs::write(
        &f,
        serde_json::json!({"decoders": [
            {"id": "iso", "mode": "isotropic"},
            {"id": "blk", "mode": "block", "xi_a": 0.7, "xi_b": 0.9},
            {"id": "ens", "mode": "ensemble", "ensemble_file": rel},
        ]})
        .to_string(),
    )
    .unwrap();
    f
}

#[test]
fn ensemble_artifact_feeds_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let ens = dir.path().join("ens.json");
    let o = run(&[
        "ensemble-select",
        "--code",
        s(&code("small_l9.json")),
        "--pool",
        "10",
        "--members",
        "3",
        "--all-shapes",
        "--out",
        s(&ens),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v = json(&ens);
    assert_eq!(v["members"].as_array().unwrap().len(), 3);
    assert_eq!(v["members"][0].as_array().unwrap().len(), 5);
    assert_eq!(v["schema_version"], 1);
    let dec = write_decoders(dir.path(), &ens);
    let csv = dir.path().join("out.csv");
    let o = run(&[
        "simulate",
        "--code",
        s(&code("small_l9.json")),
        "--decoders",
        s(&dec),
        "--alphas",
        "0.05,0.1",
        "--iters",
        "5,10",
        "--trials",
        "200",
        "--out",
        s(&csv),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
    let rows = read_csv(text.as_bytes()).unwrap();
    assert_eq!(rows.len(), 3 * 2 * 2);
    assert_eq!(rows[8].mode, "ensemble");
}

#[test]
fn unreachable_coverage_exits_one() {
    let o = run(&[
        "ensemble-select",
        "--code",
        s(&code("toy_l3.json")),
        "--pool",
        "5",
        "--members",
        "1",
        "--min-coverage",
        "1.01",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_decoder_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let dec = dir.path().join("d.json");
    fs::write(
        &dec,
        r#"[{"id": "x", "mode": "block", "xi_a": 0.7, "xi_b": 0.9, "xi_c": 1}]"#,
    )
    .unwrap();
    let o = run(&[
        "simulate",
        "--code",
        s(&code("toy_l3.json")),
        "--decoders",
        s(&dec),
        "--trials",
        "5",
        "--out",
        s(&dir.path().join("o.csv")),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_csv_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let dec = dir.path().join("d.json");
    fs::write(
        &dec,
        r#"[{"id": "iso", "mode": "isotropic"}, {"id": "edge", "mode": "edge", "xi": [0.6, 0.7, 0.8, 0.9, 1.0]}]"#,
    )
    .unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "2", "4"] {
        let csv = dir.path().join(format!("t{threads}.csv"));
        let o = bin()
            .args([
                "simulate",
                "--code",
                s(&code("small_l9.json")),
                "--decoders",
                s(&dec),
                "--alphas",
                "0.03,0.08",
                "--iters",
                "10,20",
                "--trials",
                "500",
                "--seed",
                "5",
                "--out",
                s(&csv),
            ])
            .env("GBCODES_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        outputs.push(fs::read(&csv).unwrap());
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}
