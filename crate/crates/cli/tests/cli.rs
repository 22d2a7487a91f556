use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use hdx_cli::bundle::{decode_matrices, encode_matrices, MATRICES};
use hdx_cli::manifest::{Instance, Manifest};

const MANIFESTS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../manifests");

fn hdx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdx")).args(args).output().expect("spawn hdx")
}

fn manifest(name: &str) -> PathBuf {
    Path::new(MANIFESTS).join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn build(dir: &Path, name: &str) -> PathBuf {
    let out = dir.join(name.trim_end_matches(".json"));
    let o = hdx(&["build", s(&manifest(name)), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const TINY: &str = r#"{
  "schema": 1,
  "t": 2,
  "field_degree": 1,
  "group": { "kind": "cyclic", "order": 3, "generators": [[1, -1], [1, -1]] },
  "codes": { "mode": "explicit", "h": [[[1, 1]], [[1, 1]]] },
  "seed": 5
}"#;

fn write_manifest(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("m.json");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn build_writes_a_passing_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let b = build(dir.path(), "reference_t2.json");
    for f in ["manifest.json", "geometry.json", "matrices.bin", "build_report.json"] {
        assert!(b.join(f).is_file(), "{f}");
    }
    let rep = json(&b.join("build_report.json"));
    assert_eq!(rep["summary"]["fail"], 0);
    let m = Manifest::load(&manifest("reference_t2.json")).unwrap();
    assert_eq!(rep["manifest_hash"], m.hash());
    let geom = json(&b.join("geometry.json"));
    assert_eq!(geom["group_size"], 16);
    assert_eq!(geom["chain_dims"], serde_json::json!([64, 192, 144]));
}

#[test]
fn build_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = hdx(&["build", s(&manifest("noncommuting.json")), "--out", s(&dir.path().join("nc"))]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("CommutationViolation"));

    let o = hdx(&["build", s(&dir.path().join("absent.json")), "--out", s(&dir.path().join("x"))]);
    assert_eq!(o.status.code(), Some(2));

    for bad in [
        TINY.replace("\"schema\": 1", "\"schema\": 2"),
        TINY.replace("\"seed\": 5", "\"seed\": 5, \"extra\": 0"),
        TINY.replace("[[[1, 1]], [[1, 1]]]", "[[[1, 1]]]"),
        TINY.replace("[[[1, 1]], [[1, 1]]]", "[[[1, 2]], [[1, 1]]]"),
        "{".to_string(),
    ] {
        let p = write_manifest(dir.path(), &bad);
        let o = hdx(&["build", s(&p), "--out", s(&dir.path().join("y"))]);
        assert_eq!(o.status.code(), Some(2), "{bad}");
    }
    // rows of h dependent: rank failure at construction
    let p = write_manifest(dir.path(), &TINY.replace("[[[1, 1]], [[1, 1]]]", "[[[1, 1], [1, 1]], [[1, 1]]]"));
    assert_eq!(hdx(&["build", s(&p), "--out", s(&dir.path().join("z"))]).status.code(), Some(3));
}

#[test]
fn manifest_hash_is_canonical() {
    let a = Manifest::parse(TINY).unwrap();
    let b = Manifest::parse(&TINY.replace('\n', " ").replace("  ", " ")).unwrap();
    assert_eq!(a.hash(), b.hash());
    let c = Manifest::parse(&TINY.replace("\"seed\": 5", "\"seed\": 6")).unwrap();
    assert_ne!(a.hash(), c.hash());
    assert_eq!(Manifest::parse(&a.canonical()).unwrap(), a);
}

#[test]
fn matrices_round_trip_and_reject_damage() {
    let inst = Instance::build(Manifest::parse(TINY).unwrap()).unwrap();
    let buf = encode_matrices(&inst.sheaf);
    let (e, maps) = decode_matrices(&buf).unwrap();
    assert_eq!(e, 1);
    assert_eq!(maps.len(), 2);
    for (i, m) in maps.iter().enumerate() {
        assert_eq!(m, inst.sheaf.partial(i + 1).unwrap());
    }
    assert!(decode_matrices(&buf[..buf.len() - 1]).is_err());
    let mut long = buf.clone();
    long.push(0);
    assert!(decode_matrices(&long).is_err());
    let mut magic = buf.clone();
    magic[0] = b'X';
    assert!(decode_matrices(&magic).is_err());
}

#[test]
fn verify_single_suite_filters() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_manifest(dir.path(), TINY);
    let b = dir.path().join("b");
    assert!(hdx(&["build", s(&p), "--out", s(&b)]).status.success());
    let out = dir.path().join("walks.json");
    let o = hdx(&["verify", s(&b), "--suite", "walks", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rep = json(&out);
    assert_eq!(rep["suite"], "walks");
    let entries = rep["entries"].as_array().unwrap();
    assert!(!entries.is_empty());
    assert!(entries.iter().all(|e| e["check_id"].as_str().unwrap().starts_with("walks.")));
    for e in entries {
        for key in ["check_id", "paper_anchor", "status", "data"] {
            assert!(e.get(key).is_some(), "{key}");
        }
    }
}

#[test]
fn tampered_matrix_fails_chain_suite() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_manifest(dir.path(), TINY);
    let b = dir.path().join("b");
    assert!(hdx(&["build", s(&p), "--out", s(&b)]).status.success());
    let path = b.join(MATRICES);
    let mut buf = std::fs::read(&path).unwrap();
    // header 16 bytes, level header 16 bytes, then (row, col, value) triplets of 10 bytes
    let value_at = 16 + 16 + 8;
    assert_eq!(buf[value_at], 1);
    buf[value_at] = 0;
    std::fs::write(&path, &buf).unwrap();
    let out = dir.path().join("chain.json");
    let o = hdx(&["verify", s(&b), "--suite", "chain", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(4));
    let rep = json(&out);
    let entry = rep["entries"].as_array().unwrap().iter().find(|e| e["check_id"] == "bundle.partial_squared.1").unwrap().clone();
    assert_eq!(entry["status"], "fail");
    assert!(!entry["data"]["witness"].is_null());

    std::fs::write(&path, &buf[..20]).unwrap();
    assert_eq!(hdx(&["verify", s(&b), "--suite", "chain"]).status.code(), Some(1));
}

#[test]
fn decode_sim_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_manifest(dir.path(), TINY);
    let b = dir.path().join("b");
    assert!(hdx(&["build", s(&p), "--out", s(&b)]).status.success());
    let run = |jobs: &str, name: &str| {
        let out = dir.path().join(name);
        let o = hdx(&["--jobs", jobs, "decode-sim", s(&b), "--p", "0.01", "--shots", "1000", "--seed", "7", "--out", s(&out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(out).unwrap()
    };
    let a = run("1", "a.json");
    assert_eq!(a, run("3", "b.json"));
    let doc: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(doc["rate"]["shots"], 1000);
    // at p = 0.01 on 12 faces nearly every shot has at most one error
    assert!(doc["rate"]["success"].as_u64().unwrap() >= 950);

    let out = dir.path().join("curve.json");
    let o = hdx(&["decode-sim", s(&b), "--weights", "1,2", "--shots", "50", "--seed", "7", "--out", s(&out)]);
    assert!(o.status.success());
    let doc = json(&out);
    assert_eq!(doc["curve"][0]["weight"], 1);
    assert_eq!(doc["curve"][0]["success"], 50);
}

#[test]
fn search_census_is_seed_independent() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str| {
        let out = dir.path().join(format!("s{seed}.json"));
        let o = hdx(&["search", "--t", "2", "--n", "3", "--q", "2", "--exhaust", "--seed", seed, "--out", s(&out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        json(&out)
    };
    let (a, b) = (run("0"), run("17"));
    assert_eq!(a["census"], b["census"]);
    assert_eq!(a["exhaustive"], true);
    // seven nonzero row spaces of GF(2)^3 per direction
    assert_eq!(a["evaluated"], 49);
    let total: u64 = a["census"].as_object().unwrap().values().map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(total, 49);
    assert_eq!(hdx(&["search", "--t", "2", "--n", "3", "--q", "3"]).status.code(), Some(1));
}

#[test]
fn distance_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_manifest(dir.path(), TINY);
    let b = dir.path().join("b");
    assert!(hdx(&["build", s(&p), "--out", s(&b)]).status.success());
    let out = dir.path().join("d.json");
    let o = hdx(&["distance", s(&b), "--level", "1", "--mode", "syst", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = json(&out);
    assert_eq!(doc["exact"], true);

    let out = dir.path().join("partial.json");
    let o = hdx(&["distance", s(&b), "--level", "1", "--mode", "cocyc", "--budget", "4", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn export_writes_both_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_manifest(dir.path(), TINY);
    let b = dir.path().join("b");
    assert!(hdx(&["build", s(&p), "--out", s(&b)]).status.success());
    let out = dir.path().join("e");
    let o = hdx(&["export", s(&b), "--level", "1", "--format", "json", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let hx = hdx_core::css::io::import(&out.join("hx.json"), hdx_core::css::io::MatrixFormat::Json).unwrap();
    let hz = hdx_core::css::io::import(&out.join("hz.json"), hdx_core::css::io::MatrixFormat::Json).unwrap();
    assert_eq!(hx.cols(), hz.cols());
    assert!(hx.mul(&hz.transpose()).is_zero());
    assert_eq!(hdx(&["export", s(&b), "--level", "2", "--out", s(&out)]).status.code(), Some(1));
    assert_eq!(hdx(&["export", s(&b), "--level", "1", "--format", "csv", "--out", s(&out)]).status.code(), Some(1));
}

#[test]
fn lift_manifest_with_searched_codes() {
    let dir = tempfile::tempdir().unwrap();
    let b = build(dir.path(), "lift_k4.json");
    let geom = json(&b.join("geometry.json"));
    assert_eq!(geom["group_size"], 32);
    let m = Manifest::load(&b.join("manifest.json")).unwrap();
    assert_eq!(m.budgets.walk_sets, 50);
    // searched codes are reproduced when the bundle is reopened
    let out = dir.path().join("chain.json");
    let o = hdx(&["verify", s(&b), "--suite", "chain", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn random_codes_follow_the_seed() {
    let text = TINY.replace(r#"{ "mode": "explicit", "h": [[[1, 1]], [[1, 1]]] }"#, r#"{ "mode": "random", "ms": [1, 1] }"#);
    let q4 = text.replace("\"field_degree\": 1", "\"field_degree\": 2");
    let a = Instance::build(Manifest::parse(&q4).unwrap()).unwrap();
    let b = Instance::build(Manifest::parse(&q4).unwrap()).unwrap();
    assert_eq!(a.sheaf.codes().h(0), b.sheaf.codes().h(0));
    assert_eq!(a.sheaf.field().order(), 4);
    let explicit = TINY.replace("[[[1, 1]], [[1, 1]]]", "[[[1, 1]], [[1, 0]]]");
    let c = Instance::build(Manifest::parse(&explicit).unwrap()).unwrap();
    assert_eq!(c.sheaf.codes().m(1), 1);
}
