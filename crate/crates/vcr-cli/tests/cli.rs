use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"{
  "generate": {"n_train": 120, "n_test": 40},
  "train": {"train": {"epochs": 3}},
  "audit": {"k": 40, "vcr": {"bootstrap_b": 3}},
  "benchmark": {
    "grid": {"pairs": ["red_green"], "rhos": [1.0], "replicates": 1, "n_train": 80, "n_test": 40,
             "train": {"epochs": 3}, "vcr": {"bootstrap_b": 3}}
  }
}"#;

fn vcr(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vcr"))
        .current_dir(dir)
        .env_remove("VCR_OUT")
        .args(args)
        .output()
        .expect("binary runs")
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), SMALL).unwrap();
    dir
}

fn pipeline(dir: &Path, out: &str, seed: &str) {
    for cmd in ["generate", "train", "audit"] {
        let o = vcr(dir, &["--config", "c.json", "--seed", seed, "--out", out, cmd]);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn full_pipeline_writes_the_layout() {
    let dir = setup();
    pipeline(dir.path(), "o", "1");
    let o = vcr(dir.path(), &["--out", "o", "report"]);
    assert!(o.status.success());
    for f in [
        "data/dataset.json",
        "data/train.csv",
        "data/test.csv",
        "model/checkpoint.bin",
        "model/train_log.csv",
        "model/train.json",
        "audit/records.csv",
        "audit/records.json",
        "audit/top_concepts.svg",
        "report/summary.md",
    ] {
        assert!(dir.path().join("o").join(f).exists(), "{f}");
    }
    let csv = fs::read_to_string(dir.path().join("o/audit/records.csv")).unwrap();
    assert!(csv.starts_with("# vcr "));
    assert!(csv.lines().nth(1).unwrap().starts_with("# config: {"));
}

#[test]
fn reruns_are_byte_identical_and_seed_matters() {
    let dir = setup();
    pipeline(dir.path(), "a", "5");
    pipeline(dir.path(), "b", "5");
    pipeline(dir.path(), "c", "6");
    let read = |o: &str, f: &str| fs::read(dir.path().join(o).join(f)).unwrap();
    for f in ["data/train.csv", "model/checkpoint.bin", "audit/records.csv", "audit/records.json"] {
        assert_eq!(read("a", f), read("b", f), "{f}");
    }
    assert_ne!(read("a", "model/checkpoint.bin"), read("c", "model/checkpoint.bin"));
    assert_ne!(read("a", "audit/records.csv"), read("c", "audit/records.csv"));
}

#[test]
fn out_of_range_rho_is_a_config_error() {
    let dir = setup();
    let o = vcr(dir.path(), &["generate", "--rho-a", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rho_a"));
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = setup();
    fs::write(dir.path().join("bad.json"), r#"{"train": {"epoch": 3}}"#).unwrap();
    let o = vcr(dir.path(), &["--config", "bad.json", "train"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("epoch"));
}

#[test]
fn unreadable_config_is_an_io_error() {
    let dir = setup();
    let o = vcr(dir.path(), &["--config", "nope.json", "generate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_prerequisites_exit_3() {
    let dir = setup();
    assert_eq!(vcr(dir.path(), &["--out", "o", "train"]).status.code(), Some(3));
    assert_eq!(vcr(dir.path(), &["--out", "o", "audit"]).status.code(), Some(3));
    assert_eq!(vcr(dir.path(), &["--out", "o", "report"]).status.code(), Some(3));
}

#[test]
fn env_var_overrides_out() {
    let dir = setup();
    let o = Command::new(env!("CARGO_BIN_EXE_vcr"))
        .current_dir(dir.path())
        .env("VCR_OUT", "from_env")
        .args(["--config", "c.json", "--out", "ignored", "generate"])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("from_env/data/dataset.json").exists());
    assert!(!dir.path().join("ignored").exists());
}

#[test]
fn small_grid_benchmark_and_report() {
    let dir = setup();
    let args = ["--config", "c.json", "--out", "o", "--jobs", "1", "benchmark", "--suites", "grid"];
    let o = vcr(dir.path(), &args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let first = fs::read(dir.path().join("o/benchmark/grid.csv")).unwrap();
    let body = String::from_utf8_lossy(&first);
    // column header plus one row per feature
    assert_eq!(body.lines().filter(|l| !l.starts_with('#')).count(), 3);
    assert!(vcr(dir.path(), &args).status.success());
    assert_eq!(fs::read(dir.path().join("o/benchmark/grid.csv")).unwrap(), first);
    let o = vcr(dir.path(), &["--config", "c.json", "--out", "o", "report"]);
    assert!(o.status.success());
    assert!(dir.path().join("o/report/grid_scatter.svg").exists());
}

#[test]
fn intervention_dataset_has_dotted_copy() {
    let dir = setup();
    let o = vcr(dir.path(), &["--config", "c.json", "--out", "o", "generate", "--kind", "intervention"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let idx: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("o/data/dataset.json")).unwrap()).unwrap();
    let names: Vec<&str> = idx["sets"].as_array().unwrap().iter().map(|s| s["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["test", "dotted"]);
    assert_eq!(vcr(dir.path(), &["--out", "o", "train"]).status.code(), Some(3));
}
