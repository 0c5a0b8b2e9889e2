use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ontovec_core::config::SourceConfig;
use ontovec_core::store::VECTORS_FILE;
use ontovec_core::synthetic::four_level_tree;
use ontovec_core::{run_pipeline, FakeClock, ModelKind, Store, TrainConfig};

struct Fixture {
    dir: tempfile::TempDir,
    config: PathBuf,
    obo: PathBuf,
}

impl Fixture {
    fn store(&self) -> Store {
        Store::new(self.dir.path().join("store"))
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_ontovec"))
            .args(args)
            .env("ONTOVEC_CONFIG", &self.config)
            .env_remove("ONTOVEC_STORE")
            .env_remove("RUST_LOG")
            .output()
            .unwrap()
    }
}

fn source(url: &Path) -> SourceConfig {
    let mut s = SourceConfig::new("hp", url.to_str().unwrap());
    s.models = vec![ModelKind::TransE, ModelKind::DistMult];
    s.train = TrainConfig {
        dimension: 16,
        epochs: 5,
        ..Default::default()
    };
    s
}

/// A store holding one published version of the 85-class tree.
fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let obo = dir.path().join("hp.obo");
    std::fs::write(&obo, four_level_tree("HP")).unwrap();
    let source = source(&obo);
    let store = Store::new(dir.path().join("store"));
    let clock = FakeClock::new("2025-07-01T00:00:00Z".parse().unwrap());
    run_pipeline(&store, &source, &std::fs::read(&obo).unwrap(), &clock).unwrap();
    let config = dir.path().join("ontovec.json");
    let json = serde_json::json!({ "store_path": "store", "sources": [source] });
    std::fs::write(&config, serde_json::to_string_pretty(&json).unwrap()).unwrap();
    Fixture { dir, config, obo }
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn closest_prints_ten_rows() {
    let f = fixture();
    let out = f.run(&["query", "closest", "hp", "transe", "HP:0000001"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 11);
    assert!(lines[0].starts_with("rank"));
    assert!(lines[1].starts_with("1 "));
    assert!(!text.contains("HP:0000001 "));

    let json = f.run(&["query", "closest", "hp", "TransE", "class 1", "--json", "-k", "3"]);
    let body: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(body["rows"].as_array().unwrap().len(), 3);
    assert_eq!(body["query"], "HP:0000001");
}

#[test]
fn similarity_of_a_concept_with_itself() {
    let f = fixture();
    let out = f.run(&["query", "sim", "hp", "distmult", "HP:0000004", "class 4"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "HP:0000004\tHP:0000004\t1.000000\n");
}

#[test]
fn unknown_concept_is_a_user_error() {
    let f = fixture();
    let out = f.run(&["query", "sim", "hp", "transe", "HP:0000001", "no such class"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("no such class"));
}

#[test]
fn watch_once_on_unchanged_source_publishes_nothing() {
    let f = fixture();
    let out = f.run(&["watch", "--once"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out), "hp: unchanged\n");
    assert_eq!(f.store().list_versions("hp").unwrap().len(), 1);
}

#[test]
fn watch_once_publishes_a_changed_source() {
    let f = fixture();
    let text = std::fs::read_to_string(&f.obo).unwrap();
    std::fs::write(&f.obo, text.replace("name: class 9\n", "name: class X\n")).unwrap();
    let out = f.run(&["watch", "--once"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).starts_with("hp: published "));
    assert_eq!(f.store().list_versions("hp").unwrap().len(), 2);
}

#[test]
fn train_on_missing_kg_exits_1() {
    let f = fixture();
    let out_dir = f.dir.path().join("out");
    let out = f.run(&[
        "train",
        "go",
        "latest",
        "--model",
        "transe",
        "-o",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("go"));
    assert!(!out_dir.exists());
}

#[test]
fn train_retrains_from_the_stored_source() {
    let f = fixture();
    let out_dir = f.dir.path().join("out");
    let args = [
        "train", "hp", "latest", "--model", "hole", "--seed", "7", "--epochs", "3",
    ];
    let out = f.run(&[&args[..], &["-o", out_dir.to_str().unwrap()]].concat());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(out_dir.join(VECTORS_FILE)).unwrap()).unwrap();
    assert_eq!(doc["model"], "HolE");
    assert_eq!(doc["vectors"].as_object().unwrap().len(), 85);
    assert!(out_dir.join("prov.json").is_file());
    assert!(out_dir.join("report.json").is_file());
}

#[test]
fn export_copies_the_published_file() {
    let f = fixture();
    let target = f.dir.path().join("export.json");
    let out = f.run(&["export", "hp", "latest", "transe", "-o", target.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let store = f.store();
    let manifest = store.latest("hp").unwrap();
    assert_eq!(
        std::fs::read(&target).unwrap(),
        std::fs::read(store.vectors_path("hp", &manifest.version_tag, ModelKind::TransE)).unwrap()
    );
}

#[test]
fn corrupt_store_is_an_internal_error() {
    let f = fixture();
    let store = f.store();
    let manifest = store.latest("hp").unwrap();
    let path = store.vectors_path("hp", &manifest.version_tag, ModelKind::TransE);
    std::fs::write(&path, b"{").unwrap();
    let out = f.run(&["query", "closest", "hp", "transe", "HP:0000001"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn ingest_report() {
    let f = fixture();
    let out = f.run(&["ingest", f.obo.to_str().unwrap(), "--report"]);
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["terms"], 85);
    assert_eq!(report["triples"], 84);
    assert_eq!(report["relations"], 1);

    let missing = f.run(&["ingest", "/nonexistent.obo"]);
    assert_eq!(code(&missing), 1);
}

#[test]
fn bad_arguments_exit_1() {
    let f = fixture();
    assert_eq!(code(&f.run(&["query", "closest", "hp", "word2vec", "x"])), 1);
    assert_eq!(code(&f.run(&["frobnicate"])), 1);
    assert_eq!(code(&f.run(&["--help"])), 0);
}
