//! Acceptance suite. Prints one `PASS` or `FAIL` line per criterion and
//! exits non-zero when a required criterion fails.
//!
//! The networked live-ingest check fetches the current HP and GO releases
//! (override with `ONTOVEC_HP_URL` / `ONTOVEC_GO_URL`, e.g. local files).

// `!(x < bound)` is deliberate: a NaN must fail every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ontovec_core::config::SourceConfig;
use ontovec_core::gradcheck::{model_gradient_error, random_artifact, skipgram_gradient_error, DEFAULT_EPS};
use ontovec_core::models::boxe::DimGeometry;
use ontovec_core::models::hole::{circular_correlation, circular_correlation_fft, correlate};
use ontovec_core::store::{LabelEntry, PROV_FILE, VECTORS_FILE};
use ontovec_core::synthetic::{four_level_tree, is_a_tree_obo};
use ontovec_core::train::evaluate_link_prediction;
use ontovec_core::watcher::{fetch, Fetcher};
use ontovec_core::{
    ingest, parse_obo, run_pipeline, train, DefaultFetcher, FakeClock, LabelSet, ModelKind, Norm, Store, SystemClock,
    TrainConfig, VectorsDocument, Watcher,
};

use common::{app, get, publish};

type Outcome = Result<String, String>;
type Check<'a> = Box<dyn FnOnce() -> Outcome + 'a>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn clock() -> Arc<FakeClock> {
    Arc::new(FakeClock::new("2025-07-01T00:00:00Z".parse().unwrap()))
}

// Gradient correctness

fn gradients() -> Outcome {
    let start = Instant::now();
    let cases = [
        (ModelKind::TransE, Norm::L1),
        (ModelKind::TransE, Norm::L2),
        (ModelKind::TransR, Norm::L2),
        (ModelKind::DistMult, Norm::L2),
        (ModelKind::HolE, Norm::L2),
        (ModelKind::BoxE, Norm::L2),
    ];
    let mut worst: f64 = 0.0;
    for (kind, norm) in cases {
        for seed in 0..20u64 {
            let artifact = random_artifact(kind, norm, 8, 5, 2, 1000 + seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (h, r, t) = (rng.random_range(0..5), rng.random_range(0..2), rng.random_range(0..5));
            let err = model_gradient_error(&artifact, h, r, t, DEFAULT_EPS);
            ensure!(err < 1e-4, "{kind} {norm:?} seed {seed}: relative error {err:.3e}");
            worst = worst.max(err);
        }
    }
    for seed in 0..20u64 {
        let err = skipgram_gradient_error(8, 5, 1000 + seed, DEFAULT_EPS);
        ensure!(err < 1e-4, "skip-gram seed {seed}: relative error {err:.3e}");
        worst = worst.max(err);
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!("max relative error {worst:.2e}, {:.2}s", elapsed.as_secs_f64()))
}

// HolE oracle

/// `[a ⋆ b]_k = Σ_i a_i b_{(i+k) mod d}`, written out independently.
fn correlation_oracle(a: &[f64], b: &[f64]) -> Vec<f64> {
    let d = a.len();
    let mut out = vec![0.0; d];
    for (k, slot) in out.iter_mut().enumerate() {
        for i in 0..d {
            *slot += a[i] * b[(i + k) % d];
        }
    }
    out
}

fn hole_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for d in 1..=16 {
        for _ in 0..100 {
            let a: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let oracle = correlation_oracle(&a, &b);
            for (name, got) in [
                ("direct", circular_correlation(&a, &b)),
                ("fft", circular_correlation_fft(&a, &b)),
                ("dispatch", correlate(&a, &b)),
            ] {
                ensure!(got.len() == d, "{name} d={d}: length {}", got.len());
                for (x, y) in got.iter().zip(&oracle) {
                    let diff = (x - y).abs();
                    ensure!(diff <= 1e-9, "{name} d={d}: |{x} - {y}| = {diff:.3e}");
                    worst = worst.max(diff);
                }
            }
        }
    }
    Ok(format!(
        "3 implementations x 16 dims x 100 pairs, max deviation {worst:.2e}"
    ))
}

// BoxE continuity

fn boxe_continuity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let g = DimGeometry::new(rng.random_range(-3.0..3.0), rng.random_range(-4.0..4.0));
        for p in [g.upper(), g.lower()] {
            let inside = g.inside_distance(p);
            let outside = g.outside_distance(p);
            let diff = (inside - outside).abs();
            ensure!(
                diff <= 1e-9,
                "center {} half-width {}: {inside} vs {outside}",
                g.center,
                g.half_width
            );
            worst = worst.max(diff);
        }
    }
    Ok(format!("1000 boxes, both bounds, max gap {worst:.2e}"))
}

// Training sanity

fn training_sanity() -> Outcome {
    let doc = parse_obo(&four_level_tree("HP")).map_err(|e| e.to_string())?;
    let (graph, _) = ontovec_core::to_graph(&doc, false);
    ensure!(graph.num_entities() == 85, "tree has {} entities", graph.num_entities());
    let config = TrainConfig {
        dimension: 32,
        epochs: 100,
        batch_size: 8,
        ..Default::default()
    };
    let mut notes = Vec::new();
    for kind in ModelKind::SCORING {
        let start = Instant::now();
        let (artifact, report) = train(&graph, kind, &config).map_err(|e| format!("{kind}: {e}"))?;
        let elapsed = start.elapsed();
        let first = report.epoch_losses[0];
        let last = *report.epoch_losses.last().unwrap();
        ensure!(last < first, "{kind}: final loss {last} not below first {first}");
        ensure!(elapsed < Duration::from_secs(60), "{kind}: took {elapsed:?}");
        if kind == ModelKind::TransE {
            let metrics = evaluate_link_prediction(&artifact, &graph, usize::MAX, &mut ChaCha8Rng::seed_from_u64(5));
            ensure!(
                metrics.hits_at_10 >= 0.5,
                "TransE filtered Hits@10 {:.3}",
                metrics.hits_at_10
            );
            notes.push(format!("TransE Hits@10 {:.3}", metrics.hits_at_10));
        }
        notes.push(format!(
            "{kind} loss {first:.3}->{last:.3} in {:.1}s",
            elapsed.as_secs_f64()
        ));
    }
    Ok(notes.join(", "))
}

// Download contract

fn with_obsolete_class(text: &str) -> String {
    format!("{text}\n[Term]\nid: HP:9999999\nname: retired class\nis_obsolete: true\n")
}

async fn download_contract() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let bytes = with_obsolete_class(&is_a_tree_obo("HP", 4, 3, "releases/2025-07-01")).into_bytes();
    let mut source = SourceConfig::new("hp", "file:///hp.obo");
    source.train.epochs = 2;
    let d = source.train.dimension;
    ensure!(d == 200, "default dimension is {d}");
    let store = Store::new(dir.path());
    let manifest = run_pipeline(&store, &source, &bytes, clock().as_ref()).map_err(|e| e.to_string())?;
    let ingested = ingest(&bytes).map_err(|e| e.to_string())?;
    let classes: Vec<&str> = ingested
        .document
        .terms
        .iter()
        .filter(|t| !t.is_obsolete)
        .map(|t| t.id.as_str())
        .collect();
    let (_, router) = app(&store, 6);
    for kind in ModelKind::ALL {
        let path = store.vectors_path("hp", &manifest.version_tag, kind);
        let file = std::fs::read(&path).map_err(|e| e.to_string())?;
        let doc: VectorsDocument = serde_json::from_slice(&file).map_err(|e| format!("{kind}: {e}"))?;
        ensure!(doc.dimension == d, "{kind}: dimension field {}", doc.dimension);
        ensure!(
            doc.vectors.len() == classes.len(),
            "{kind}: {} vectors for {} classes",
            doc.vectors.len(),
            classes.len()
        );
        for iri in &classes {
            let v = doc.vectors.get(*iri).ok_or_else(|| format!("{kind}: {iri} missing"))?;
            ensure!(v.len() == d, "{kind}: {iri} has {} components", v.len());
        }
        ensure!(
            !doc.vectors.contains_key("HP:9999999"),
            "{kind}: obsolete class exported"
        );
        let reencoded = doc.to_json().map_err(|e| e.to_string())?;
        ensure!(
            reencoded.as_bytes() == file.as_slice(),
            "{kind}: re-serialization differs"
        );
        let r = get(&router, &format!("/api/v1/download/hp/{kind}/{}", manifest.version_tag)).await;
        ensure!(r.status == 200, "{kind}: download status {}", r.status);
        ensure!(r.body == file, "{kind}: download body differs from the stored file");
    }
    Ok(format!(
        "6 models x {} classes x {d} components; obsolete class excluded",
        classes.len()
    ))
}

// Similarity contract

fn cosine_oracle(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for i in 0..a.len() {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    (dot / (na * nb).sqrt()).clamp(-1.0, 1.0)
}

fn random_store(rng: &mut ChaCha8Rng, n: usize, d: usize, ties: bool) -> BTreeMap<String, Vec<f64>> {
    let mut vectors: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    if ties {
        // Exact duplicates and power-of-two multiples tie exactly in cosine.
        for _ in 0..n / 4 {
            let src = rng.random_range(0..n);
            let dst = rng.random_range(0..n);
            let scale = [1.0, 2.0, 0.5][rng.random_range(0..3)];
            vectors[dst] = vectors[src].iter().map(|x| x * scale).collect();
        }
    }
    let mut ids: Vec<usize> = (0..n).map(|i| i * 7 + 3).collect();
    ids.shuffle(rng);
    ids.into_iter()
        .zip(vectors)
        .map(|(id, v)| (format!("HP:{id:07}"), v))
        .collect()
}

fn labels(vectors: &BTreeMap<String, Vec<f64>>) -> LabelSet {
    LabelSet::new(
        vectors
            .keys()
            .map(|iri| LabelEntry {
                iri: iri.clone(),
                label: format!("label of {iri}"),
                ..Default::default()
            })
            .collect(),
    )
}

async fn similarity_contract() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::new(dir.path());
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let vectors = random_store(&mut rng, 50, 200, false);
    publish(
        &store,
        "hp",
        "v1",
        1,
        &[(ModelKind::TransE, vectors.clone())],
        &labels(&vectors),
    );
    let (_, router) = app(&store, 6);
    let mut checked = 0;
    for (a, va) in &vectors {
        for (b, vb) in &vectors {
            let r = get(&router, &format!("/api/v1/similarity/hp/TransE?a={a}&b={b}")).await;
            ensure!(r.status == 200, "{a},{b}: status {}", r.status);
            let score = r.json()["score"].as_f64().ok_or("score is not a number")?;
            ensure!((-1.0..=1.0).contains(&score), "{a},{b}: score {score} out of range");
            if a == b {
                ensure!(score == 1.0, "self-similarity of {a} is {score}");
            }
            let expected = cosine_oracle(va, vb);
            ensure!(score == expected, "{a},{b}: API {score} vs oracle {expected}");
            checked += 1;
        }
    }
    Ok(format!("{checked} ordered pairs equal to the oracle bit for bit"))
}

// Top-k contract

async fn top_k_contract() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut tied_rankings = 0;
    for round in 0..100 {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::new(dir.path());
        let n = rng.random_range(12..80);
        let d = rng.random_range(2..12);
        let vectors = random_store(&mut rng, n, d, true);
        publish(
            &store,
            "kg",
            "v1",
            1,
            &[(ModelKind::DistMult, vectors.clone())],
            &labels(&vectors),
        );
        let (_, router) = app(&store, 1);
        let iris: Vec<&String> = vectors.keys().collect();
        let query = iris[rng.random_range(0..iris.len())];

        let mut oracle: Vec<(f64, &str)> = vectors
            .iter()
            .filter(|(iri, _)| *iri != query)
            .map(|(iri, v)| (cosine_oracle(&vectors[query], v), iri.as_str()))
            .collect();
        oracle.sort_by(|x, y| y.0.total_cmp(&x.0).then_with(|| x.1.cmp(y.1)));
        oracle.truncate(10);
        if oracle.windows(2).any(|w| w[0].0 == w[1].0) {
            tied_rankings += 1;
        }

        let r = get(&router, &format!("/api/v1/closest/kg/DistMult?q={query}")).await;
        ensure!(r.status == 200, "round {round}: status {}", r.status);
        let body = r.json();
        let rows = body["rows"].as_array().ok_or("rows missing")?;
        let got: Vec<(f64, &str)> = rows
            .iter()
            .map(|row| (row["score"].as_f64().unwrap(), row["iri"].as_str().unwrap()))
            .collect();
        ensure!(got == oracle, "round {round}: API {got:?} vs oracle {oracle:?}");
    }
    Ok(format!("100 stores, {tied_rankings} with ties inside the top 10"))
}

// Pipeline contract

#[derive(Default)]
struct Counting {
    calls: AtomicUsize,
    inner: DefaultFetcher,
}

impl Fetcher for Counting {
    fn fetch_once(&self, url: &str) -> Result<Vec<u8>, String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.fetch_once(url)
    }
}

fn small_source(url: &Path) -> SourceConfig {
    let mut s = SourceConfig::new("hp", url.to_str().unwrap());
    s.poll_interval = Duration::from_secs(3600);
    s.train = TrainConfig {
        dimension: 16,
        epochs: 5,
        ..Default::default()
    };
    s
}

fn version_dirs(root: &Path) -> usize {
    std::fs::read_dir(root.join("hp")).map_or(0, |d| d.filter_map(|e| e.ok()).filter(|e| e.path().is_dir()).count())
}

fn pipeline_contract() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let obo = dir.path().join("hp.obo");
    let text = four_level_tree("HP");
    std::fs::write(&obo, &text).unwrap();
    let root = dir.path().join("store");
    let store = Store::new(&root);
    let source = small_source(&obo);
    run_pipeline(&store, &source, text.as_bytes(), clock().as_ref()).map_err(|e| e.to_string())?;

    let ticks = |source: SourceConfig, edit: Option<String>| {
        let fetcher = Arc::new(Counting::default());
        let watcher = Watcher::new(store.clone(), vec![source], fetcher.clone(), clock())
            .with_granularity(Duration::from_secs(3600));
        let path = obo.clone();
        watcher.run(|| {
            let calls = fetcher.calls.load(Ordering::SeqCst);
            if calls == 1 {
                if let Some(text) = &edit {
                    std::fs::write(&path, text).unwrap();
                }
            }
            calls >= 3
        });
        fetcher.calls.load(Ordering::SeqCst)
    };

    let calls = ticks(source.clone(), None);
    let versions = store.list_versions("hp").map_err(|e| e.to_string())?;
    ensure!(calls == 3, "{calls} fetches over 3 ticks");
    ensure!(
        versions.len() == 1,
        "unchanged source published {} new versions",
        versions.len() - 1
    );

    let changed = text.replacen("name: class 5\n", "name: class 6\n", 1);
    ensure!(
        changed.len() == text.len() && changed != text,
        "fixture edit is not a 1-byte change"
    );
    ticks(source.clone(), Some(changed));
    let versions = store.list_versions("hp").map_err(|e| e.to_string())?;
    ensure!(
        versions.len() == 2,
        "1-byte change published {} versions",
        versions.len() - 1
    );
    let vdir = store.version_dir("hp", &versions[1]);
    for kind in ModelKind::ALL {
        let mdir = vdir.join(kind.as_str());
        ensure!(mdir.join(VECTORS_FILE).is_file(), "{kind}: vectors missing");
        let prov: serde_json::Value =
            serde_json::from_slice(&std::fs::read(mdir.join(PROV_FILE)).map_err(|e| e.to_string())?)
                .map_err(|e| format!("{kind} prov: {e}"))?;
        for section in ["entity", "activity", "used", "wasGeneratedBy"] {
            ensure!(prov[section].is_object(), "{kind} prov lacks {section}");
        }
    }

    let mut failing = source.clone();
    failing.train.learning_rate = 1e300;
    let before = version_dirs(&root);
    ticks(failing, Some(text.replacen("name: class 9\n", "name: class 8\n", 1)));
    let versions = store.list_versions("hp").map_err(|e| e.to_string())?;
    ensure!(versions.len() == 2, "failed training published a version");
    ensure!(version_dirs(&root) == before, "failed training left directories behind");
    Ok("0 versions over 3 unchanged ticks, 1 version with 6 vectors + 6 PROV after a 1-byte edit, 0 after a failing run".into())
}

// Determinism

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let bytes = four_level_tree("HP").into_bytes();
    let source = small_source(Path::new("/hp.obo"));
    let runs: Vec<Vec<Vec<u8>>> = (0..2)
        .map(|i| {
            let store = Store::new(dir.path().join(format!("run{i}")));
            let m = run_pipeline(&store, &source, &bytes, clock().as_ref()).unwrap();
            ModelKind::ALL
                .iter()
                .map(|&k| std::fs::read(store.vectors_path("hp", &m.version_tag, k)).unwrap())
                .collect()
        })
        .collect();
    for (i, kind) in ModelKind::ALL.iter().enumerate() {
        ensure!(runs[0][i] == runs[1][i], "{kind}: vectors.json differs between runs");
    }
    Ok("6 models byte-identical across two runs".into())
}

// Live ingest

fn live_ingest() -> Outcome {
    let targets = [
        (
            "HP",
            std::env::var("ONTOVEC_HP_URL").unwrap_or_else(|_| "http://purl.obolibrary.org/obo/hp.obo".into()),
            18_000,
        ),
        (
            "GO",
            std::env::var("ONTOVEC_GO_URL").unwrap_or_else(|_| "http://purl.obolibrary.org/obo/go.obo".into()),
            40_000,
        ),
    ];
    let fetcher = DefaultFetcher::new(Duration::from_secs(600));
    let mut notes = Vec::new();
    for (name, url, floor) in targets {
        let fetched = fetch(&fetcher, &SystemClock, &url).map_err(|e| format!("{name}: {e}"))?;
        let ingested = ingest(&fetched.bytes).map_err(|e| format!("{name}: {e}"))?;
        let terms = ingested.document.terms.len();
        ensure!(terms > floor, "{name}: {terms} term stanzas");
        let triples = ingested.graph.triples();
        let is_a = ingested
            .graph
            .relations()
            .iter()
            .position(|r| r.iri == "is_a")
            .ok_or_else(|| format!("{name}: no is_a relation"))?;
        let share = triples.iter().filter(|t| t.relation == is_a).count() as f64 / triples.len() as f64;
        ensure!(share > 0.5, "{name}: is_a covers {:.1}% of edges", 100.0 * share);
        notes.push(format!("{name} {terms} terms, is_a {:.1}% of edges", 100.0 * share));
    }
    Ok(notes.join(", "))
}

fn main() -> ExitCode {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .unwrap();
    let criteria: Vec<(&str, bool, Check)> = vec![
        ("gradient correctness", true, Box::new(gradients)),
        ("HolE correlation oracle", true, Box::new(hole_oracle)),
        ("BoxE continuity", true, Box::new(boxe_continuity)),
        ("training sanity", true, Box::new(training_sanity)),
        ("download contract", true, Box::new(|| rt.block_on(download_contract()))),
        (
            "similarity contract",
            true,
            Box::new(|| rt.block_on(similarity_contract())),
        ),
        ("top-k contract", true, Box::new(|| rt.block_on(top_k_contract()))),
        ("pipeline contract", true, Box::new(pipeline_contract)),
        ("determinism", true, Box::new(determinism)),
        ("live ingest (optional, networked)", false, Box::new(live_ingest)),
    ];
    let mut required_failed = 0;
    for (name, required, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name} ({secs:.1}s): {detail}"),
            Err(reason) => {
                println!("FAIL {name} ({secs:.1}s): {reason}");
                if required {
                    required_failed += 1;
                }
            }
        }
    }
    if required_failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
