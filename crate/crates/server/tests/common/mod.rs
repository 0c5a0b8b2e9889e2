#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{HeaderMap, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tower::ServiceExt;

use ontovec_core::store::{sha256_hex, LabelEntry, ModelFiles};
use ontovec_core::{LabelSet, ModelKind, Store, VectorsDocument, VersionManifest};
use ontovec_server::{api_router, AppState};

pub struct Reply {
    pub status: StatusCode,
    pub headers: HeaderMap,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.body)))
    }
}

pub async fn request(app: &Router, method: Method, uri: &str) -> Reply {
    let response = app
        .clone()
        .oneshot(Request::builder().method(method).uri(uri).body(Body::empty()).unwrap())
        .await
        .unwrap();
    let status = response.status();
    let headers = response.headers().clone();
    let body = response.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, headers, body }
}

pub async fn get(app: &Router, uri: &str) -> Reply {
    request(app, Method::GET, uri).await
}

pub fn app(store: &Store, max_loaded: usize) -> (Arc<AppState>, Router) {
    let state = Arc::new(AppState::new(store.clone(), max_loaded));
    (state.clone(), api_router(state))
}

/// `n` random vectors of dimension `d` keyed `{prefix}:{i:07}`.
pub fn random_vectors(prefix: &str, n: usize, d: usize, seed: u64) -> BTreeMap<String, Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            (format!("{prefix}:{i:07}"), v)
        })
        .collect()
}

pub fn labels_for(vectors: &BTreeMap<String, Vec<f64>>) -> LabelSet {
    LabelSet::new(
        vectors
            .keys()
            .enumerate()
            .map(|(i, iri)| LabelEntry {
                iri: iri.clone(),
                label: format!("concept {i}"),
                ..Default::default()
            })
            .collect(),
    )
}

/// Publishes one version holding the given per-model vectors.
pub fn publish(
    store: &Store,
    kg: &str,
    version: &str,
    day: u32,
    models: &[(ModelKind, BTreeMap<String, Vec<f64>>)],
    labels: &LabelSet,
) -> VersionManifest {
    let files: Vec<ModelFiles> = models
        .iter()
        .map(|(kind, vectors)| ModelFiles {
            kind: *kind,
            vectors_json: VectorsDocument {
                dimension: vectors.values().next().map_or(0, Vec::len),
                kg: kg.to_string(),
                model: *kind,
                vectors: vectors.clone(),
                version: version.to_string(),
            }
            .to_json()
            .unwrap(),
            prov_json: "{}".into(),
            report_json: None,
        })
        .collect();
    let manifest = VersionManifest {
        kg_name: kg.to_string(),
        version_tag: version.to_string(),
        source_url: format!("file:///{kg}.obo"),
        sha256: sha256_hex(version.as_bytes()),
        retrieved_at: format!("2025-07-{day:02}T00:00:00Z").parse().unwrap(),
        models: vec![],
        checksums: Default::default(),
    };
    store.save_version(&manifest, &files, labels, b"").unwrap()
}
