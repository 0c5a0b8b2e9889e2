use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use parking_lot::{Mutex, RwLock};

use ontovec_core::{ConceptIndex, Error, ModelKind, Result, Store, VersionManifest};

use crate::error::ApiError;

/// Published versions per knowledge graph, as read from the manifests.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    pub kgs: BTreeMap<String, Vec<VersionManifest>>,
    /// Set when the store could not be read; the previous listing is kept.
    pub degraded: Option<String>,
}

impl Catalog {
    pub fn read(store: &Store) -> Result<Self> {
        let mut kgs = BTreeMap::new();
        for kg in store.kgs()? {
            let mut versions = store.manifests(&kg)?;
            versions.sort_by_key(|m| m.retrieved_at);
            if !versions.is_empty() {
                kgs.insert(kg, versions);
            }
        }
        Ok(Self { kgs, degraded: None })
    }

    /// `"latest"` is the version with the greatest `retrieved_at`.
    pub fn resolve(&self, kg: &str, version: &str) -> Result<&VersionManifest> {
        let versions = self
            .kgs
            .get(kg)
            .ok_or_else(|| Error::NotFound(format!("knowledge graph `{kg}`")))?;
        let found = if version == "latest" {
            versions.last()
        } else {
            versions.iter().find(|m| m.version_tag == version)
        };
        found.ok_or_else(|| Error::NotFound(format!("version `{version}` of `{kg}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModelKey {
    pub kg: String,
    pub version: String,
    pub model: ModelKind,
}

impl std::fmt::Display for ModelKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}/{}", self.kg, self.version, self.model)
    }
}

/// One model of one version with its concept index. Immutable once built.
#[derive(Debug)]
pub struct LoadedModel {
    pub manifest: VersionManifest,
    pub model: ModelKind,
    pub index: ConceptIndex,
}

impl LoadedModel {
    pub fn load(store: &Store, manifest: &VersionManifest, model: ModelKind) -> Result<Self> {
        let doc = store.load_vectors(manifest, model)?;
        let labels = store.load_labels(manifest)?;
        Ok(Self {
            manifest: manifest.clone(),
            model,
            index: ConceptIndex::new(&doc, &labels)?,
        })
    }

    pub fn version(&self) -> &str {
        &self.manifest.version_tag
    }
}

/// Most-recently-used first.
#[derive(Debug)]
struct Lru {
    cap: usize,
    entries: Vec<(ModelKey, Arc<LoadedModel>)>,
}

impl Lru {
    fn get(&mut self, key: &ModelKey) -> Option<Arc<LoadedModel>> {
        let pos = self.entries.iter().position(|(k, _)| k == key)?;
        let entry = self.entries.remove(pos);
        let model = entry.1.clone();
        self.entries.insert(0, entry);
        Some(model)
    }

    fn put(&mut self, key: ModelKey, model: Arc<LoadedModel>) {
        self.entries.retain(|(k, _)| k != &key);
        self.entries.insert(0, (key, model));
        self.entries.truncate(self.cap);
    }
}

/// Shared service state. Requests take a catalog snapshot once and resolve
/// every version against it; publication swaps the snapshot atomically.
#[derive(Debug)]
pub struct AppState {
    store: Store,
    catalog: RwLock<Arc<Catalog>>,
    cache: Mutex<Lru>,
    started: Instant,
    pub ui_dir: Option<PathBuf>,
}

impl AppState {
    pub fn new(store: Store, max_loaded: usize) -> Self {
        let catalog = match Catalog::read(&store) {
            Ok(c) => c,
            Err(e) => Catalog {
                kgs: BTreeMap::new(),
                degraded: Some(e.to_string()),
            },
        };
        Self {
            store,
            catalog: RwLock::new(Arc::new(catalog)),
            cache: Mutex::new(Lru {
                cap: max_loaded.max(1),
                entries: Vec::new(),
            }),
            started: Instant::now(),
            ui_dir: None,
        }
    }

    pub fn with_ui_dir(mut self, dir: Option<PathBuf>) -> Self {
        self.ui_dir = dir;
        self
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn catalog(&self) -> Arc<Catalog> {
        self.catalog.read().clone()
    }

    /// Re-reads the manifests and swaps the catalog. On failure the previous
    /// listing stays in place and is marked degraded.
    pub fn refresh(&self) {
        let next = match Catalog::read(&self.store) {
            Ok(c) => c,
            Err(e) => {
                tracing::error!(error = %e, "catalog refresh failed");
                let mut c = (*self.catalog()).clone();
                c.degraded = Some(e.to_string());
                c
            }
        };
        *self.catalog.write() = Arc::new(next);
    }

    pub fn uptime_secs(&self) -> f64 {
        self.started.elapsed().as_secs_f64()
    }

    pub fn loaded(&self) -> Vec<String> {
        self.cache.lock().entries.iter().map(|(k, _)| k.to_string()).collect()
    }

    /// Cached model, or a blocking load off the async workers.
    pub async fn model(
        self: &Arc<Self>,
        kg: &str,
        model: ModelKind,
        version: &str,
    ) -> Result<Arc<LoadedModel>, ApiError> {
        let manifest = self.catalog().resolve(kg, version)?.clone();
        if !manifest.models.contains(&model) {
            return Err(
                Error::NotFound(format!("model {model} in version `{}` of `{kg}`", manifest.version_tag)).into(),
            );
        }
        let key = ModelKey {
            kg: kg.to_string(),
            version: manifest.version_tag.clone(),
            model,
        };
        if let Some(hit) = self.cache.lock().get(&key) {
            return Ok(hit);
        }
        let state = self.clone();
        let loaded = tokio::task::spawn_blocking(move || LoadedModel::load(&state.store, &manifest, model))
            .await
            .map_err(|e| ApiError::internal(format!("loader task failed: {e}")))??;
        let loaded = Arc::new(loaded);
        tracing::info!(model = %key, concepts = loaded.index.len(), "model loaded");
        self.cache.lock().put(key, loaded.clone());
        Ok(loaded)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(tag: &str, day: u32) -> VersionManifest {
        VersionManifest {
            kg_name: "hp".into(),
            version_tag: tag.into(),
            source_url: String::new(),
            sha256: String::new(),
            retrieved_at: format!("2025-07-{day:02}T00:00:00Z").parse().unwrap(),
            models: vec![ModelKind::TransE],
            checksums: Default::default(),
        }
    }

    #[test]
    fn latest_is_last_by_retrieval_time() {
        let mut catalog = Catalog::default();
        catalog
            .kgs
            .insert("hp".into(), vec![manifest("b", 1), manifest("a", 2)]);
        assert_eq!(catalog.resolve("hp", "latest").unwrap().version_tag, "a");
        assert_eq!(catalog.resolve("hp", "b").unwrap().version_tag, "b");
        assert!(matches!(catalog.resolve("hp", "c"), Err(Error::NotFound(_))));
        assert!(matches!(catalog.resolve("go", "latest"), Err(Error::NotFound(_))));
    }

    #[test]
    fn lru_evicts_least_recently_used() {
        let key = |v: &str| ModelKey {
            kg: "hp".into(),
            version: v.into(),
            model: ModelKind::TransE,
        };
        let model = |v: &str| {
            let doc = ontovec_core::VectorsDocument {
                dimension: 1,
                kg: "hp".into(),
                model: ModelKind::TransE,
                vectors: [("A:1".to_string(), vec![1.0])].into(),
                version: v.into(),
            };
            Arc::new(LoadedModel {
                manifest: manifest(v, 1),
                model: ModelKind::TransE,
                index: ConceptIndex::new(&doc, &Default::default()).unwrap(),
            })
        };
        let mut lru = Lru {
            cap: 2,
            entries: Vec::new(),
        };
        lru.put(key("1"), model("1"));
        lru.put(key("2"), model("2"));
        assert!(lru.get(&key("1")).is_some());
        lru.put(key("3"), model("3"));
        assert!(lru.get(&key("2")).is_none());
        assert_eq!(
            lru.entries.iter().map(|(k, _)| k.version.as_str()).collect::<Vec<_>>(),
            ["3", "1"]
        );
    }
}
