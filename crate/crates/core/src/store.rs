//! Versioned on-disk artifact store.
//!
//! ```text
//! {root}/{kg}/manifest.json                  array of VersionManifest
//! {root}/{kg}/{version}/labels.json
//! {root}/{kg}/{version}/source.obo
//! {root}/{kg}/{version}/{model}/vectors.json
//! {root}/{kg}/{version}/{model}/prov.json
//! {root}/{kg}/{version}/{model}/report.json
//! ```
//!
//! A version is staged under `{root}/{kg}/.staging-*`, renamed into place and
//! only then appended to the manifest. The manifest is the sole source of
//! truth for which versions exist.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::KnowledgeGraph;
use crate::models::{ModelArtifact, ModelKind};
use crate::obo::OntologyDocument;
use crate::prov::is_sha256;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const LABELS_FILE: &str = "labels.json";
pub const SOURCE_FILE: &str = "source.obo";
pub const VECTORS_FILE: &str = "vectors.json";
pub const PROV_FILE: &str = "prov.json";
pub const REPORT_FILE: &str = "report.json";
const STAGING_PREFIX: &str = ".staging-";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VersionManifest {
    pub kg_name: String,
    pub version_tag: String,
    pub source_url: String,
    pub sha256: String,
    pub retrieved_at: DateTime<Utc>,
    pub models: Vec<ModelKind>,
    /// SHA-256 of each model's vectors.json, checked on read.
    #[serde(default)]
    pub checksums: BTreeMap<ModelKind, String>,
}

/// The public vector download document. Field order is alphabetical so the
/// serialized keys are sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorsDocument {
    pub dimension: usize,
    pub kg: String,
    pub model: ModelKind,
    pub vectors: BTreeMap<String, Vec<f64>>,
    pub version: String,
}

impl VectorsDocument {
    pub fn validate(&self) -> Result<()> {
        for (iri, v) in &self.vectors {
            if v.len() != self.dimension {
                return Err(Error::DimensionMismatch {
                    iri: iri.clone(),
                    reason: format!("length {} but dimension {}", v.len(), self.dimension),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::DimensionMismatch {
                    iri: iri.clone(),
                    reason: "non-finite component".into(),
                });
            }
        }
        Ok(())
    }

    /// Compact canonical JSON with exact float round-trip.
    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        Ok(serde_json::to_string(self)?)
    }
}

/// Exports one vector per non-obsolete entity of `graph`.
pub fn export_vectors(
    kg: &str,
    version: &str,
    artifact: &ModelArtifact,
    graph: &KnowledgeGraph,
) -> Result<VectorsDocument> {
    let doc = VectorsDocument {
        dimension: artifact.dimension(),
        kg: kg.to_string(),
        model: artifact.kind(),
        vectors: graph
            .entities()
            .iter()
            .enumerate()
            .filter(|(_, e)| !e.obsolete)
            .map(|(i, e)| (e.iri.clone(), artifact.entity(i).to_vec()))
            .collect(),
        version: version.to_string(),
    };
    doc.validate()?;
    Ok(doc)
}

pub fn export_vectors_json(
    kg: &str,
    version: &str,
    artifact: &ModelArtifact,
    graph: &KnowledgeGraph,
) -> Result<String> {
    export_vectors(kg, version, artifact, graph)?.to_json()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEntry {
    pub iri: String,
    #[serde(default)]
    pub label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alt_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub namespace: Option<String>,
}

/// Labels of one version, sorted by iri.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelSet {
    pub entries: Vec<LabelEntry>,
}

impl LabelSet {
    pub fn new(mut entries: Vec<LabelEntry>) -> Self {
        entries.sort_by(|a, b| a.iri.cmp(&b.iri));
        entries.dedup_by(|a, b| a.iri == b.iri);
        Self { entries }
    }

    /// Labels of the non-obsolete terms of `doc`.
    pub fn from_document(doc: &OntologyDocument) -> Self {
        Self::new(
            doc.terms
                .iter()
                .filter(|t| !t.is_obsolete && crate::graph::is_curie(&t.id))
                .map(|t| LabelEntry {
                    iri: t.id.clone(),
                    label: t.name.clone(),
                    alt_ids: t.alt_ids.clone(),
                    namespace: t.namespace.clone(),
                })
                .collect(),
        )
    }

    pub fn from_graph(graph: &KnowledgeGraph) -> Self {
        Self::new(
            graph
                .entities()
                .iter()
                .filter(|e| !e.obsolete)
                .map(|e| LabelEntry {
                    iri: e.iri.clone(),
                    label: e.label.clone(),
                    alt_ids: vec![],
                    namespace: e.namespace.clone(),
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One model's files, ready to be written.
#[derive(Debug, Clone)]
pub struct ModelFiles {
    pub kind: ModelKind,
    pub vectors_json: String,
    pub prov_json: String,
    pub report_json: Option<String>,
}

/// A fully loaded version.
#[derive(Debug, Clone)]
pub struct LoadedVersion {
    pub manifest: VersionManifest,
    pub labels: LabelSet,
    pub models: BTreeMap<ModelKind, VectorsDocument>,
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

static STAGING_COUNTER: AtomicU64 = AtomicU64::new(0);

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Writes `bytes` to a sibling temp file, syncs it and renames it over `path`.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!("tmp-{}", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Valid kg names and version tags are non-empty path segments made of
/// ASCII alphanumerics, `-`, `_` and `.`, not starting with `.`.
pub fn is_safe_segment(s: &str) -> bool {
    !s.is_empty()
        && !s.starts_with('.')
        && s.bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_' | b'.'))
}

impl Store {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn kg_dir(&self, kg: &str) -> PathBuf {
        self.root.join(kg)
    }

    pub fn version_dir(&self, kg: &str, version: &str) -> PathBuf {
        self.kg_dir(kg).join(version)
    }

    pub fn vectors_path(&self, kg: &str, version: &str, model: ModelKind) -> PathBuf {
        self.version_dir(kg, version).join(model.as_str()).join(VECTORS_FILE)
    }

    pub fn prov_path(&self, kg: &str, version: &str, model: ModelKind) -> PathBuf {
        self.version_dir(kg, version).join(model.as_str()).join(PROV_FILE)
    }

    pub fn source_path(&self, kg: &str, version: &str) -> PathBuf {
        self.version_dir(kg, version).join(SOURCE_FILE)
    }

    /// Knowledge graphs that have a manifest, sorted by name.
    pub fn kgs(&self) -> Result<Vec<String>> {
        let entries = match fs::read_dir(&self.root) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(vec![]),
            Err(e) => return Err(Error::io(&self.root, e)),
        };
        let mut kgs = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(&self.root, e))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if is_safe_segment(&name) && entry.path().join(MANIFEST_FILE).is_file() {
                kgs.push(name);
            }
        }
        kgs.sort();
        Ok(kgs)
    }

    /// Published versions of `kg` in publication order; empty if none.
    pub fn manifests(&self, kg: &str) -> Result<Vec<VersionManifest>> {
        let path = self.kg_dir(kg).join(MANIFEST_FILE);
        match fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| Error::CorruptStore {
                path,
                reason: e.to_string(),
            }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(vec![]),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    pub fn list_versions(&self, kg: &str) -> Result<Vec<String>> {
        Ok(self.manifests(kg)?.into_iter().map(|m| m.version_tag).collect())
    }

    /// The published version with the greatest `retrieved_at`.
    pub fn latest(&self, kg: &str) -> Result<VersionManifest> {
        self.manifests(kg)?
            .into_iter()
            .max_by_key(|m| m.retrieved_at)
            .ok_or_else(|| Error::NotFound(format!("knowledge graph `{kg}`")))
    }

    /// Resolves `"latest"` or an explicit tag to a published manifest.
    pub fn resolve(&self, kg: &str, version: &str) -> Result<VersionManifest> {
        if version == "latest" {
            return self.latest(kg);
        }
        let manifests = self.manifests(kg)?;
        if manifests.is_empty() {
            return Err(Error::NotFound(format!("knowledge graph `{kg}`")));
        }
        manifests
            .into_iter()
            .find(|m| m.version_tag == version)
            .ok_or_else(|| Error::NotFound(format!("version `{version}` of `{kg}`")))
    }

    /// Publishes a version atomically. `source` is the raw ontology file.
    pub fn save_version(
        &self,
        manifest: &VersionManifest,
        models: &[ModelFiles],
        labels: &LabelSet,
        source: &[u8],
    ) -> Result<VersionManifest> {
        let kg = &manifest.kg_name;
        let version = &manifest.version_tag;
        if !is_safe_segment(kg) || !is_safe_segment(version) {
            return Err(Error::InvalidManifest(format!(
                "unsafe kg name or version tag `{kg}/{version}`"
            )));
        }
        if !is_sha256(&manifest.sha256) {
            return Err(Error::InvalidManifest(
                "sha256 must be 64 lowercase hex characters".into(),
            ));
        }
        if models.is_empty() {
            return Err(Error::InvalidManifest("a version needs at least one model".into()));
        }
        let mut existing = self.manifests(kg)?;
        if existing.iter().any(|m| &m.version_tag == version) {
            return Err(Error::VersionExists {
                kg: kg.clone(),
                version: version.clone(),
            });
        }
        if let Some(last) = existing.iter().map(|m| m.retrieved_at).max() {
            if manifest.retrieved_at < last {
                return Err(Error::InvalidManifest("retrieved_at must not go backwards".into()));
            }
        }

        let kg_dir = self.kg_dir(kg);
        fs::create_dir_all(&kg_dir).map_err(|e| Error::io(&kg_dir, e))?;
        let staging = kg_dir.join(format!(
            "{STAGING_PREFIX}{version}-{}-{}",
            std::process::id(),
            STAGING_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let result = self.stage(&staging, manifest, models, labels, source);
        let published = match result {
            Ok(published) => published,
            Err(e) => {
                let _ = fs::remove_dir_all(&staging);
                return Err(e);
            }
        };

        let target = self.version_dir(kg, version);
        if target.exists() {
            // Left over by a publish that never reached the manifest.
            fs::remove_dir_all(&target).map_err(|e| Error::io(&target, e))?;
        }
        fs::rename(&staging, &target).map_err(|e| Error::io(&target, e))?;
        existing.push(published.clone());
        let bytes = serde_json::to_vec_pretty(&existing)?;
        write_atomic(&kg_dir.join(MANIFEST_FILE), &bytes)?;
        tracing::info!(kg = %kg, version = %version, models = published.models.len(), "version published");
        Ok(published)
    }

    fn stage(
        &self,
        dir: &Path,
        manifest: &VersionManifest,
        models: &[ModelFiles],
        labels: &LabelSet,
        source: &[u8],
    ) -> Result<VersionManifest> {
        let write = |path: PathBuf, bytes: &[u8]| fs::write(&path, bytes).map_err(|e| Error::io(&path, e));
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write(dir.join(LABELS_FILE), &serde_json::to_vec(labels)?)?;
        write(dir.join(SOURCE_FILE), source)?;
        let mut published = manifest.clone();
        published.models.clear();
        published.checksums.clear();
        for m in models {
            if published.models.contains(&m.kind) {
                return Err(Error::InvalidManifest(format!("model {} listed twice", m.kind)));
            }
            let mdir = dir.join(m.kind.as_str());
            fs::create_dir_all(&mdir).map_err(|e| Error::io(&mdir, e))?;
            write(mdir.join(VECTORS_FILE), m.vectors_json.as_bytes())?;
            write(mdir.join(PROV_FILE), m.prov_json.as_bytes())?;
            if let Some(report) = &m.report_json {
                write(mdir.join(REPORT_FILE), report.as_bytes())?;
            }
            published.models.push(m.kind);
            published
                .checksums
                .insert(m.kind, sha256_hex(m.vectors_json.as_bytes()));
        }
        Ok(published)
    }

    /// Raw vectors.json bytes of a published model, checksum-verified.
    pub fn read_vectors_bytes(&self, manifest: &VersionManifest, model: ModelKind) -> Result<Vec<u8>> {
        if !manifest.models.contains(&model) {
            return Err(Error::NotFound(format!(
                "model {model} in version `{}` of `{}`",
                manifest.version_tag, manifest.kg_name
            )));
        }
        let path = self.vectors_path(&manifest.kg_name, &manifest.version_tag, model);
        let bytes = read(&path).map_err(|e| match e {
            Error::IoFailure { path, source } if source.kind() == std::io::ErrorKind::NotFound => Error::CorruptStore {
                path,
                reason: "listed model file is missing".into(),
            },
            other => other,
        })?;
        if let Some(expected) = manifest.checksums.get(&model) {
            if &sha256_hex(&bytes) != expected {
                return Err(Error::CorruptStore {
                    path,
                    reason: "checksum mismatch".into(),
                });
            }
        }
        Ok(bytes)
    }

    pub fn load_vectors(&self, manifest: &VersionManifest, model: ModelKind) -> Result<VectorsDocument> {
        let bytes = self.read_vectors_bytes(manifest, model)?;
        let path = self.vectors_path(&manifest.kg_name, &manifest.version_tag, model);
        let doc: VectorsDocument = serde_json::from_slice(&bytes).map_err(|e| Error::CorruptStore {
            path: path.clone(),
            reason: e.to_string(),
        })?;
        doc.validate().map_err(|e| Error::CorruptStore {
            path,
            reason: e.to_string(),
        })?;
        Ok(doc)
    }

    pub fn load_labels(&self, manifest: &VersionManifest) -> Result<LabelSet> {
        let path = self
            .version_dir(&manifest.kg_name, &manifest.version_tag)
            .join(LABELS_FILE);
        let bytes = read(&path)?;
        serde_json::from_slice(&bytes).map_err(|e| Error::CorruptStore {
            path,
            reason: e.to_string(),
        })
    }

    pub fn load_source(&self, manifest: &VersionManifest) -> Result<Vec<u8>> {
        read(&self.source_path(&manifest.kg_name, &manifest.version_tag))
    }

    /// Loads every model of a version. `version` may be `"latest"`.
    pub fn load_version(&self, kg: &str, version: &str) -> Result<LoadedVersion> {
        let manifest = self.resolve(kg, version)?;
        let labels = self.load_labels(&manifest)?;
        let mut models = BTreeMap::new();
        for &kind in &manifest.models {
            models.insert(kind, self.load_vectors(&manifest, kind)?);
        }
        Ok(LoadedVersion {
            manifest,
            labels,
            models,
        })
    }
}
