//! Ingest, train every configured model and publish one version.

use chrono::{DateTime, Utc};
use rayon::prelude::*;

use crate::config::SourceConfig;
use crate::error::{Error, Result};
use crate::graph::KnowledgeGraph;
use crate::models::{ModelArtifact, ModelKind};
use crate::obo::{parse_obo, to_graph, IngestReport, OntologyDocument};
use crate::prov::{hyperparameters, write_prov, EntityRole, ProvActivity, ProvEntity, ProvRecord};
use crate::rdf2vec::{rdf2vec_embed, Rdf2VecConfig};
use crate::store::{
    export_vectors_json, is_safe_segment, sha256_hex, LabelSet, ModelFiles, Store, VersionManifest, SOURCE_FILE,
    VECTORS_FILE,
};
use crate::train::{train, TrainConfig, TrainReport};
use crate::watcher::Clock;

#[derive(Debug, Clone)]
pub struct Ingested {
    pub document: OntologyDocument,
    pub graph: KnowledgeGraph,
    pub report: IngestReport,
    pub labels: LabelSet,
}

/// Parses an OBO file and builds the graph without obsolete classes.
pub fn ingest(bytes: &[u8]) -> Result<Ingested> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::MalformedStanza {
        line: 0,
        reason: format!("file is not UTF-8: {e}"),
    })?;
    let document = parse_obo(text)?;
    let (graph, report) = to_graph(&document, false);
    let labels = LabelSet::from_document(&document);
    Ok(Ingested {
        document,
        graph,
        report,
        labels,
    })
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub artifact: ModelArtifact,
    /// Absent for RDF2Vec.
    pub report: Option<TrainReport>,
    pub started_at: DateTime<Utc>,
    pub ended_at: DateTime<Utc>,
}

/// Trains one model. RDF2Vec takes dimension, epochs and seed from `train`.
pub fn train_model(
    graph: &KnowledgeGraph,
    kind: ModelKind,
    train_config: &TrainConfig,
    rdf2vec: &Rdf2VecConfig,
    clock: &dyn Clock,
) -> Result<TrainedModel> {
    let started_at = clock.now();
    let (artifact, report) = if kind.is_scoring() {
        let (a, r) = train(graph, kind, train_config)?;
        (a, Some(r))
    } else {
        let walks = rdf2vec.walk_config(train_config.seed);
        let sg = rdf2vec.skipgram_config(train_config.dimension, train_config.epochs, train_config.seed);
        (rdf2vec_embed(graph, &walks, &sg)?, None)
    };
    Ok(TrainedModel {
        kind,
        artifact,
        report,
        started_at,
        ended_at: clock.now(),
    })
}

/// Identity of the ontology file a set of models was trained from.
#[derive(Debug, Clone)]
pub struct SourceIdentity<'a> {
    pub kg: &'a str,
    pub version: &'a str,
    pub url: &'a str,
    pub sha256: &'a str,
}

/// vectors.json, prov.json and report.json of a trained model.
pub fn model_files(
    source: &SourceIdentity<'_>,
    trained: &TrainedModel,
    graph: &KnowledgeGraph,
    train_config: &TrainConfig,
    rdf2vec: &Rdf2VecConfig,
) -> Result<ModelFiles> {
    let vectors_json = export_vectors_json(source.kg, source.version, &trained.artifact, graph)?;
    let base = format!("{}/{}", source.kg, source.version);
    let ontology = ProvEntity {
        id: format!("{base}/{SOURCE_FILE}"),
        role: EntityRole::Ontology,
        sha256: source.sha256.to_string(),
        location: source.url.to_string(),
    };
    let embedding = ProvEntity {
        id: format!("{base}/{}/{VECTORS_FILE}", trained.kind),
        role: EntityRole::Embedding,
        sha256: sha256_hex(vectors_json.as_bytes()),
        location: format!("{}/{VECTORS_FILE}", trained.kind),
    };
    let activity = ProvActivity {
        id: format!("{base}/{}/train", trained.kind),
        model: trained.kind,
        hyperparameters: hyperparameters(trained.kind, train_config, rdf2vec),
        started_at: trained.started_at,
        ended_at: trained.ended_at,
    };
    let prov = ProvRecord::for_run(ontology, embedding, activity)?;
    let report_json = trained.report.as_ref().map(serde_json::to_string_pretty).transpose()?;
    Ok(ModelFiles {
        kind: trained.kind,
        vectors_json,
        prov_json: write_prov(&prov),
        report_json,
    })
}

/// The last path segment of the data-version header with unsafe characters
/// replaced, else the retrieval date; `-2`, `-3`, ... on collision.
pub fn version_tag(data_version: &str, retrieved_at: DateTime<Utc>, existing: &[String]) -> String {
    let segment = data_version.trim().rsplit('/').find(|s| !s.is_empty()).unwrap_or("");
    let cleaned: String = segment
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c
            } else {
                '-'
            }
        })
        .collect();
    let cleaned = cleaned.trim_start_matches('.');
    let base = if is_safe_segment(cleaned) {
        cleaned.to_string()
    } else {
        retrieved_at.format("%Y-%m-%d").to_string()
    };
    if !existing.contains(&base) {
        return base;
    }
    (2..)
        .map(|n| format!("{base}-{n}"))
        .find(|t| !existing.contains(t))
        .expect("unbounded suffixes")
}

/// Parses `bytes`, trains every configured model in parallel and publishes
/// the result as one new version. Any failure publishes nothing.
pub fn run_pipeline(store: &Store, source: &SourceConfig, bytes: &[u8], clock: &dyn Clock) -> Result<VersionManifest> {
    source.validate()?;
    let retrieved_at = clock.now();
    let sha256 = sha256_hex(bytes);
    let ingested = ingest(bytes)?;
    tracing::info!(
        kg = %source.kg_name,
        terms = ingested.report.terms,
        triples = ingested.report.triples,
        dropped_edges = ingested.report.dropped_edges,
        "ingested"
    );
    let existing = store.list_versions(&source.kg_name)?;
    let version = version_tag(&ingested.document.data_version, retrieved_at, &existing);
    let identity = SourceIdentity {
        kg: &source.kg_name,
        version: &version,
        url: &source.url,
        sha256: &sha256,
    };

    let files = source
        .models
        .par_iter()
        .map(|&kind| {
            let trained =
                train_model(&ingested.graph, kind, &source.train, &source.rdf2vec, clock).inspect_err(|e| {
                    tracing::error!(kg = %source.kg_name, model = %kind, error = %e, "training failed");
                })?;
            tracing::info!(kg = %source.kg_name, model = %kind, "trained");
            model_files(&identity, &trained, &ingested.graph, &source.train, &source.rdf2vec)
        })
        .collect::<Result<Vec<_>>>()?;

    let manifest = VersionManifest {
        kg_name: source.kg_name.clone(),
        version_tag: version,
        source_url: source.url.clone(),
        sha256,
        retrieved_at,
        models: source.models.clone(),
        checksums: Default::default(),
    };
    store.save_version(&manifest, &files, &ingested.labels, bytes)
}
