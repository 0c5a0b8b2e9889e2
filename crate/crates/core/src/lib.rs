//! Ingestion, embedding training, versioned storage and similarity queries
//! for evolving biomedical ontologies.

pub mod config;
pub mod error;
pub mod gradcheck;
pub mod graph;
pub mod models;
pub mod obo;
pub mod optim;
pub mod pipeline;
pub mod prov;
pub mod query;
pub mod rdf2vec;
pub mod store;
pub mod synthetic;
pub mod train;
pub mod watcher;

pub use config::{ApiConfig, AppConfig, SourceConfig};
pub use error::{Error, Result};
pub use graph::{EntityRecord, KnowledgeGraph, RelationRecord, Triple};
pub use models::{ModelArtifact, ModelConfig, ModelKind, Norm};
pub use obo::{parse_obo, to_graph, IngestReport, OntologyDocument, TermStanza};
pub use pipeline::{ingest, run_pipeline};
pub use prov::{write_prov, ProvRecord};
pub use query::{cosine, normalize, ConceptIndex, QueryResult, ResultRow, Similarity};
pub use rdf2vec::{generate_walks, rdf2vec_embed, train_skipgram, Rdf2VecConfig, SkipGramConfig, WalkConfig};
pub use store::{LabelSet, LoadedVersion, Store, VectorsDocument, VersionManifest};
pub use train::{train, TrainConfig, TrainReport};
pub use watcher::{Clock, DefaultFetcher, FakeClock, Fetcher, SystemClock, Watcher};
