use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    // graph construction and lookup
    #[error("unknown IRI `{0}`")]
    UnknownIri(String),
    #[error("duplicate entity `{0}`")]
    DuplicateEntity(String),
    #[error("duplicate relation `{0}`")]
    DuplicateRelation(String),
    #[error("invalid IRI `{0}`: expected PREFIX:LOCALID")]
    InvalidIri(String),
    #[error("not found: {0}")]
    NotFound(String),

    // ingestion
    #[error("malformed stanza at line {line}: {reason}")]
    MalformedStanza { line: usize, reason: String },
    #[error("malformed tag line {line}: `{text}`")]
    MalformedTagLine { line: usize, text: String },
    #[error("malformed triple line {line}: expected 3 tab-separated columns")]
    MalformedTripleLine { line: usize },

    // training
    #[error("graph has no triples")]
    EmptyGraph,
    #[error("graph has a single entity, corruption is impossible")]
    SingleEntityGraph,
    #[error("non-finite loss at epoch {epoch}, step {step}: {detail}")]
    NonFiniteLoss { epoch: usize, step: usize, detail: String },
    #[error("walk corpus is empty")]
    EmptyCorpus,
    #[error("model `{0}` is not a triple-scoring model")]
    NotAScoringModel(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    // storage
    #[error("version `{version}` of `{kg}` already exists")]
    VersionExists { kg: String, version: String },
    #[error("vector for `{iri}` is invalid: {reason}")]
    DimensionMismatch { iri: String, reason: String },
    #[error("corrupt store at {path}: {reason}")]
    CorruptStore { path: PathBuf, reason: String },
    #[error("invalid provenance record: {0}")]
    InvalidProv(String),
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
    #[error("I/O failure at {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    // release watching
    #[error("fetch of `{url}` failed after {attempts} attempts: {reason}")]
    FetchFailed {
        url: String,
        attempts: usize,
        reason: String,
    },

    // queries
    #[error("label `{query}` is ambiguous")]
    AmbiguousLabel { query: String, candidates: Vec<String> },
    #[error("zero vector for `{0}`")]
    ZeroVector(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::IoFailure {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from bad user input rather than a broken
    /// installation or store.
    pub fn is_user_error(&self) -> bool {
        matches!(
            self,
            Error::UnknownIri(_)
                | Error::DuplicateEntity(_)
                | Error::DuplicateRelation(_)
                | Error::InvalidIri(_)
                | Error::NotFound(_)
                | Error::MalformedStanza { .. }
                | Error::MalformedTagLine { .. }
                | Error::MalformedTripleLine { .. }
                | Error::EmptyGraph
                | Error::SingleEntityGraph
                | Error::EmptyCorpus
                | Error::NotAScoringModel(_)
                | Error::InvalidConfig(_)
                | Error::VersionExists { .. }
                | Error::AmbiguousLabel { .. }
        )
    }
}
