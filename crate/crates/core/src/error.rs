//! Crate-wide error type.
//!
//! Error display strings start with a stable name (`DuplicateId`,
//! `EmptyVocabulary`, ...) so that callers and the CLI can surface them
//! verbatim in diagnostics.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    // -- document ingestion --
    #[error("MissingField: required field '{field}' is absent")]
    MissingField { field: String },
    #[error("DuplicateId: document id '{id}' appears more than once")]
    DuplicateId { id: String },
    #[error("MalformedRecord: record {line}: {message}")]
    MalformedRecord { line: usize, message: String },

    // -- corpus construction --
    #[error("EmptyVocabulary: every term was removed by the frequency filters")]
    EmptyVocabulary,
    #[error("EmptyCorpus: no documents available for modeling")]
    EmptyCorpus,

    // -- relevance screening --
    #[error("DegenerateLabels: training needs at least two labels of each class (got {relevant} relevant, {irrelevant} non-relevant)")]
    DegenerateLabels { relevant: usize, irrelevant: usize },
    #[error("NonFiniteLoss: training loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("DimensionMismatch: expected vector of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    // -- clustering --
    #[error("TooFewPoints: clustering into {requested} clusters needs at least that many points (got {points})")]
    TooFewPoints { requested: usize, points: usize },
    #[error("SingleCluster: silhouette is undefined for fewer than two clusters")]
    SingleCluster,
    #[error("TooFewDocs: primary topic {topic} has {docs} documents, fewer than the largest candidate k = {needed}")]
    TooFewDocs {
        topic: usize,
        docs: usize,
        needed: usize,
    },
    #[error("EmptyCluster: cluster {cluster} of primary topic {topic} has no member documents")]
    EmptyCluster { topic: usize, cluster: usize },

    // -- aspects --
    #[error("EmptyAspect: aspect '{name}' has no tokens after preprocessing")]
    EmptyAspect { name: String },
    #[error("DuplicateAspectName: aspect name '{name}' is used by more than one file")]
    DuplicateAspectName { name: String },

    // -- fusion --
    #[error("AllTopicsEmpty: aspect '{aspect}' shares no term with any topic")]
    AllTopicsEmpty { aspect: String },
    #[error("DocIdMismatch: result sets cover different documents ({detail})")]
    DocIdMismatch { detail: String },
    #[error("NoCentroids: no aspect-topic centroids available for clustering")]
    NoCentroids,

    // -- reporting / persistence --
    #[error("NonFiniteValue: matrix cell ({row}, {col}) is not finite")]
    NonFiniteValue { row: usize, col: usize },
    #[error("SchemaVersionMismatch: file declares version {found}, supported version is {supported}")]
    SchemaVersionMismatch { found: u32, supported: u32 },
    #[error("CorruptModel: field '{field}': {message}")]
    CorruptModel { field: String, message: String },

    // -- configuration --
    #[error("InvalidParameter: {name}: {message}")]
    InvalidParameter { name: String, message: String },

    // -- wrapped I/O --
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
