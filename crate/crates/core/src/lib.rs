//! Aspect-weighted topic modeling.
//!
//! The pipeline: ingest bibliographic records into a corpus, screen them
//! with a relevance classifier, train an LDA topic model by collapsed Gibbs
//! sampling, refine topics into subtopics by hierarchical clustering,
//! derive TF-IDF-weighted keyword sets for externally defined aspects,
//! couple aspects to topics through relevance scores, and report how
//! document-topic associations shift under each aspect.
//!
//! All numeric types are generic over [`scalar::Scalar`] (`f32` or `f64`);
//! the aliases at the crate root fix `f64`, the precision used by the CLI.

pub mod aspects;
pub mod corpus;
pub mod error;
pub mod fusion;
pub mod persist;
pub mod refine;
pub mod rng;
pub mod scalar;
pub mod screen;
pub mod topics;

pub use error::{Error, Result};

/// Concrete `f64` aliases for the main model types.
pub type TopicModel = topics::TopicModel<f64>;
pub type LdaHyperparams = topics::LdaHyperparams<f64>;
pub type RelevanceClassifier = screen::RelevanceClassifier<f64>;
pub type TestSet = screen::TestSet<f64>;
pub type SubtopicModel = refine::SubtopicModel<f64>;
pub type DocVector = refine::DocVector<f64>;
pub type AspectKeywords = aspects::AspectKeywords<f64>;
pub type AspectTopicModel = fusion::AspectTopicModel<f64>;
pub type RelevanceMatrix = fusion::RelevanceMatrix<f64>;
pub type ComparisonReport = fusion::ComparisonReport<f64>;
