//! Versioned JSON persistence for trained models.
//!
//! Floats are written by serde_json's shortest-round-trip formatter, so
//! `load(save(x))` reproduces every weight bit for bit. Schema violations
//! are rejected with the offending field path.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{AspectTopicModel, AtmTopic};
use crate::refine::{Subtopic, SubtopicModel};
use crate::rng::fnv1a64;
use crate::scalar::Scalar;
use crate::screen::{RelevanceClassifier, TrainConfig};
use crate::topics::{LdaHyperparams, TopicModel};

pub const SCHEMA_VERSION: u32 = 1;

fn corrupt(field: &str, message: impl Into<String>) -> Error {
    Error::CorruptModel {
        field: field.into(),
        message: message.into(),
    }
}

fn check_version(found: u32) -> Result<()> {
    if found != SCHEMA_VERSION {
        return Err(Error::SchemaVersionMismatch {
            found,
            supported: SCHEMA_VERSION,
        });
    }
    Ok(())
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    Ok(serde_json::from_reader(reader)?)
}

/// FNV-1a hash of a serialized artifact, as fixed-width hex.
pub fn file_hash(path: &Path) -> Result<String> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    Ok(format!("{:016x}", fnv1a64(&bytes)))
}

/// Provenance block attached to fine-tuned models.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Provenance {
    pub source_model_hash: String,
    pub aspect: String,
    pub tau: f64,
    pub lambda: f64,
    pub injected_doc_ids: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct TopicModelFile<S> {
    version: u32,
    #[serde(rename = "K")]
    k: usize,
    alpha: S,
    beta: S,
    iterations: usize,
    burn_in: usize,
    seed: u64,
    vocab: Vec<String>,
    phi: Vec<Vec<S>>,
    theta: Vec<Vec<S>>,
    doc_ids: Vec<String>,
    topic_totals: Vec<S>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

pub fn save_topic_model<S: Scalar>(
    model: &TopicModel<S>,
    provenance: Option<Provenance>,
    path: &Path,
) -> Result<()> {
    let file = TopicModelFile {
        version: SCHEMA_VERSION,
        k: model.hp.k,
        alpha: model.hp.alpha,
        beta: model.hp.beta,
        iterations: model.hp.iterations,
        burn_in: model.hp.burn_in,
        seed: model.hp.seed,
        vocab: model.vocab.clone(),
        phi: model.phi.clone(),
        theta: model.theta.clone(),
        doc_ids: model.doc_ids.clone(),
        topic_totals: model.topic_totals.clone(),
        provenance,
    };
    write_json(&file, path)
}

pub fn load_topic_model<S: Scalar>(path: &Path) -> Result<(TopicModel<S>, Option<Provenance>)> {
    let file: TopicModelFile<S> = read_json(path)?;
    check_version(file.version)?;
    if file.k == 0 {
        return Err(corrupt("K", "must be at least 1"));
    }
    if file.phi.len() != file.k {
        return Err(corrupt("phi", format!("{} rows, expected K = {}", file.phi.len(), file.k)));
    }
    if file.topic_totals.len() != file.k {
        return Err(corrupt("topic_totals", "length must equal K"));
    }
    if file.theta.len() != file.doc_ids.len() {
        return Err(corrupt(
            "theta",
            format!("{} rows, expected {} doc_ids", file.theta.len(), file.doc_ids.len()),
        ));
    }
    let tol = S::from_f64_lossy(1e-6);
    for (j, row) in file.phi.iter().enumerate() {
        if row.len() != file.vocab.len() {
            return Err(corrupt("phi", format!("row {j} length differs from vocab")));
        }
        let sum: S = row.iter().copied().sum();
        if (sum - S::one()).abs() > tol || row.iter().any(|w| !w.is_finite() || *w < S::zero()) {
            return Err(corrupt("phi", format!("row {j} is not a distribution")));
        }
    }
    for (d, row) in file.theta.iter().enumerate() {
        if row.len() != file.k {
            return Err(corrupt("theta", format!("row {d} length differs from K")));
        }
        let sum: S = row.iter().copied().sum();
        if (sum - S::one()).abs() > tol || row.iter().any(|w| !w.is_finite() || *w < S::zero()) {
            return Err(corrupt("theta", format!("row {d} is not a distribution")));
        }
    }
    let hp = LdaHyperparams {
        k: file.k,
        alpha: file.alpha,
        beta: file.beta,
        iterations: file.iterations,
        burn_in: file.burn_in,
        seed: file.seed,
    };
    hp.validate()?;
    Ok((
        TopicModel {
            hp,
            vocab: file.vocab,
            doc_ids: file.doc_ids,
            phi: file.phi,
            theta: file.theta,
            topic_totals: file.topic_totals,
            assignments: None,
            ll_trace: Vec::new(),
        },
        file.provenance,
    ))
}

#[derive(Serialize, Deserialize)]
struct SubtopicFile<S> {
    id: String,
    parent: usize,
    mass: S,
    counts: Vec<S>,
    distribution: Vec<S>,
    member_doc_ids: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct SubtopicModelFile<S> {
    version: u32,
    vocab: Vec<String>,
    subtopics: Vec<SubtopicFile<S>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

pub fn save_subtopic_model<S: Scalar>(
    sub: &SubtopicModel<S>,
    provenance: Option<Provenance>,
    path: &Path,
) -> Result<()> {
    let file = SubtopicModelFile {
        version: SCHEMA_VERSION,
        vocab: sub.vocab.clone(),
        subtopics: sub
            .subtopics
            .iter()
            .map(|s| SubtopicFile {
                id: s.id.clone(),
                parent: s.parent,
                mass: s.mass,
                counts: s.counts.clone(),
                distribution: s.distribution.clone(),
                member_doc_ids: s.member_doc_ids.clone(),
            })
            .collect(),
        provenance,
    };
    write_json(&file, path)
}

pub fn load_subtopic_model<S: Scalar>(
    path: &Path,
) -> Result<(SubtopicModel<S>, Option<Provenance>)> {
    let file: SubtopicModelFile<S> = read_json(path)?;
    check_version(file.version)?;
    if file.subtopics.is_empty() {
        return Err(corrupt("subtopics", "must be non-empty"));
    }
    let tol = S::from_f64_lossy(1e-6);
    for (j, s) in file.subtopics.iter().enumerate() {
        if s.distribution.len() != file.vocab.len() || s.counts.len() != file.vocab.len() {
            return Err(corrupt(
                "subtopics",
                format!("subtopic {j} vector length differs from vocab"),
            ));
        }
        let sum: S = s.distribution.iter().copied().sum();
        if (sum - S::one()).abs() > tol {
            return Err(corrupt("distribution", format!("subtopic {j} does not sum to 1")));
        }
    }
    Ok((
        SubtopicModel {
            vocab: file.vocab,
            subtopics: file
                .subtopics
                .into_iter()
                .map(|s| Subtopic {
                    id: s.id,
                    parent: s.parent,
                    mass: s.mass,
                    counts: s.counts,
                    distribution: s.distribution,
                    member_doc_ids: s.member_doc_ids,
                })
                .collect(),
        },
        file.provenance,
    ))
}

#[derive(Serialize, Deserialize)]
struct AtmTopicFile<S> {
    topic_id: String,
    raw_mass: S,
    empty: bool,
    terms: Vec<String>,
    weights: Vec<S>,
}

#[derive(Serialize, Deserialize)]
struct AtmFile<S> {
    version: u32,
    aspect: String,
    topics: Vec<AtmTopicFile<S>>,
}

pub fn save_atm<S: Scalar>(atm: &AspectTopicModel<S>, path: &Path) -> Result<()> {
    let file = AtmFile {
        version: SCHEMA_VERSION,
        aspect: atm.aspect.clone(),
        topics: atm
            .topics
            .iter()
            .map(|t| AtmTopicFile {
                topic_id: t.topic_id.clone(),
                raw_mass: t.raw_mass,
                empty: t.empty,
                terms: t.dist.iter().map(|(s, _)| s.clone()).collect(),
                weights: t.dist.iter().map(|&(_, w)| w).collect(),
            })
            .collect(),
    };
    write_json(&file, path)
}

pub fn load_atm<S: Scalar>(path: &Path) -> Result<AspectTopicModel<S>> {
    let file: AtmFile<S> = read_json(path)?;
    check_version(file.version)?;
    let mut topics = Vec::with_capacity(file.topics.len());
    for (j, t) in file.topics.into_iter().enumerate() {
        if t.terms.len() != t.weights.len() {
            return Err(corrupt("topics", format!("topic {j} terms/weights differ in length")));
        }
        if !t.empty {
            let sum: S = t.weights.iter().copied().sum();
            if (sum - S::one()).abs() > S::from_f64_lossy(1e-6) {
                return Err(corrupt("weights", format!("topic {j} does not sum to 1")));
            }
        }
        topics.push(AtmTopic {
            topic_id: t.topic_id,
            dist: t.terms.into_iter().zip(t.weights).collect(),
            raw_mass: t.raw_mass,
            empty: t.empty,
        });
    }
    Ok(AspectTopicModel {
        aspect: file.aspect,
        topics,
    })
}

#[derive(Serialize, Deserialize)]
struct ClassifierFile<S> {
    version: u32,
    vocab_hash: String,
    weights: Vec<S>,
    bias: S,
    hp: ClassifierHp,
}

#[derive(Serialize, Deserialize)]
struct ClassifierHp {
    learning_rate: f64,
    epochs: usize,
    l2: f64,
    seed: u64,
}

/// Stable hash of the vocabulary term list, recorded so a classifier is
/// never applied to features from a different vocabulary.
pub fn vocab_hash(terms: &[String]) -> String {
    let joined = terms.join("\n");
    format!("{:016x}", fnv1a64(joined.as_bytes()))
}

pub fn save_classifier<S: Scalar>(
    clf: &RelevanceClassifier<S>,
    vocab_terms: &[String],
    path: &Path,
) -> Result<()> {
    let file = ClassifierFile {
        version: SCHEMA_VERSION,
        vocab_hash: vocab_hash(vocab_terms),
        weights: clf.weights.clone(),
        bias: clf.bias,
        hp: ClassifierHp {
            learning_rate: clf.config.learning_rate,
            epochs: clf.config.epochs,
            l2: clf.config.l2,
            seed: clf.config.seed,
        },
    };
    write_json(&file, path)
}

pub fn load_classifier<S: Scalar>(
    path: &Path,
    vocab_terms: &[String],
) -> Result<RelevanceClassifier<S>> {
    let file: ClassifierFile<S> = read_json(path)?;
    check_version(file.version)?;
    if file.vocab_hash != vocab_hash(vocab_terms) {
        return Err(corrupt(
            "vocab_hash",
            "classifier was trained on a different vocabulary",
        ));
    }
    if file.weights.len() != vocab_terms.len() {
        return Err(corrupt("weights", "length differs from vocabulary"));
    }
    Ok(RelevanceClassifier {
        weights: file.weights,
        bias: file.bias,
        config: TrainConfig {
            learning_rate: file.hp.learning_rate,
            epochs: file.hp.epochs,
            l2: file.hp.l2,
            seed: file.hp.seed,
        },
        final_loss: f64::NAN,
        loss_trace: Vec::new(),
    })
}

/// Corpus artifact: documents, vocabulary, streams and skipped ids in one
/// self-contained file so every later stage can rebuild features.
#[derive(Serialize, Deserialize)]
struct CorpusFile {
    version: u32,
    documents: crate::corpus::DocumentSet,
    vocabulary: crate::corpus::Vocabulary,
    dtm: crate::corpus::SparseMatrix,
    streams: Vec<Vec<u32>>,
    skipped: Vec<String>,
}

pub fn save_corpus(corpus: &crate::corpus::Corpus, path: &Path) -> Result<()> {
    let file = CorpusFile {
        version: SCHEMA_VERSION,
        documents: corpus.documents.clone(),
        vocabulary: corpus.vocabulary.clone(),
        dtm: corpus.dtm.clone(),
        streams: corpus.streams.clone(),
        skipped: corpus.skipped.clone(),
    };
    write_json(&file, path)
}

pub fn load_corpus(path: &Path) -> Result<crate::corpus::Corpus> {
    let mut file: CorpusFile = read_json(path)?;
    check_version(file.version)?;
    file.documents.reindex()?;
    file.vocabulary.reindex();
    if file.dtm.n_rows() != file.documents.len() || file.streams.len() != file.documents.len() {
        return Err(corrupt("dtm", "row count differs from document count"));
    }
    Ok(crate::corpus::Corpus {
        documents: file.documents,
        vocabulary: file.vocabulary,
        dtm: file.dtm,
        streams: file.streams,
        skipped: file.skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_dtm, build_vocabulary, Document, DocumentSet, PipelineConfig, Preprocessor};
    use crate::topics::fit_lda;

    fn corpus() -> crate::corpus::Corpus {
        let mut docs = DocumentSet::new();
        for (i, t) in ["photon laser photon", "laser beam photon", "proof lemma proof"]
            .iter()
            .enumerate()
        {
            docs.push(Document {
                id: format!("d{i}"),
                title: String::new(),
                abstract_text: t.to_string(),
                authors: None,
                doi: None,
                year: None,
                label: if i == 0 { Some(1) } else { None },
            })
            .unwrap();
        }
        let pre = Preprocessor::new(PipelineConfig {
            stem: false,
            ..PipelineConfig::default()
        })
        .unwrap();
        let vocab = build_vocabulary(&docs, &pre, 1, 1.0).unwrap();
        build_dtm(&docs, vocab, &pre).unwrap()
    }

    #[test]
    fn topic_model_round_trips_bitwise() {
        let corpus = corpus();
        let hp = crate::topics::LdaHyperparams {
            k: 2,
            alpha: 25.0,
            beta: 0.01,
            iterations: 15,
            burn_in: 3,
            seed: 8,
        };
        let model = fit_lda::<f64>(&corpus, hp).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_topic_model(&model, None, &path).unwrap();
        let (loaded, prov) = load_topic_model::<f64>(&path).unwrap();
        assert!(prov.is_none());
        assert_eq!(loaded.phi, model.phi);
        assert_eq!(loaded.theta, model.theta);
        assert_eq!(loaded.vocab, model.vocab);
        assert_eq!(loaded.doc_ids, model.doc_ids);
        assert_eq!(loaded.topic_totals, model.topic_totals);
        // saving the loaded model reproduces the file byte for byte
        let path2 = dir.path().join("model2.json");
        save_topic_model(&loaded, None, &path2).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn zero_k_is_rejected_with_field_name() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(
            &path,
            r#"{"version":1,"K":0,"alpha":1.0,"beta":0.01,"iterations":10,"burn_in":2,"seed":0,"vocab":[],"phi":[],"theta":[],"doc_ids":[],"topic_totals":[]}"#,
        )
        .unwrap();
        let err = load_topic_model::<f64>(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("CorruptModel"), "{msg}");
        assert!(msg.contains("'K'"), "{msg}");
    }

    #[test]
    fn unknown_version_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v9.json");
        std::fs::write(
            &path,
            r#"{"version":9,"K":1,"alpha":1.0,"beta":0.01,"iterations":10,"burn_in":2,"seed":0,"vocab":[],"phi":[],"theta":[],"doc_ids":[],"topic_totals":[]}"#,
        )
        .unwrap();
        let err = load_topic_model::<f64>(&path).unwrap_err();
        assert!(err.to_string().starts_with("SchemaVersionMismatch"));
    }

    #[test]
    fn non_distribution_phi_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad_phi.json");
        std::fs::write(
            &path,
            r#"{"version":1,"K":1,"alpha":1.0,"beta":0.01,"iterations":10,"burn_in":2,"seed":0,"vocab":["a","b"],"phi":[[0.9,0.9]],"theta":[],"doc_ids":[],"topic_totals":[1.0]}"#,
        )
        .unwrap();
        let err = load_topic_model::<f64>(&path).unwrap_err();
        assert!(err.to_string().contains("'phi'"));
    }

    #[test]
    fn subtopic_model_round_trips() {
        let corpus = corpus();
        let members: Vec<usize> = (0..corpus.n_docs()).collect();
        let labels = vec![0, 0, 1];
        let sub = crate::refine::build_subtopic_model::<f64>(&corpus, &[(0, members, labels)]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub.json");
        save_subtopic_model(&sub, None, &path).unwrap();
        let (loaded, _) = load_subtopic_model::<f64>(&path).unwrap();
        assert_eq!(loaded.subtopics.len(), sub.subtopics.len());
        for (a, b) in loaded.subtopics.iter().zip(&sub.subtopics) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.distribution, b.distribution);
            assert_eq!(a.counts, b.counts);
            assert_eq!(a.mass, b.mass);
        }
    }

    #[test]
    fn atm_round_trips_with_provenance_on_tuned_models() {
        let atm = AspectTopicModel::<f64> {
            aspect: "Crypto".into(),
            topics: vec![
                AtmTopic {
                    topic_id: "T1".into(),
                    dist: vec![("alpha".into(), 0.8), ("beta".into(), 0.2)],
                    raw_mass: 0.25,
                    empty: false,
                },
                AtmTopic {
                    topic_id: "T2".into(),
                    dist: vec![],
                    raw_mass: 0.0,
                    empty: true,
                },
            ],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("atm.json");
        save_atm(&atm, &path).unwrap();
        let loaded = load_atm::<f64>(&path).unwrap();
        assert_eq!(loaded.aspect, "Crypto");
        assert_eq!(loaded.topics[0].dist, atm.topics[0].dist);
        assert!(loaded.topics[1].empty);
    }

    #[test]
    fn classifier_round_trip_checks_vocabulary() {
        let corpus = corpus();
        let labels: std::collections::BTreeMap<String, u8> =
            [("d0", 1u8), ("d1", 1), ("d2", 0)]
                .iter()
                .map(|&(d, l)| (d.to_string(), l))
                .collect();
        // pad labels so both classes have two members
        let mut docs2 = DocumentSet::new();
        for d in corpus.documents.iter() {
            docs2.push(d.clone()).unwrap();
        }
        docs2
            .push(Document {
                id: "d3".into(),
                title: String::new(),
                abstract_text: "lemma lemma".into(),
                authors: None,
                doi: None,
                year: None,
                label: Some(0),
            })
            .unwrap();
        let pre = Preprocessor::new(PipelineConfig {
            stem: false,
            ..PipelineConfig::default()
        })
        .unwrap();
        let vocab = build_vocabulary(&docs2, &pre, 1, 1.0).unwrap();
        let corpus2 = build_dtm(&docs2, vocab, &pre).unwrap();
        let mut labels = labels;
        labels.insert("d3".into(), 0);
        let (clf, _) =
            crate::screen::train_classifier::<f64>(&corpus2, &labels, crate::screen::TrainConfig::default())
                .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clf.json");
        save_classifier(&clf, corpus2.vocabulary.terms(), &path).unwrap();
        let loaded = load_classifier::<f64>(&path, corpus2.vocabulary.terms()).unwrap();
        assert_eq!(loaded.weights, clf.weights);
        assert_eq!(loaded.bias, clf.bias);
        // different vocabulary is rejected
        let other = vec!["different".to_string()];
        assert!(load_classifier::<f64>(&path, &other).is_err());
    }

    #[test]
    fn corpus_round_trips_and_reindexes() {
        let corpus = corpus();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.json");
        save_corpus(&corpus, &path).unwrap();
        let loaded = load_corpus(&path).unwrap();
        assert_eq!(loaded.n_docs(), corpus.n_docs());
        assert_eq!(loaded.vocabulary.terms(), corpus.vocabulary.terms());
        assert_eq!(loaded.doc_index("d1"), corpus.doc_index("d1"));
        assert_eq!(loaded.vocabulary.index_of("photon"), corpus.vocabulary.index_of("photon"));
        assert_eq!(loaded.streams, corpus.streams);
        assert_eq!(loaded.documents.by_id("d0").unwrap().label, Some(1));
    }

    #[test]
    fn provenance_names_the_source_hash() {
        let corpus = corpus();
        let hp = crate::topics::LdaHyperparams {
            k: 2,
            alpha: 25.0,
            beta: 0.01,
            iterations: 10,
            burn_in: 2,
            seed: 4,
        };
        let model = fit_lda::<f64>(&corpus, hp).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let source = dir.path().join("model.json");
        save_topic_model(&model, None, &source).unwrap();
        let hash = file_hash(&source).unwrap();
        let prov = Provenance {
            source_model_hash: hash.clone(),
            aspect: "Crypto".into(),
            tau: 0.5,
            lambda: 1.0,
            injected_doc_ids: vec!["d0".into()],
        };
        let tuned_path = dir.path().join("tuned.json");
        save_topic_model(&model, Some(prov.clone()), &tuned_path).unwrap();
        let (_, loaded_prov) = load_topic_model::<f64>(&tuned_path).unwrap();
        assert_eq!(loaded_prov, Some(prov));
        // the hash is reproducible
        assert_eq!(file_hash(&source).unwrap(), hash);
    }
}
