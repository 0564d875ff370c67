//! Aspect-topic fusion.
//!
//! Couples aspect keyword sets to topic keyword sets through relevance
//! scores (weight dot products over shared stemmed terms), builds
//! aspect-topic models by elementwise reweighting, infers documents into
//! models by term-weight multiplication, clusters test documents against
//! aspect-topic centroids, compares models per document, and fine-tunes a
//! model by injecting documents weighted by their aspect inference.

use std::collections::{BTreeMap, HashMap};

use crate::aspects::AspectKeywords;
use crate::corpus::{Corpus, Vocabulary};
use crate::error::{Error, Result};
use crate::refine::SubtopicModel;
use crate::scalar::Scalar;
use crate::topics::TopicModel;

/// The top-m keyword view of one topic, the unit both Eq. 2 sides consume.
#[derive(Debug, Clone)]
pub struct TopicKeywords<S: Scalar> {
    pub topic_id: String,
    /// (stemmed term, phi weight), descending weight, ties lexicographic.
    pub terms: Vec<(String, S)>,
}

/// Top-m keyword lists of a primary topic model; ids are the topic indices.
pub fn topic_keywords<S: Scalar>(model: &TopicModel<S>, m: usize) -> Vec<TopicKeywords<S>> {
    (0..model.n_topics())
        .map(|j| TopicKeywords {
            topic_id: format!("PT{}", j + 1),
            terms: model.top_words(j, m),
        })
        .collect()
}

/// Top-m keyword lists of a subtopic model (ids T1..Tn).
pub fn subtopic_keywords<S: Scalar>(sub: &SubtopicModel<S>, m: usize) -> Vec<TopicKeywords<S>> {
    sub.subtopics
        .iter()
        .enumerate()
        .map(|(j, s)| TopicKeywords {
            topic_id: s.id.clone(),
            terms: sub.top_words(j, m),
        })
        .collect()
}

/// Shared-term products w_ik * v_jl in topic keyword order. Both the
/// relevance matrix and the aspect-topic model sum this same sequence, so
/// their masses agree exactly.
fn overlap_products<S: Scalar>(
    aspect: &AspectKeywords<S>,
    topic: &TopicKeywords<S>,
) -> Vec<(String, S)> {
    let weights: HashMap<&str, S> = aspect
        .keywords
        .iter()
        .map(|(t, w)| (t.as_str(), *w))
        .collect();
    topic
        .terms
        .iter()
        .filter_map(|(term, v)| weights.get(term.as_str()).map(|w| (term.clone(), *w * *v)))
        .collect()
}

/// |aspects| x |topics| relevance scores R_ij.
#[derive(Debug, Clone)]
pub struct RelevanceMatrix<S: Scalar> {
    pub aspect_names: Vec<String>,
    pub topic_ids: Vec<String>,
    pub values: Vec<Vec<S>>,
}

impl<S: Scalar> RelevanceMatrix<S> {
    pub fn get(&self, aspect: usize, topic: usize) -> S {
        self.values[aspect][topic]
    }
}

/// R_ij = sum over shared terms of w_ik * v_jl (exact-match similarity:
/// the cross terms of the full double sum vanish).
pub fn relevance_scores<S: Scalar>(
    aspects: &[AspectKeywords<S>],
    topics: &[TopicKeywords<S>],
) -> RelevanceMatrix<S> {
    let values = aspects
        .iter()
        .map(|a| {
            topics
                .iter()
                .map(|t| overlap_products(a, t).into_iter().map(|(_, p)| p).sum())
                .collect()
        })
        .collect();
    RelevanceMatrix {
        aspect_names: aspects.iter().map(|a| a.name.clone()).collect(),
        topic_ids: topics.iter().map(|t| t.topic_id.clone()).collect(),
        values,
    }
}

/// Per-term contributions w_ik * v_jk behind one R_ij cell, in topic
/// keyword order.
pub fn term_contributions<S: Scalar>(
    aspect: &AspectKeywords<S>,
    topic: &TopicKeywords<S>,
) -> Vec<(String, S)> {
    overlap_products(aspect, topic)
}

/// One reweighted topic of an aspect-topic model: the topic's top-m
/// distribution restricted to the aspect's keywords and L1-renormalized.
#[derive(Debug, Clone)]
pub struct AtmTopic<S: Scalar> {
    pub topic_id: String,
    /// (term, weight) summing to 1 when the overlap is non-empty.
    pub dist: Vec<(String, S)>,
    /// Unnormalized mass: exactly R_ij.
    pub raw_mass: S,
    /// Set when aspect and topic share no term.
    pub empty: bool,
}

#[derive(Debug, Clone)]
pub struct AspectTopicModel<S: Scalar> {
    pub aspect: String,
    pub topics: Vec<AtmTopic<S>>,
}

/// Re-weight every topic by the aspect keywords (Fig. 3 line 9: multiply
/// the term weights, keep the shared support, renormalize).
pub fn build_atm<S: Scalar>(
    aspect: &AspectKeywords<S>,
    topics: &[TopicKeywords<S>],
) -> Result<AspectTopicModel<S>> {
    let mut out = Vec::with_capacity(topics.len());
    let mut any = false;
    for topic in topics {
        let products = overlap_products(aspect, topic);
        let raw_mass: S = products.iter().map(|&(_, p)| p).sum();
        if products.is_empty() || raw_mass == S::zero() {
            out.push(AtmTopic {
                topic_id: topic.topic_id.clone(),
                dist: Vec::new(),
                raw_mass: S::zero(),
                empty: true,
            });
            continue;
        }
        any = true;
        let dist = products
            .into_iter()
            .map(|(t, p)| (t, p / raw_mass))
            .collect();
        out.push(AtmTopic {
            topic_id: topic.topic_id.clone(),
            dist,
            raw_mass,
            empty: false,
        });
    }
    if !any {
        return Err(Error::AllTopicsEmpty {
            aspect: aspect.name.clone(),
        });
    }
    Ok(AspectTopicModel {
        aspect: aspect.name.clone(),
        topics: out,
    })
}

/// A model prepared for dot-product inference: per-topic term
/// distributions as sparse (vocabulary index, weight) rows.
#[derive(Debug, Clone)]
pub struct InferenceModel<S: Scalar> {
    pub tag: String,
    pub topic_ids: Vec<String>,
    dists: Vec<Vec<(u32, S)>>,
}

impl<S: Scalar> InferenceModel<S> {
    /// Initial model: the full phi rows.
    pub fn from_topic_model(model: &TopicModel<S>) -> Self {
        InferenceModel {
            tag: "initial".into(),
            topic_ids: (0..model.n_topics()).map(|j| format!("PT{}", j + 1)).collect(),
            dists: model
                .phi
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .filter(|&(_, w)| *w > S::zero())
                        .map(|(t, &w)| (t as u32, w))
                        .collect()
                })
                .collect(),
        }
    }

    /// Initial model over subtopics.
    pub fn from_subtopic_model(sub: &SubtopicModel<S>) -> Self {
        InferenceModel {
            tag: "initial".into(),
            topic_ids: sub.subtopics.iter().map(|s| s.id.clone()).collect(),
            dists: sub
                .subtopics
                .iter()
                .map(|s| {
                    s.distribution
                        .iter()
                        .enumerate()
                        .filter(|&(_, w)| *w > S::zero())
                        .map(|(t, &w)| (t as u32, w))
                        .collect()
                })
                .collect(),
        }
    }

    /// Aspect-topic model; terms are resolved against the vocabulary.
    pub fn from_atm(atm: &AspectTopicModel<S>, vocab: &Vocabulary) -> Result<Self> {
        let mut dists = Vec::with_capacity(atm.topics.len());
        for topic in &atm.topics {
            let mut row = Vec::with_capacity(topic.dist.len());
            for (term, w) in &topic.dist {
                let idx = vocab.index_of(term).ok_or_else(|| Error::CorruptModel {
                    field: "dist".into(),
                    message: format!("aspect-topic term '{term}' is not in the vocabulary"),
                })?;
                row.push((idx as u32, *w));
            }
            row.sort_unstable_by_key(|&(t, _)| t);
            dists.push(row);
        }
        Ok(InferenceModel {
            tag: format!("aspect:{}", atm.aspect),
            topic_ids: atm.topics.iter().map(|t| t.topic_id.clone()).collect(),
            dists,
        })
    }

    pub fn n_topics(&self) -> usize {
        self.dists.len()
    }
}

/// Inference of one document into one model: a distribution over topics,
/// or `None` when the document shares no term with any topic.
#[derive(Debug, Clone)]
pub struct InferenceResult<S: Scalar> {
    pub doc_id: String,
    pub model_tag: String,
    pub weights: Option<Vec<S>>,
}

/// L1-normalized sparse document vector from a count row.
pub fn doc_vector_sparse<S: Scalar>(row: &[(u32, u32)]) -> Vec<(u32, S)> {
    let total: S = row
        .iter()
        .map(|&(_, c)| S::from_usize_lossy(c as usize))
        .sum();
    if total == S::zero() {
        return Vec::new();
    }
    row.iter()
        .map(|&(t, c)| (t, S::from_usize_lossy(c as usize) / total))
        .collect()
}

fn sparse_dot<S: Scalar>(a: &[(u32, S)], b: &[(u32, S)]) -> S {
    let mut acc = S::zero();
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

/// Raw score per topic is the dot product of the document vector with the
/// topic's term distribution; the result is the normalized score vector.
pub fn infer_document<S: Scalar>(
    doc: &[(u32, S)],
    model: &InferenceModel<S>,
) -> Option<Vec<S>> {
    let mut raw: Vec<S> = model.dists.iter().map(|d| sparse_dot(doc, d)).collect();
    let total: S = raw.iter().copied().sum();
    if total == S::zero() {
        return None;
    }
    for w in &mut raw {
        *w /= total;
    }
    Some(raw)
}

/// Infer a set of documents (by corpus row) into a model.
pub fn infer_set<S: Scalar>(
    corpus: &Corpus,
    doc_rows: &[usize],
    model: &InferenceModel<S>,
) -> Vec<InferenceResult<S>> {
    doc_rows
        .iter()
        .map(|&row| {
            let doc = doc_vector_sparse::<S>(corpus.dtm.row(row));
            InferenceResult {
                doc_id: corpus.doc_id(row).to_string(),
                model_tag: model.tag.clone(),
                weights: infer_document(&doc, model),
            }
        })
        .collect()
}

/// One supervised-clustering decision for a document.
#[derive(Debug, Clone)]
pub struct Assignment<S: Scalar> {
    pub doc_id: String,
    pub aspect: String,
    pub topic_id: String,
    /// Euclidean distance between the support-restricted, renormalized
    /// document vector and the centroid.
    pub distance: S,
    /// The document's inference weight at the chosen label.
    pub weight: S,
    pub assigned: bool,
}

/// Assign each document to the nearest (aspect, topic) centroid, where the
/// centroids are the aspect-topic distributions. Documents whose inference
/// weight at the chosen label falls below `assign_threshold` stay
/// unassigned.
pub fn cluster_documents<S: Scalar>(
    corpus: &Corpus,
    doc_rows: &[usize],
    atms: &[AspectTopicModel<S>],
    assign_threshold: f64,
) -> Result<Vec<Assignment<S>>> {
    if !(0.0..=1.0).contains(&assign_threshold) {
        return Err(Error::InvalidParameter {
            name: "assign_threshold".into(),
            message: "must lie in [0, 1]".into(),
        });
    }
    struct Centroid<S: Scalar> {
        aspect_idx: usize,
        topic_idx: usize,
        support: Vec<u32>,
        values: Vec<S>,
    }
    let mut centroids: Vec<Centroid<S>> = Vec::new();
    let mut inference_models = Vec::with_capacity(atms.len());
    for (ai, atm) in atms.iter().enumerate() {
        inference_models.push(InferenceModel::from_atm(atm, &corpus.vocabulary)?);
        for (ti, topic) in atm.topics.iter().enumerate() {
            if topic.empty {
                continue;
            }
            let mut pairs: Vec<(u32, S)> = topic
                .dist
                .iter()
                .map(|(term, w)| {
                    (
                        corpus.vocabulary.index_of(term).expect("validated above") as u32,
                        *w,
                    )
                })
                .collect();
            pairs.sort_unstable_by_key(|&(t, _)| t);
            centroids.push(Centroid {
                aspect_idx: ai,
                topic_idx: ti,
                support: pairs.iter().map(|&(t, _)| t).collect(),
                values: pairs.iter().map(|&(_, w)| w).collect(),
            });
        }
    }
    if centroids.is_empty() {
        return Err(Error::NoCentroids);
    }
    let threshold = S::from_f64_lossy(assign_threshold);
    let mut out = Vec::with_capacity(doc_rows.len());
    for &row in doc_rows {
        let doc: HashMap<u32, S> = doc_vector_sparse::<S>(corpus.dtm.row(row))
            .into_iter()
            .collect();
        let mut best: Option<(S, usize)> = None;
        for (ci, centroid) in centroids.iter().enumerate() {
            // restrict the document to the label support and renormalize
            let restricted: Vec<S> = centroid
                .support
                .iter()
                .map(|t| doc.get(t).copied().unwrap_or_else(S::zero))
                .collect();
            let mass: S = restricted.iter().copied().sum();
            let dist = if mass > S::zero() {
                let mut acc = S::zero();
                for (x, c) in restricted.iter().zip(&centroid.values) {
                    let d = *x / mass - *c;
                    acc += d * d;
                }
                acc.sqrt()
            } else {
                crate::scalar::l2_norm(&centroid.values)
            };
            let better = match best {
                None => true,
                Some((bd, _)) => dist < bd,
            };
            if better {
                best = Some((dist, ci));
            }
        }
        let (distance, ci) = best.expect("centroids are non-empty");
        let centroid = &centroids[ci];
        let doc_sparse = doc_vector_sparse::<S>(corpus.dtm.row(row));
        let weight = infer_document(&doc_sparse, &inference_models[centroid.aspect_idx])
            .map(|w| w[centroid.topic_idx])
            .unwrap_or_else(S::zero);
        out.push(Assignment {
            doc_id: corpus.doc_id(row).to_string(),
            aspect: atms[centroid.aspect_idx].aspect.clone(),
            topic_id: atms[centroid.aspect_idx].topics[centroid.topic_idx]
                .topic_id
                .clone(),
            distance,
            weight,
            assigned: weight >= threshold,
        });
    }
    Ok(out)
}

/// Cluster quality against gold labels.
#[derive(Debug, Clone)]
pub struct PurityReport<S: Scalar> {
    pub purity: S,
    pub n_assigned: usize,
    /// (aspect, topic id, size, majority gold label, precision)
    pub per_cluster: Vec<(String, String, usize, String, S)>,
}

/// Purity and per-cluster precision of the assigned documents, where the
/// gold map sends document ids to label strings.
pub fn purity<S: Scalar>(
    assignments: &[Assignment<S>],
    gold: &BTreeMap<String, String>,
) -> PurityReport<S> {
    let mut clusters: BTreeMap<(String, String), Vec<&str>> = BTreeMap::new();
    for a in assignments.iter().filter(|a| a.assigned) {
        if let Some(label) = gold.get(&a.doc_id) {
            clusters
                .entry((a.aspect.clone(), a.topic_id.clone()))
                .or_default()
                .push(label);
        }
    }
    let mut majority_total = 0usize;
    let mut n_assigned = 0usize;
    let mut per_cluster = Vec::new();
    for ((aspect, topic), labels) in clusters {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for l in &labels {
            *counts.entry(l).or_insert(0) += 1;
        }
        let (majority_label, majority) = counts
            .into_iter()
            .max_by_key(|&(label, c)| (c, std::cmp::Reverse(label)))
            .expect("cluster is non-empty");
        majority_total += majority;
        n_assigned += labels.len();
        per_cluster.push((
            aspect,
            topic,
            labels.len(),
            majority_label.to_string(),
            S::from_usize_lossy(majority) / S::from_usize_lossy(labels.len()),
        ));
    }
    PurityReport {
        purity: if n_assigned == 0 {
            S::zero()
        } else {
            S::from_usize_lossy(majority_total) / S::from_usize_lossy(n_assigned)
        },
        n_assigned,
        per_cluster,
    }
}

/// Per-(document, topic) comparison row.
#[derive(Debug, Clone)]
pub struct CompareRow<S: Scalar> {
    pub doc_id: String,
    pub topic_id: String,
    pub initial: S,
    pub aspect: S,
    pub delta: S,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport<S: Scalar> {
    pub aspect_tag: String,
    pub rows: Vec<CompareRow<S>>,
    /// Documents flagged NoOverlap in either model, excluded from rows.
    pub flagged: Vec<String>,
}

impl<S: Scalar> ComparisonReport<S> {
    /// Rows ranked by |delta| descending, ties by (doc, topic).
    pub fn movers(&self) -> Vec<&CompareRow<S>> {
        let mut rows: Vec<&CompareRow<S>> = self.rows.iter().collect();
        rows.sort_by(|a, b| {
            b.delta
                .abs()
                .partial_cmp(&a.delta.abs())
                .expect("deltas are finite")
                .then_with(|| a.doc_id.cmp(&b.doc_id))
                .then_with(|| a.topic_id.cmp(&b.topic_id))
        });
        rows
    }
}

/// Join initial and aspect inference results on document id and difference
/// them per topic.
pub fn compare_models<S: Scalar>(
    initial: &[InferenceResult<S>],
    aspect: &[InferenceResult<S>],
    topic_ids: &[String],
) -> Result<ComparisonReport<S>> {
    let by_id: HashMap<&str, &InferenceResult<S>> =
        aspect.iter().map(|r| (r.doc_id.as_str(), r)).collect();
    if initial.len() != aspect.len() || initial.iter().any(|r| !by_id.contains_key(r.doc_id.as_str())) {
        return Err(Error::DocIdMismatch {
            detail: format!(
                "initial covers {} documents, aspect covers {}",
                initial.len(),
                aspect.len()
            ),
        });
    }
    let aspect_tag = aspect
        .first()
        .map(|r| r.model_tag.clone())
        .unwrap_or_default();
    let mut rows = Vec::new();
    let mut flagged = Vec::new();
    for init in initial {
        let asp = by_id[init.doc_id.as_str()];
        match (&init.weights, &asp.weights) {
            (Some(iw), Some(aw)) => {
                for (t, topic_id) in topic_ids.iter().enumerate() {
                    rows.push(CompareRow {
                        doc_id: init.doc_id.clone(),
                        topic_id: topic_id.clone(),
                        initial: iw[t],
                        aspect: aw[t],
                        delta: aw[t] - iw[t],
                    });
                }
            }
            _ => flagged.push(init.doc_id.clone()),
        }
    }
    Ok(ComparisonReport {
        aspect_tag,
        rows,
        flagged,
    })
}

/// What changed during fine-tuning.
#[derive(Debug, Clone)]
pub struct FineTuneOutcome<S: Scalar> {
    pub injected_doc_ids: Vec<String>,
    /// Lambda-weighted token mass added per topic.
    pub added_mass: Vec<S>,
    /// Top-10 word list changes per topic.
    pub top_changes: Vec<TopWordChange>,
}

#[derive(Debug, Clone)]
pub struct TopWordChange {
    pub topic_id: String,
    pub entered: Vec<String>,
    pub exited: Vec<String>,
}

fn top_set_diff<S: Scalar>(
    topic_id: &str,
    before: &[(String, S)],
    after: &[(String, S)],
) -> Option<TopWordChange> {
    let b: Vec<&str> = before.iter().map(|(t, _)| t.as_str()).collect();
    let a: Vec<&str> = after.iter().map(|(t, _)| t.as_str()).collect();
    let entered: Vec<String> = a
        .iter()
        .filter(|t| !b.contains(*t))
        .map(|t| t.to_string())
        .collect();
    let exited: Vec<String> = b
        .iter()
        .filter(|t| !a.contains(*t))
        .map(|t| t.to_string())
        .collect();
    if entered.is_empty() && exited.is_empty() {
        None
    } else {
        Some(TopWordChange {
            topic_id: topic_id.to_string(),
            entered,
            exited,
        })
    }
}

/// Collect the injection mass: for each document whose aspect inference
/// peaks at or above tau, add lambda * p_d(j) * count_d(t) per topic j and
/// term t.
fn injection_mass<S: Scalar>(
    corpus: &Corpus,
    doc_rows: &[usize],
    atm_model: &InferenceModel<S>,
    tau: f64,
    lambda: f64,
) -> Result<(Vec<Vec<S>>, Vec<String>)> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidParameter {
            name: "tau".into(),
            message: "must lie in [0, 1]".into(),
        });
    }
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "lambda".into(),
            message: "must be positive".into(),
        });
    }
    let k = atm_model.n_topics();
    let v = corpus.vocabulary.len();
    let tau_s = S::from_f64_lossy(tau);
    let lambda_s = S::from_f64_lossy(lambda);
    let mut inj = vec![vec![S::zero(); v]; k];
    let mut injected = Vec::new();
    for &row in doc_rows {
        let doc = doc_vector_sparse::<S>(corpus.dtm.row(row));
        let Some(p) = infer_document(&doc, atm_model) else {
            continue;
        };
        let max = p.iter().copied().fold(S::zero(), S::max);
        if max < tau_s {
            continue;
        }
        injected.push(corpus.doc_id(row).to_string());
        for (j, &pj) in p.iter().enumerate() {
            if pj == S::zero() {
                continue;
            }
            for &(t, c) in corpus.dtm.row(row) {
                inj[j][t as usize] += lambda_s * pj * S::from_usize_lossy(c as usize);
            }
        }
    }
    Ok((inj, injected))
}

/// Fine-tune a primary topic model by injecting documents relevant to the
/// aspect. Topic-word counts are reconstructed from phi and the stored
/// topic totals, the injection mass is added, and phi is re-estimated with
/// the model's beta smoothing. Theta and assignments are untouched.
pub fn fine_tune_topic_model<S: Scalar>(
    model: &TopicModel<S>,
    atm: &AspectTopicModel<S>,
    corpus: &Corpus,
    doc_rows: &[usize],
    tau: f64,
    lambda: f64,
) -> Result<(TopicModel<S>, FineTuneOutcome<S>)> {
    let atm_model = InferenceModel::from_atm(atm, &corpus.vocabulary)?;
    if atm_model.n_topics() != model.n_topics() {
        return Err(Error::DimensionMismatch {
            expected: model.n_topics(),
            got: atm_model.n_topics(),
        });
    }
    let (inj, injected) = injection_mass(corpus, doc_rows, &atm_model, tau, lambda)?;
    if injected.is_empty() {
        return Ok((
            model.clone(),
            FineTuneOutcome {
                injected_doc_ids: vec![],
                added_mass: vec![S::zero(); model.n_topics()],
                top_changes: vec![],
            },
        ));
    }
    let v = model.n_vocab();
    let v_beta = S::from_usize_lossy(v) * model.hp.beta;
    let mut tuned = model.clone();
    let mut added_mass = Vec::with_capacity(model.n_topics());
    for (j, inj_row) in inj.iter().enumerate() {
        let n_j = model.topic_totals[j];
        let inj_total: S = inj_row.iter().copied().sum();
        let denom = n_j + inj_total + v_beta;
        for (t, phi) in tuned.phi[j].iter_mut().enumerate() {
            // phi * (N_j + V beta) = N_jt + beta, so no count subtraction
            // is needed
            *phi = (model.phi[j][t] * (n_j + v_beta) + inj_row[t]) / denom;
        }
        tuned.topic_totals[j] = n_j + inj_total;
        added_mass.push(inj_total);
    }
    tuned.assignments = None;
    tuned.ll_trace = Vec::new();
    let top_changes = (0..model.n_topics())
        .filter_map(|j| {
            top_set_diff(
                &format!("PT{}", j + 1),
                &model.top_words(j, 10),
                &tuned.top_words(j, 10),
            )
        })
        .collect();
    Ok((
        tuned,
        FineTuneOutcome {
            injected_doc_ids: injected,
            added_mass,
            top_changes,
        },
    ))
}

/// Fine-tune a subtopic model. Subtopic distributions are pure normalized
/// counts, so the injection is added to the stored counts and the
/// distributions renormalized without smoothing.
pub fn fine_tune_subtopic_model<S: Scalar>(
    sub: &SubtopicModel<S>,
    atm: &AspectTopicModel<S>,
    corpus: &Corpus,
    doc_rows: &[usize],
    tau: f64,
    lambda: f64,
) -> Result<(SubtopicModel<S>, FineTuneOutcome<S>)> {
    let atm_model = InferenceModel::from_atm(atm, &corpus.vocabulary)?;
    if atm_model.n_topics() != sub.n_subtopics() {
        return Err(Error::DimensionMismatch {
            expected: sub.n_subtopics(),
            got: atm_model.n_topics(),
        });
    }
    let (inj, injected) = injection_mass(corpus, doc_rows, &atm_model, tau, lambda)?;
    if injected.is_empty() {
        return Ok((
            sub.clone(),
            FineTuneOutcome {
                injected_doc_ids: vec![],
                added_mass: vec![S::zero(); sub.n_subtopics()],
                top_changes: vec![],
            },
        ));
    }
    let mut tuned = sub.clone();
    let mut added_mass = Vec::with_capacity(sub.n_subtopics());
    for (j, subtopic) in tuned.subtopics.iter_mut().enumerate() {
        let inj_total: S = inj[j].iter().copied().sum();
        for (t, c) in subtopic.counts.iter_mut().enumerate() {
            *c += inj[j][t];
        }
        subtopic.distribution = subtopic.counts.clone();
        crate::scalar::l1_normalize(&mut subtopic.distribution);
        added_mass.push(inj_total);
    }
    let top_changes = (0..sub.n_subtopics())
        .filter_map(|j| {
            top_set_diff(
                &sub.subtopics[j].id,
                &sub.top_words(j, 10),
                &tuned.top_words(j, 10),
            )
        })
        .collect();
    Ok((
        tuned,
        FineTuneOutcome {
            injected_doc_ids: injected,
            added_mass,
            top_changes,
        },
    ))
}
