//! Topic refinement: split each primary topic into subtopics by
//! average-linkage agglomerative clustering of document vectors, scored by
//! silhouette, then assemble the subtopic model and its similarity network.

use std::collections::BTreeMap;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::scalar::{cosine, euclidean, Scalar};
use crate::topics::TopicModel;

/// A document as an L1-normalized term-frequency vector over the
/// vocabulary.
#[derive(Debug, Clone)]
pub struct DocVector<S: Scalar> {
    pub doc_id: String,
    pub values: Vec<S>,
}

impl<S: Scalar> DocVector<S> {
    /// Build from a corpus row. Rows are never empty for admitted
    /// documents, so normalization cannot fail.
    pub fn from_corpus(corpus: &Corpus, row: usize) -> Self {
        let mut values = vec![S::zero(); corpus.vocabulary.len()];
        for &(t, c) in corpus.dtm.row(row) {
            values[t as usize] = S::from_usize_lossy(c as usize);
        }
        crate::scalar::l1_normalize(&mut values);
        DocVector {
            doc_id: corpus.doc_id(row).to_string(),
            values,
        }
    }
}

/// Map every modeled document to its dominant topic (argmax of theta,
/// ties to the lower topic index).
pub fn assign_primary<S: Scalar>(model: &TopicModel<S>) -> Vec<usize> {
    model
        .theta
        .iter()
        .map(|row| {
            let mut best = 0usize;
            for (k, &w) in row.iter().enumerate() {
                if w > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

/// Bottom-up average-linkage clustering under Euclidean distance.
///
/// Merging continues until `k` clusters remain. When several pairs tie at
/// the minimum distance the smallest (i, j) pair of active cluster indices
/// merges, which makes the procedure fully deterministic. Labels are
/// renumbered by first occurrence.
pub fn agglomerative_cluster<S: Scalar>(vectors: &[Vec<S>], k: usize) -> Result<Vec<usize>> {
    let n = vectors.len();
    if k < 1 || k > n {
        return Err(Error::TooFewPoints {
            requested: k,
            points: n,
        });
    }
    // Lance-Williams update for average linkage keeps the pairwise mean
    // distance exact for any metric.
    let mut dist = vec![S::zero(); n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = euclidean(&vectors[i], &vectors[j]);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    let mut active: Vec<bool> = vec![true; n];
    let mut size: Vec<usize> = vec![1; n];
    let mut member: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut remaining = n;
    while remaining > k {
        let mut best: Option<(S, usize, usize)> = None;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in (i + 1)..n {
                if !active[j] {
                    continue;
                }
                let d = dist[i * n + j];
                let better = match best {
                    None => true,
                    Some((bd, _, _)) => d < bd,
                };
                if better {
                    best = Some((d, i, j));
                }
            }
        }
        let (_, i, j) = best.expect("at least two active clusters");
        // merge j into i (i < j keeps the smaller index alive)
        let (ni, nj) = (size[i], size[j]);
        let total = S::from_usize_lossy(ni + nj);
        for m in 0..n {
            if !active[m] || m == i || m == j {
                continue;
            }
            let d = (S::from_usize_lossy(ni) * dist[i * n + m]
                + S::from_usize_lossy(nj) * dist[j * n + m])
                / total;
            dist[i * n + m] = d;
            dist[m * n + i] = d;
        }
        let moved = std::mem::take(&mut member[j]);
        member[i].extend(moved);
        size[i] += size[j];
        active[j] = false;
        remaining -= 1;
    }
    // canonical labels: order of each cluster's first (lowest) member
    let mut labels = vec![usize::MAX; n];
    let mut clusters: Vec<&Vec<usize>> = (0..n).filter(|&i| active[i]).map(|i| &member[i]).collect();
    clusters.sort_by_key(|m| *m.iter().min().expect("clusters are non-empty"));
    for (label, members) in clusters.iter().enumerate() {
        for &p in *members {
            labels[p] = label;
        }
    }
    Ok(labels)
}

#[derive(Debug, Clone)]
pub struct SilhouetteScore<S: Scalar> {
    pub mean: S,
    pub per_point: Vec<S>,
}

/// Mean silhouette s = (b - a) / max(a, b) per point, where a is the mean
/// intra-cluster distance and b the mean distance to the nearest other
/// cluster. Singleton points score 0.
pub fn silhouette<S: Scalar>(vectors: &[Vec<S>], labels: &[usize]) -> Result<SilhouetteScore<S>> {
    let n = vectors.len();
    assert_eq!(labels.len(), n, "one label per vector");
    let mut clusters: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        clusters.entry(l).or_default().push(i);
    }
    if clusters.len() < 2 {
        return Err(Error::SingleCluster);
    }
    let mut per_point = Vec::with_capacity(n);
    for i in 0..n {
        let own = &clusters[&labels[i]];
        if own.len() == 1 {
            per_point.push(S::zero());
            continue;
        }
        let a = own
            .iter()
            .filter(|&&j| j != i)
            .map(|&j| euclidean(&vectors[i], &vectors[j]))
            .sum::<S>()
            / S::from_usize_lossy(own.len() - 1);
        let mut b: Option<S> = None;
        for (&label, members) in &clusters {
            if label == labels[i] {
                continue;
            }
            let mean = members
                .iter()
                .map(|&j| euclidean(&vectors[i], &vectors[j]))
                .sum::<S>()
                / S::from_usize_lossy(members.len());
            b = Some(match b {
                None => mean,
                Some(cur) => {
                    if mean < cur {
                        mean
                    } else {
                        cur
                    }
                }
            });
        }
        let b = b.expect("at least one other cluster");
        let denom = if a > b { a } else { b };
        per_point.push(if denom > S::zero() {
            (b - a) / denom
        } else {
            S::zero()
        });
    }
    let mean = per_point.iter().copied().sum::<S>() / S::from_usize_lossy(n);
    Ok(SilhouetteScore { mean, per_point })
}

#[derive(Debug, Clone)]
pub struct SubtopicSelection<S: Scalar> {
    pub best_k: usize,
    pub labels: Vec<usize>,
    /// (candidate k, mean silhouette) pairs in ascending k order.
    pub curve: Vec<(usize, S)>,
}

/// Choose the subtopic count for one primary topic by maximizing the mean
/// silhouette over `k_range`; ties go to the smaller k.
///
/// `members` are corpus row indices of the documents assigned to the
/// primary topic.
pub fn select_subtopics<S: Scalar>(
    corpus: &Corpus,
    members: &[usize],
    topic: usize,
    k_range: &[usize],
) -> Result<SubtopicSelection<S>> {
    if k_range.is_empty() {
        return Err(Error::InvalidParameter {
            name: "k_range".into(),
            message: "must be non-empty".into(),
        });
    }
    let needed = *k_range.iter().max().expect("non-empty");
    if members.len() < needed {
        return Err(Error::TooFewDocs {
            topic,
            docs: members.len(),
            needed,
        });
    }
    let vectors: Vec<Vec<S>> = members
        .iter()
        .map(|&row| DocVector::from_corpus(corpus, row).values)
        .collect();
    let mut ks: Vec<usize> = k_range.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let mut curve = Vec::with_capacity(ks.len());
    let mut best: Option<(usize, Vec<usize>, S)> = None;
    for &k in &ks {
        let labels = agglomerative_cluster(&vectors, k)?;
        let score = if k == 1 {
            return Err(Error::SingleCluster);
        } else {
            silhouette(&vectors, &labels)?.mean
        };
        if best.as_ref().map(|(_, _, s)| score > *s).unwrap_or(true) {
            best = Some((k, labels.clone(), score));
        }
        curve.push((k, score));
    }
    let (best_k, labels, _) = best.expect("k_range is non-empty");
    Ok(SubtopicSelection {
        best_k,
        labels,
        curve,
    })
}

/// One subtopic: a word distribution over the vocabulary aggregated from
/// its member documents, plus its share of the modeled corpus.
#[derive(Debug, Clone)]
pub struct Subtopic<S: Scalar> {
    /// Sequential id T1, T2, ... in primary-topic then cluster order.
    pub id: String,
    /// Index of the primary topic this subtopic was split from.
    pub parent: usize,
    /// L1-normalized word distribution.
    pub distribution: Vec<S>,
    /// Raw summed term counts of the member documents.
    pub counts: Vec<S>,
    pub member_doc_ids: Vec<String>,
    /// Member count / total modeled documents.
    pub mass: S,
}

#[derive(Debug, Clone)]
pub struct SubtopicModel<S: Scalar> {
    pub vocab: Vec<String>,
    pub subtopics: Vec<Subtopic<S>>,
}

impl<S: Scalar> SubtopicModel<S> {
    pub fn n_subtopics(&self) -> usize {
        self.subtopics.len()
    }

    pub fn top_words(&self, j: usize, m: usize) -> Vec<(String, S)> {
        crate::topics::top_of_distribution(&self.subtopics[j].distribution, &self.vocab, m)
    }
}

/// Assemble the subtopic model from per-primary clusterings.
///
/// `clusterings` holds, per primary topic in ascending order, the member
/// corpus rows and their cluster labels. Every modeled document must be
/// covered exactly once.
pub fn build_subtopic_model<S: Scalar>(
    corpus: &Corpus,
    clusterings: &[(usize, Vec<usize>, Vec<usize>)],
) -> Result<SubtopicModel<S>> {
    let v = corpus.vocabulary.len();
    let mut covered = vec![false; corpus.n_docs()];
    let mut subtopics = Vec::new();
    let total_docs: usize = clusterings.iter().map(|(_, members, _)| members.len()).sum();
    if total_docs != corpus.n_docs() {
        return Err(Error::DocIdMismatch {
            detail: format!(
                "clusterings cover {total_docs} documents, corpus has {}",
                corpus.n_docs()
            ),
        });
    }
    let mut next_id = 1usize;
    for (topic, members, labels) in clusterings {
        assert_eq!(members.len(), labels.len(), "one label per member");
        let n_clusters = labels.iter().max().map(|m| m + 1).unwrap_or(0);
        for cluster in 0..n_clusters {
            let rows: Vec<usize> = members
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == cluster)
                .map(|(&row, _)| row)
                .collect();
            if rows.is_empty() {
                return Err(Error::EmptyCluster {
                    topic: *topic,
                    cluster,
                });
            }
            let mut counts = vec![S::zero(); v];
            let mut member_doc_ids = Vec::with_capacity(rows.len());
            for &row in &rows {
                if covered[row] {
                    return Err(Error::DocIdMismatch {
                        detail: format!("document '{}' appears in two clusters", corpus.doc_id(row)),
                    });
                }
                covered[row] = true;
                for &(t, c) in corpus.dtm.row(row) {
                    counts[t as usize] += S::from_usize_lossy(c as usize);
                }
                member_doc_ids.push(corpus.doc_id(row).to_string());
            }
            let mut distribution = counts.clone();
            crate::scalar::l1_normalize(&mut distribution);
            subtopics.push(Subtopic {
                id: format!("T{next_id}"),
                parent: *topic,
                distribution,
                counts,
                member_doc_ids,
                mass: S::from_usize_lossy(rows.len()) / S::from_usize_lossy(corpus.n_docs()),
            });
            next_id += 1;
        }
    }
    Ok(SubtopicModel {
        vocab: corpus.vocabulary.terms().to_vec(),
        subtopics,
    })
}

/// Topic similarity graph: nodes are subtopics weighted by mass, edges are
/// cosine similarities of word distributions at or above the threshold.
#[derive(Debug, Clone)]
pub struct TopicNetwork<S: Scalar> {
    pub nodes: Vec<NetworkNode<S>>,
    /// (source index, target index, cosine), source < target.
    pub edges: Vec<(usize, usize, S)>,
}

#[derive(Debug, Clone)]
pub struct NetworkNode<S: Scalar> {
    pub id: String,
    pub mass: S,
    pub top_words: Vec<String>,
}

pub fn topic_network<S: Scalar>(sub: &SubtopicModel<S>, sim_threshold: f64) -> Result<TopicNetwork<S>> {
    if !(0.0..=1.0).contains(&sim_threshold) {
        return Err(Error::InvalidParameter {
            name: "sim_threshold".into(),
            message: "must lie in [0, 1]".into(),
        });
    }
    let t = S::from_f64_lossy(sim_threshold);
    let nodes = sub
        .subtopics
        .iter()
        .enumerate()
        .map(|(j, s)| NetworkNode {
            id: s.id.clone(),
            mass: s.mass,
            top_words: sub.top_words(j, 3).into_iter().map(|(w, _)| w).collect(),
        })
        .collect();
    let mut edges = Vec::new();
    for i in 0..sub.subtopics.len() {
        for j in (i + 1)..sub.subtopics.len() {
            let sim = cosine(&sub.subtopics[i].distribution, &sub.subtopics[j].distribution);
            if sim >= t {
                edges.push((i, j, sim));
            }
        }
    }
    Ok(TopicNetwork { nodes, edges })
}

impl<S: Scalar> TopicNetwork<S> {
    /// Graphviz DOT rendering; layout is left to the consumer.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph topics {\n");
        for node in &self.nodes {
            out.push_str(&format!(
                "  {} [label=\"{}\\n{}\", width={:.4}];\n",
                node.id,
                node.id,
                node.top_words.join(", "),
                node.mass
            ));
        }
        for &(i, j, w) in &self.edges {
            out.push_str(&format!(
                "  {} -- {} [weight={w}, label=\"{w:.3}\"];\n",
                self.nodes[i].id, self.nodes[j].id
            ));
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn vecs(points: &[(f64, f64)]) -> Vec<Vec<f64>> {
        points.iter().map(|&(x, y)| vec![x, y]).collect()
    }

    #[test]
    fn argmax_assignment_with_tie_break() {
        use crate::topics::{LdaHyperparams, TopicModel};
        let model = TopicModel::<f64> {
            hp: LdaHyperparams::with_defaults(3, 0),
            vocab: vec![],
            doc_ids: vec!["a".into(), "b".into()],
            phi: vec![],
            theta: vec![vec![0.7, 0.2, 0.1], vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]],
            topic_totals: vec![],
            assignments: None,
            ll_trace: vec![],
        };
        assert_eq!(assign_primary(&model), vec![0, 0]);
    }

    #[test]
    fn k_equal_n_gives_singletons() {
        let v = vecs(&[(0.0, 0.0), (1.0, 0.0), (5.0, 5.0)]);
        let labels = agglomerative_cluster(&v, 3).unwrap();
        assert_eq!(labels, vec![0, 1, 2]);
    }

    #[test]
    fn k_one_gives_single_cluster() {
        let v = vecs(&[(0.0, 0.0), (1.0, 0.0), (5.0, 5.0)]);
        let labels = agglomerative_cluster(&v, 1).unwrap();
        assert_eq!(labels, vec![0, 0, 0]);
    }

    #[test]
    fn two_tight_groups_are_recovered() {
        let v = vecs(&[
            (0.0, 0.0),
            (0.1, 0.0),
            (0.0, 0.1),
            (10.0, 10.0),
            (10.1, 10.0),
            (10.0, 10.1),
        ]);
        let labels = agglomerative_cluster(&v, 2).unwrap();
        assert_eq!(labels, vec![0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn too_few_points_is_an_error() {
        let v = vecs(&[(0.0, 0.0)]);
        assert!(agglomerative_cluster(&v, 2).is_err());
    }

    #[test]
    fn clustering_is_permutation_invariant_up_to_relabeling() {
        let mut rng = SplitMix64::new(42);
        for _ in 0..20 {
            let n = 8 + rng.next_below(5);
            let points: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![rng.next_f64() * 10.0, rng.next_f64() * 10.0])
                .collect();
            let labels = agglomerative_cluster(&points, 3).unwrap();
            // rotate the input and map the labels back
            let rot = 1 + rng.next_below(n - 1);
            let rotated: Vec<Vec<f64>> = (0..n).map(|i| points[(i + rot) % n].clone()).collect();
            let rotated_labels = agglomerative_cluster(&rotated, 3).unwrap();
            let mapped: Vec<usize> = (0..n).map(|i| rotated_labels[(n + i - rot) % n]).collect();
            // same partition: equality of co-membership relations
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(
                        labels[i] == labels[j],
                        mapped[i] == mapped[j],
                        "partition differs at ({i},{j})"
                    );
                }
            }
        }
    }

    #[test]
    fn silhouette_matches_hand_computed_fixture() {
        let v = vecs(&[(0.0, 0.0), (0.0, 1.0), (10.0, 10.0), (10.0, 11.0)]);
        let labels = vec![0, 0, 1, 1];
        let score = silhouette(&v, &labels).unwrap();
        // point (0,0): a = 1, b = (sqrt(200) + sqrt(221)) / 2
        let b = (200.0f64.sqrt() + 221.0f64.sqrt()) / 2.0;
        let expected = (b - 1.0) / b;
        assert!((score.per_point[0] - expected).abs() < 1e-12);
        assert!((score.per_point[0] - 0.931).abs() < 1e-3);
    }

    #[test]
    fn single_cluster_is_undefined() {
        let v = vecs(&[(0.0, 0.0), (1.0, 1.0)]);
        let err = silhouette(&v, &[0, 0]).unwrap_err();
        assert!(err.to_string().starts_with("SingleCluster"));
    }

    #[test]
    fn singleton_points_score_zero() {
        let v = vecs(&[(0.0, 0.0), (0.0, 1.0), (9.0, 9.0)]);
        let score = silhouette(&v, &[0, 0, 1]).unwrap();
        assert_eq!(score.per_point[2], 0.0);
    }

    /// Independent oracle: recompute a and b by raw enumeration.
    fn silhouette_oracle(vectors: &[Vec<f64>], labels: &[usize]) -> f64 {
        let n = vectors.len();
        let d = |i: usize, j: usize| -> f64 {
            vectors[i]
                .iter()
                .zip(&vectors[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        };
        let mut total = 0.0;
        for i in 0..n {
            let same: Vec<usize> = (0..n).filter(|&j| j != i && labels[j] == labels[i]).collect();
            if same.is_empty() {
                continue; // singleton scores 0
            }
            let a = same.iter().map(|&j| d(i, j)).sum::<f64>() / same.len() as f64;
            let mut b = f64::INFINITY;
            let other_labels: std::collections::BTreeSet<usize> = labels
                .iter()
                .copied()
                .filter(|&l| l != labels[i])
                .collect();
            for l in other_labels {
                let members: Vec<usize> = (0..n).filter(|&j| labels[j] == l).collect();
                let mean = members.iter().map(|&j| d(i, j)).sum::<f64>() / members.len() as f64;
                if mean < b {
                    b = mean;
                }
            }
            total += (b - a) / a.max(b);
        }
        total / n as f64
    }

    #[test]
    fn silhouette_agrees_with_brute_force_on_random_instances() {
        let mut rng = SplitMix64::new(2024);
        for _ in 0..200 {
            let n = 4 + rng.next_below(9); // up to 12 points
            let dim = 2 + rng.next_below(3);
            let vectors: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..dim).map(|_| rng.next_f64() * 4.0).collect())
                .collect();
            let n_clusters = 2 + rng.next_below(3.min(n - 1));
            let mut labels: Vec<usize> = (0..n).map(|i| i % n_clusters).collect();
            // shuffle labels deterministically
            for i in (1..n).rev() {
                let j = rng.next_below(i + 1);
                labels.swap(i, j);
            }
            let ours = silhouette(&vectors, &labels).unwrap().mean;
            let oracle = silhouette_oracle(&vectors, &labels);
            assert!((ours - oracle).abs() <= 1e-12, "{ours} vs {oracle}");
        }
    }

    #[test]
    fn two_blob_instance_scores_above_point_nine() {
        let v = vecs(&[
            (0.0, 0.0),
            (0.05, 0.0),
            (0.0, 0.05),
            (10.0, 10.0),
            (10.05, 10.0),
            (10.0, 10.05),
        ]);
        let labels = agglomerative_cluster(&v, 2).unwrap();
        let score = silhouette(&v, &labels).unwrap();
        assert!(score.mean > 0.9);
    }

    #[test]
    fn network_edges_from_hand_computed_cosines() {
        let sub = SubtopicModel::<f64> {
            vocab: vec!["a".into(), "b".into(), "c".into()],
            subtopics: vec![
                Subtopic {
                    id: "T1".into(),
                    parent: 0,
                    distribution: vec![0.5, 0.5, 0.0],
                    counts: vec![1.0, 1.0, 0.0],
                    member_doc_ids: vec!["x".into()],
                    mass: 0.4,
                },
                Subtopic {
                    id: "T2".into(),
                    parent: 0,
                    distribution: vec![0.5, 0.5, 0.0],
                    counts: vec![2.0, 2.0, 0.0],
                    member_doc_ids: vec!["y".into()],
                    mass: 0.3,
                },
                Subtopic {
                    id: "T3".into(),
                    parent: 1,
                    distribution: vec![0.0, 0.0, 1.0],
                    counts: vec![0.0, 0.0, 3.0],
                    member_doc_ids: vec!["z".into()],
                    mass: 0.3,
                },
            ],
        };
        let net = topic_network(&sub, 0.2).unwrap();
        // identical distributions: cosine exactly 1; disjoint: 0 (pruned)
        assert_eq!(net.edges.len(), 1);
        let (i, j, w) = net.edges[0];
        assert_eq!((i, j), (0, 1));
        assert!((w - 1.0).abs() < 1e-12);
        // symmetric by construction: recompute the transpose
        let w_ji = cosine(&sub.subtopics[1].distribution, &sub.subtopics[0].distribution);
        assert_eq!(w, w_ji);
        let dot = net.to_dot();
        assert!(dot.contains("T1 -- T2"));
        assert!(!dot.contains("T3 --"));
    }

    fn blob_corpus() -> Corpus {
        use crate::corpus::{build_dtm, build_vocabulary, Document, DocumentSet, PipelineConfig, Preprocessor};
        // two vocabularies that never mix -> two well-separated blobs;
        // counts vary so no two documents coincide exactly
        let mut docs = DocumentSet::new();
        let mixes: [(u32, u32); 5] = [(9, 1), (8, 2), (9, 2), (10, 1), (8, 1)];
        let text = |a: &str, b: &str, mix: (u32, u32)| {
            let mut words = Vec::new();
            words.extend(std::iter::repeat_n(a, mix.0 as usize));
            words.extend(std::iter::repeat_n(b, mix.1 as usize));
            words.join(" ")
        };
        let mut i = 0;
        for &mix in &mixes {
            docs.push(Document {
                id: format!("d{i:02}"),
                title: String::new(),
                abstract_text: text("photon", "laser", mix),
                authors: None,
                doi: None,
                year: None,
                label: None,
            })
            .unwrap();
            i += 1;
        }
        for &mix in &mixes {
            docs.push(Document {
                id: format!("d{i:02}"),
                title: String::new(),
                abstract_text: text("proof", "lemma", mix),
                authors: None,
                doi: None,
                year: None,
                label: None,
            })
            .unwrap();
            i += 1;
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
    fn select_subtopics_finds_two_blobs() {
        let corpus = blob_corpus();
        let members: Vec<usize> = (0..corpus.n_docs()).collect();
        let sel = select_subtopics::<f64>(&corpus, &members, 0, &[2, 3, 4, 5]).unwrap();
        assert_eq!(sel.best_k, 2);
        assert_eq!(sel.curve.len(), 4);
        // the two blobs are the two vocabularies
        for i in 0..5 {
            assert_eq!(sel.labels[i], sel.labels[0]);
            assert_eq!(sel.labels[i + 5], sel.labels[5]);
        }
        assert_ne!(sel.labels[0], sel.labels[5]);
    }

    #[test]
    fn select_subtopics_single_candidate_is_trivial() {
        let corpus = blob_corpus();
        let members: Vec<usize> = (0..corpus.n_docs()).collect();
        let sel = select_subtopics::<f64>(&corpus, &members, 0, &[2]).unwrap();
        assert_eq!(sel.best_k, 2);
    }

    #[test]
    fn select_subtopics_rejects_small_member_sets() {
        let corpus = blob_corpus();
        let members = vec![0, 1, 2];
        let err = select_subtopics::<f64>(&corpus, &members, 4, &[2, 8]).unwrap_err();
        assert!(err.to_string().starts_with("TooFewDocs"));
        assert!(err.to_string().contains("topic 4"));
    }

    #[test]
    fn subtopic_model_aggregates_counts_and_masses() {
        let corpus = blob_corpus();
        let members: Vec<usize> = (0..corpus.n_docs()).collect();
        let sel = select_subtopics::<f64>(&corpus, &members, 0, &[2]).unwrap();
        let sub = build_subtopic_model::<f64>(&corpus, &[(0, members, sel.labels)]).unwrap();
        assert_eq!(sub.n_subtopics(), 2);
        assert_eq!(sub.subtopics[0].id, "T1");
        assert_eq!(sub.subtopics[1].id, "T2");
        let mass_sum: f64 = sub.subtopics.iter().map(|s| s.mass).sum();
        assert!((mass_sum - 1.0).abs() < 1e-9);
        for s in &sub.subtopics {
            let d: f64 = s.distribution.iter().sum();
            assert!((d - 1.0).abs() < 1e-9);
        }
        // single-cluster aggregation identity on the first blob: the
        // distribution is the normalized sum of its documents' counts
        let t1 = &sub.subtopics[0];
        let mut expected = vec![0.0f64; corpus.vocabulary.len()];
        for id in &t1.member_doc_ids {
            let row = corpus.doc_index(id).unwrap();
            for &(t, c) in corpus.dtm.row(row) {
                expected[t as usize] += c as f64;
            }
        }
        let total: f64 = expected.iter().sum();
        for (got, want) in t1.distribution.iter().zip(&expected) {
            assert!((got - want / total).abs() < 1e-12);
        }
    }

    #[test]
    fn incomplete_coverage_is_rejected() {
        let corpus = blob_corpus();
        let members: Vec<usize> = (0..4).collect();
        let labels = vec![0, 0, 1, 1];
        let err = build_subtopic_model::<f64>(&corpus, &[(0, members, labels)]).unwrap_err();
        assert!(err.to_string().starts_with("DocIdMismatch"));
    }
}
