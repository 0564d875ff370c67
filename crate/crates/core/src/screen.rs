//! Relevance screening: a sigmoid-output linear classifier over
//! L2-normalized term frequencies, trained by full-batch gradient descent,
//! plus uncertainty sampling for test-set selection.

use std::collections::BTreeMap;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::scalar::{l2_norm, Scalar};

/// Training hyperparameters. Training is deterministic: weights start at
/// zero and the loss is convex, so the seed is recorded for provenance only.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            epochs: 300,
            l2: 1e-4,
            seed: 0,
        }
    }
}

/// Linear relevance model over vocabulary indices.
#[derive(Debug, Clone)]
pub struct RelevanceClassifier<S: Scalar> {
    pub weights: Vec<S>,
    pub bias: S,
    pub config: TrainConfig,
    pub final_loss: f64,
    /// Mean cross-entropy + L2 penalty per epoch.
    pub loss_trace: Vec<f64>,
}

/// Uncertainty-sampled evaluation set: document ids ordered by closeness to
/// the decision boundary, with the |p - 0.5| selection score per id.
#[derive(Debug, Clone)]
pub struct TestSet<S: Scalar> {
    pub ids: Vec<String>,
    pub scores: Vec<S>,
}

/// Outcome of thresholding predicted relevance over a corpus.
#[derive(Debug, Clone)]
pub struct FilterReport {
    pub input_count: usize,
    pub kept_count: usize,
    pub kept_ids: Vec<String>,
}

fn sigmoid<S: Scalar>(z: S) -> S {
    S::one() / (S::one() + (-z).exp())
}

/// L2-normalized term-frequency feature vector for one sparse count row.
pub fn feature_row<S: Scalar>(row: &[(u32, u32)], vocab_len: usize) -> Vec<S> {
    let mut x = vec![S::zero(); vocab_len];
    for &(t, c) in row {
        x[t as usize] = S::from_usize_lossy(c as usize);
    }
    let norm = l2_norm(&x);
    if norm > S::zero() {
        for v in &mut x {
            *v /= norm;
        }
    }
    x
}

/// Train the classifier on labeled documents found in the corpus.
///
/// Labeled ids missing from the corpus and labeled documents whose feature
/// row is all zero are skipped with a warning rather than poisoning the
/// loss.
pub fn train_classifier<S: Scalar>(
    corpus: &Corpus,
    labels: &BTreeMap<String, u8>,
    config: TrainConfig,
) -> Result<(RelevanceClassifier<S>, Vec<String>)> {
    let v = corpus.vocabulary.len();
    let mut warnings = Vec::new();
    let mut xs: Vec<Vec<S>> = Vec::new();
    let mut ys: Vec<S> = Vec::new();
    let mut counts = [0usize; 2];
    for (id, &label) in labels {
        let Some(row_idx) = corpus.doc_index(id) else {
            warnings.push(format!("labeled document '{id}' is not in the corpus"));
            continue;
        };
        let x = feature_row::<S>(corpus.dtm.row(row_idx), v);
        if l2_norm(&x) == S::zero() {
            warnings.push(format!("labeled document '{id}' has an all-zero feature row"));
            continue;
        }
        counts[label as usize] += 1;
        xs.push(x);
        ys.push(S::from_usize_lossy(label as usize));
    }
    if counts[0] < 2 || counts[1] < 2 {
        return Err(Error::DegenerateLabels {
            relevant: counts[1],
            irrelevant: counts[0],
        });
    }

    let n = xs.len();
    let n_s = S::from_usize_lossy(n);
    let lr = S::from_f64_lossy(config.learning_rate);
    let l2 = S::from_f64_lossy(config.l2);
    let mut weights = vec![S::zero(); v];
    let mut bias = S::zero();
    let mut loss_trace = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let mut grad_w = vec![S::zero(); v];
        let mut grad_b = S::zero();
        let mut loss = S::zero();
        for (x, &y) in xs.iter().zip(&ys) {
            let z = crate::scalar::dot(&weights, x) + bias;
            let p = sigmoid(z);
            // numerically stable cross-entropy: ln(1+e^-z) via softplus
            let softplus = if z > S::zero() {
                (-z).exp().ln_1p()
            } else {
                -z + z.exp().ln_1p()
            };
            loss += if y > S::zero() {
                softplus
            } else {
                softplus + z
            };
            let err = p - y;
            for (g, &xi) in grad_w.iter_mut().zip(x) {
                *g += err * xi;
            }
            grad_b += err;
        }
        let penalty: S = weights.iter().map(|&w| w * w).sum::<S>() * l2;
        let epoch_loss = (loss / n_s + penalty)
            .to_f64()
            .expect("loss converts to f64");
        if !epoch_loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        loss_trace.push(epoch_loss);
        let two = S::from_f64_lossy(2.0);
        for (w, g) in weights.iter_mut().zip(&grad_w) {
            *w = *w - lr * (*g / n_s + two * l2 * *w);
        }
        bias -= lr * (grad_b / n_s);
    }
    let final_loss = loss_trace.last().copied().unwrap_or(f64::NAN);
    Ok((
        RelevanceClassifier {
            weights,
            bias,
            config,
            final_loss,
            loss_trace,
        },
        warnings,
    ))
}

impl<S: Scalar> RelevanceClassifier<S> {
    /// sigmoid(w . x + b) for an already normalized feature vector.
    pub fn predict_normalized(&self, x: &[S]) -> Result<S> {
        if x.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                got: x.len(),
            });
        }
        Ok(sigmoid(crate::scalar::dot(&self.weights, x) + self.bias))
    }

    /// Predict from a sparse count row of the corpus.
    pub fn predict_counts(&self, row: &[(u32, u32)]) -> Result<S> {
        let x = feature_row::<S>(row, self.weights.len());
        self.predict_normalized(&x)
    }
}

/// Keep documents whose predicted relevance is at least `threshold`.
pub fn filter_relevant<S: Scalar>(
    clf: &RelevanceClassifier<S>,
    corpus: &Corpus,
    threshold: f64,
) -> Result<FilterReport> {
    let t = S::from_f64_lossy(threshold);
    let mut kept_ids = Vec::new();
    for i in 0..corpus.n_docs() {
        let p = clf.predict_counts(corpus.dtm.row(i))?;
        if p >= t {
            kept_ids.push(corpus.doc_id(i).to_string());
        }
    }
    Ok(FilterReport {
        input_count: corpus.n_docs(),
        kept_count: kept_ids.len(),
        kept_ids,
    })
}

/// Select the ceil(fraction * N) documents closest to the decision
/// boundary (smallest |p - 0.5|), ties broken by document id.
pub fn select_uncertain<S: Scalar>(
    clf: &RelevanceClassifier<S>,
    corpus: &Corpus,
    fraction: f64,
) -> Result<TestSet<S>> {
    let n = corpus.n_docs();
    let take = (fraction * n as f64).ceil() as usize;
    let take = take.min(n);
    let half = S::from_f64_lossy(0.5);
    let mut scored: Vec<(S, &str)> = Vec::with_capacity(n);
    for i in 0..n {
        let p = clf.predict_counts(corpus.dtm.row(i))?;
        scored.push(((p - half).abs(), corpus.doc_id(i)));
    }
    scored.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("selection scores are finite")
            .then_with(|| a.1.cmp(b.1))
    });
    scored.truncate(take);
    Ok(TestSet {
        ids: scored.iter().map(|(_, id)| id.to_string()).collect(),
        scores: scored.iter().map(|&(s, _)| s).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_dtm, build_vocabulary, Document, DocumentSet, PipelineConfig, Preprocessor};

    /// Linearly separable set: class 1 uses only "signal", class 0 only
    /// "noise"; shared filler term "quantum" everywhere.
    fn separable_corpus(per_class: usize) -> (Corpus, BTreeMap<String, u8>) {
        let mut docs = DocumentSet::new();
        let mut labels = BTreeMap::new();
        for i in 0..per_class {
            let id = format!("pos{i}");
            docs.push(Document {
                id: id.clone(),
                title: String::new(),
                abstract_text: "signal signal quantum".into(),
                authors: None,
                doi: None,
                year: None,
                label: Some(1),
            })
            .unwrap();
            labels.insert(id, 1);
            let id = format!("neg{i}");
            docs.push(Document {
                id: id.clone(),
                title: String::new(),
                abstract_text: "noise noise quantum".into(),
                authors: None,
                doi: None,
                year: None,
                label: Some(0),
            })
            .unwrap();
            labels.insert(id, 0);
        }
        let cfg = PipelineConfig {
            stem: false,
            ..PipelineConfig::default()
        };
        let pre = Preprocessor::new(cfg).unwrap();
        let vocab = build_vocabulary(&docs, &pre, 1, 1.0).unwrap();
        let corpus = build_dtm(&docs, vocab, &pre).unwrap();
        (corpus, labels)
    }

    #[test]
    fn hundred_twenty_labeled_docs_train() {
        let (corpus, labels) = separable_corpus(60);
        assert_eq!(labels.len(), 120);
        let (clf, warnings) = train_classifier::<f64>(&corpus, &labels, TrainConfig::default()).unwrap();
        assert!(warnings.is_empty());
        assert!(clf.final_loss.is_finite());
    }

    #[test]
    fn separable_set_reaches_high_training_accuracy() {
        let (corpus, labels) = separable_corpus(10);
        // longer schedule than the default so the confidence bound below
        // is comfortably met, not just the accuracy one
        let config = TrainConfig {
            epochs: 2000,
            ..TrainConfig::default()
        };
        let (clf, _) = train_classifier::<f64>(&corpus, &labels, config).unwrap();
        let mut correct = 0usize;
        for i in 0..corpus.n_docs() {
            let p: f64 = clf.predict_counts(corpus.dtm.row(i)).unwrap();
            let label = labels[corpus.doc_id(i)];
            if (p >= 0.5) == (label == 1) {
                correct += 1;
            }
        }
        assert!(correct as f64 / corpus.n_docs() as f64 >= 0.99);
        // class-1 documents score confidently
        for i in 0..corpus.n_docs() {
            if labels[corpus.doc_id(i)] == 1 {
                let p: f64 = clf.predict_counts(corpus.dtm.row(i)).unwrap();
                assert!(p >= 0.95, "p = {p}");
            }
        }
    }

    #[test]
    fn single_class_is_degenerate() {
        let (corpus, labels) = separable_corpus(5);
        let only_pos: BTreeMap<String, u8> = labels.into_iter().filter(|(_, l)| *l == 1).collect();
        let err = train_classifier::<f64>(&corpus, &only_pos, TrainConfig::default()).unwrap_err();
        assert!(err.to_string().starts_with("DegenerateLabels"));
    }

    #[test]
    fn zero_weights_predict_half() {
        let clf = RelevanceClassifier::<f64> {
            weights: vec![0.0; 4],
            bias: 0.0,
            config: TrainConfig::default(),
            final_loss: 0.0,
            loss_trace: vec![],
        };
        assert_eq!(clf.predict_normalized(&[0.1, 0.2, 0.0, 0.7]).unwrap(), 0.5);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let clf = RelevanceClassifier::<f64> {
            weights: vec![0.0; 4],
            bias: 0.0,
            config: TrainConfig::default(),
            final_loss: 0.0,
            loss_trace: vec![],
        };
        let err = clf.predict_normalized(&[0.0; 3]).unwrap_err();
        assert!(err.to_string().starts_with("DimensionMismatch"));
    }

    #[test]
    fn increasing_a_positive_weight_term_never_decreases_probability() {
        let (corpus, labels) = separable_corpus(10);
        let (clf, _) = train_classifier::<f64>(&corpus, &labels, TrainConfig::default()).unwrap();
        let sig = corpus.vocabulary.index_of("signal").unwrap() as u32;
        let noi = corpus.vocabulary.index_of("noise").unwrap() as u32;
        let qua = corpus.vocabulary.index_of("quantum").unwrap() as u32;
        assert!(clf.weights[sig as usize] > 0.0);
        // random base rows, then grow the positive-weight term
        let mut rng = crate::rng::SplitMix64::new(77);
        for _ in 0..50 {
            let base_noise = rng.next_below(4) as u32;
            let base_quantum = rng.next_below(4) as u32;
            let mut prev = -1.0f64;
            for c in 1..20u32 {
                let mut row = vec![(sig, c)];
                if base_noise > 0 {
                    row.push((noi, base_noise));
                }
                if base_quantum > 0 {
                    row.push((qua, base_quantum));
                }
                row.sort_unstable_by_key(|&(t, _)| t);
                let p = clf.predict_counts(&row).unwrap();
                assert!(p >= prev - 1e-12, "c={c} p={p} prev={prev}");
                prev = p;
            }
        }
    }

    #[test]
    fn loss_is_non_increasing_over_final_epochs() {
        let (corpus, labels) = separable_corpus(10);
        let (clf, _) = train_classifier::<f64>(&corpus, &labels, TrainConfig::default()).unwrap();
        let tail = clf.loss_trace.len() / 10;
        let trace = &clf.loss_trace[clf.loss_trace.len() - tail..];
        for w in trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn threshold_zero_keeps_everything_and_thresholds_nest() {
        let (corpus, labels) = separable_corpus(5);
        let (clf, _) = train_classifier::<f64>(&corpus, &labels, TrainConfig::default()).unwrap();
        let all = filter_relevant(&clf, &corpus, 0.0).unwrap();
        assert_eq!(all.kept_count, corpus.n_docs());
        let half = filter_relevant(&clf, &corpus, 0.5).unwrap();
        let strict = filter_relevant(&clf, &corpus, 0.9).unwrap();
        for id in &strict.kept_ids {
            assert!(half.kept_ids.contains(id));
        }
        for id in &half.kept_ids {
            assert!(all.kept_ids.contains(id));
        }
    }

    #[test]
    fn threshold_half_on_separable_set_keeps_exactly_class_one() {
        let (corpus, labels) = separable_corpus(10);
        let (clf, _) = train_classifier::<f64>(&corpus, &labels, TrainConfig::default()).unwrap();
        let report = filter_relevant(&clf, &corpus, 0.5).unwrap();
        let expected: Vec<&String> = labels.iter().filter(|(_, l)| **l == 1).map(|(id, _)| id).collect();
        assert_eq!(report.kept_count, expected.len());
        for id in expected {
            assert!(report.kept_ids.contains(id));
        }
    }

    #[test]
    fn uncertainty_selection_matches_hand_ranking() {
        // Five documents with stipulated probabilities via a rigged
        // classifier: p = sigmoid(w . x) with one-hot rows.
        let probs = [0.1f64, 0.45, 0.5, 0.8, 0.95];
        let mut docs = DocumentSet::new();
        let names = ["d0", "d1", "d2", "d3", "d4"];
        let terms = ["alpha", "bravo", "charli", "delta", "echo"];
        for (name, term) in names.iter().zip(&terms) {
            docs.push(Document {
                id: name.to_string(),
                title: String::new(),
                abstract_text: format!("{term} {term}"),
                authors: None,
                doi: None,
                year: None,
                label: None,
            })
            .unwrap();
        }
        let cfg = PipelineConfig {
            stem: false,
            ..PipelineConfig::default()
        };
        let pre = Preprocessor::new(cfg).unwrap();
        let vocab = build_vocabulary(&docs, &pre, 1, 1.0).unwrap();
        let corpus = build_dtm(&docs, vocab, &pre).unwrap();
        // logit for a one-hot normalized row is exactly the term weight
        let mut weights = vec![0.0f64; corpus.vocabulary.len()];
        for (term, p) in terms.iter().zip(&probs) {
            let idx = corpus.vocabulary.index_of(term).unwrap();
            weights[idx] = (p / (1.0 - p)).ln();
        }
        let clf = RelevanceClassifier {
            weights,
            bias: 0.0,
            config: TrainConfig::default(),
            final_loss: 0.0,
            loss_trace: vec![],
        };
        let test = select_uncertain(&clf, &corpus, 0.4).unwrap();
        // ceil(0.4 * 5) = 2: the p = 0.5 doc then the p = 0.45 doc
        assert_eq!(test.ids, vec!["d2".to_string(), "d1".to_string()]);
        let full = select_uncertain(&clf, &corpus, 1.0).unwrap();
        assert_eq!(full.ids.len(), 5);
        for w in full.scores.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn five_percent_fraction_takes_ceil() {
        let (corpus, labels) = separable_corpus(30); // 60 docs
        let (clf, _) = train_classifier::<f64>(&corpus, &labels, TrainConfig::default()).unwrap();
        let test = select_uncertain(&clf, &corpus, 0.05).unwrap();
        assert_eq!(test.ids.len(), 3); // ceil(0.05 * 60)
    }

    #[test]
    fn selection_is_input_order_invariant() {
        let (corpus, labels) = separable_corpus(8);
        let (clf, _) = train_classifier::<f64>(&corpus, &labels, TrainConfig::default()).unwrap();
        let a = select_uncertain(&clf, &corpus, 0.5).unwrap();
        let b = select_uncertain(&clf, &corpus, 0.5).unwrap();
        assert_eq!(a.ids, b.ids);
    }
}
