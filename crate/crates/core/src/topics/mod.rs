//! Topic modeling: LDA by collapsed Gibbs sampling, C-V coherence scoring
//! and coherence-driven selection of the topic count.

mod coherence;
mod lda;

pub use coherence::{cv_coherence, cv_coherence_sets, CoherenceConfig, CoherenceOutcome};
pub use lda::GibbsSampler;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::scalar::Scalar;

/// LDA hyperparameters.
#[derive(Debug, Clone)]
pub struct LdaHyperparams<S: Scalar> {
    /// Number of topics K.
    pub k: usize,
    /// Document-topic density.
    pub alpha: S,
    /// Topic-word density.
    pub beta: S,
    /// Total Gibbs sweeps.
    pub iterations: usize,
    /// Sweeps regarded as warm-up in diagnostics; must stay below
    /// `iterations`. Estimates always come from the final state.
    pub burn_in: usize,
    pub seed: u64,
}

impl<S: Scalar> LdaHyperparams<S> {
    /// Griffiths & Steyvers style defaults: alpha = 50/K, beta = 0.01.
    pub fn with_defaults(k: usize, seed: u64) -> Self {
        LdaHyperparams {
            k,
            alpha: S::from_f64_lossy(50.0 / k.max(1) as f64),
            beta: S::from_f64_lossy(0.01),
            iterations: 1000,
            burn_in: 200,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, message: &str| Error::CorruptModel {
            field: name.into(),
            message: message.into(),
        };
        if self.k < 1 {
            return Err(field("K", "must be at least 1"));
        }
        if self.alpha.is_nan() || self.alpha <= S::zero() {
            return Err(field("alpha", "must be positive"));
        }
        if self.beta.is_nan() || self.beta <= S::zero() {
            return Err(field("beta", "must be positive"));
        }
        if self.iterations < 1 {
            return Err(field("iterations", "must be at least 1"));
        }
        if self.burn_in >= self.iterations {
            return Err(field("burn_in", "must be below iterations"));
        }
        Ok(())
    }
}

/// A trained topic model: topic-word distributions phi (K x V), document-
/// topic distributions theta (D x K), and enough state to inject new
/// documents later. Immutable once built.
#[derive(Debug, Clone)]
pub struct TopicModel<S: Scalar> {
    pub hp: LdaHyperparams<S>,
    pub vocab: Vec<String>,
    pub doc_ids: Vec<String>,
    pub phi: Vec<Vec<S>>,
    pub theta: Vec<Vec<S>>,
    /// Token total per topic (N_k) at estimation time; with beta this is
    /// enough to reconstruct the topic-word counts from phi.
    pub topic_totals: Vec<S>,
    /// Per-token assignments of the final sweep; absent on reloaded models.
    pub assignments: Option<Vec<Vec<u32>>>,
    /// Collapsed log-likelihood per sweep; empty on reloaded models.
    pub ll_trace: Vec<f64>,
}

impl<S: Scalar> TopicModel<S> {
    pub fn n_topics(&self) -> usize {
        self.hp.k
    }

    pub fn n_vocab(&self) -> usize {
        self.vocab.len()
    }

    /// Top-m terms of topic `j` by weight, ties lexicographic.
    pub fn top_words(&self, j: usize, m: usize) -> Vec<(String, S)> {
        top_of_distribution(&self.phi[j], &self.vocab, m)
    }
}

/// Shared "top m entries of a distribution" used by topics and subtopics.
pub(crate) fn top_of_distribution<S: Scalar>(
    dist: &[S],
    vocab: &[String],
    m: usize,
) -> Vec<(String, S)> {
    let mut entries: Vec<(usize, S)> = dist.iter().copied().enumerate().collect();
    entries.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("weights are finite")
            .then_with(|| vocab[a.0].cmp(&vocab[b.0]))
    });
    entries
        .into_iter()
        .take(m)
        .map(|(i, w)| (vocab[i].clone(), w))
        .collect()
}

/// Train an LDA model with collapsed Gibbs sampling.
pub fn fit_lda<S: Scalar>(corpus: &Corpus, hp: LdaHyperparams<S>) -> Result<TopicModel<S>> {
    let iterations = hp.iterations;
    let mut sampler = GibbsSampler::new(corpus, hp)?;
    let mut ll_trace = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        sampler.sweep();
        ll_trace.push(sampler.log_likelihood());
    }
    Ok(sampler.into_model(ll_trace))
}

/// Template for a coherence scan: everything but K. `alpha = None` means
/// 50/K per candidate.
#[derive(Debug, Clone)]
pub struct LdaTemplate<S: Scalar> {
    pub alpha: Option<S>,
    pub beta: S,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl<S: Scalar> LdaTemplate<S> {
    pub fn hyperparams_for(&self, k: usize) -> LdaHyperparams<S> {
        LdaHyperparams {
            k,
            alpha: self
                .alpha
                .unwrap_or_else(|| S::from_f64_lossy(50.0 / k.max(1) as f64)),
            beta: self.beta,
            iterations: self.iterations,
            burn_in: self.burn_in,
            seed: derive_seed(self.seed, &format!("fit-k-{k}")),
        }
    }
}

impl<S: Scalar> Default for LdaTemplate<S> {
    fn default() -> Self {
        LdaTemplate {
            alpha: None,
            beta: S::from_f64_lossy(0.01),
            iterations: 1000,
            burn_in: 200,
            seed: 0,
        }
    }
}

/// One scan point: candidate K, its mean C-V and the per-topic scores.
#[derive(Debug, Clone)]
pub struct ScanPoint<S: Scalar> {
    pub k: usize,
    pub mean_cv: S,
    pub per_topic: Vec<S>,
}

#[derive(Debug, Clone)]
pub struct KSelection<S: Scalar> {
    pub best_k: usize,
    pub curve: Vec<ScanPoint<S>>,
}

/// Train one model per candidate K (deterministic per-K seeds) and return
/// the K with the highest mean C-V coherence; ties go to the smaller K.
pub fn select_k<S: Scalar>(
    corpus: &Corpus,
    k_range: &[usize],
    template: &LdaTemplate<S>,
    cfg: &CoherenceConfig,
) -> Result<KSelection<S>> {
    if k_range.is_empty() {
        return Err(Error::CorruptModel {
            field: "k_range".into(),
            message: "must be non-empty".into(),
        });
    }
    let mut ks: Vec<usize> = k_range.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let mut curve = Vec::with_capacity(ks.len());
    let mut best: Option<(usize, S)> = None;
    for &k in &ks {
        let model = fit_lda(corpus, template.hyperparams_for(k))?;
        let outcome = cv_coherence(&model, corpus, cfg)?;
        // ascending K with a strict comparison keeps the smaller K on ties
        if best.map(|(_, m)| outcome.mean > m).unwrap_or(true) {
            best = Some((k, outcome.mean));
        }
        curve.push(ScanPoint {
            k,
            mean_cv: outcome.mean,
            per_topic: outcome.per_topic,
        });
    }
    Ok(KSelection {
        best_k: best.expect("k_range is non-empty").0,
        curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_dtm, build_vocabulary, Document, DocumentSet, PipelineConfig, Preprocessor};

    fn tiny_corpus() -> Corpus {
        let mut docs = DocumentSet::new();
        let texts = [
            "photon photon detector",
            "photon laser laser",
            "detector laser photon",
            "algebra algebra proof",
            "proof proof lemma",
            "lemma algebra proof",
        ];
        for (i, t) in texts.iter().enumerate() {
            docs.push(Document {
                id: format!("d{i}"),
                title: String::new(),
                abstract_text: t.to_string(),
                authors: None,
                doi: None,
                year: None,
                label: None,
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

    fn hp(k: usize, iterations: usize, seed: u64) -> LdaHyperparams<f64> {
        LdaHyperparams {
            k,
            alpha: 50.0 / k as f64,
            beta: 0.01,
            iterations,
            burn_in: iterations / 5,
            seed,
        }
    }

    #[test]
    fn k1_assigns_everything_to_topic_zero() {
        let corpus = tiny_corpus();
        let model = fit_lda(&corpus, hp(1, 10, 7)).unwrap();
        for zd in model.assignments.as_ref().unwrap() {
            assert!(zd.iter().all(|&z| z == 0));
        }
        // phi row equals smoothed corpus frequencies
        let v = corpus.vocabulary.len() as f64;
        let total = corpus.dtm.total() as f64;
        for w in 0..corpus.vocabulary.len() {
            let count: u64 = (0..corpus.n_docs())
                .map(|d| {
                    corpus.dtm.row(d).iter().find(|&&(t, _)| t as usize == w).map(|&(_, c)| c as u64).unwrap_or(0)
                })
                .sum();
            let expected = (count as f64 + 0.01) / (total + v * 0.01);
            assert!((model.phi[0][w] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn rows_of_phi_and_theta_sum_to_one() {
        let corpus = tiny_corpus();
        let model = fit_lda(&corpus, hp(3, 30, 11)).unwrap();
        for row in &model.phi {
            let s: f64 = row.iter().sum();
            assert!((s - 1.0).abs() < 1e-9, "phi row sums to {s}");
        }
        for row in &model.theta {
            let s: f64 = row.iter().sum();
            assert!((s - 1.0).abs() < 1e-9, "theta row sums to {s}");
        }
    }

    #[test]
    fn counts_stay_consistent_across_sweeps() {
        let corpus = tiny_corpus();
        let mut sampler = GibbsSampler::new(&corpus, hp(3, 20, 5)).unwrap();
        for _ in 0..20 {
            sampler.sweep();
            assert!(sampler.counts_consistent());
        }
    }

    #[test]
    fn same_seed_means_identical_assignments() {
        let corpus = tiny_corpus();
        let a = fit_lda(&corpus, hp(3, 25, 99)).unwrap();
        let b = fit_lda(&corpus, hp(3, 25, 99)).unwrap();
        assert_eq!(a.assignments, b.assignments);
        assert_eq!(a.phi, b.phi);
        let c = fit_lda(&corpus, hp(3, 25, 100)).unwrap();
        assert_ne!(c.assignments, a.assignments);
    }

    #[test]
    fn log_likelihood_trends_upward() {
        let corpus = tiny_corpus();
        let model = fit_lda(&corpus, hp(2, 100, 3)).unwrap();
        let n = model.ll_trace.len();
        let head: f64 = model.ll_trace[..n / 10].iter().sum::<f64>() / (n / 10) as f64;
        let tail: f64 = model.ll_trace[n - n / 10..].iter().sum::<f64>() / (n / 10) as f64;
        assert!(tail >= head, "tail {tail} < head {head}");
    }

    #[test]
    fn top_words_with_m_equal_v_is_a_permutation() {
        let corpus = tiny_corpus();
        let model = fit_lda(&corpus, hp(2, 20, 1)).unwrap();
        let v = corpus.vocabulary.len();
        let top = model.top_words(0, v);
        assert_eq!(top.len(), v);
        let mut terms: Vec<&str> = top.iter().map(|(t, _)| t.as_str()).collect();
        terms.sort_unstable();
        let mut all: Vec<&str> = corpus.vocabulary.terms().iter().map(|s| s.as_str()).collect();
        all.sort_unstable();
        assert_eq!(terms, all);
        let sum: f64 = top.iter().map(|&(_, w)| w).sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn k1_top_word_is_most_frequent_term() {
        let corpus = tiny_corpus();
        let model = fit_lda(&corpus, hp(1, 5, 2)).unwrap();
        let top = model.top_words(0, 1);
        // "photon" and "proof" both appear 4 times; tie is lexicographic
        assert_eq!(top[0].0, "photon");
    }

    #[test]
    fn invalid_hyperparams_are_rejected() {
        let corpus = tiny_corpus();
        assert!(fit_lda(&corpus, hp(0, 10, 1)).is_err());
        let mut bad = hp(2, 10, 1);
        bad.burn_in = 10;
        assert!(fit_lda(&corpus, bad).is_err());
    }

    #[test]
    fn training_works_in_single_precision_too() {
        let corpus = tiny_corpus();
        let hp32 = LdaHyperparams::<f32> {
            k: 2,
            alpha: 25.0,
            beta: 0.01,
            iterations: 20,
            burn_in: 4,
            seed: 3,
        };
        let model = fit_lda(&corpus, hp32).unwrap();
        for row in model.phi.iter().chain(&model.theta) {
            let s: f32 = row.iter().sum();
            assert!((s - 1.0).abs() < 1e-4, "row sums to {s}");
        }
    }

    #[test]
    fn single_candidate_scan_returns_it() {
        let corpus = tiny_corpus();
        let template = LdaTemplate::<f64> {
            iterations: 20,
            burn_in: 4,
            seed: 9,
            ..LdaTemplate::default()
        };
        let cfg = CoherenceConfig {
            top_n: 3,
            ..CoherenceConfig::default()
        };
        let sel = select_k(&corpus, &[1], &template, &cfg).unwrap();
        assert_eq!(sel.best_k, 1);
        assert_eq!(sel.curve.len(), 1);
    }
}
