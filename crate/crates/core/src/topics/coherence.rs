//! C-V topic coherence.
//!
//! The construction follows the standard C-V recipe: boolean sliding
//! windows over each document's token stream act as virtual documents;
//! word and word-pair probabilities are window document frequencies; each
//! top word gets an NPMI context vector against the topic's own top-word
//! set (one-set segmentation); the score is the mean cosine between each
//! word vector and the summed set vector.

use std::collections::HashMap;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::TopicModel;

#[derive(Debug, Clone)]
pub struct CoherenceConfig {
    /// Words per topic entering the score.
    pub top_n: usize,
    /// Sliding window size in tokens. Documents shorter than the window
    /// contribute a single whole-document window.
    pub window: usize,
    /// Smoothing constant for NPMI.
    pub epsilon: f64,
}

impl Default for CoherenceConfig {
    fn default() -> Self {
        CoherenceConfig {
            top_n: 10,
            window: 110,
            epsilon: 1e-12,
        }
    }
}

impl CoherenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.top_n < 2 {
            return Err(Error::InvalidParameter {
                name: "top_n".into(),
                message: "must be at least 2".into(),
            });
        }
        if self.window < 2 {
            return Err(Error::InvalidParameter {
                name: "window".into(),
                message: "must be at least 2".into(),
            });
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "epsilon".into(),
                message: "must be positive".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CoherenceOutcome<S: Scalar> {
    pub per_topic: Vec<S>,
    pub mean: S,
    /// One entry per top word with zero window count (scored with epsilon
    /// smoothing rather than failing).
    pub warnings: Vec<String>,
}

/// Window document frequencies for the union of the given word sets.
struct WindowCounts {
    total: u64,
    /// Windows containing each union slot.
    single: Vec<u64>,
    /// Upper-triangle pair counts per topic, indexed i * n + j with i < j.
    pairs: Vec<Vec<u64>>,
}

fn count_windows(word_sets: &[Vec<u32>], streams: &[Vec<u32>], window: usize) -> WindowCounts {
    let mut slot_of: HashMap<u32, usize> = HashMap::new();
    for set in word_sets {
        for &w in set {
            let next = slot_of.len();
            slot_of.entry(w).or_insert(next);
        }
    }
    let n_slots = slot_of.len();
    // topic word positions resolved to union slots once
    let topic_slots: Vec<Vec<usize>> = word_sets
        .iter()
        .map(|set| set.iter().map(|w| slot_of[w]).collect())
        .collect();

    let mut total = 0u64;
    let mut single = vec![0u64; n_slots];
    let mut pairs: Vec<Vec<u64>> = word_sets.iter().map(|s| vec![0; s.len() * s.len()]).collect();
    let mut in_window = vec![0u32; n_slots];
    let mut present_buf: Vec<Vec<usize>> = word_sets.iter().map(|s| Vec::with_capacity(s.len())).collect();

    let mut tally = |in_window: &[u32],
                     single: &mut [u64],
                     pairs: &mut [Vec<u64>],
                     total: &mut u64| {
        *total += 1;
        for (slot, &c) in in_window.iter().enumerate() {
            if c > 0 {
                single[slot] += 1;
            }
        }
        for (t, slots) in topic_slots.iter().enumerate() {
            let present = &mut present_buf[t];
            present.clear();
            for (pos, &slot) in slots.iter().enumerate() {
                if in_window[slot] > 0 {
                    present.push(pos);
                }
            }
            let n = slots.len();
            for (a, &i) in present.iter().enumerate() {
                for &j in &present[a + 1..] {
                    pairs[t][i * n + j] += 1;
                }
            }
        }
    };

    for stream in streams {
        if stream.is_empty() {
            continue;
        }
        in_window.iter_mut().for_each(|c| *c = 0);
        if stream.len() <= window {
            for &tok in stream {
                if let Some(&slot) = slot_of.get(&tok) {
                    in_window[slot] += 1;
                }
            }
            tally(&in_window, &mut single, &mut pairs, &mut total);
        } else {
            for &tok in &stream[..window] {
                if let Some(&slot) = slot_of.get(&tok) {
                    in_window[slot] += 1;
                }
            }
            tally(&in_window, &mut single, &mut pairs, &mut total);
            for start in 1..=(stream.len() - window) {
                if let Some(&slot) = slot_of.get(&stream[start - 1]) {
                    in_window[slot] -= 1;
                }
                if let Some(&slot) = slot_of.get(&stream[start + window - 1]) {
                    in_window[slot] += 1;
                }
                tally(&in_window, &mut single, &mut pairs, &mut total);
            }
        }
    }
    WindowCounts {
        total,
        single,
        pairs,
    }
}

/// C-V coherence of explicit word-index sets over token streams.
///
/// This is the computational core behind [`cv_coherence`]; it is public so
/// that alternative models (for example subtopic word sets) can be scored
/// against the same corpus statistics.
pub fn cv_coherence_sets<S: Scalar>(
    word_sets: &[Vec<u32>],
    streams: &[Vec<u32>],
    cfg: &CoherenceConfig,
) -> Result<CoherenceOutcome<S>> {
    cfg.validate()?;
    let counts = count_windows(word_sets, streams, cfg.window);
    let mut warnings = Vec::new();
    if counts.total == 0 {
        return Err(Error::EmptyCorpus);
    }
    let w_total = counts.total as f64;
    let eps = cfg.epsilon;

    let mut slot_of: HashMap<u32, usize> = HashMap::new();
    for set in word_sets {
        for &w in set {
            let next = slot_of.len();
            slot_of.entry(w).or_insert(next);
        }
    }

    let mut per_topic: Vec<S> = Vec::with_capacity(word_sets.len());
    for (t, set) in word_sets.iter().enumerate() {
        let n = set.len();
        let p: Vec<f64> = set
            .iter()
            .map(|w| counts.single[slot_of[w]] as f64 / w_total)
            .collect();
        for (i, &pi) in p.iter().enumerate() {
            if pi == 0.0 {
                warnings.push(format!(
                    "TopWordAbsent: word {} of topic {t} has zero window count; scored with epsilon smoothing",
                    set[i]
                ));
            }
        }
        let p_pair = |i: usize, j: usize| -> f64 {
            if i == j {
                p[i]
            } else {
                let (a, b) = if i < j { (i, j) } else { (j, i) };
                counts.pairs[t][a * n + b] as f64 / w_total
            }
        };
        // NPMI context vector per word against the whole set
        let vectors: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let pij = p_pair(i, j);
                        let denom = (p[i] * p[j]).max(eps);
                        let pmi = ((pij + eps) / denom).ln();
                        pmi / -(pij + eps).ln()
                    })
                    .collect()
            })
            .collect();
        let mut set_vector = vec![0.0f64; n];
        for v in &vectors {
            for (s, x) in set_vector.iter_mut().zip(v) {
                *s += x;
            }
        }
        let mut acc = 0.0f64;
        for v in &vectors {
            acc += cosine64(v, &set_vector);
        }
        let score = (acc / n as f64).clamp(-1.0, 1.0);
        per_topic.push(S::from_f64_lossy(score));
    }
    let mean =
        per_topic.iter().copied().sum::<S>() / S::from_usize_lossy(per_topic.len().max(1));
    Ok(CoherenceOutcome {
        per_topic,
        mean,
        warnings,
    })
}

fn cosine64(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Score every topic of a trained model against its own training corpus.
pub fn cv_coherence<S: Scalar>(
    model: &TopicModel<S>,
    corpus: &Corpus,
    cfg: &CoherenceConfig,
) -> Result<CoherenceOutcome<S>> {
    cfg.validate()?;
    if cfg.top_n > model.n_vocab() {
        return Err(Error::InvalidParameter {
            name: "top_n".into(),
            message: format!(
                "{} exceeds the vocabulary size {}",
                cfg.top_n,
                model.n_vocab()
            ),
        });
    }
    let word_sets: Vec<Vec<u32>> = (0..model.n_topics())
        .map(|j| {
            model
                .top_words(j, cfg.top_n)
                .iter()
                .map(|(term, _)| {
                    corpus
                        .vocabulary
                        .index_of(term)
                        .expect("model vocabulary matches corpus") as u32
                })
                .collect()
        })
        .collect();
    cv_coherence_sets(&word_sets, &corpus.streams, cfg)
}
