//! Collapsed Gibbs sampling for LDA.
//!
//! The sampler keeps per-token topic assignments plus the usual count
//! matrices and resamples each token from the collapsed conditional
//!
//! ```text
//! p(z = k | rest)  ∝  (N_kw + β) / (N_k + Vβ) · (N_dk + α)
//! ```
//!
//! with the current token removed from the counts. Estimates are taken from
//! the final state, so a fixed seed reproduces the model exactly.

use statrs::function::gamma::ln_gamma;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::scalar::Scalar;

use super::{LdaHyperparams, TopicModel};

/// Mutable Gibbs chain state. Public so that tests and diagnostics can
/// drive sweeps one at a time and audit the counts.
pub struct GibbsSampler<S: Scalar> {
    hp: LdaHyperparams<S>,
    n_vocab: usize,
    /// Token streams per document (vocabulary indices, text order).
    docs: Vec<Vec<u32>>,
    doc_ids: Vec<String>,
    vocab: Vec<String>,
    /// Per-token topic assignments, parallel to `docs`.
    z: Vec<Vec<u32>>,
    /// Topic-word counts, flattened K x V.
    n_kw: Vec<u32>,
    /// Token total per topic.
    n_k: Vec<u32>,
    /// Document-topic counts, flattened D x K.
    n_dk: Vec<u32>,
    /// Token total per document.
    n_d: Vec<u32>,
    rng: SplitMix64,
    weights_buf: Vec<S>,
}

impl<S: Scalar> GibbsSampler<S> {
    pub fn new(corpus: &Corpus, hp: LdaHyperparams<S>) -> Result<Self> {
        hp.validate()?;
        if corpus.n_docs() == 0 {
            return Err(Error::EmptyCorpus);
        }
        let k = hp.k;
        let v = corpus.vocabulary.len();
        let d = corpus.n_docs();
        let mut rng = SplitMix64::new(hp.seed);
        let mut z: Vec<Vec<u32>> = Vec::with_capacity(d);
        let mut n_kw = vec![0u32; k * v];
        let mut n_k = vec![0u32; k];
        let mut n_dk = vec![0u32; d * k];
        let mut n_d = vec![0u32; d];
        for (di, stream) in corpus.streams.iter().enumerate() {
            let mut zd = Vec::with_capacity(stream.len());
            for &w in stream {
                let topic = rng.next_below(k) as u32;
                zd.push(topic);
                n_kw[topic as usize * v + w as usize] += 1;
                n_k[topic as usize] += 1;
                n_dk[di * k + topic as usize] += 1;
                n_d[di] += 1;
            }
            z.push(zd);
        }
        Ok(GibbsSampler {
            hp,
            n_vocab: v,
            docs: corpus.streams.clone(),
            doc_ids: (0..d).map(|i| corpus.doc_id(i).to_string()).collect(),
            vocab: corpus.vocabulary.terms().to_vec(),
            z,
            n_kw,
            n_k,
            n_dk,
            n_d,
            rng,
            weights_buf: vec![S::zero(); k],
        })
    }

    pub fn hyperparams(&self) -> &LdaHyperparams<S> {
        &self.hp
    }

    /// One full sweep over every token.
    pub fn sweep(&mut self) {
        let k = self.hp.k;
        let v = self.n_vocab;
        let alpha = self.hp.alpha;
        let beta = self.hp.beta;
        let v_beta = S::from_usize_lossy(v) * beta;
        for di in 0..self.docs.len() {
            for ti in 0..self.docs[di].len() {
                let w = self.docs[di][ti] as usize;
                let old = self.z[di][ti] as usize;
                self.n_kw[old * v + w] -= 1;
                self.n_k[old] -= 1;
                self.n_dk[di * k + old] -= 1;
                for topic in 0..k {
                    let word_part = (S::from_usize_lossy(self.n_kw[topic * v + w] as usize)
                        + beta)
                        / (S::from_usize_lossy(self.n_k[topic] as usize) + v_beta);
                    let doc_part =
                        S::from_usize_lossy(self.n_dk[di * k + topic] as usize) + alpha;
                    self.weights_buf[topic] = word_part * doc_part;
                }
                let new = self.rng.sample_weighted(&self.weights_buf);
                self.z[di][ti] = new as u32;
                self.n_kw[new * v + w] += 1;
                self.n_k[new] += 1;
                self.n_dk[di * k + new] += 1;
            }
        }
    }

    /// Standard collapsed log-likelihood of the current assignment state.
    pub fn log_likelihood(&self) -> f64 {
        let k = self.hp.k;
        let v = self.n_vocab;
        let alpha = self.hp.alpha.to_f64().expect("alpha fits f64");
        let beta = self.hp.beta.to_f64().expect("beta fits f64");
        let mut ll = 0.0;
        ll += k as f64 * (ln_gamma(v as f64 * beta) - v as f64 * ln_gamma(beta));
        for topic in 0..k {
            for w in 0..v {
                ll += ln_gamma(self.n_kw[topic * v + w] as f64 + beta);
            }
            ll -= ln_gamma(self.n_k[topic] as f64 + v as f64 * beta);
        }
        let d = self.docs.len();
        ll += d as f64 * (ln_gamma(k as f64 * alpha) - k as f64 * ln_gamma(alpha));
        for di in 0..d {
            for topic in 0..k {
                ll += ln_gamma(self.n_dk[di * k + topic] as f64 + alpha);
            }
            ll -= ln_gamma(self.n_d[di] as f64 + k as f64 * alpha);
        }
        ll
    }

    /// Rebuild every count matrix from the raw assignments and compare with
    /// the incrementally maintained ones.
    pub fn counts_consistent(&self) -> bool {
        let k = self.hp.k;
        let v = self.n_vocab;
        let mut n_kw = vec![0u32; k * v];
        let mut n_k = vec![0u32; k];
        let mut n_dk = vec![0u32; self.docs.len() * k];
        let mut n_d = vec![0u32; self.docs.len()];
        for (di, (stream, zd)) in self.docs.iter().zip(&self.z).enumerate() {
            for (&w, &t) in stream.iter().zip(zd) {
                n_kw[t as usize * v + w as usize] += 1;
                n_k[t as usize] += 1;
                n_dk[di * k + t as usize] += 1;
                n_d[di] += 1;
            }
        }
        n_kw == self.n_kw && n_k == self.n_k && n_dk == self.n_dk && n_d == self.n_d
    }

    pub fn assignments(&self) -> &[Vec<u32>] {
        &self.z
    }

    /// Smoothed estimates from the current counts.
    pub fn into_model(self, ll_trace: Vec<f64>) -> TopicModel<S> {
        let k = self.hp.k;
        let v = self.n_vocab;
        let alpha = self.hp.alpha;
        let beta = self.hp.beta;
        let v_beta = S::from_usize_lossy(v) * beta;
        let k_alpha = S::from_usize_lossy(k) * alpha;
        let mut phi = Vec::with_capacity(k);
        for topic in 0..k {
            let denom = S::from_usize_lossy(self.n_k[topic] as usize) + v_beta;
            let row: Vec<S> = (0..v)
                .map(|w| (S::from_usize_lossy(self.n_kw[topic * v + w] as usize) + beta) / denom)
                .collect();
            phi.push(row);
        }
        let mut theta = Vec::with_capacity(self.docs.len());
        for di in 0..self.docs.len() {
            let denom = S::from_usize_lossy(self.n_d[di] as usize) + k_alpha;
            let row: Vec<S> = (0..k)
                .map(|t| (S::from_usize_lossy(self.n_dk[di * k + t] as usize) + alpha) / denom)
                .collect();
            theta.push(row);
        }
        let topic_totals = self
            .n_k
            .iter()
            .map(|&n| S::from_usize_lossy(n as usize))
            .collect();
        TopicModel {
            hp: self.hp,
            vocab: self.vocab,
            doc_ids: self.doc_ids,
            phi,
            theta,
            topic_totals,
            assignments: Some(self.z),
            ll_trace,
        }
    }
}
