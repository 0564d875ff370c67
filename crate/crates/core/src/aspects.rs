//! Aspect ingestion and keyword weighting.
//!
//! An aspect is an externally defined theme (a file of text gathered from
//! conference material or similar sources). Each aspect text is cleaned,
//! run through the same token pipeline as the corpus, and reduced to its
//! top-n TF-IDF-weighted stemmed keywords, where the IDF collection is the
//! set of aspect texts themselves.

use std::collections::BTreeMap;
use std::path::Path;

use crate::corpus::Preprocessor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Raw aspect text plus its preprocessed tokens.
#[derive(Debug, Clone)]
pub struct AspectText {
    pub name: String,
    pub raw: String,
    pub tokens: Vec<String>,
}

/// Ranked keyword set of one aspect: (stemmed term, weight) in
/// non-increasing weight order, all weights strictly positive.
#[derive(Debug, Clone)]
pub struct AspectKeywords<S: Scalar> {
    pub name: String,
    pub keywords: Vec<(String, S)>,
}

impl<S: Scalar> AspectKeywords<S> {
    pub fn weight_of(&self, term: &str) -> Option<S> {
        self.keywords
            .iter()
            .find(|(t, _)| t == term)
            .map(|&(_, w)| w)
    }
}

/// Remove `<...>` tag spans and decode the five XML entities.
pub fn strip_html(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_tag = false;
    for c in text.chars() {
        match c {
            '<' => in_tag = true,
            '>' if in_tag => {
                in_tag = false;
                out.push(' ');
            }
            _ if !in_tag => out.push(c),
            _ => {}
        }
    }
    out.replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&apos;", "'")
        .replace("&amp;", "&")
}

/// Load every `.txt`/`.html` file of a directory as one aspect; the file
/// stem is the aspect name. Files are visited in name order.
pub fn load_aspect_texts(dir: &Path, pre: &Preprocessor) -> Result<Vec<AspectText>> {
    let mut paths: Vec<std::path::PathBuf> = std::fs::read_dir(dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("txt") | Some("html")
            )
        })
        .collect();
    paths.sort();
    let mut seen = BTreeMap::new();
    let mut aspects = Vec::new();
    for path in paths {
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        if seen.insert(name.clone(), ()).is_some() {
            return Err(Error::DuplicateAspectName { name });
        }
        let raw = std::fs::read_to_string(&path)?;
        let tokens = pre.tokens(&strip_html(&raw));
        if tokens.is_empty() {
            return Err(Error::EmptyAspect { name });
        }
        aspects.push(AspectText { name, raw, tokens });
    }
    if aspects.is_empty() {
        return Err(Error::EmptyAspect {
            name: format!("(no aspect files in {})", dir.display()),
        });
    }
    Ok(aspects)
}

/// Build one aspect from an in-memory text, applying the same cleaning.
pub fn aspect_from_text(name: &str, raw: &str, pre: &Preprocessor) -> Result<AspectText> {
    let tokens = pre.tokens(&strip_html(raw));
    if tokens.is_empty() {
        return Err(Error::EmptyAspect { name: name.into() });
    }
    Ok(AspectText {
        name: name.into(),
        raw: raw.into(),
        tokens,
    })
}

/// Inverse document frequency variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdfSmoothing {
    /// ln(|aspects| / df)
    None,
    /// ln((1 + |aspects|) / (1 + df)) + 1
    PlusOne,
}

/// Top-n TF-IDF keywords per aspect.
///
/// tf is max-normalized within the aspect; idf runs over the aspect
/// collection itself. Terms with non-positive weight are dropped; ties in
/// weight rank lexicographically.
pub fn tfidf_keywords<S: Scalar>(
    aspects: &[AspectText],
    n: usize,
    smoothing: IdfSmoothing,
) -> Result<Vec<AspectKeywords<S>>> {
    if aspects.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "aspects".into(),
            message: "IDF needs at least two aspect texts".into(),
        });
    }
    if n < 1 {
        return Err(Error::InvalidParameter {
            name: "n".into(),
            message: "must be at least 1".into(),
        });
    }
    let a = aspects.len() as f64;
    let mut doc_freq: BTreeMap<&str, usize> = BTreeMap::new();
    let counts: Vec<BTreeMap<&str, u64>> = aspects
        .iter()
        .map(|aspect| {
            let mut c: BTreeMap<&str, u64> = BTreeMap::new();
            for t in &aspect.tokens {
                *c.entry(t.as_str()).or_insert(0) += 1;
            }
            for term in c.keys() {
                *doc_freq.entry(term).or_insert(0) += 1;
            }
            c
        })
        .collect();
    let idf = |term: &str| -> f64 {
        let df = doc_freq[term] as f64;
        match smoothing {
            IdfSmoothing::None => (a / df).ln(),
            IdfSmoothing::PlusOne => ((1.0 + a) / (1.0 + df)).ln() + 1.0,
        }
    };
    Ok(aspects
        .iter()
        .zip(&counts)
        .map(|(aspect, count)| {
            let max_count = count.values().copied().max().unwrap_or(1) as f64;
            let mut weighted: Vec<(String, S)> = count
                .iter()
                .map(|(&term, &c)| {
                    let tf = c as f64 / max_count;
                    (term.to_string(), S::from_f64_lossy(tf * idf(term)))
                })
                .filter(|&(_, w)| w > S::zero())
                .collect();
            weighted.sort_by(|x, y| {
                y.1.partial_cmp(&x.1)
                    .expect("weights are finite")
                    .then_with(|| x.0.cmp(&y.0))
            });
            weighted.truncate(n);
            AspectKeywords {
                name: aspect.name.clone(),
                keywords: weighted,
            }
        })
        .collect())
}
