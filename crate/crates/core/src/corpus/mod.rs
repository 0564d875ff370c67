//! Document ingestion and corpus construction: bibliographic records in,
//! vocabulary and sparse document-term matrix out.

mod porter;
mod preprocess;

pub use porter::stem;
pub use preprocess::{
    load_stopwords, parse_stopwords, PipelineConfig, Preprocessor, BUNDLED_STOPWORDS,
};

use std::collections::HashMap;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One bibliographic record. `label` is an optional binary relevance mark
/// (1 relevant, 0 non-relevant) used by the screening stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(rename = "abstract", default)]
    pub abstract_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub authors: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<u8>,
}

impl Document {
    /// Text seen by the pipeline: title and abstract concatenated.
    pub fn full_text(&self) -> String {
        if self.title.is_empty() {
            self.abstract_text.clone()
        } else if self.abstract_text.is_empty() {
            self.title.clone()
        } else {
            format!("{} {}", self.title, self.abstract_text)
        }
    }
}

/// An ordered collection of documents with unique ids.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DocumentSet {
    docs: Vec<Document>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl DocumentSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, doc: Document) -> Result<()> {
        if doc.id.is_empty() {
            return Err(Error::MissingField { field: "id".into() });
        }
        if self.index.contains_key(&doc.id) {
            return Err(Error::DuplicateId { id: doc.id });
        }
        self.index.insert(doc.id.clone(), self.docs.len());
        self.docs.push(doc);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Document> {
        self.docs.iter()
    }

    pub fn get(&self, i: usize) -> &Document {
        &self.docs[i]
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn by_id(&self, id: &str) -> Option<&Document> {
        self.position(id).map(|i| &self.docs[i])
    }

    /// Rebuild the id index, e.g. after deserialization.
    pub fn reindex(&mut self) -> Result<()> {
        self.index.clear();
        for (i, d) in self.docs.iter().enumerate() {
            if self.index.insert(d.id.clone(), i).is_some() {
                return Err(Error::DuplicateId { id: d.id.clone() });
            }
        }
        Ok(())
    }
}

impl FromIterator<Document> for Result<DocumentSet> {
    fn from_iter<I: IntoIterator<Item = Document>>(iter: I) -> Self {
        let mut set = DocumentSet::new();
        for d in iter {
            set.push(d)?;
        }
        Ok(set)
    }
}

/// Input file format for [`load_documents`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Jsonl,
    Csv,
}

/// Load documents from a JSONL or CSV file.
///
/// Returns the set plus any warnings (e.g. an empty input file). Duplicate
/// ids and malformed records are hard errors with the offending line number.
pub fn load_documents(path: &Path, format: InputFormat) -> Result<(DocumentSet, Vec<String>)> {
    let mut warnings = Vec::new();
    let mut set = DocumentSet::new();
    match format {
        InputFormat::Jsonl => {
            let reader = BufReader::new(std::fs::File::open(path)?);
            for (lineno, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let value: serde_json::Value =
                    serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                        line: lineno + 1,
                        message: e.to_string(),
                    })?;
                if value.get("id").is_none() {
                    return Err(Error::MissingField { field: "id".into() });
                }
                if value.get("abstract").is_none() {
                    return Err(Error::MissingField {
                        field: "abstract".into(),
                    });
                }
                let doc: Document =
                    serde_json::from_value(value).map_err(|e| Error::MalformedRecord {
                        line: lineno + 1,
                        message: e.to_string(),
                    })?;
                set.push(doc)?;
            }
        }
        InputFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .flexible(false)
                .from_path(path)?;
            let headers = reader.headers()?.clone();
            let col = |name: &str| headers.iter().position(|h| h == name);
            let (id_col, abstract_col) = match (col("id"), col("abstract")) {
                (Some(i), Some(a)) => (i, a),
                (None, _) => return Err(Error::MissingField { field: "id".into() }),
                (_, None) => {
                    return Err(Error::MissingField {
                        field: "abstract".into(),
                    })
                }
            };
            let title_col = col("title");
            let authors_col = col("authors");
            let doi_col = col("doi");
            let year_col = col("year");
            let label_col = col("label");
            for (recno, record) in reader.records().enumerate() {
                let record = record?;
                let lineno = recno + 2; // header is line 1
                let get = |c: Option<usize>| {
                    c.and_then(|c| record.get(c))
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                };
                let year = match get(year_col) {
                    Some(s) => Some(s.parse::<i32>().map_err(|_| Error::MalformedRecord {
                        line: lineno,
                        message: format!("year '{s}' is not an integer"),
                    })?),
                    None => None,
                };
                let label = match get(label_col) {
                    Some("0") => Some(0),
                    Some("1") => Some(1),
                    Some(other) => {
                        return Err(Error::MalformedRecord {
                            line: lineno,
                            message: format!("label '{other}' is not 0 or 1"),
                        })
                    }
                    None => None,
                };
                set.push(Document {
                    id: get(Some(id_col)).unwrap_or_default().to_string(),
                    title: get(title_col).unwrap_or_default().to_string(),
                    abstract_text: get(Some(abstract_col)).unwrap_or_default().to_string(),
                    authors: get(authors_col).map(String::from),
                    doi: get(doi_col).map(String::from),
                    year,
                    label,
                })?;
            }
        }
    }
    if set.is_empty() {
        warnings.push(format!("{}: no documents loaded", path.display()));
    }
    Ok((set, warnings))
}

/// The term universe shared by every weight vector downstream.
/// Terms are ordered by descending corpus frequency, ties lexicographic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Vocabulary {
    terms: Vec<String>,
    corpus_freq: Vec<u64>,
    doc_freq: Vec<u32>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    fn from_parts(terms: Vec<String>, corpus_freq: Vec<u64>, doc_freq: Vec<u32>) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary {
            terms,
            corpus_freq,
            doc_freq,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, i: usize) -> &str {
        &self.terms[i]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn corpus_freq(&self, i: usize) -> u64 {
        self.corpus_freq[i]
    }

    pub fn doc_freq(&self, i: usize) -> u32 {
        self.doc_freq[i]
    }

    /// Rebuild the term index, e.g. after deserialization.
    pub fn reindex(&mut self) {
        self.index = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
    }

    /// Ranked frequency table (term, corpus count, document frequency).
    /// This doubles as word-cloud data for external renderers.
    pub fn frequency_table(&self) -> impl Iterator<Item = (&str, u64, u32)> {
        self.terms
            .iter()
            .zip(&self.corpus_freq)
            .zip(&self.doc_freq)
            .map(|((t, &c), &d)| (t.as_str(), c, d))
    }
}

/// Build the vocabulary over a document set.
///
/// Keeps terms with corpus frequency >= `min_count` and document frequency
/// <= `max_doc_frac * |docs|`.
pub fn build_vocabulary(
    docs: &DocumentSet,
    pre: &Preprocessor,
    min_count: u64,
    max_doc_frac: f64,
) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut corpus_freq: HashMap<String, u64> = HashMap::new();
    let mut doc_freq: HashMap<String, u32> = HashMap::new();
    for doc in docs.iter() {
        let tokens = pre.tokens(&doc.full_text());
        let mut seen: HashMap<&str, ()> = HashMap::new();
        for t in &tokens {
            *corpus_freq.entry(t.clone()).or_insert(0) += 1;
            if seen.insert(t, ()).is_none() {
                *doc_freq.entry(t.clone()).or_insert(0) += 1;
            }
        }
    }
    let df_limit = max_doc_frac * docs.len() as f64;
    let mut kept: Vec<(String, u64, u32)> = corpus_freq
        .into_iter()
        .filter(|(_, c)| *c >= min_count)
        .map(|(t, c)| {
            let df = doc_freq[&t];
            (t, c, df)
        })
        .filter(|(_, _, df)| (*df as f64) <= df_limit)
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let (terms, freqs, dfs) = kept.into_iter().fold(
        (Vec::new(), Vec::new(), Vec::new()),
        |(mut t, mut c, mut d), (term, cf, df)| {
            t.push(term);
            c.push(cf);
            d.push(df);
            (t, c, d)
        },
    );
    Ok(Vocabulary::from_parts(terms, freqs, dfs))
}

/// Sparse row-major count matrix: each row holds (term index, count) pairs
/// sorted by term index.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SparseMatrix {
    rows: Vec<Vec<(u32, u32)>>,
    cols: usize,
}

impl SparseMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[(u32, u32)] {
        &self.rows[r]
    }

    pub fn row_sum(&self, r: usize) -> u64 {
        self.rows[r].iter().map(|&(_, c)| c as u64).sum()
    }

    pub fn total(&self) -> u64 {
        (0..self.n_rows()).map(|r| self.row_sum(r)).sum()
    }
}

/// Preprocessed documents, their shared vocabulary, token streams and the
/// document-term matrix. Immutable once built.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub documents: DocumentSet,
    pub vocabulary: Vocabulary,
    pub dtm: SparseMatrix,
    /// Per-document in-vocabulary token index sequence, in text order.
    /// Rows of `dtm` are exactly the bag form of these streams.
    pub streams: Vec<Vec<u32>>,
    /// Ids of documents dropped because no token survived the pipeline
    /// and the vocabulary filters.
    pub skipped: Vec<String>,
}

impl Corpus {
    pub fn n_docs(&self) -> usize {
        self.documents.len()
    }

    pub fn doc_id(&self, i: usize) -> &str {
        &self.documents.get(i).id
    }

    pub fn doc_index(&self, id: &str) -> Option<usize> {
        self.documents.position(id)
    }

    /// A corpus over a row subset, in the given order, sharing the same
    /// vocabulary. Used to carve the modeling corpus out of the full one.
    pub fn subset(&self, rows: &[usize]) -> Result<Corpus> {
        let mut documents = DocumentSet::new();
        let mut dtm_rows = Vec::with_capacity(rows.len());
        let mut streams = Vec::with_capacity(rows.len());
        for &r in rows {
            documents.push(self.documents.get(r).clone())?;
            dtm_rows.push(self.dtm.rows[r].clone());
            streams.push(self.streams[r].clone());
        }
        if documents.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok(Corpus {
            documents,
            vocabulary: self.vocabulary.clone(),
            dtm: SparseMatrix {
                rows: dtm_rows,
                cols: self.dtm.cols,
            },
            streams,
            skipped: Vec::new(),
        })
    }
}

/// Build the corpus: tokenize each document, keep in-vocabulary tokens, and
/// exclude documents that end up empty (their ids are recorded in
/// `skipped`).
pub fn build_dtm(docs: &DocumentSet, vocab: Vocabulary, pre: &Preprocessor) -> Result<Corpus> {
    let mut admitted = DocumentSet::new();
    let mut rows = Vec::new();
    let mut streams = Vec::new();
    let mut skipped = Vec::new();
    for doc in docs.iter() {
        let stream: Vec<u32> = pre
            .tokens(&doc.full_text())
            .iter()
            .filter_map(|t| vocab.index_of(t))
            .map(|i| i as u32)
            .collect();
        if stream.is_empty() {
            skipped.push(doc.id.clone());
            continue;
        }
        let mut counts: HashMap<u32, u32> = HashMap::new();
        for &t in &stream {
            *counts.entry(t).or_insert(0) += 1;
        }
        let mut row: Vec<(u32, u32)> = counts.into_iter().collect();
        row.sort_unstable_by_key(|&(t, _)| t);
        admitted.push(doc.clone())?;
        rows.push(row);
        streams.push(stream);
    }
    if admitted.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let cols = vocab.len();
    Ok(Corpus {
        documents: admitted,
        vocabulary: vocab,
        dtm: SparseMatrix { rows, cols },
        streams,
        skipped,
    })
}
