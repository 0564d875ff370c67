//! Text preprocessing: lowercasing, URL removal, regexp tokenization,
//! stopword/number/length filtering and Porter stemming.

use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::porter;
use crate::error::{Error, Result};

/// Bundled English stopword list, one token per line, `#` comments allowed.
pub const BUNDLED_STOPWORDS: &str = include_str!("stopwords_en.txt");

/// Configuration of the token pipeline shared by corpus and aspect text.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Regular expression matched against the lowercased, URL-stripped text;
    /// every match becomes a candidate token.
    pub token_pattern: String,
    /// Lowercase tokens dropped before stemming.
    pub stopwords: BTreeSet<String>,
    /// Tokens shorter than this are dropped (measured before stemming).
    pub min_token_len: usize,
    pub strip_urls: bool,
    pub strip_numbers: bool,
    pub stem: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            token_pattern: "[a-zA-Z]+".to_string(),
            stopwords: parse_stopwords(BUNDLED_STOPWORDS),
            min_token_len: 2,
            strip_urls: true,
            strip_numbers: true,
            stem: true,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_token_len < 1 {
            return Err(Error::MalformedRecord {
                line: 0,
                message: "min_token_len must be at least 1".into(),
            });
        }
        Regex::new(&self.token_pattern).map_err(|e| Error::MalformedRecord {
            line: 0,
            message: format!("token_pattern does not compile: {e}"),
        })?;
        if let Some(w) = self.stopwords.iter().find(|w| **w != w.to_lowercase()) {
            return Err(Error::MalformedRecord {
                line: 0,
                message: format!("stopword '{w}' is not lowercase"),
            });
        }
        Ok(())
    }
}

/// Parse a stopword list: one token per line, blank lines and `#` comments
/// ignored, everything lowercased.
pub fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.to_lowercase())
        .collect()
}

/// Load a stopword file in the same format.
pub fn load_stopwords(path: &Path) -> Result<BTreeSet<String>> {
    let mut text = String::new();
    std::fs::File::open(path)?.read_to_string(&mut text)?;
    Ok(parse_stopwords(&text))
}

/// A compiled pipeline. Construction validates the configuration once;
/// tokenization is pure and can run on any thread.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    cfg: PipelineConfig,
    token_re: Regex,
    url_re: Regex,
}

impl Preprocessor {
    pub fn new(cfg: PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        let token_re = Regex::new(&cfg.token_pattern).expect("validated above");
        // http(s) schemes and bare www. spans, applied to lowercased text.
        let url_re = Regex::new(r"(https?://\S+)|(\bwww\.\S+)").expect("static pattern");
        Ok(Preprocessor {
            cfg,
            token_re,
            url_re,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    /// Run the full pipeline on a text. Empty output is allowed.
    pub fn tokens(&self, text: &str) -> Vec<String> {
        let lowered = text.to_lowercase();
        let stripped = if self.cfg.strip_urls {
            self.url_re.replace_all(&lowered, " ")
        } else {
            std::borrow::Cow::Borrowed(lowered.as_str())
        };
        self.token_re
            .find_iter(&stripped)
            .map(|m| m.as_str().to_string())
            .filter(|t| t.len() >= self.cfg.min_token_len)
            .filter(|t| !self.cfg.stopwords.contains(t))
            .filter(|t| !self.cfg.strip_numbers || !t.bytes().all(|b| b.is_ascii_digit()))
            .map(|t| if self.cfg.stem { porter::stem(&t) } else { t })
            .collect()
    }
}
