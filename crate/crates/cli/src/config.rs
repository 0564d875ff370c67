//! Project configuration: a small INI-style grammar.
//!
//! Sections in brackets, `key = value` pairs, `#` or `;` comments, blank
//! lines ignored. Lists are comma separated; integer ranges use `a..b`
//! (inclusive). Unknown sections or keys are rejected so typos surface
//! immediately.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use aspect_topics::aspects::IdfSmoothing;
use aspect_topics::corpus::{load_stopwords, PipelineConfig};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config: {}", self.0)
    }
}

type ConfigResult<T> = Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> ConfigResult<T> {
    Err(ConfigError(msg.into()))
}

/// Parsed key-value view of the file, keyed by (section, key).
struct RawConfig {
    values: BTreeMap<(String, String), String>,
}

impl RawConfig {
    fn parse(text: &str) -> ConfigResult<Self> {
        let mut values = BTreeMap::new();
        let mut section = String::new();
        for (lineno, raw_line) in text.lines().enumerate() {
            let line = match raw_line.find(['#', ';']) {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let Some(name) = name.strip_suffix(']') else {
                    return err(format!("line {}: unterminated section header", lineno + 1));
                };
                section = name.trim().to_string();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(format!("line {}: expected 'key = value'", lineno + 1));
            };
            if section.is_empty() {
                return err(format!("line {}: key outside any section", lineno + 1));
            }
            values.insert(
                (section.clone(), key.trim().to_string()),
                value.trim().to_string(),
            );
        }
        Ok(RawConfig { values })
    }

    fn take(&mut self, section: &str, key: &str) -> Option<String> {
        self.values.remove(&(section.to_string(), key.to_string()))
    }
}

fn parse_bool(section: &str, key: &str, v: &str) -> ConfigResult<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => err(format!("[{section}] {key}: '{v}' is not a boolean")),
    }
}

fn parse_num<T: std::str::FromStr>(section: &str, key: &str, v: &str) -> ConfigResult<T> {
    v.parse()
        .map_err(|_| ConfigError(format!("[{section}] {key}: '{v}' is not a valid number")))
}

/// `a..b` inclusive, or a comma-separated list of integers.
fn parse_range(section: &str, key: &str, v: &str) -> ConfigResult<Vec<usize>> {
    if let Some((lo, hi)) = v.split_once("..") {
        let lo: usize = parse_num(section, key, lo.trim())?;
        let hi: usize = parse_num(section, key, hi.trim())?;
        if lo > hi {
            return err(format!("[{section}] {key}: empty range {lo}..{hi}"));
        }
        return Ok((lo..=hi).collect());
    }
    v.split(',')
        .map(|s| parse_num(section, key, s.trim()))
        .collect()
}

#[derive(Debug, Clone)]
pub struct ScreenConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub threshold: f64,
    pub test_fraction: f64,
    pub holdout: bool,
}

#[derive(Debug, Clone)]
pub struct LdaConfig {
    pub k: usize,
    /// None means 50/K.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub k_range: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct RefineConfig {
    pub k_range: Vec<usize>,
    pub sim_threshold: f64,
}

#[derive(Debug, Clone)]
pub struct AspectsConfig {
    pub n: usize,
    pub smoothing: IdfSmoothing,
}

#[derive(Debug, Clone)]
pub struct FusionConfig {
    pub m: usize,
    pub assign_threshold: f64,
    pub tau: f64,
    pub lambda: f64,
    /// "subtopics" (default) or "primary".
    pub basis: TopicBasis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopicBasis {
    Subtopics,
    Primary,
}

#[derive(Debug, Clone)]
pub struct ProjectConfig {
    pub corpus_path: PathBuf,
    pub corpus_format: Option<String>,
    pub labels_path: Option<PathBuf>,
    pub aspects_dir: Option<PathBuf>,
    pub gold_labels_path: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub pipeline: PipelineConfig,
    pub min_count: u64,
    pub max_doc_frac: f64,
    pub screen: ScreenConfig,
    pub lda: LdaConfig,
    pub coherence: aspect_topics::topics::CoherenceConfig,
    pub refine: RefineConfig,
    pub aspects: AspectsConfig,
    pub fusion: FusionConfig,
    pub seed: u64,
    /// Provenance metadata only; retrieval happens outside this tool.
    pub search_keywords: Vec<String>,
}

impl ProjectConfig {
    pub fn load(path: &Path) -> ConfigResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> ConfigResult<Self> {
        let mut raw = RawConfig::parse(text)?;
        let resolve = |v: String| -> PathBuf {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };

        let corpus_path = raw
            .take("paths", "corpus")
            .map(resolve)
            .ok_or_else(|| ConfigError("[paths] corpus is required".into()))?;
        let corpus_format = raw.take("paths", "format");
        let labels_path = raw.take("paths", "labels").map(resolve);
        let aspects_dir = raw.take("paths", "aspects_dir").map(resolve);
        let gold_labels_path = raw.take("paths", "gold_labels").map(resolve);
        let out_dir = raw
            .take("paths", "out_dir")
            .map(resolve)
            .unwrap_or_else(|| base.join("out"));

        let mut pipeline = PipelineConfig::default();
        if let Some(v) = raw.take("pipeline", "token_pattern") {
            pipeline.token_pattern = v;
        }
        if let Some(v) = raw.take("pipeline", "stopwords") {
            pipeline.stopwords = load_stopwords(&resolve(v))
                .map_err(|e| ConfigError(format!("stopword file: {e}")))?;
        }
        if let Some(v) = raw.take("pipeline", "min_token_len") {
            pipeline.min_token_len = parse_num("pipeline", "min_token_len", &v)?;
        }
        if let Some(v) = raw.take("pipeline", "strip_urls") {
            pipeline.strip_urls = parse_bool("pipeline", "strip_urls", &v)?;
        }
        if let Some(v) = raw.take("pipeline", "strip_numbers") {
            pipeline.strip_numbers = parse_bool("pipeline", "strip_numbers", &v)?;
        }
        if let Some(v) = raw.take("pipeline", "stem") {
            pipeline.stem = parse_bool("pipeline", "stem", &v)?;
        }
        let min_count = match raw.take("pipeline", "min_count") {
            Some(v) => parse_num("pipeline", "min_count", &v)?,
            None => 2,
        };
        let max_doc_frac = match raw.take("pipeline", "max_doc_frac") {
            Some(v) => parse_num("pipeline", "max_doc_frac", &v)?,
            None => 0.95,
        };
        if !(max_doc_frac > 0.0 && max_doc_frac <= 1.0) {
            return err("[pipeline] max_doc_frac must lie in (0, 1]");
        }

        let screen = ScreenConfig {
            learning_rate: match raw.take("screen", "learning_rate") {
                Some(v) => parse_num("screen", "learning_rate", &v)?,
                None => 0.1,
            },
            epochs: match raw.take("screen", "epochs") {
                Some(v) => parse_num("screen", "epochs", &v)?,
                None => 300,
            },
            l2: match raw.take("screen", "l2") {
                Some(v) => parse_num("screen", "l2", &v)?,
                None => 1e-4,
            },
            threshold: match raw.take("screen", "threshold") {
                Some(v) => parse_num("screen", "threshold", &v)?,
                None => 0.5,
            },
            test_fraction: match raw.take("screen", "test_fraction") {
                Some(v) => parse_num("screen", "test_fraction", &v)?,
                None => 0.05,
            },
            holdout: match raw.take("screen", "holdout") {
                Some(v) => parse_bool("screen", "holdout", &v)?,
                None => true,
            },
        };

        let lda = LdaConfig {
            k: match raw.take("lda", "k") {
                Some(v) => parse_num("lda", "k", &v)?,
                None => 6,
            },
            alpha: match raw.take("lda", "alpha") {
                None => None,
                Some(v) if v == "auto" => None,
                Some(v) => Some(parse_num("lda", "alpha", &v)?),
            },
            beta: match raw.take("lda", "beta") {
                Some(v) => parse_num("lda", "beta", &v)?,
                None => 0.01,
            },
            iterations: match raw.take("lda", "iterations") {
                Some(v) => parse_num("lda", "iterations", &v)?,
                None => 1000,
            },
            burn_in: match raw.take("lda", "burn_in") {
                Some(v) => parse_num("lda", "burn_in", &v)?,
                None => 200,
            },
            k_range: match raw.take("lda", "k_range") {
                Some(v) => parse_range("lda", "k_range", &v)?,
                None => (2..=12).collect(),
            },
        };

        let coherence = aspect_topics::topics::CoherenceConfig {
            top_n: match raw.take("coherence", "top_n") {
                Some(v) => parse_num("coherence", "top_n", &v)?,
                None => 10,
            },
            window: match raw.take("coherence", "window") {
                Some(v) => parse_num("coherence", "window", &v)?,
                None => 110,
            },
            epsilon: match raw.take("coherence", "epsilon") {
                Some(v) => parse_num("coherence", "epsilon", &v)?,
                None => 1e-12,
            },
        };

        let refine = RefineConfig {
            k_range: match raw.take("refine", "k_range") {
                Some(v) => parse_range("refine", "k_range", &v)?,
                None => (2..=9).collect(),
            },
            sim_threshold: match raw.take("refine", "sim_threshold") {
                Some(v) => parse_num("refine", "sim_threshold", &v)?,
                None => 0.2,
            },
        };

        let aspects = AspectsConfig {
            n: match raw.take("aspects", "n") {
                Some(v) => parse_num("aspects", "n", &v)?,
                None => 50,
            },
            smoothing: match raw.take("aspects", "smoothing") {
                None => IdfSmoothing::PlusOne,
                Some(v) if v == "plus_one" => IdfSmoothing::PlusOne,
                Some(v) if v == "none" => IdfSmoothing::None,
                Some(v) => return err(format!("[aspects] smoothing: '{v}' (use plus_one or none)")),
            },
        };

        let fusion = FusionConfig {
            m: match raw.take("fusion", "m") {
                Some(v) => parse_num("fusion", "m", &v)?,
                None => 100,
            },
            assign_threshold: match raw.take("fusion", "assign_threshold") {
                Some(v) => parse_num("fusion", "assign_threshold", &v)?,
                None => 0.2,
            },
            tau: match raw.take("fusion", "tau") {
                Some(v) => parse_num("fusion", "tau", &v)?,
                None => 0.5,
            },
            lambda: match raw.take("fusion", "lambda") {
                Some(v) => parse_num("fusion", "lambda", &v)?,
                None => 1.0,
            },
            basis: match raw.take("fusion", "basis") {
                None => TopicBasis::Subtopics,
                Some(v) if v == "subtopics" => TopicBasis::Subtopics,
                Some(v) if v == "primary" => TopicBasis::Primary,
                Some(v) => return err(format!("[fusion] basis: '{v}' (use subtopics or primary)")),
            },
        };

        let seed = match raw.take("project", "seed") {
            Some(v) => parse_num("project", "seed", &v)?,
            None => 42,
        };
        let search_keywords = raw
            .take("project", "search_keywords")
            .map(|v| {
                v.split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect()
            })
            .unwrap_or_default();

        if let Some(((section, key), _)) = raw.values.iter().next() {
            return err(format!("unknown key [{section}] {key}"));
        }

        Ok(ProjectConfig {
            corpus_path,
            corpus_format,
            labels_path,
            aspects_dir,
            gold_labels_path,
            out_dir,
            pipeline,
            min_count,
            max_doc_frac,
            screen,
            lda,
            coherence,
            refine,
            aspects,
            fusion,
            seed,
            search_keywords,
        })
    }
}
