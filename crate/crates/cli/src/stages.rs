//! Stage implementations. Each stage reads prior artifacts from the output
//! directory, writes its own artifacts plus a manifest, and returns a
//! one-line summary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use aspect_topics::aspects::{load_aspect_texts, tfidf_keywords};
use aspect_topics::corpus::{self, InputFormat, Preprocessor};
use aspect_topics::fusion::{
    self, AspectTopicModel, InferenceModel, InferenceResult, TopicKeywords,
};
use aspect_topics::persist;
use aspect_topics::refine;
use aspect_topics::rng::derive_seed;
use aspect_topics::screen;
use aspect_topics::topics::{self, LdaHyperparams, LdaTemplate};

use crate::config::{ProjectConfig, TopicBasis};
use crate::heatmap::{write_heatmap_csv, write_heatmap_svg, HeatmapSpec};
use crate::manifest::{staleness_warnings, write_manifest};

/// Usage errors exit with 1, data errors with 2.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
        }
    }
}

impl From<aspect_topics::Error> for CliError {
    fn from(e: aspect_topics::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<crate::config::ConfigError> for CliError {
    fn from(e: crate::config::ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

type StageResult = Result<String, CliError>;

pub struct Ctx {
    pub cfg: ProjectConfig,
    pub seed: u64,
}

impl Ctx {
    pub fn new(mut cfg: ProjectConfig, out: Option<PathBuf>, seed: Option<u64>) -> Self {
        if let Some(out) = out {
            cfg.out_dir = out;
        }
        let seed = seed.unwrap_or(cfg.seed);
        Ctx { cfg, seed }
    }

    fn dir(&self, stage: &str) -> Result<PathBuf, CliError> {
        let dir = self.cfg.out_dir.join(stage);
        std::fs::create_dir_all(&dir)?;
        Ok(dir)
    }

    fn artifact(&self, stage: &str, name: &str) -> PathBuf {
        self.cfg.out_dir.join(stage).join(name)
    }

    /// A prerequisite artifact; missing files are data errors naming the
    /// path.
    fn require(&self, stage: &str, name: &str) -> Result<PathBuf, CliError> {
        let path = self.artifact(stage, name);
        if !path.exists() {
            return Err(CliError::Data(format!(
                "missing prerequisite artifact: {}",
                path.display()
            )));
        }
        Ok(path)
    }

    fn preprocessor(&self) -> Result<Preprocessor, CliError> {
        Ok(Preprocessor::new(self.cfg.pipeline.clone())?)
    }

    fn warn_stale(&self, stage: &str) {
        let dir = self.cfg.out_dir.join(stage);
        let out = self.cfg.out_dir.clone();
        for w in staleness_warnings(&dir, move |name| {
            for sub in ["corpus", "screen", "topics", "refine", "aspects", "fusion"] {
                let candidate = out.join(sub).join(name);
                if candidate.exists() {
                    return Some(candidate);
                }
            }
            None
        }) {
            eprintln!("warning: {w}");
        }
    }
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

/// File-name slug for aspect-derived artifacts.
fn slug(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

// ---------------------------------------------------------------- ingest

pub fn run_ingest(ctx: &Ctx) -> StageResult {
    let path = &ctx.cfg.corpus_path;
    if !path.exists() {
        return Err(CliError::Data(format!(
            "missing prerequisite artifact: {}",
            path.display()
        )));
    }
    let format = match ctx.cfg.corpus_format.as_deref() {
        Some("jsonl") => InputFormat::Jsonl,
        Some("csv") => InputFormat::Csv,
        Some(other) => {
            return Err(CliError::Usage(format!(
                "[paths] format: '{other}' (use jsonl or csv)"
            )))
        }
        None => match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => InputFormat::Csv,
            _ => InputFormat::Jsonl,
        },
    };
    let (docs, warnings) = corpus::load_documents(path, format)?;
    warn_all(&warnings);
    let pre = ctx.preprocessor()?;
    let vocab = corpus::build_vocabulary(&docs, &pre, ctx.cfg.min_count, ctx.cfg.max_doc_frac)?;
    let built = corpus::build_dtm(&docs, vocab, &pre)?;
    if !built.skipped.is_empty() {
        eprintln!(
            "warning: {} documents had no in-vocabulary tokens and were excluded: {}",
            built.skipped.len(),
            built.skipped.join(", ")
        );
    }
    let dir = ctx.dir("corpus")?;
    persist::save_corpus(&built, &dir.join("corpus.json"))?;
    // provenance only: the search keywords that produced the input corpus
    #[derive(serde::Serialize)]
    struct ProjectMeta<'a> {
        search_keywords: &'a [String],
        seed: u64,
    }
    let mut meta = serde_json::to_string_pretty(&ProjectMeta {
        search_keywords: &ctx.cfg.search_keywords,
        seed: ctx.seed,
    })
    .map_err(|e| CliError::Data(e.to_string()))?;
    meta.push('\n');
    std::fs::write(dir.join("project.json"), meta)?;
    let mut w = csv::Writer::from_path(dir.join("vocabulary.csv"))?;
    w.write_record(["term", "count", "doc_freq"])?;
    for (term, count, df) in built.vocabulary.frequency_table() {
        w.write_record([term, &count.to_string(), &df.to_string()])?;
    }
    w.flush()?;
    write_manifest("ingest", &dir, &[path])?;
    Ok(format!(
        "ingest: {} documents ({} skipped), vocabulary of {} terms -> {}",
        built.n_docs(),
        built.skipped.len(),
        built.vocabulary.len(),
        dir.display()
    ))
}

fn load_corpus(ctx: &Ctx) -> Result<corpus::Corpus, CliError> {
    let path = ctx.require("corpus", "corpus.json")?;
    Ok(persist::load_corpus(&path)?)
}

// ---------------------------------------------------------------- screen

fn load_label_csv(path: &Path) -> Result<BTreeMap<String, u8>, CliError> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let id_col = headers.iter().position(|h| h == "id");
    let label_col = headers.iter().position(|h| h == "label");
    let (Some(id_col), Some(label_col)) = (id_col, label_col) else {
        return Err(CliError::Data(format!(
            "{}: needs 'id' and 'label' columns",
            path.display()
        )));
    };
    let mut labels = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let id = record.get(id_col).unwrap_or("").to_string();
        let label = match record.get(label_col).map(str::trim) {
            Some("0") => 0,
            Some("1") => 1,
            other => {
                return Err(CliError::Data(format!(
                    "{}: label '{}' is not 0 or 1",
                    path.display(),
                    other.unwrap_or("")
                )))
            }
        };
        labels.insert(id, label);
    }
    Ok(labels)
}

pub fn run_screen(ctx: &Ctx) -> StageResult {
    let corpus = load_corpus(ctx)?;
    let labels_path = ctx.cfg.labels_path.clone().ok_or_else(|| {
        CliError::Usage("[paths] labels is required for the screen stage".into())
    })?;
    if !labels_path.exists() {
        return Err(CliError::Data(format!(
            "missing prerequisite artifact: {}",
            labels_path.display()
        )));
    }
    let labels = load_label_csv(&labels_path)?;
    let config = screen::TrainConfig {
        learning_rate: ctx.cfg.screen.learning_rate,
        epochs: ctx.cfg.screen.epochs,
        l2: ctx.cfg.screen.l2,
        seed: derive_seed(ctx.seed, "screen"),
    };
    let (clf, warnings) = screen::train_classifier::<f64>(&corpus, &labels, config)?;
    warn_all(&warnings);
    let dir = ctx.dir("screen")?;
    persist::save_classifier(&clf, corpus.vocabulary.terms(), &dir.join("classifier.json"))?;
    let mut w = csv::Writer::from_path(dir.join("predictions.csv"))?;
    w.write_record(["id", "probability"])?;
    for i in 0..corpus.n_docs() {
        let p = clf.predict_counts(corpus.dtm.row(i))?;
        w.write_record([corpus.doc_id(i), &format!("{p}")])?;
    }
    w.flush()?;
    let report = screen::filter_relevant(&clf, &corpus, ctx.cfg.screen.threshold)?;
    std::fs::write(
        dir.join("relevant_ids.txt"),
        report.kept_ids.join("\n") + "\n",
    )?;
    write_manifest(
        "screen",
        &dir,
        &[&ctx.artifact("corpus", "corpus.json"), &labels_path],
    )?;
    Ok(format!(
        "screen: trained on {} labels (final loss {:.6}); {} of {} documents kept at threshold {}",
        labels.len(),
        clf.final_loss,
        report.kept_count,
        report.input_count,
        ctx.cfg.screen.threshold
    ))
}

pub fn run_select_test(ctx: &Ctx) -> StageResult {
    let corpus = load_corpus(ctx)?;
    let clf_path = ctx.require("screen", "classifier.json")?;
    let clf = persist::load_classifier::<f64>(&clf_path, corpus.vocabulary.terms())?;
    let test = screen::select_uncertain(&clf, &corpus, ctx.cfg.screen.test_fraction)?;
    let dir = ctx.dir("screen")?;
    let mut w = csv::Writer::from_path(dir.join("test_set.csv"))?;
    w.write_record(["id", "score"])?;
    for (id, score) in test.ids.iter().zip(&test.scores) {
        w.write_record([id.as_str(), &format!("{score}")])?;
    }
    w.flush()?;
    Ok(format!(
        "select-test: {} documents selected by uncertainty (fraction {})",
        test.ids.len(),
        ctx.cfg.screen.test_fraction
    ))
}

fn read_id_list(path: &Path) -> Result<Vec<String>, CliError> {
    Ok(std::fs::read_to_string(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

fn read_test_ids(ctx: &Ctx) -> Result<Vec<String>, CliError> {
    let path = ctx.require("screen", "test_set.csv")?;
    let mut reader = csv::Reader::from_path(&path)?;
    let mut ids = Vec::new();
    for record in reader.records() {
        let record = record?;
        if let Some(id) = record.get(0) {
            ids.push(id.to_string());
        }
    }
    Ok(ids)
}

/// Rows of the modeling corpus: relevant documents when screening ran,
/// minus the held-out test set when configured.
fn modeling_rows(ctx: &Ctx, corpus: &corpus::Corpus) -> Result<Vec<usize>, CliError> {
    let relevant = ctx.artifact("screen", "relevant_ids.txt");
    let mut rows: Vec<usize> = if relevant.exists() {
        read_id_list(&relevant)?
            .iter()
            .filter_map(|id| corpus.doc_index(id))
            .collect()
    } else {
        (0..corpus.n_docs()).collect()
    };
    let test_set = ctx.artifact("screen", "test_set.csv");
    if ctx.cfg.screen.holdout && test_set.exists() {
        let held: std::collections::BTreeSet<usize> = read_test_ids(ctx)?
            .iter()
            .filter_map(|id| corpus.doc_index(id))
            .collect();
        rows.retain(|r| !held.contains(r));
    }
    if rows.is_empty() {
        return Err(CliError::Data(
            "no documents left for modeling after screening/hold-out".into(),
        ));
    }
    Ok(rows)
}

// ---------------------------------------------------------------- topics

pub fn run_train(ctx: &Ctx) -> StageResult {
    ctx.warn_stale("topics");
    let corpus = load_corpus(ctx)?;
    let rows = modeling_rows(ctx, &corpus)?;
    let modeling = corpus.subset(&rows)?;
    let k = ctx.cfg.lda.k;
    let hp = LdaHyperparams {
        k,
        alpha: ctx.cfg.lda.alpha.unwrap_or(50.0 / k.max(1) as f64),
        beta: ctx.cfg.lda.beta,
        iterations: ctx.cfg.lda.iterations,
        burn_in: ctx.cfg.lda.burn_in,
        seed: derive_seed(ctx.seed, "train"),
    };
    let model = topics::fit_lda::<f64>(&modeling, hp)?;
    let dir = ctx.dir("topics")?;
    persist::save_topic_model(&model, None, &dir.join("model.json"))?;
    let mut w = csv::Writer::from_path(dir.join("top_words.csv"))?;
    w.write_record(["topic", "rank", "term", "weight"])?;
    for j in 0..model.n_topics() {
        for (rank, (term, weight)) in model.top_words(j, 10).iter().enumerate() {
            w.write_record([
                &format!("PT{}", j + 1),
                &(rank + 1).to_string(),
                term,
                &format!("{weight}"),
            ])?;
        }
    }
    w.flush()?;
    write_manifest("train", &dir, &[&ctx.artifact("corpus", "corpus.json")])?;
    Ok(format!(
        "train: LDA with K = {} over {} documents, {} terms (seed {})",
        k,
        modeling.n_docs(),
        modeling.vocabulary.len(),
        model.hp.seed
    ))
}

pub fn run_coherence_scan(ctx: &Ctx) -> StageResult {
    let corpus = load_corpus(ctx)?;
    let rows = modeling_rows(ctx, &corpus)?;
    let modeling = corpus.subset(&rows)?;
    let template = LdaTemplate::<f64> {
        alpha: ctx.cfg.lda.alpha,
        beta: ctx.cfg.lda.beta,
        iterations: ctx.cfg.lda.iterations,
        burn_in: ctx.cfg.lda.burn_in,
        seed: derive_seed(ctx.seed, "coherence-scan"),
    };
    let selection = topics::select_k(&modeling, &ctx.cfg.lda.k_range, &template, &ctx.cfg.coherence)?;
    let dir = ctx.dir("topics")?;
    let mut w = csv::WriterBuilder::new()
        .flexible(true)
        .from_path(dir.join("coherence_scan.csv"))?;
    w.write_record(["K", "mean_cv", "per_topic_cv..."])?;
    for point in &selection.curve {
        let mut record = vec![point.k.to_string(), format!("{}", point.mean_cv)];
        record.extend(point.per_topic.iter().map(|v| format!("{v}")));
        w.write_record(&record)?;
    }
    w.flush()?;
    let best = selection
        .curve
        .iter()
        .find(|p| p.k == selection.best_k)
        .expect("best K is on the curve");
    Ok(format!(
        "coherence-scan: best K = {} (mean C-V {:.4}) over candidates {:?}",
        selection.best_k, best.mean_cv, ctx.cfg.lda.k_range
    ))
}

// ---------------------------------------------------------------- refine

fn model_subset_corpus(
    corpus: &corpus::Corpus,
    model: &topics::TopicModel<f64>,
) -> Result<corpus::Corpus, CliError> {
    let rows: Result<Vec<usize>, CliError> = model
        .doc_ids
        .iter()
        .map(|id| {
            corpus.doc_index(id).ok_or_else(|| {
                CliError::Data(format!("model document '{id}' is not in the corpus"))
            })
        })
        .collect();
    Ok(corpus.subset(&rows?)?)
}

pub fn run_subtopics(ctx: &Ctx) -> StageResult {
    ctx.warn_stale("refine");
    let corpus = load_corpus(ctx)?;
    let model_path = ctx.require("topics", "model.json")?;
    let (model, _) = persist::load_topic_model::<f64>(&model_path)?;
    let modeling = model_subset_corpus(&corpus, &model)?;
    let primary = refine::assign_primary(&model);
    let dir = ctx.dir("refine")?;
    let mut curves = csv::Writer::from_path(dir.join("silhouette_curves.csv"))?;
    curves.write_record(["topic", "k", "mean_silhouette"])?;
    let mut clusterings = Vec::new();
    for p in 0..model.n_topics() {
        let members: Vec<usize> = (0..modeling.n_docs()).filter(|&i| primary[i] == p).collect();
        if members.is_empty() {
            eprintln!("warning: primary topic PT{} has no documents; skipped", p + 1);
            continue;
        }
        let candidates: Vec<usize> = ctx
            .cfg
            .refine
            .k_range
            .iter()
            .copied()
            .filter(|&k| k >= 2 && k <= members.len())
            .collect();
        if candidates.is_empty() {
            eprintln!(
                "warning: primary topic PT{} has only {} documents; kept as a single subtopic",
                p + 1,
                members.len()
            );
            let labels = vec![0usize; members.len()];
            clusterings.push((p, members, labels));
            continue;
        }
        let selection = refine::select_subtopics::<f64>(&modeling, &members, p, &candidates)?;
        for &(k, score) in &selection.curve {
            curves.write_record([&format!("PT{}", p + 1), &k.to_string(), &format!("{score}")])?;
        }
        clusterings.push((p, members, selection.labels));
    }
    curves.flush()?;
    let sub = refine::build_subtopic_model::<f64>(&modeling, &clusterings)?;
    persist::save_subtopic_model(&sub, None, &dir.join("subtopics.json"))?;
    let mut w = csv::Writer::from_path(dir.join("subtopic_summary.csv"))?;
    w.write_record(["id", "parent", "mass", "word1", "word2", "word3"])?;
    for (j, s) in sub.subtopics.iter().enumerate() {
        let top: Vec<String> = sub.top_words(j, 3).into_iter().map(|(t, _)| t).collect();
        let word = |i: usize| top.get(i).cloned().unwrap_or_default();
        w.write_record([
            s.id.as_str(),
            &format!("PT{}", s.parent + 1),
            &format!("{}", s.mass),
            &word(0),
            &word(1),
            &word(2),
        ])?;
    }
    w.flush()?;
    write_manifest(
        "subtopics",
        &dir,
        &[&ctx.artifact("corpus", "corpus.json"), &model_path],
    )?;
    Ok(format!(
        "subtopics: {} subtopics from {} primary topics",
        sub.n_subtopics(),
        model.n_topics()
    ))
}

pub fn run_network(ctx: &Ctx) -> StageResult {
    let sub_path = ctx.require("refine", "subtopics.json")?;
    let (sub, _) = persist::load_subtopic_model::<f64>(&sub_path)?;
    let net = refine::topic_network(&sub, ctx.cfg.refine.sim_threshold)?;
    let dir = ctx.dir("refine")?;
    std::fs::write(dir.join("network.dot"), net.to_dot())?;
    let mut w = csv::Writer::from_path(dir.join("network_edges.csv"))?;
    w.write_record(["src", "dst", "cosine"])?;
    for &(i, j, weight) in &net.edges {
        w.write_record([
            net.nodes[i].id.as_str(),
            net.nodes[j].id.as_str(),
            &format!("{weight}"),
        ])?;
    }
    w.flush()?;
    Ok(format!(
        "network: {} nodes, {} edges at similarity threshold {}",
        net.nodes.len(),
        net.edges.len(),
        ctx.cfg.refine.sim_threshold
    ))
}

// ---------------------------------------------------------------- aspects

pub fn run_aspects(ctx: &Ctx) -> StageResult {
    let aspects_dir = ctx.cfg.aspects_dir.clone().ok_or_else(|| {
        CliError::Usage("[paths] aspects_dir is required for the aspects stage".into())
    })?;
    if !aspects_dir.exists() {
        return Err(CliError::Data(format!(
            "missing prerequisite artifact: {}",
            aspects_dir.display()
        )));
    }
    let pre = ctx.preprocessor()?;
    let texts = load_aspect_texts(&aspects_dir, &pre)?;
    let keywords = tfidf_keywords::<f64>(&texts, ctx.cfg.aspects.n, ctx.cfg.aspects.smoothing)?;
    let dir = ctx.dir("aspects")?;
    #[derive(serde::Serialize)]
    struct KeywordOut<'a> {
        term: &'a str,
        weight: f64,
    }
    #[derive(serde::Serialize)]
    struct AspectOut<'a> {
        name: &'a str,
        keywords: Vec<KeywordOut<'a>>,
    }
    let json: Vec<AspectOut> = keywords
        .iter()
        .map(|a| AspectOut {
            name: &a.name,
            keywords: a
                .keywords
                .iter()
                .map(|(t, w)| KeywordOut { term: t, weight: *w })
                .collect(),
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&json).map_err(|e| CliError::Data(e.to_string()))?;
    text.push('\n');
    std::fs::write(dir.join("aspects.json"), text)?;
    let mut w = csv::Writer::from_path(dir.join("aspects.csv"))?;
    w.write_record(["aspect", "term", "weight", "rank"])?;
    for a in &keywords {
        for (rank, (term, weight)) in a.keywords.iter().enumerate() {
            w.write_record([
                a.name.as_str(),
                term,
                &format!("{weight}"),
                &(rank + 1).to_string(),
            ])?;
        }
    }
    w.flush()?;
    write_manifest("aspects", &dir, &[])?;
    Ok(format!(
        "aspects: {} aspects weighted (top {} keywords each)",
        keywords.len(),
        ctx.cfg.aspects.n
    ))
}

fn load_aspect_keywords(ctx: &Ctx) -> Result<Vec<aspect_topics::AspectKeywords>, CliError> {
    let path = ctx.require("aspects", "aspects.json")?;
    #[derive(serde::Deserialize)]
    struct KeywordIn {
        term: String,
        weight: f64,
    }
    #[derive(serde::Deserialize)]
    struct AspectIn {
        name: String,
        keywords: Vec<KeywordIn>,
    }
    let text = std::fs::read_to_string(&path)?;
    let parsed: Vec<AspectIn> = serde_json::from_str(&text).map_err(|e| {
        CliError::Data(format!("{}: {e}", path.display()))
    })?;
    Ok(parsed
        .into_iter()
        .map(|a| aspect_topics::AspectKeywords {
            name: a.name,
            keywords: a.keywords.into_iter().map(|k| (k.term, k.weight)).collect(),
        })
        .collect())
}

// ---------------------------------------------------------------- fusion

/// Topic keyword sets of the configured basis (subtopics by default).
fn basis_keywords(ctx: &Ctx) -> Result<Vec<TopicKeywords<f64>>, CliError> {
    let m = ctx.cfg.fusion.m;
    match ctx.cfg.fusion.basis {
        TopicBasis::Subtopics => {
            let path = ctx.require("refine", "subtopics.json")?;
            let (sub, _) = persist::load_subtopic_model::<f64>(&path)?;
            Ok(fusion::subtopic_keywords(&sub, m))
        }
        TopicBasis::Primary => {
            let path = ctx.require("topics", "model.json")?;
            let (model, _) = persist::load_topic_model::<f64>(&path)?;
            Ok(fusion::topic_keywords(&model, m))
        }
    }
}

fn basis_inference_model(ctx: &Ctx) -> Result<InferenceModel<f64>, CliError> {
    match ctx.cfg.fusion.basis {
        TopicBasis::Subtopics => {
            let path = ctx.require("refine", "subtopics.json")?;
            let (sub, _) = persist::load_subtopic_model::<f64>(&path)?;
            Ok(InferenceModel::from_subtopic_model(&sub))
        }
        TopicBasis::Primary => {
            let path = ctx.require("topics", "model.json")?;
            let (model, _) = persist::load_topic_model::<f64>(&path)?;
            Ok(InferenceModel::from_topic_model(&model))
        }
    }
}

pub fn run_relevance(ctx: &Ctx) -> StageResult {
    let aspects = load_aspect_keywords(ctx)?;
    let topics = basis_keywords(ctx)?;
    let matrix = fusion::relevance_scores(&aspects, &topics);
    let dir = ctx.dir("fusion")?;
    let mut w = csv::Writer::from_path(dir.join("relevance.csv"))?;
    w.write_record(["aspect", "topic", "R"])?;
    for (i, aspect) in matrix.aspect_names.iter().enumerate() {
        for (j, topic) in matrix.topic_ids.iter().enumerate() {
            w.write_record([aspect.as_str(), topic, &format!("{}", matrix.get(i, j))])?;
        }
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(dir.join("relevance_terms.csv"))?;
    w.write_record(["aspect", "topic", "term", "contribution"])?;
    for aspect in &aspects {
        for topic in &topics {
            for (term, product) in fusion::term_contributions(aspect, topic) {
                w.write_record([
                    aspect.name.as_str(),
                    topic.topic_id.as_str(),
                    &term,
                    &format!("{product}"),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(format!(
        "relevance: {} x {} matrix written ({} aspects, {} topics)",
        matrix.aspect_names.len(),
        matrix.topic_ids.len(),
        matrix.aspect_names.len(),
        matrix.topic_ids.len()
    ))
}

pub fn run_atm(ctx: &Ctx) -> StageResult {
    let aspects = load_aspect_keywords(ctx)?;
    let topics = basis_keywords(ctx)?;
    let dir = ctx.dir("fusion")?;
    let mut built = 0;
    for aspect in &aspects {
        let atm = fusion::build_atm(aspect, &topics)?;
        persist::save_atm(&atm, &dir.join(format!("atm_{}.json", slug(&aspect.name))))?;
        built += 1;
    }
    Ok(format!("atm: {built} aspect-topic models written"))
}

fn load_atms(ctx: &Ctx) -> Result<Vec<AspectTopicModel<f64>>, CliError> {
    let aspects = load_aspect_keywords(ctx)?;
    let mut atms = Vec::with_capacity(aspects.len());
    for aspect in &aspects {
        let path = ctx.require("fusion", &format!("atm_{}.json", slug(&aspect.name)))?;
        atms.push(persist::load_atm::<f64>(&path)?);
    }
    Ok(atms)
}

fn test_rows(ctx: &Ctx, corpus: &corpus::Corpus) -> Result<Vec<usize>, CliError> {
    let ids = read_test_ids(ctx)?;
    ids.iter()
        .map(|id| {
            corpus.doc_index(id).ok_or_else(|| {
                CliError::Data(format!("test document '{id}' is not in the corpus"))
            })
        })
        .collect()
}

pub fn run_infer(ctx: &Ctx) -> StageResult {
    let corpus = load_corpus(ctx)?;
    let rows = test_rows(ctx, &corpus)?;
    let initial = basis_inference_model(ctx)?;
    let atms = load_atms(ctx)?;
    let mut models = vec![initial];
    for atm in &atms {
        models.push(InferenceModel::from_atm(atm, &corpus.vocabulary)?);
    }
    let dir = ctx.dir("fusion")?;
    let mut w = csv::Writer::from_path(dir.join("inference.csv"))?;
    w.write_record(["doc", "topic", "weight", "model_tag"])?;
    let mut flagged = 0usize;
    for model in &models {
        for result in fusion::infer_set(&corpus, &rows, model) {
            match result.weights {
                Some(weights) => {
                    for (topic, weight) in model.topic_ids.iter().zip(&weights) {
                        w.write_record([
                            result.doc_id.as_str(),
                            topic,
                            &format!("{weight}"),
                            &result.model_tag,
                        ])?;
                    }
                }
                None => {
                    flagged += 1;
                    eprintln!(
                        "warning: document '{}' shares no term with {} (NoOverlap)",
                        result.doc_id, result.model_tag
                    );
                }
            }
        }
    }
    w.flush()?;
    Ok(format!(
        "infer: {} documents against {} models ({} NoOverlap flags)",
        rows.len(),
        models.len(),
        flagged
    ))
}

pub fn run_cluster(ctx: &Ctx) -> StageResult {
    let corpus = load_corpus(ctx)?;
    let rows = test_rows(ctx, &corpus)?;
    let atms = load_atms(ctx)?;
    let assignments =
        fusion::cluster_documents(&corpus, &rows, &atms, ctx.cfg.fusion.assign_threshold)?;
    let dir = ctx.dir("fusion")?;
    let mut w = csv::Writer::from_path(dir.join("assignments.csv"))?;
    w.write_record(["doc", "aspect", "topic", "distance", "weight", "assigned"])?;
    for a in &assignments {
        w.write_record([
            a.doc_id.as_str(),
            &a.aspect,
            &a.topic_id,
            &format!("{}", a.distance),
            &format!("{}", a.weight),
            if a.assigned { "true" } else { "false" },
        ])?;
    }
    w.flush()?;
    let assigned = assignments.iter().filter(|a| a.assigned).count();
    let mut summary = format!(
        "cluster: {} of {} documents assigned at threshold {}",
        assigned,
        assignments.len(),
        ctx.cfg.fusion.assign_threshold
    );
    if let Some(gold_path) = &ctx.cfg.gold_labels_path {
        if !gold_path.exists() {
            return Err(CliError::Data(format!(
                "missing prerequisite artifact: {}",
                gold_path.display()
            )));
        }
        let mut reader = csv::Reader::from_path(gold_path)?;
        let mut gold = BTreeMap::new();
        for record in reader.records() {
            let record = record?;
            if let (Some(id), Some(label)) = (record.get(0), record.get(1)) {
                gold.insert(id.to_string(), label.to_string());
            }
        }
        let report = fusion::purity(&assignments, &gold);
        let mut w = csv::Writer::from_path(dir.join("purity.csv"))?;
        w.write_record(["aspect", "topic", "size", "majority_label", "precision"])?;
        w.write_record([
            "OVERALL",
            "",
            &report.n_assigned.to_string(),
            "",
            &format!("{}", report.purity),
        ])?;
        for (aspect, topic, size, majority, precision) in &report.per_cluster {
            w.write_record([
                aspect.as_str(),
                topic,
                &size.to_string(),
                majority,
                &format!("{precision}"),
            ])?;
        }
        w.flush()?;
        summary.push_str(&format!("; purity {:.4}", report.purity));
    }
    Ok(summary)
}

/// Inference results grouped by model tag, plus the topic id order.
type GroupedInference = (Vec<String>, BTreeMap<String, Vec<InferenceResult<f64>>>);

/// Group inference.csv rows back into per-model result lists.
fn load_inference(ctx: &Ctx, test_ids: &[String]) -> Result<GroupedInference, CliError> {
    let path = ctx.require("fusion", "inference.csv")?;
    let mut reader = csv::Reader::from_path(&path)?;
    // tag -> doc -> (topic order, weights)
    let mut table: BTreeMap<String, BTreeMap<String, Vec<(String, f64)>>> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let (Some(doc), Some(topic), Some(weight), Some(tag)) =
            (record.get(0), record.get(1), record.get(2), record.get(3))
        else {
            return Err(CliError::Data(format!("{}: short record", path.display())));
        };
        let weight: f64 = weight
            .parse()
            .map_err(|_| CliError::Data(format!("{}: bad weight '{weight}'", path.display())))?;
        table
            .entry(tag.to_string())
            .or_default()
            .entry(doc.to_string())
            .or_default()
            .push((topic.to_string(), weight));
    }
    let initial = table
        .get("initial")
        .ok_or_else(|| CliError::Data("inference.csv has no rows for the initial model".into()))?;
    let topic_ids: Vec<String> = initial
        .values()
        .next()
        .map(|rows| rows.iter().map(|(t, _)| t.clone()).collect())
        .unwrap_or_default();
    let mut results = BTreeMap::new();
    for (tag, docs) in &table {
        let list: Vec<InferenceResult<f64>> = test_ids
            .iter()
            .map(|id| InferenceResult {
                doc_id: id.clone(),
                model_tag: tag.clone(),
                weights: docs.get(id).map(|rows| {
                    // rows were written in model topic order
                    rows.iter().map(|&(_, w)| w).collect()
                }),
            })
            .collect();
        results.insert(tag.clone(), list);
    }
    Ok((topic_ids, results))
}

pub fn run_compare(ctx: &Ctx) -> StageResult {
    let test_ids = read_test_ids(ctx)?;
    let (topic_ids, results) = load_inference(ctx, &test_ids)?;
    let initial = &results["initial"];
    let dir = ctx.dir("fusion")?;
    let mut compared = 0;
    for (tag, aspect_results) in &results {
        let Some(aspect_name) = tag.strip_prefix("aspect:") else {
            continue;
        };
        let report = fusion::compare_models(initial, aspect_results, &topic_ids)?;
        let name = slug(aspect_name);
        let mut w = csv::Writer::from_path(dir.join(format!("comparison_{name}.csv")))?;
        w.write_record(["doc", "topic", "initial", "aspect", "delta"])?;
        for row in &report.rows {
            w.write_record([
                row.doc_id.as_str(),
                &row.topic_id,
                &format!("{}", row.initial),
                &format!("{}", row.aspect),
                &format!("{}", row.delta),
            ])?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_path(dir.join(format!("movers_{name}.csv")))?;
        w.write_record(["rank", "doc", "topic", "initial", "aspect", "delta"])?;
        for (rank, row) in report.movers().into_iter().enumerate() {
            w.write_record([
                &(rank + 1).to_string(),
                row.doc_id.as_str(),
                &row.topic_id,
                &format!("{}", row.initial),
                &format!("{}", row.aspect),
                &format!("{}", row.delta),
            ])?;
        }
        w.flush()?;
        if !report.flagged.is_empty() {
            eprintln!(
                "warning: {} documents flagged NoOverlap for aspect '{aspect_name}': {}",
                report.flagged.len(),
                report.flagged.join(", ")
            );
        }
        compared += 1;
    }
    Ok(format!(
        "compare: initial vs {compared} aspect models over {} documents",
        test_ids.len()
    ))
}

pub fn run_finetune(ctx: &Ctx, aspect: &str) -> StageResult {
    let corpus = load_corpus(ctx)?;
    let rows = test_rows(ctx, &corpus)?;
    let atm_path = ctx.require("fusion", &format!("atm_{}.json", slug(aspect)))?;
    let atm = persist::load_atm::<f64>(&atm_path)?;
    let tau = ctx.cfg.fusion.tau;
    let lambda = ctx.cfg.fusion.lambda;
    let dir = ctx.dir("fusion")?;
    let (outcome, summary_rows, source_hash) = match ctx.cfg.fusion.basis {
        TopicBasis::Subtopics => {
            let path = ctx.require("refine", "subtopics.json")?;
            let (sub, _) = persist::load_subtopic_model::<f64>(&path)?;
            let (tuned, outcome) =
                fusion::fine_tune_subtopic_model(&sub, &atm, &corpus, &rows, tau, lambda)?;
            let source_hash = persist::file_hash(&path)?;
            let provenance = persist::Provenance {
                source_model_hash: source_hash.clone(),
                aspect: aspect.to_string(),
                tau,
                lambda,
                injected_doc_ids: outcome.injected_doc_ids.clone(),
            };
            persist::save_subtopic_model(
                &tuned,
                Some(provenance),
                &dir.join(format!("model_finetuned_{}.json", slug(aspect))),
            )?;
            let ids: Vec<String> = tuned.subtopics.iter().map(|s| s.id.clone()).collect();
            (outcome, ids, source_hash)
        }
        TopicBasis::Primary => {
            let path = ctx.require("topics", "model.json")?;
            let (model, _) = persist::load_topic_model::<f64>(&path)?;
            let (tuned, outcome) =
                fusion::fine_tune_topic_model(&model, &atm, &corpus, &rows, tau, lambda)?;
            let source_hash = persist::file_hash(&path)?;
            let provenance = persist::Provenance {
                source_model_hash: source_hash.clone(),
                aspect: aspect.to_string(),
                tau,
                lambda,
                injected_doc_ids: outcome.injected_doc_ids.clone(),
            };
            persist::save_topic_model(
                &tuned,
                Some(provenance),
                &dir.join(format!("model_finetuned_{}.json", slug(aspect))),
            )?;
            let ids: Vec<String> = (0..model.n_topics()).map(|j| format!("PT{}", j + 1)).collect();
            (outcome, ids, source_hash)
        }
    };
    let mut w = csv::Writer::from_path(dir.join(format!("finetune_summary_{}.csv", slug(aspect))))?;
    w.write_record(["topic", "added_mass", "entered", "exited"])?;
    let changes: BTreeMap<&str, &fusion::TopWordChange> = outcome
        .top_changes
        .iter()
        .map(|c| (c.topic_id.as_str(), c))
        .collect();
    for (topic_id, added) in summary_rows.iter().zip(&outcome.added_mass) {
        let (entered, exited) = changes
            .get(topic_id.as_str())
            .map(|c| (c.entered.join(" "), c.exited.join(" ")))
            .unwrap_or_default();
        w.write_record([topic_id.as_str(), &format!("{added}"), &entered, &exited])?;
    }
    w.flush()?;
    Ok(format!(
        "finetune: injected {} documents into aspect '{aspect}' (tau {tau}, lambda {lambda}, source {source_hash})",
        outcome.injected_doc_ids.len()
    ))
}

// ---------------------------------------------------------------- report

/// Row labels, column labels and cell values of a long-format matrix CSV.
type MatrixCsv = (Vec<String>, Vec<String>, BTreeMap<(String, String), f64>);

fn read_matrix_csv(path: &Path, key_cols: usize) -> Result<MatrixCsv, CliError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    let mut cols = Vec::new();
    let mut cells = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let (Some(r), Some(c), Some(v)) = (record.get(0), record.get(1), record.get(key_cols))
        else {
            return Err(CliError::Data(format!("{}: short record", path.display())));
        };
        let v: f64 = v
            .parse()
            .map_err(|_| CliError::Data(format!("{}: bad value '{v}'", path.display())))?;
        if !rows.contains(&r.to_string()) {
            rows.push(r.to_string());
        }
        if !cols.contains(&c.to_string()) {
            cols.push(c.to_string());
        }
        cells.insert((r.to_string(), c.to_string()), v);
    }
    Ok((rows, cols, cells))
}

pub fn run_report(ctx: &Ctx) -> StageResult {
    let dir = ctx.dir("reports")?;
    let mut emitted = 0;

    // relevance heatmap: aspects x topics
    let relevance = ctx.require("fusion", "relevance.csv")?;
    let (aspects, topics, cells) = read_matrix_csv(&relevance, 2)?;
    let values: Vec<Vec<f64>> = aspects
        .iter()
        .map(|a| {
            topics
                .iter()
                .map(|t| cells.get(&(a.clone(), t.clone())).copied().unwrap_or(0.0))
                .collect()
        })
        .collect();
    let spec = HeatmapSpec {
        row_labels: aspects.clone(),
        col_labels: topics.clone(),
        values,
    };
    write_heatmap_csv(&spec, &dir.join("relevance_heatmap.csv"))?;
    write_heatmap_svg(&spec, &dir.join("relevance_heatmap.svg"))?;
    emitted += 2;

    // per-aspect document comparison heatmaps (two bands: initial, aspect)
    let fusion_dir = ctx.cfg.out_dir.join("fusion");
    let mut comparison_files: Vec<PathBuf> = std::fs::read_dir(&fusion_dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .map(|n| n.starts_with("comparison_") && n.ends_with(".csv"))
                .unwrap_or(false)
        })
        .collect();
    comparison_files.sort();
    for path in comparison_files {
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("comparison")
            .trim_start_matches("comparison_")
            .to_string();
        let mut reader = csv::Reader::from_path(&path)?;
        let mut docs: Vec<String> = Vec::new();
        let mut topics: Vec<String> = Vec::new();
        let mut initial: BTreeMap<(String, String), f64> = BTreeMap::new();
        let mut aspect: BTreeMap<(String, String), f64> = BTreeMap::new();
        for record in reader.records() {
            let record = record?;
            let (Some(doc), Some(topic), Some(iv), Some(av)) =
                (record.get(0), record.get(1), record.get(2), record.get(3))
            else {
                return Err(CliError::Data(format!("{}: short record", path.display())));
            };
            if !docs.contains(&doc.to_string()) {
                docs.push(doc.to_string());
            }
            if !topics.contains(&topic.to_string()) {
                topics.push(topic.to_string());
            }
            let key = (doc.to_string(), topic.to_string());
            initial.insert(
                key.clone(),
                iv.parse()
                    .map_err(|_| CliError::Data(format!("{}: bad value", path.display())))?,
            );
            aspect.insert(
                key,
                av.parse()
                    .map_err(|_| CliError::Data(format!("{}: bad value", path.display())))?,
            );
        }
        let mut row_labels = Vec::with_capacity(docs.len() * 2);
        let mut values = Vec::with_capacity(docs.len() * 2);
        for (band, table) in [("initial", &initial), (name.as_str(), &aspect)] {
            for doc in &docs {
                row_labels.push(format!("{doc} ({band})"));
                values.push(
                    topics
                        .iter()
                        .map(|t| table.get(&(doc.clone(), t.clone())).copied().unwrap_or(0.0))
                        .collect(),
                );
            }
        }
        let spec = HeatmapSpec {
            row_labels,
            col_labels: topics,
            values,
        };
        write_heatmap_csv(&spec, &dir.join(format!("compare_{name}_heatmap.csv")))?;
        write_heatmap_svg(&spec, &dir.join(format!("compare_{name}_heatmap.svg")))?;
        emitted += 2;
    }
    Ok(format!("report: {emitted} heatmap artifacts -> {}", dir.display()))
}
