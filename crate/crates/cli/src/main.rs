//! Aspect-weighted topic modeling pipeline.
//!
//! Every subcommand takes `--config <file>`, reads prior-stage artifacts
//! from the output directory, writes its own, and prints one summary line.
//! Exit codes: 0 success, 1 usage error, 2 data error.

mod config;
mod heatmap;
mod manifest;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::ProjectConfig;
use stages::{CliError, Ctx};

#[derive(Parser)]
#[command(
    name = "aspect-topics",
    version,
    about = "Train, refine and aspect-tune LDA topic models over bibliographic corpora"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Project configuration file (INI-style)
    #[arg(long)]
    config: PathBuf,
    /// Override the configured output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the configured root seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Load documents, build the vocabulary and document-term matrix
    Ingest(Common),
    /// Train the relevance classifier and filter the corpus
    Screen(Common),
    /// Select the uncertainty-sampled test set
    SelectTest(Common),
    /// Train the LDA topic model by collapsed Gibbs sampling
    Train(Common),
    /// Train one model per candidate K and rank them by C-V coherence
    CoherenceScan(Common),
    /// Split primary topics into subtopics by silhouette-guided clustering
    Subtopics(Common),
    /// Emit the subtopic similarity network (DOT + CSV)
    Network(Common),
    /// Derive TF-IDF-weighted keyword sets from aspect texts
    Aspects(Common),
    /// Compute the aspect x topic relevance matrix
    Relevance(Common),
    /// Build one aspect-topic model per aspect
    Atm(Common),
    /// Infer test documents into the initial and aspect-topic models
    Infer(Common),
    /// Cluster test documents against aspect-topic centroids
    Cluster(Common),
    /// Compare initial and aspect inference per document and topic
    Compare(Common),
    /// Inject relevant test documents into the model for one aspect
    Finetune {
        #[command(flatten)]
        common: Common,
        /// Aspect name (as produced by the aspects stage)
        #[arg(long)]
        aspect: String,
    },
    /// Emit heatmaps for the relevance matrix and model comparisons
    Report(Common),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Ingest(c)
            | Command::Screen(c)
            | Command::SelectTest(c)
            | Command::Train(c)
            | Command::CoherenceScan(c)
            | Command::Subtopics(c)
            | Command::Network(c)
            | Command::Aspects(c)
            | Command::Relevance(c)
            | Command::Atm(c)
            | Command::Infer(c)
            | Command::Cluster(c)
            | Command::Compare(c)
            | Command::Report(c) => c,
            Command::Finetune { common, .. } => common,
        }
    }
}

fn run(cli: Cli) -> Result<String, CliError> {
    let common = cli.command.common();
    let cfg = ProjectConfig::load(&common.config)?;
    let ctx = Ctx::new(cfg, common.out.clone(), common.seed);
    match &cli.command {
        Command::Ingest(_) => stages::run_ingest(&ctx),
        Command::Screen(_) => stages::run_screen(&ctx),
        Command::SelectTest(_) => stages::run_select_test(&ctx),
        Command::Train(_) => stages::run_train(&ctx),
        Command::CoherenceScan(_) => stages::run_coherence_scan(&ctx),
        Command::Subtopics(_) => stages::run_subtopics(&ctx),
        Command::Network(_) => stages::run_network(&ctx),
        Command::Aspects(_) => stages::run_aspects(&ctx),
        Command::Relevance(_) => stages::run_relevance(&ctx),
        Command::Atm(_) => stages::run_atm(&ctx),
        Command::Infer(_) => stages::run_infer(&ctx),
        Command::Cluster(_) => stages::run_cluster(&ctx),
        Command::Compare(_) => stages::run_compare(&ctx),
        Command::Finetune { aspect, .. } => stages::run_finetune(&ctx, aspect),
        Command::Report(_) => stages::run_report(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap reports --help/--version through its error type
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Data(msg)) => {
            eprintln!("data error: {msg}");
            ExitCode::from(2)
        }
    }
}
