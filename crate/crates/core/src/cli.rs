//! Command-line front end. Exit codes: 0 success, 1 pipeline failure,
//! 2 usage or configuration error.
//!
//! Settings are merged in order: `--config` file, then the
//! `OPINIONFORGE_BACKEND_URL` environment variable, then flags.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::backend::server;
use crate::backend::MockBackend;
use crate::pipeline::{self, RunConfig, RunFailure};
use crate::report::{self, ReportLabels};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "opinionforge", version, about = "Question-driven review summarization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse, clean and deduplicate reviews into corpus.jsonl.
    Ingest(RunArgs),
    /// Extract per-aspect opinion spans into opinions.jsonl.
    Extract(RunArgs),
    /// Run the whole pipeline: summaries.json plus report.{json,csv,md}.
    Summarize(RunArgs),
    /// Score an existing summaries.json against the input corpus.
    Eval {
        #[arg(long)]
        summaries: PathBuf,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Serve the deterministic mock backend over the wire protocol.
    MockServe {
        #[arg(long, default_value = "127.0.0.1:8765")]
        addr: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON list of {question, context, answer} QA fixtures.
        #[arg(long)]
        fixtures: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        workers: usize,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Flat `key = value` config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, short)]
    input: Option<String>,
    #[arg(long)]
    product: Option<String>,
    #[arg(long)]
    text_field: Option<String>,
    #[arg(long)]
    rating_field: Option<String>,
    #[arg(long)]
    product_field: Option<String>,
    #[arg(long)]
    remove_stopwords: bool,
    #[arg(long)]
    strip_symbols_numbers: bool,
    #[arg(long)]
    stem: bool,
    /// Shorthand for all three preprocessing steps.
    #[arg(long)]
    preprocess: bool,
    /// Aspect list, one per line; `!` keeps case, `#` comments.
    #[arg(long)]
    aspects: Option<String>,
    /// on|off
    #[arg(long)]
    opinion_extraction: Option<String>,
    /// sequential|joint
    #[arg(long)]
    decoder: Option<String>,
    #[arg(long)]
    strict_spans: bool,
    #[arg(long)]
    min_confidence: Option<String>,
    /// groupwise|single_shot|fused
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    max_group_size: Option<String>,
    #[arg(long)]
    cluster_threshold: Option<String>,
    #[arg(long)]
    max_input_tokens: Option<String>,
    #[arg(long)]
    max_output_tokens: Option<String>,
    /// mock|http
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    base_url: Option<String>,
    #[arg(long)]
    timeout_ms: Option<String>,
    #[arg(long)]
    max_retries: Option<String>,
    #[arg(long)]
    backoff_ms: Option<String>,
    #[arg(long)]
    max_concurrency: Option<String>,
    /// QA fixtures for the mock backend.
    #[arg(long)]
    fixtures: Option<String>,
    /// Backend for the final fused pass; defaults to --backend.
    #[arg(long)]
    second_backend: Option<String>,
    #[arg(long)]
    second_base_url: Option<String>,
    #[arg(long, short)]
    output_dir: Option<String>,
    #[arg(long)]
    seed: Option<String>,
}

impl RunArgs {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut pairs = Vec::new();
        let values: [(&'static str, &Option<String>); 24] = [
            ("input", &self.input),
            ("product", &self.product),
            ("text_field", &self.text_field),
            ("rating_field", &self.rating_field),
            ("product_field", &self.product_field),
            ("aspects", &self.aspects),
            ("opinion_extraction", &self.opinion_extraction),
            ("decoder", &self.decoder),
            ("min_confidence", &self.min_confidence),
            ("mode", &self.mode),
            ("max_group_size", &self.max_group_size),
            ("cluster_threshold", &self.cluster_threshold),
            ("max_input_tokens", &self.max_input_tokens),
            ("max_output_tokens", &self.max_output_tokens),
            ("backend", &self.backend),
            ("base_url", &self.base_url),
            ("timeout_ms", &self.timeout_ms),
            ("max_retries", &self.max_retries),
            ("backoff_ms", &self.backoff_ms),
            ("max_concurrency", &self.max_concurrency),
            ("fixtures", &self.fixtures),
            ("second_backend", &self.second_backend),
            ("second_base_url", &self.second_base_url),
            ("output_dir", &self.output_dir),
        ];
        for (key, value) in values {
            if let Some(v) = value {
                pairs.push((key, v.clone()));
            }
        }
        if let Some(seed) = &self.seed {
            pairs.push(("seed", seed.clone()));
        }
        let flags = [
            ("remove_stopwords", self.remove_stopwords || self.preprocess),
            ("strip_symbols_numbers", self.strip_symbols_numbers || self.preprocess),
            ("stem", self.stem || self.preprocess),
            ("strict_spans", self.strict_spans),
        ];
        for (key, on) in flags {
            if on {
                pairs.push((key, "true".into()));
            }
        }
        pairs
    }

    fn into_config(self) -> Result<RunConfig, String> {
        let mut config = RunConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            config
                .apply_file_text(&text)
                .map_err(|e| format!("{}: {e}", path.display()))?;
        }
        config.apply_env();
        for (key, value) in self.pairs() {
            config.set(key, &value).map_err(|e| e.to_string())?;
        }
        config.validate().map_err(|e| e.to_string())?;
        Ok(config)
    }
}

fn failure(f: RunFailure) -> i32 {
    eprintln!("error: {f}");
    EXIT_FAILURE
}

fn labels(config: &RunConfig) -> ReportLabels {
    ReportLabels {
        opinion_extraction: config.opinion_extraction,
        model: config.summarizer_mode.label().to_string(),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };

    match cli.command {
        Command::MockServe {
            addr,
            seed,
            fixtures,
            workers,
        } => mock_serve(&addr, seed, fixtures, workers),
        Command::Ingest(args) => with_config(args, |config| match pipeline::run_ingest(&config) {
            Ok((corpus, _)) => {
                println!("{corpus}");
                EXIT_OK
            }
            Err(f) => failure(f),
        }),
        Command::Extract(args) => with_config(args, |config| match pipeline::run_extract(&config) {
            Ok((spans, _)) => {
                println!(
                    "{} opinion spans written to {}",
                    spans.len(),
                    config.output_dir.join(pipeline::OPINIONS_FILE).display()
                );
                EXIT_OK
            }
            Err(f) => failure(f),
        }),
        Command::Summarize(args) => with_config(args, |config| match pipeline::run(&config) {
            Ok((report, _)) => {
                print!("{}", report::to_markdown(&report, &labels(&config)));
                EXIT_OK
            }
            Err(f) => failure(f),
        }),
        Command::Eval { summaries, args } => {
            with_config(args, |config| match pipeline::run_eval(&config, &summaries) {
                Ok((report, _)) => {
                    print!("{}", report::to_markdown(&report, &labels(&config)));
                    EXIT_OK
                }
                Err(f) => failure(f),
            })
        }
    }
}

fn with_config(args: RunArgs, f: impl FnOnce(RunConfig) -> i32) -> i32 {
    match args.into_config() {
        Ok(config) => f(config),
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn mock_serve(addr: &str, seed: u64, fixtures: Option<PathBuf>, workers: usize) -> i32 {
    let mut mock = MockBackend::new(seed);
    if let Some(path) = fixtures {
        mock = match mock.with_fixtures_file(&path) {
            Ok(m) => m,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
        };
    }
    let handle = match server::serve(Arc::new(mock), addr, workers) {
        Ok(h) => h,
        Err(e) => {
            eprintln!("error: cannot bind {addr}: {e}");
            return EXIT_FAILURE;
        }
    };
    println!("mock backend listening on {}", handle.url());
    let _ = std::io::stdout().flush();
    handle.join();
    EXIT_OK
}
