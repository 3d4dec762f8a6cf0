//! End-to-end orchestration: ingest, questions, extraction, grouping,
//! summarization and evaluation, with artifacts and a run manifest written
//! to the output directory.
//!
//! Every entry point writes `manifest.json` exactly once, also when a stage
//! fails. A failed run keeps the artifacts written before the failure.

mod config;

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aspects::{default_aspects, generate_questions, parse_aspects, Aspect};
use crate::backend::{self, BackendError, ModelBackend};
use crate::condense::{
    group_reviews, summarize_group, CondenseError, GroupKey, GroupingMode, SummaryGroup,
};
use crate::ingest::{parse_reviews_file, write_corpus_jsonl, Corpus, IngestError};
use crate::metrics::{evaluate, EvalItem, EvalReport, MetricsError};
use crate::mrc::{extract_opinions, MrcError, OpinionSpan};
use crate::report::{self, ReportLabels};

pub use crate::condense::SummarizerMode;
pub use config::{parse_config_text, ConfigError, RunConfig, BACKEND_URL_ENV, MOCK_CLUSTER_THRESHOLD};

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const OPINIONS_FILE: &str = "opinions.jsonl";
pub const SUMMARIES_FILE: &str = "summaries.json";
pub const REPORT_JSON_FILE: &str = "report.json";
pub const REPORT_CSV_FILE: &str = "report.csv";
pub const REPORT_MD_FILE: &str = "report.md";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("preprocessing emptied every review")]
    EmptyAfterPreprocessing,
    #[error("aspects: {0}")]
    Aspects(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Extraction(#[from] MrcError),
    #[error("group {group}: {source}")]
    Condense { group: GroupKey, source: CondenseError },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("summaries: {0}")]
    Summaries(String),
    #[error("report: {0}")]
    Report(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One entry of `summaries.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub group_key: GroupKey,
    pub sources_count: usize,
    /// Distinct reviews the summary was generated from. Optional on input;
    /// `eval` re-derives the group from the corpus when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_review_ids: Option<Vec<String>>,
    pub summary: String,
    #[serde(default)]
    pub chunk_summaries: Vec<String>,
}

impl SummaryRecord {
    pub fn from_group(group: &SummaryGroup) -> Self {
        Self {
            group_key: group.key.clone(),
            sources_count: group.sources.len(),
            source_review_ids: Some(group.source_review_ids.clone()),
            summary: group.summary.clone().unwrap_or_default(),
            chunk_summaries: group.chunk_summaries.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub product_id: String,
    pub lines_read: usize,
    pub kept: usize,
    pub dropped_malformed: usize,
    pub dropped_duplicates: usize,
    pub dropped_other_product: usize,
    /// Reviews dropped because preprocessing left no tokens, or merged as
    /// duplicates afterwards.
    pub dropped_by_preprocessing: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub millis: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_stage: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub config: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus: Option<CorpusStats>,
    pub stages: Vec<StageRecord>,
    /// File names relative to the output directory.
    pub artifacts: Vec<String>,
}

/// A run that stopped at `stage`. The manifest describing it has already been
/// written, unless the output directory itself was unusable.
#[derive(Debug)]
pub struct RunFailure {
    pub stage: String,
    pub error: PipelineError,
    pub manifest: Box<RunManifest>,
}

impl fmt::Display for RunFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage `{}` failed: {}", self.stage, self.error)
    }
}

impl std::error::Error for RunFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Tracks stages and artifacts of one run and owns the manifest.
struct Recorder {
    out_dir: PathBuf,
    manifest: RunManifest,
}

impl Recorder {
    fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            out_dir: config.output_dir.clone(),
            manifest: RunManifest {
                command: command.to_string(),
                status: RunStatus::Ok,
                failed_stage: None,
                error: None,
                config: config.echo(),
                corpus: None,
                stages: Vec::new(),
                artifacts: Vec::new(),
            },
        }
    }

    fn stage<T>(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut Vec<String>) -> Result<T, PipelineError>,
    ) -> Result<T, (String, PipelineError)> {
        let started = Instant::now();
        let mut errors = Vec::new();
        let result = f(&mut errors);
        self.manifest.stages.push(StageRecord {
            name: name.to_string(),
            millis: started.elapsed().as_millis() as u64,
            errors,
        });
        result.map_err(|e| (name.to_string(), e))
    }

    fn write(&mut self, name: &str, contents: &[u8]) -> Result<(), PipelineError> {
        let path = self.out_dir.join(name);
        fs::write(&path, contents).map_err(io_err(&path))?;
        self.manifest.artifacts.push(name.to_string());
        Ok(())
    }

    fn write_manifest(&self) -> Result<(), PipelineError> {
        let path = self.out_dir.join(MANIFEST_FILE);
        let mut json = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        json.push('\n');
        fs::write(&path, json).map_err(io_err(&path))
    }

    fn finish<T>(
        mut self,
        result: Result<T, (String, PipelineError)>,
    ) -> Result<(T, RunManifest), RunFailure> {
        match result {
            Ok(value) => match self.write_manifest() {
                Ok(()) => Ok((value, self.manifest)),
                Err(error) => Err(RunFailure {
                    stage: "manifest".into(),
                    error,
                    manifest: Box::new(self.manifest),
                }),
            },
            Err((stage, error)) => {
                self.manifest.status = RunStatus::Failed;
                self.manifest.failed_stage = Some(stage.clone());
                self.manifest.error = Some(error.to_string());
                // The stage error is the one worth reporting.
                let _ = self.write_manifest();
                Err(RunFailure {
                    stage,
                    error,
                    manifest: Box::new(self.manifest),
                })
            }
        }
    }
}

/// Parses the input and applies preprocessing.
pub fn load_corpus(config: &RunConfig) -> Result<(Corpus, CorpusStats), PipelineError> {
    let path = config.input_path.as_ref().ok_or(ConfigError::Missing("input"))?;
    let raw = parse_reviews_file(path, config.product_filter.as_deref(), &config.fields)?;
    let (corpus, dropped) = if config.preprocessing.any() {
        let before = raw.len();
        let (processed, _) = raw.preprocessed(config.preprocessing);
        let dropped = before - processed.len();
        (processed, dropped)
    } else {
        (raw, 0)
    };
    let stats = CorpusStats {
        product_id: corpus.product_id.clone(),
        lines_read: corpus.lines_read,
        kept: corpus.len(),
        dropped_malformed: corpus.dropped_malformed,
        dropped_duplicates: corpus.dropped_duplicates,
        dropped_other_product: corpus.dropped_other_product,
        dropped_by_preprocessing: dropped,
    };
    if corpus.is_empty() {
        return Err(PipelineError::EmptyAfterPreprocessing);
    }
    Ok((corpus, stats))
}

/// The configured aspect list, or the built-in one.
pub fn load_aspects(config: &RunConfig) -> Result<Vec<Aspect>, PipelineError> {
    match &config.aspects_path {
        None => Ok(default_aspects()),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            parse_aspects(&text).map_err(|e| PipelineError::Aspects(e.to_string()))
        }
    }
}

/// All-reviews and rating groups, plus aspect groups when spans are given.
/// Ordered all-reviews, rating1..rating5, then aspects in list order.
pub fn build_groups(
    corpus: &Corpus,
    spans: Option<&[OpinionSpan]>,
    aspects: &[Aspect],
) -> Vec<SummaryGroup> {
    let mut groups = group_reviews(corpus, spans, GroupingMode::AllReviews, aspects);
    groups.extend(group_reviews(corpus, spans, GroupingMode::Rating, aspects));
    if spans.is_some() {
        groups.extend(group_reviews(corpus, spans, GroupingMode::Aspect, aspects));
    }
    groups
}

/// Summarizes every group in parallel, filling `summary` and
/// `chunk_summaries`. Skipped chunks are appended to `errors`.
pub fn summarize_groups(
    groups: &mut [SummaryGroup],
    config: &RunConfig,
    first: &dyn ModelBackend,
    second: &dyn ModelBackend,
    errors: &mut Vec<String>,
) -> Result<(), PipelineError> {
    let settings = config.summarize_settings();
    let outcomes: Vec<_> = groups
        .par_iter()
        .map(|g| summarize_group(g, config.summarizer_mode, first, second, &settings))
        .collect();
    for (group, outcome) in groups.iter_mut().zip(outcomes) {
        let outcome = outcome.map_err(|source| PipelineError::Condense {
            group: group.key.clone(),
            source,
        })?;
        group.chunk_summaries = outcome.chunk_summaries;
        group.summary = Some(outcome.summary);
        errors.extend(outcome.errors);
    }
    Ok(())
}

/// Scores summarized groups. ROUGE references are the full texts of each
/// group's distinct source reviews.
pub fn evaluate_groups(
    corpus: &Corpus,
    groups: &[SummaryGroup],
    backend: &dyn ModelBackend,
    config_echo: serde_json::Value,
) -> Result<EvalReport, PipelineError> {
    let texts: HashMap<&str, &str> =
        corpus.reviews.iter().map(|r| (r.id.as_str(), r.text.as_str())).collect();
    let items = groups
        .iter()
        .map(|g| {
            let source_reviews = g
                .source_review_ids
                .iter()
                .map(|id| {
                    texts.get(id.as_str()).copied().ok_or_else(|| {
                        PipelineError::Summaries(format!("group {}: unknown review id {id}", g.key))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(EvalItem {
                key: g.key.to_string(),
                summary: g.summary.as_deref().unwrap_or(""),
                member_ratings: &g.member_ratings,
                source_reviews,
            })
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    Ok(evaluate(&items, backend, config_echo)?)
}

/// Turns `summaries.json` records back into groups over `corpus`. Records
/// without review ids are re-derived: all-reviews and rating groups from the
/// corpus, aspect groups by running extraction for that aspect.
pub fn resolve_records(
    corpus: &Corpus,
    records: &[SummaryRecord],
    aspects: &[Aspect],
    backend: &dyn ModelBackend,
    config: &RunConfig,
) -> Result<Vec<SummaryGroup>, PipelineError> {
    let ratings: HashMap<&str, u8> = corpus.reviews.iter().map(|r| (r.id.as_str(), r.rating)).collect();
    records
        .iter()
        .map(|record| {
            let ids: Vec<String> = match &record.source_review_ids {
                Some(ids) => ids.clone(),
                None => derive_ids(corpus, &record.group_key, aspects, backend, config)?,
            };
            let mut group = SummaryGroup::new(record.group_key.clone());
            for id in ids {
                let rating = *ratings.get(id.as_str()).ok_or_else(|| {
                    PipelineError::Summaries(format!(
                        "group {}: review {id} is not in the corpus",
                        record.group_key
                    ))
                })?;
                if !group.source_review_ids.contains(&id) {
                    group.source_review_ids.push(id);
                    group.member_ratings.push(rating);
                }
            }
            if group.source_review_ids.is_empty() {
                return Err(PipelineError::Summaries(format!(
                    "group {} has no source reviews",
                    record.group_key
                )));
            }
            group.chunk_summaries = record.chunk_summaries.clone();
            group.summary = Some(record.summary.clone());
            Ok(group)
        })
        .collect()
}

fn derive_ids(
    corpus: &Corpus,
    key: &GroupKey,
    aspects: &[Aspect],
    backend: &dyn ModelBackend,
    config: &RunConfig,
) -> Result<Vec<String>, PipelineError> {
    let ids = match key {
        GroupKey::AllReviews => corpus.reviews.iter().map(|r| r.id.clone()).collect(),
        GroupKey::Rating(r) => corpus
            .reviews
            .iter()
            .filter(|rev| rev.rating == *r)
            .map(|rev| rev.id.clone())
            .collect(),
        GroupKey::Aspect(k) => {
            let aspect = aspects
                .iter()
                .find(|a| &a.key == k)
                .cloned()
                .unwrap_or_else(|| Aspect::new(k));
            let queries = generate_questions(std::slice::from_ref(&aspect))
                .map_err(|e| PipelineError::Aspects(e.to_string()))?;
            let extraction = extract_opinions(corpus, &queries, backend, &config.extract_options())?;
            let mut ids: Vec<String> = Vec::new();
            for span in extraction.spans {
                if !ids.contains(&span.review_id) {
                    ids.push(span.review_id);
                }
            }
            ids
        }
    };
    Ok(ids)
}

fn opinions_jsonl(spans: &[OpinionSpan]) -> Vec<u8> {
    let mut out = Vec::new();
    for span in spans {
        serde_json::to_writer(&mut out, span).expect("span serializes");
        out.push(b'\n');
    }
    out
}

fn write_reports(rec: &mut Recorder, report: &EvalReport, config: &RunConfig) -> Result<(), PipelineError> {
    let labels = ReportLabels {
        opinion_extraction: config.opinion_extraction,
        model: config.summarizer_mode.label().to_string(),
    };
    let csv = report::to_csv(report, &labels).map_err(|e| PipelineError::Report(e.to_string()))?;
    rec.write(REPORT_JSON_FILE, report::to_json(report).as_bytes())?;
    rec.write(REPORT_CSV_FILE, csv.as_bytes())?;
    rec.write(REPORT_MD_FILE, report::to_markdown(report, &labels).as_bytes())
}

fn prepare(command: &str, config: &RunConfig) -> Result<Recorder, RunFailure> {
    let rec = Recorder::new(command, config);
    let setup = config
        .validate()
        .map_err(PipelineError::from)
        .and_then(|()| fs::create_dir_all(&config.output_dir).map_err(io_err(&config.output_dir)));
    match setup {
        Ok(()) => Ok(rec),
        Err(error) => {
            let mut manifest = rec.manifest;
            manifest.status = RunStatus::Failed;
            manifest.failed_stage = Some("config".into());
            manifest.error = Some(error.to_string());
            Err(RunFailure {
                stage: "config".into(),
                error,
                manifest: Box::new(manifest),
            })
        }
    }
}

type BackendPair = (Arc<dyn ModelBackend>, Arc<dyn ModelBackend>);

fn backends(config: &RunConfig) -> Result<BackendPair, PipelineError> {
    let (a, b) = config.backend_configs();
    let first = backend::from_config(&a)?;
    let second = if a == b { Arc::clone(&first) } else { backend::from_config(&b)? };
    Ok((first, second))
}

/// Runs the full pipeline with backends built from `config`.
pub fn run(config: &RunConfig) -> Result<(EvalReport, RunManifest), RunFailure> {
    let rec = prepare("summarize", config)?;
    match backends(config) {
        Ok((first, second)) => summarize_run(rec, config, first.as_ref(), second.as_ref()),
        Err(e) => rec.finish(Err(("backend".into(), e))),
    }
}

/// [`run`] with caller-supplied backends. `second` is used only by fused mode.
pub fn run_with_backends(
    config: &RunConfig,
    first: &dyn ModelBackend,
    second: &dyn ModelBackend,
) -> Result<(EvalReport, RunManifest), RunFailure> {
    let rec = prepare("summarize", config)?;
    summarize_run(rec, config, first, second)
}

fn summarize_run(
    mut rec: Recorder,
    config: &RunConfig,
    first: &dyn ModelBackend,
    second: &dyn ModelBackend,
) -> Result<(EvalReport, RunManifest), RunFailure> {
    let result = (|| {
        rec.stage("health", |_| {
            first.health()?;
            if config.summarizer_mode == SummarizerMode::Fused {
                second.health()?;
            }
            Ok(())
        })?;
        let (corpus, stats) = rec.stage("ingest", |_| load_corpus(config))?;
        rec.manifest.corpus = Some(stats);
        let aspects = rec.stage("aspects", |_| load_aspects(config))?;

        let spans = if config.opinion_extraction {
            let extraction = rec.stage("extract", |errors| {
                let queries =
                    generate_questions(&aspects).map_err(|e| PipelineError::Aspects(e.to_string()))?;
                let extraction = extract_opinions(&corpus, &queries, first, &config.extract_options())?;
                errors.extend(
                    extraction
                        .errors
                        .iter()
                        .map(|e| format!("review {} / {}: {}", e.review_id, e.question, e.message)),
                );
                Ok(extraction)
            })?;
            rec.write(OPINIONS_FILE, &opinions_jsonl(&extraction.spans))
                .map_err(|e| ("write_opinions".to_string(), e))?;
            Some(extraction.spans)
        } else {
            None
        };

        let mut groups = rec.stage("group", |_| Ok(build_groups(&corpus, spans.as_deref(), &aspects)))?;
        rec.stage("summarize", |errors| {
            summarize_groups(&mut groups, config, first, second, errors)
        })?;
        let records: Vec<SummaryRecord> = groups.iter().map(SummaryRecord::from_group).collect();
        let mut summaries = serde_json::to_string_pretty(&records).expect("records serialize");
        summaries.push('\n');
        rec.write(SUMMARIES_FILE, summaries.as_bytes())
            .map_err(|e| ("write_summaries".to_string(), e))?;

        let report = rec.stage("evaluate", |_| {
            evaluate_groups(&corpus, &groups, first, config.echo())
        })?;
        write_reports(&mut rec, &report, config).map_err(|e| ("write_reports".to_string(), e))?;
        Ok(report)
    })();
    rec.finish(result)
}

/// Parses and preprocesses the input, writing `corpus.jsonl`.
pub fn run_ingest(config: &RunConfig) -> Result<(Corpus, RunManifest), RunFailure> {
    let mut rec = prepare("ingest", config)?;
    let result = (|| {
        let (corpus, stats) = rec.stage("ingest", |_| load_corpus(config))?;
        rec.manifest.corpus = Some(stats);
        let mut buf = Vec::new();
        write_corpus_jsonl(&corpus, &mut buf).expect("writing to memory");
        rec.write(CORPUS_FILE, &buf).map_err(|e| ("write_corpus".to_string(), e))?;
        Ok(corpus)
    })();
    rec.finish(result)
}

/// Ingest plus opinion extraction, writing `opinions.jsonl`.
pub fn run_extract(config: &RunConfig) -> Result<(Vec<OpinionSpan>, RunManifest), RunFailure> {
    let mut rec = prepare("extract", config)?;
    let result = (|| {
        let (first, _) = rec.stage("backend", |_| backends(config))?;
        rec.stage("health", |_| Ok(first.health()?))?;
        let (corpus, stats) = rec.stage("ingest", |_| load_corpus(config))?;
        rec.manifest.corpus = Some(stats);
        let aspects = rec.stage("aspects", |_| load_aspects(config))?;
        let extraction = rec.stage("extract", |errors| {
            let queries = generate_questions(&aspects).map_err(|e| PipelineError::Aspects(e.to_string()))?;
            let extraction = extract_opinions(&corpus, &queries, first.as_ref(), &config.extract_options())?;
            errors.extend(extraction.errors.iter().map(|e| format!("review {}: {}", e.review_id, e.message)));
            Ok(extraction)
        })?;
        rec.write(OPINIONS_FILE, &opinions_jsonl(&extraction.spans))
            .map_err(|e| ("write_opinions".to_string(), e))?;
        Ok(extraction.spans)
    })();
    rec.finish(result)
}

/// Scores an existing `summaries.json` against the corpus in `config`.
pub fn run_eval(
    config: &RunConfig,
    summaries_path: &Path,
) -> Result<(EvalReport, RunManifest), RunFailure> {
    let mut rec = prepare("eval", config)?;
    let result = (|| {
        let records: Vec<SummaryRecord> = rec.stage("read_summaries", |_| {
            let text = fs::read_to_string(summaries_path).map_err(io_err(summaries_path))?;
            serde_json::from_str(&text).map_err(|e| PipelineError::Summaries(e.to_string()))
        })?;
        let (first, _) = rec.stage("backend", |_| backends(config))?;
        rec.stage("health", |_| Ok(first.health()?))?;
        let (corpus, stats) = rec.stage("ingest", |_| load_corpus(config))?;
        rec.manifest.corpus = Some(stats);
        let aspects = rec.stage("aspects", |_| load_aspects(config))?;
        let groups = rec.stage("resolve", |_| {
            resolve_records(&corpus, &records, &aspects, first.as_ref(), config)
        })?;
        let report = rec.stage("evaluate", |_| {
            evaluate_groups(&corpus, &groups, first.as_ref(), config.echo())
        })?;
        write_reports(&mut rec, &report, config).map_err(|e| ("write_reports".to_string(), e))?;
        Ok(report)
    })();
    rec.finish(result)
}
