//! Question-driven review summarization.
//!
//! Reviews are ingested from line-delimited JSON, each review is asked one
//! question per product aspect ("How is battery?") through an extractive QA
//! model, and the extracted opinion spans are summarized per star rating and
//! per aspect. Chunk summaries are condensed into one paragraph by clustering
//! sentence embeddings, and the result is scored for sentiment consistency and
//! ROUGE overlap against the reviews it came from.
//!
//! Every neural capability sits behind [`backend::ModelBackend`]. The crate
//! ships a deterministic [`backend::MockBackend`] and an HTTP client for an
//! external inference sidecar speaking the JSON wire protocol in
//! [`backend::wire`].
//!
//! The runnable programs under `examples/` walk through each stage; the
//! `opinionforge` binary wires the same stages into a CLI.

pub mod aspects;
pub mod backend;
pub mod cli;
pub mod condense;
pub mod ingest;
pub mod metrics;
pub mod mrc;
pub mod pipeline;
pub mod report;
pub mod text;

pub use aspects::{default_aspects, generate_questions, Aspect, AspectQuery, QuestionVariant};
pub use backend::{BackendConfig, BackendError, BackendKind, HttpBackend, MockBackend, ModelBackend};
pub use condense::{GroupKey, SummaryGroup};
pub use ingest::{Corpus, Review};
pub use metrics::{EvalReport, RougeScore};
pub use mrc::{Decoder, OpinionSpan};
pub use pipeline::{run, RunConfig, RunManifest, SummarizerMode};
