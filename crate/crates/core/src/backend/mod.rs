//! The four neural capabilities the pipeline needs, behind one trait.
//!
//! [`MockBackend`] answers deterministically from hashes and small lexicons so
//! whole runs are reproducible without models. [`HttpBackend`] talks to an
//! inference sidecar over the JSON protocol in [`wire`]; [`server`] exposes any
//! backend over the same protocol.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::mrc::{QaTokenization, SpanDistribution};

mod http;
mod mock;
pub mod server;
pub mod wire;

pub use http::HttpBackend;
pub use mock::{mock_embed, mock_qa, mock_sentiment, mock_summarize, MockBackend, QaFixture, MOCK_EMBED_DIM};

/// Number of sentiment classes (0 through 5).
pub const SENTIMENT_CLASSES: usize = 6;

pub type SentimentProbs = [f64; SENTIMENT_CLASSES];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BackendError {
    #[error("{endpoint} unavailable after {attempts} attempt(s): {last_error}")]
    Unavailable {
        endpoint: String,
        attempts: u32,
        last_error: String,
    },
    #[error("protocol violation on {endpoint}: {message}")]
    Protocol { endpoint: String, message: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("backend configuration: {0}")]
    Config(String),
}

/// Packed question/context tokens plus pointer distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct QaOutput {
    pub tokenization: QaTokenization,
    pub distribution: SpanDistribution,
}

pub trait ModelBackend: Send + Sync {
    fn qa(&self, question: &str, context: &str) -> Result<QaOutput, BackendError>;

    fn summarize(&self, text: &str, max_tokens: usize) -> Result<String, BackendError>;

    /// One vector per sentence, all of the same dimension.
    fn embed(&self, sentences: &[String]) -> Result<Vec<Vec<f64>>, BackendError>;

    /// Probabilities over sentiment classes 0..=5.
    fn sentiment(&self, text: &str) -> Result<SentimentProbs, BackendError>;

    fn health(&self) -> Result<(), BackendError> {
        Ok(())
    }
}

impl<T: ModelBackend + ?Sized> ModelBackend for Arc<T> {
    fn qa(&self, question: &str, context: &str) -> Result<QaOutput, BackendError> {
        (**self).qa(question, context)
    }

    fn summarize(&self, text: &str, max_tokens: usize) -> Result<String, BackendError> {
        (**self).summarize(text, max_tokens)
    }

    fn embed(&self, sentences: &[String]) -> Result<Vec<Vec<f64>>, BackendError> {
        (**self).embed(sentences)
    }

    fn sentiment(&self, text: &str) -> Result<SentimentProbs, BackendError> {
        (**self).sentiment(text)
    }

    fn health(&self) -> Result<(), BackendError> {
        (**self).health()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Mock,
    Http,
}

impl std::str::FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mock" => Ok(BackendKind::Mock),
            "http" => Ok(BackendKind::Http),
            other => Err(format!("unknown backend `{other}` (expected mock|http)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub base_url: Option<String>,
    pub timeout_ms: u64,
    pub max_retries: u32,
    /// First retry delay; doubles on every further attempt.
    pub backoff_ms: u64,
    /// In-flight HTTP request limit.
    pub max_concurrency: usize,
    pub seed: u64,
    pub fixtures_path: Option<PathBuf>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Mock,
            base_url: None,
            timeout_ms: 30_000,
            max_retries: 3,
            backoff_ms: 250,
            max_concurrency: 4,
            seed: 0,
            fixtures_path: None,
        }
    }
}

impl BackendConfig {
    pub fn mock(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn http(base_url: impl Into<String>) -> Self {
        Self {
            kind: BackendKind::Http,
            base_url: Some(base_url.into()),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.timeout_ms == 0 {
            return Err(BackendError::Config("timeout must be positive".into()));
        }
        if self.max_concurrency == 0 {
            return Err(BackendError::Config("max_concurrency must be positive".into()));
        }
        if self.kind == BackendKind::Http && self.base_url.as_deref().is_none_or(str::is_empty) {
            return Err(BackendError::Config("http backend needs a base_url".into()));
        }
        Ok(())
    }
}

/// Instantiates the configured backend.
pub fn from_config(config: &BackendConfig) -> Result<Arc<dyn ModelBackend>, BackendError> {
    config.validate()?;
    Ok(match config.kind {
        BackendKind::Mock => {
            let mut mock = MockBackend::new(config.seed);
            if let Some(path) = &config.fixtures_path {
                mock = mock.with_fixtures_file(path)?;
            }
            Arc::new(mock)
        }
        BackendKind::Http => Arc::new(HttpBackend::new(config)?),
    })
}

/// Class with the highest probability; ties resolve to the lower class.
pub fn argmax_class(probs: &SentimentProbs) -> u8 {
    let mut best = 0;
    for (i, p) in probs.iter().enumerate() {
        if *p > probs[best] {
            best = i;
        }
    }
    best as u8
}
