use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::backend::{BackendConfig, BackendKind};
use crate::condense::{SummarizeSettings, SummarizerMode, DEFAULT_CLUSTER_THRESHOLD, DEFAULT_MAX_GROUP_SIZE};
use crate::ingest::{FieldNames, PreprocessOptions};
use crate::mrc::{Decoder, ExtractOptions};

/// Overrides the primary backend's base URL.
pub const BACKEND_URL_ENV: &str = "OPINIONFORGE_BACKEND_URL";

/// Cluster threshold used with mock embeddings when none is configured.
/// Mock vectors are non-negative unit vectors, so unrelated sentences sit
/// about 1.0 to 1.2 apart and 1.5 would merge everything.
pub const MOCK_CLUSTER_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {message}")]
    BadValue { key: String, message: String },
    #[error("missing required setting `{0}`")]
    Missing(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub input_path: Option<PathBuf>,
    pub product_filter: Option<String>,
    pub fields: FieldNames,
    pub preprocessing: PreprocessOptions,
    pub aspects_path: Option<PathBuf>,
    pub opinion_extraction: bool,
    pub decoder: Decoder,
    pub strict_spans: bool,
    pub min_confidence: f64,
    pub summarizer_mode: SummarizerMode,
    pub max_group_size: usize,
    /// `None` picks 1.5 for real backends and [`MOCK_CLUSTER_THRESHOLD`]
    /// for the mock.
    pub cluster_threshold: Option<f64>,
    pub max_input_tokens: usize,
    pub max_output_tokens: usize,
    pub backend: BackendConfig,
    /// Final-pass backend for fused mode; defaults to `backend`.
    pub second_backend: Option<BackendConfig>,
    pub output_dir: PathBuf,
    /// Seed for mock backends.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input_path: None,
            product_filter: None,
            fields: FieldNames::default(),
            preprocessing: PreprocessOptions::default(),
            aspects_path: None,
            opinion_extraction: true,
            decoder: Decoder::Sequential,
            strict_spans: false,
            min_confidence: 0.0,
            summarizer_mode: SummarizerMode::Fused,
            max_group_size: DEFAULT_MAX_GROUP_SIZE,
            cluster_threshold: None,
            max_input_tokens: 512,
            max_output_tokens: 128,
            backend: BackendConfig::default(),
            second_backend: None,
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::BadValue {
        key: key.to_string(),
        message: e.to_string(),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(ConfigError::BadValue {
            key: key.into(),
            message: format!("`{value}` is not a boolean"),
        }),
    }
}

fn opt(value: &str) -> Option<String> {
    (!value.is_empty()).then(|| value.to_string())
}

/// Parses flat `key = value` lines. `#` starts a comment line; values may be
/// wrapped in double quotes.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::Syntax { line: i + 1 });
        }
        let value = value.trim();
        let value = value
            .strip_prefix('"')
            .and_then(|v| v.strip_suffix('"'))
            .unwrap_or(value);
        pairs.push((key.replace('-', "_"), value.to_string()));
    }
    Ok(pairs)
}

impl RunConfig {
    /// Sets one setting by its config-file key (flag names with `_`).
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "input" => self.input_path = opt(value).map(PathBuf::from),
            "product" => self.product_filter = opt(value),
            "text_field" => self.fields.text = value.to_string(),
            "rating_field" => self.fields.rating = value.to_string(),
            "product_field" => self.fields.product = value.to_string(),
            "remove_stopwords" => self.preprocessing.remove_stopwords = parse_bool(key, value)?,
            "strip_symbols_numbers" => self.preprocessing.strip_symbols_numbers = parse_bool(key, value)?,
            "stem" => self.preprocessing.stem = parse_bool(key, value)?,
            "aspects" => self.aspects_path = opt(value).map(PathBuf::from),
            "opinion_extraction" => self.opinion_extraction = parse_bool(key, value)?,
            "decoder" => self.decoder = parse(key, value)?,
            "strict_spans" => self.strict_spans = parse_bool(key, value)?,
            "min_confidence" => self.min_confidence = parse(key, value)?,
            "mode" => self.summarizer_mode = parse(key, value)?,
            "max_group_size" => self.max_group_size = parse(key, value)?,
            "cluster_threshold" => self.cluster_threshold = Some(parse(key, value)?),
            "max_input_tokens" => self.max_input_tokens = parse(key, value)?,
            "max_output_tokens" => self.max_output_tokens = parse(key, value)?,
            "backend" => self.backend.kind = parse(key, value)?,
            "base_url" => self.backend.base_url = opt(value),
            "timeout_ms" => self.backend.timeout_ms = parse(key, value)?,
            "max_retries" => self.backend.max_retries = parse(key, value)?,
            "backoff_ms" => self.backend.backoff_ms = parse(key, value)?,
            "max_concurrency" => self.backend.max_concurrency = parse(key, value)?,
            "fixtures" => self.backend.fixtures_path = opt(value).map(PathBuf::from),
            "second_backend" => {
                let kind: BackendKind = parse(key, value)?;
                self.second_mut().kind = kind;
            }
            "second_base_url" => self.second_mut().base_url = opt(value),
            "output_dir" => self.output_dir = PathBuf::from(value),
            "seed" => self.seed = parse(key, value)?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    fn second_mut(&mut self) -> &mut BackendConfig {
        let base = self.backend.clone();
        self.second_backend.get_or_insert(base)
    }

    pub fn apply_pairs<'a>(
        &mut self,
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<(), ConfigError> {
        for (k, v) in pairs {
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn apply_file_text(&mut self, text: &str) -> Result<(), ConfigError> {
        let pairs = parse_config_text(text)?;
        self.apply_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))
    }

    /// Applies the backend URL environment override, if set.
    pub fn apply_env(&mut self) {
        if let Ok(url) = std::env::var(BACKEND_URL_ENV) {
            if !url.is_empty() {
                self.backend.base_url = Some(url);
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, message: &str| ConfigError::BadValue {
            key: key.into(),
            message: message.into(),
        };
        if self.input_path.is_none() {
            return Err(ConfigError::Missing("input"));
        }
        if self.max_group_size == 0 {
            return Err(bad("max_group_size", "must be >= 1"));
        }
        if let Some(t) = self.cluster_threshold {
            if t.is_nan() || t <= 0.0 {
                return Err(bad("cluster_threshold", "must be > 0"));
            }
        }
        if self.min_confidence.is_nan() || self.min_confidence < 0.0 {
            return Err(bad("min_confidence", "must be >= 0"));
        }
        if self.summarizer_mode == SummarizerMode::SingleShot && self.max_input_tokens < 64 {
            return Err(bad("max_input_tokens", "must be >= 64"));
        }
        for b in std::iter::once(&self.backend).chain(self.second_backend.as_ref()) {
            b.validate().map_err(|e| bad("backend", &e.to_string()))?;
        }
        Ok(())
    }

    /// Backend configs with the run seed applied.
    pub fn backend_configs(&self) -> (BackendConfig, BackendConfig) {
        let mut first = self.backend.clone();
        first.seed = self.seed;
        let mut second = self.second_backend.clone().unwrap_or_else(|| self.backend.clone());
        second.seed = self.seed;
        (first, second)
    }

    pub fn effective_cluster_threshold(&self) -> f64 {
        self.cluster_threshold.unwrap_or(match self.backend.kind {
            BackendKind::Mock => MOCK_CLUSTER_THRESHOLD,
            BackendKind::Http => DEFAULT_CLUSTER_THRESHOLD,
        })
    }

    pub fn summarize_settings(&self) -> SummarizeSettings {
        SummarizeSettings {
            max_group_size: self.max_group_size,
            cluster_threshold: self.effective_cluster_threshold(),
            max_input_tokens: self.max_input_tokens,
            max_output_tokens: self.max_output_tokens,
        }
    }

    pub fn extract_options(&self) -> ExtractOptions {
        ExtractOptions {
            decoder: self.decoder,
            strict: self.strict_spans,
            min_confidence: self.min_confidence,
        }
    }

    /// The configuration as echoed in reports: everything except where the
    /// artifacts go, so reruns into another directory compare equal.
    pub fn echo(&self) -> serde_json::Value {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("output_dir");
            map.insert(
                "effective_cluster_threshold".into(),
                serde_json::json!(self.effective_cluster_threshold()),
            );
        }
        value
    }
}
