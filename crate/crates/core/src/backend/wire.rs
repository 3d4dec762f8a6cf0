//! JSON wire protocol, version "1".
//!
//! | endpoint          | request                          | response |
//! |-------------------|----------------------------------|----------|
//! | `POST /qa`        | `{"question", "context"}`        | `{"tokens", "sep_index", "start_probs", "end_probs", "offsets"}` |
//! | `POST /summarize` | `{"text", "max_tokens"}`         | `{"summary"}` |
//! | `POST /embed`     | `{"sentences"}`                  | `{"vectors", "dim"}` |
//! | `POST /sentiment` | `{"text"}`                       | `{"probs"}` (6 entries) |
//! | `GET /health`     |                                  | `{"status": "ok", "protocol": "1"}` |
//!
//! Errors are `{"error": str}` with a non-2xx status.

use serde::{Deserialize, Serialize};

use super::{QaOutput, SentimentProbs, SENTIMENT_CLASSES};
use crate::mrc::{check_distribution, QaTokenization, SpanDistribution};

pub const PROTOCOL_VERSION: &str = "1";

pub const QA: &str = "/qa";
pub const SUMMARIZE: &str = "/summarize";
pub const EMBED: &str = "/embed";
pub const SENTIMENT: &str = "/sentiment";
pub const HEALTH: &str = "/health";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaRequest {
    pub question: String,
    pub context: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaResponse {
    pub tokens: Vec<String>,
    pub sep_index: usize,
    pub start_probs: Vec<f64>,
    pub end_probs: Vec<f64>,
    pub offsets: Vec<Option<[usize; 2]>>,
}

impl QaResponse {
    pub fn from_output(out: &QaOutput) -> Self {
        Self {
            tokens: out.tokenization.tokens.clone(),
            sep_index: out.tokenization.sep_index,
            start_probs: out.distribution.start_probs.clone(),
            end_probs: out.distribution.end_probs.clone(),
            offsets: out
                .tokenization
                .char_offsets
                .iter()
                .map(|o| o.map(|(s, e)| [s, e]))
                .collect(),
        }
    }

    /// Checks vector lengths, separator position, offsets and both
    /// distributions.
    pub fn into_output(self) -> Result<QaOutput, String> {
        let tokenization = QaTokenization {
            sep_index: self.sep_index,
            char_offsets: self.offsets.into_iter().map(|o| o.map(|[s, e]| (s, e))).collect(),
            tokens: self.tokens,
        };
        tokenization.validate()?;
        let distribution = SpanDistribution {
            start_probs: self.start_probs,
            end_probs: self.end_probs,
        };
        distribution.validate(tokenization.len())?;
        Ok(QaOutput {
            tokenization,
            distribution,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummarizeRequest {
    pub text: String,
    pub max_tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummarizeResponse {
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub sentences: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub vectors: Vec<Vec<f64>>,
    pub dim: usize,
}

impl EmbedResponse {
    pub fn from_vectors(vectors: Vec<Vec<f64>>) -> Self {
        let dim = vectors.first().map_or(0, Vec::len);
        Self { vectors, dim }
    }

    /// One finite vector of length `dim` per requested sentence.
    pub fn into_vectors(self, expected: usize) -> Result<Vec<Vec<f64>>, String> {
        if self.vectors.len() != expected {
            return Err(format!("{} vectors for {expected} sentences", self.vectors.len()));
        }
        if expected > 0 && self.dim == 0 {
            return Err("dim must be positive".into());
        }
        for (i, v) in self.vectors.iter().enumerate() {
            if v.len() != self.dim {
                return Err(format!("vector {i} has {} dims, expected {}", v.len(), self.dim));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(format!("vector {i} has non-finite entries"));
            }
        }
        Ok(self.vectors)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentRequest {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentResponse {
    pub probs: Vec<f64>,
}

impl SentimentResponse {
    pub fn into_probs(self) -> Result<SentimentProbs, String> {
        validate_sentiment(&self.probs)
    }
}

/// Length 6, non-negative, sums to one within 1e-6.
pub fn validate_sentiment(probs: &[f64]) -> Result<SentimentProbs, String> {
    let fixed: SentimentProbs = probs
        .try_into()
        .map_err(|_| format!("expected {SENTIMENT_CLASSES} probabilities, got {}", probs.len()))?;
    check_distribution(&fixed)?;
    Ok(fixed)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub protocol: String,
}

impl HealthResponse {
    pub fn ok() -> Self {
        Self {
            status: "ok".into(),
            protocol: PROTOCOL_VERSION.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub error: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sentiment_schema() {
        assert!(validate_sentiment(&[0.0, 0.1, 0.2, 0.3, 0.2, 0.2]).is_ok());
        assert!(validate_sentiment(&[0.2; 5]).is_err());
        assert!(validate_sentiment(&[0.5, 0.5, 0.5, -0.5, 0.0, 0.0]).is_err());
        assert!(validate_sentiment(&[0.1; 6]).is_err());
    }

    #[test]
    fn embed_schema() {
        let ok = EmbedResponse::from_vectors(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(ok.dim, 2);
        assert!(ok.clone().into_vectors(2).is_ok());
        assert!(ok.into_vectors(3).is_err());
        let ragged = EmbedResponse {
            vectors: vec![vec![1.0, 0.0], vec![1.0]],
            dim: 2,
        };
        assert!(ragged.into_vectors(2).is_err());
    }

    #[test]
    fn qa_schema() {
        let resp = QaResponse {
            tokens: ["[CLS]", "q", "[SEP]", "good", "[SEP]"].map(String::from).to_vec(),
            sep_index: 2,
            start_probs: vec![0.0, 0.0, 0.0, 1.0, 0.0],
            end_probs: vec![0.0, 0.0, 0.0, 1.0, 0.0],
            offsets: vec![None, None, None, Some([0, 4]), None],
        };
        let json = serde_json::to_string(&resp).unwrap();
        assert!(json.contains("\"offsets\":[null,null,null,[0,4],null]"));
        let out = resp.clone().into_output().unwrap();
        assert_eq!(QaResponse::from_output(&out), resp);

        let mut short = resp;
        short.end_probs.pop();
        assert!(short.into_output().is_err());
    }
}
