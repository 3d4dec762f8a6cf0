//! ROUGE-1/2 and the two corpus-level summary scores: the mean ROUGE of a
//! summary against each of its source reviews, and sentiment consistency
//! between a summary and the ratings of the reviews it summarizes.

use std::collections::HashMap;

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::{argmax_class, BackendError, ModelBackend};
use crate::text::word_tokens;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    pub fn from_pr(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            precision,
            recall,
            f1,
        }
    }

    pub fn get(&self, component: RougeComponent) -> f64 {
        match component {
            RougeComponent::Precision => self.precision,
            RougeComponent::Recall => self.recall,
            RougeComponent::F1 => self.f1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RougeComponent {
    Precision,
    Recall,
    F1,
}

/// ROUGE tokenization: lowercase, split on non-alphanumeric runs, no
/// stemming, numbers kept.
pub fn tokenize_for_rouge(text: &str) -> Vec<String> {
    word_tokens(text)
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if n > 0 && tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram overlap on pre-tokenized input, for any `n >= 1`.
pub fn rouge_n_tokens(candidate: &[String], reference: &[String], n: usize) -> RougeScore {
    let cand = ngram_counts(candidate, n);
    let refs = ngram_counts(reference, n);
    let cand_total: usize = cand.values().sum();
    let ref_total: usize = refs.values().sum();
    let overlap: usize = cand
        .iter()
        .map(|(gram, c)| refs.get(gram).map_or(0, |r| (*c).min(*r)))
        .sum();
    let ratio = |total: usize| if total == 0 { 0.0 } else { overlap as f64 / total as f64 };
    RougeScore::from_pr(ratio(cand_total), ratio(ref_total))
}

/// ROUGE-`n` of a candidate (summary) against a reference (review).
/// Precision divides by candidate n-grams, recall by reference n-grams.
pub fn rouge_n(candidate: &str, reference: &str, n: usize) -> Result<RougeScore, MetricsError> {
    if !(n == 1 || n == 2) {
        return Err(MetricsError::Validation(format!("ROUGE-{n} unsupported; use 1 or 2")));
    }
    Ok(rouge_n_tokens(&tokenize_for_rouge(candidate), &tokenize_for_rouge(reference), n))
}

/// A summary with the texts it was generated from.
#[derive(Debug, Clone, PartialEq)]
pub struct SummarySources<'a> {
    pub summary: &'a str,
    pub sources: Vec<&'a str>,
}

/// Per-summary mean ROUGE over its sources, all three components.
pub fn mean_rouge(summary: &str, sources: &[&str], n: usize) -> Result<RougeScore, MetricsError> {
    if sources.is_empty() {
        return Err(MetricsError::Validation("summary has no source reviews".into()));
    }
    let mut acc = RougeScore::default();
    for source in sources {
        let s = rouge_n(summary, source, n)?;
        acc.precision += s.precision;
        acc.recall += s.recall;
        acc.f1 += s.f1;
    }
    let k = sources.len() as f64;
    Ok(RougeScore {
        precision: acc.precision / k,
        recall: acc.recall / k,
        f1: acc.f1 / k,
    })
}

/// Mean over summaries of the per-summary mean ROUGE against its sources.
pub fn s_rouge(
    summaries: &[SummarySources<'_>],
    n: usize,
    component: RougeComponent,
) -> Result<f64, MetricsError> {
    if summaries.is_empty() {
        return Err(MetricsError::Validation("no summaries to score".into()));
    }
    let mut total = 0.0;
    for item in summaries {
        total += mean_rouge(item.summary, &item.sources, n)?.get(component);
    }
    Ok(total / summaries.len() as f64)
}

/// Argmax of the backend's 6-way sentiment distribution, ties to the lower
/// class.
pub fn predict_sentiment(text: &str, backend: &dyn ModelBackend) -> Result<u8, MetricsError> {
    Ok(argmax_class(&backend.sentiment(text)?))
}

/// `1 - log6(|mean_rating - predicted| + 1)` for one summary.
pub fn sentiment_consistency(mean_rating: f64, predicted: u8) -> f64 {
    1.0 - ((mean_rating - f64::from(predicted)).abs() + 1.0).ln() / 6f64.ln()
}

/// Sentiment consistency averaged over `(mean rating, predicted class)`
/// pairs.
pub fn s_sentiment_from_predictions(pairs: &[(f64, u8)]) -> Result<f64, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::Validation("no summaries to score".into()));
    }
    let total: f64 = pairs.iter().map(|&(m, p)| sentiment_consistency(m, p)).sum();
    Ok(total / pairs.len() as f64)
}

/// What the sentiment score needs from one summary group.
#[derive(Debug, Clone, PartialEq)]
pub struct SentimentItem<'a> {
    pub summary: Option<&'a str>,
    pub member_ratings: &'a [u8],
}

fn checked_mean(ratings: &[u8]) -> Result<f64, MetricsError> {
    if ratings.is_empty() {
        return Err(MetricsError::Validation("group has no member ratings".into()));
    }
    if let Some(r) = ratings.iter().find(|r| !(1..=5).contains(*r)) {
        return Err(MetricsError::Validation(format!("rating {r} outside [1, 5]")));
    }
    Ok(ratings.iter().map(|&r| f64::from(r)).sum::<f64>() / ratings.len() as f64)
}

/// Predicts the sentiment of every summary (in parallel) and averages the
/// per-group consistency.
pub fn s_sentiment(items: &[SentimentItem<'_>], backend: &dyn ModelBackend) -> Result<f64, MetricsError> {
    let pairs = items
        .par_iter()
        .map(|item| {
            let summary = item
                .summary
                .filter(|s| !s.trim().is_empty())
                .ok_or_else(|| MetricsError::Validation("group has no summary".into()))?;
            Ok((checked_mean(item.member_ratings)?, predict_sentiment(summary, backend)?))
        })
        .collect::<Result<Vec<_>, MetricsError>>()?;
    s_sentiment_from_predictions(&pairs)
}

/// Scores of one summary group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupScores {
    pub s_sentiment: f64,
    pub rouge1: RougeScore,
    pub rouge2: RougeScore,
}

/// One summary to evaluate: its key, text, the member ratings and the full
/// texts of the reviews it was generated from.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalItem<'a> {
    pub key: String,
    pub summary: &'a str,
    pub member_ratings: &'a [u8],
    pub source_reviews: Vec<&'a str>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub mean_rating: f64,
    pub predicted_sentiment: u8,
    pub sources_count: usize,
    #[serde(flatten)]
    pub scores: GroupScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_group: IndexMap<String, GroupReport>,
    /// Arithmetic mean of the per-group values; the sentiment and ROUGE
    /// entries equal the corpus-level scores over all groups.
    pub aggregate: GroupScores,
    pub config: serde_json::Value,
}

/// Scores every item and averages. Sentiment calls run in parallel.
pub fn evaluate(
    items: &[EvalItem<'_>],
    backend: &dyn ModelBackend,
    config: serde_json::Value,
) -> Result<EvalReport, MetricsError> {
    if items.is_empty() {
        return Err(MetricsError::Validation("no summaries to evaluate".into()));
    }
    let rows = items
        .par_iter()
        .map(|item| {
            if item.summary.trim().is_empty() {
                return Err(MetricsError::Validation(format!("group {} has no summary", item.key)));
            }
            let mean_rating = checked_mean(item.member_ratings)?;
            let predicted = predict_sentiment(item.summary, backend)?;
            let scores = GroupScores {
                s_sentiment: sentiment_consistency(mean_rating, predicted),
                rouge1: mean_rouge(item.summary, &item.source_reviews, 1)?,
                rouge2: mean_rouge(item.summary, &item.source_reviews, 2)?,
            };
            Ok(GroupReport {
                mean_rating,
                predicted_sentiment: predicted,
                sources_count: item.source_reviews.len(),
                scores,
            })
        })
        .collect::<Result<Vec<_>, MetricsError>>()?;

    let n = rows.len() as f64;
    let mean = |f: &dyn Fn(&GroupScores) -> f64| rows.iter().map(|r| f(&r.scores)).sum::<f64>() / n;
    let aggregate = GroupScores {
        s_sentiment: mean(&|s| s.s_sentiment),
        rouge1: RougeScore {
            precision: mean(&|s| s.rouge1.precision),
            recall: mean(&|s| s.rouge1.recall),
            f1: mean(&|s| s.rouge1.f1),
        },
        rouge2: RougeScore {
            precision: mean(&|s| s.rouge2.precision),
            recall: mean(&|s| s.rouge2.recall),
            f1: mean(&|s| s.rouge2.f1),
        },
    };
    let mut per_group = IndexMap::new();
    for (item, row) in items.iter().zip(rows) {
        if per_group.insert(item.key.clone(), row).is_some() {
            return Err(MetricsError::Validation(format!("duplicate group key {}", item.key)));
        }
    }
    Ok(EvalReport {
        per_group,
        aggregate,
        config,
    })
}
