//! Opinion extraction as extractive question answering.
//!
//! The backend packs `[CLS] question [SEP] review [SEP]`, returns one start
//! and one end probability per token, and this module picks the answer span
//! and maps it back onto the review text.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aspects::{AspectQuery, QuestionVariant};
use crate::backend::ModelBackend;
use crate::ingest::Corpus;

const PROB_TOLERANCE: f64 = 1e-6;
const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MrcError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("{failed} of {total} question/review pairs failed")]
    TooManyFailures { failed: usize, total: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("no admissible answer position after separator {sep_index} in {len} tokens")]
    NoAdmissiblePosition { sep_index: usize, len: usize },
    #[error("distribution has {probs} positions but tokenization has {tokens}")]
    LengthMismatch { probs: usize, tokens: usize },
}

/// Token sequence for `[CLS] q [SEP] r [SEP]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaTokenization {
    pub tokens: Vec<String>,
    /// Index of the first separator token.
    pub sep_index: usize,
    /// Character (not byte) offsets into the review text; `None` for
    /// question and special tokens.
    pub char_offsets: Vec<Option<(usize, usize)>>,
}

impl QaTokenization {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn validate(&self) -> Result<(), String> {
        let n = self.tokens.len();
        if !(self.sep_index > 0 && self.sep_index + 1 < n) {
            return Err(format!("sep_index {} invalid for {n} tokens", self.sep_index));
        }
        if self.char_offsets.len() != n {
            return Err(format!("{} offsets for {n} tokens", self.char_offsets.len()));
        }
        let mut last_end = 0;
        for (start, end) in self.char_offsets.iter().flatten() {
            if start > end || *start < last_end {
                return Err(format!("offset ({start}, {end}) overlaps or goes backwards"));
            }
            last_end = *end;
        }
        Ok(())
    }
}

/// Start (`start_probs`) and end (`end_probs`) pointer distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanDistribution {
    pub start_probs: Vec<f64>,
    pub end_probs: Vec<f64>,
}

impl SpanDistribution {
    pub fn len(&self) -> usize {
        self.start_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.start_probs.is_empty()
    }

    pub fn validate(&self, tokens: usize) -> Result<(), String> {
        for (name, probs) in [("start", &self.start_probs), ("end", &self.end_probs)] {
            if probs.len() != tokens {
                return Err(format!("{name} has {} entries for {tokens} tokens", probs.len()));
            }
            check_distribution(probs).map_err(|e| format!("{name}: {e}"))?;
        }
        Ok(())
    }
}

/// Non-negative, finite and summing to one within 1e-6.
pub fn check_distribution(probs: &[f64]) -> Result<(), String> {
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err("entries must be finite and non-negative".into());
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROB_TOLERANCE {
        return Err(format!("sums to {sum}"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decoder {
    /// End pointer first, then the start pointer up to it.
    #[default]
    Sequential,
    /// Best `start * end` product over admissible pairs.
    Joint,
}

impl std::str::FromStr for Decoder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sequential" => Ok(Decoder::Sequential),
            "joint" => Ok(Decoder::Joint),
            other => Err(format!("unknown decoder `{other}` (expected sequential|joint)")),
        }
    }
}

/// First index of the maximum over `range`; `None` for an empty range.
fn argmax(probs: &[f64], range: std::ops::Range<usize>) -> Option<usize> {
    let mut best: Option<usize> = None;
    for i in range {
        if best.is_none_or(|b| probs[i] > probs[b]) {
            best = Some(i);
        }
    }
    best
}

fn check_lengths(dist: &SpanDistribution) -> Result<usize, DecodeError> {
    if dist.start_probs.len() != dist.end_probs.len() {
        return Err(DecodeError::LengthMismatch {
            probs: dist.start_probs.len(),
            tokens: dist.end_probs.len(),
        });
    }
    Ok(dist.start_probs.len())
}

/// Picks `e` as the end-pointer argmax after the separator, then `s` as the
/// start-pointer argmax in `(sep_index, e]`. Ties go to the lower index.
pub fn decode_span_sequential(
    dist: &SpanDistribution,
    sep_index: usize,
) -> Result<(usize, usize), DecodeError> {
    decode_span(dist, sep_index, Decoder::Sequential, false)
}

/// Maximizes `start[s] * end[e]` over `sep_index < s <= e`. Ties go to the
/// smallest `s`, then the smallest `e`.
pub fn decode_span_joint(
    dist: &SpanDistribution,
    sep_index: usize,
) -> Result<(usize, usize), DecodeError> {
    decode_span(dist, sep_index, Decoder::Joint, false)
}

/// `strict` forbids single-token answers (`s < e`).
pub fn decode_span(
    dist: &SpanDistribution,
    sep_index: usize,
    decoder: Decoder,
    strict: bool,
) -> Result<(usize, usize), DecodeError> {
    let n = check_lengths(dist)?;
    let none = DecodeError::NoAdmissiblePosition { sep_index, len: n };
    let first = sep_index + 1;
    let gap = usize::from(strict);
    if first + gap >= n {
        return Err(none);
    }
    match decoder {
        Decoder::Sequential => {
            let e = argmax(&dist.end_probs, first + gap..n).ok_or(none.clone())?;
            let s = argmax(&dist.start_probs, first..e + 1 - gap).ok_or(none)?;
            Ok((s, e))
        }
        Decoder::Joint => {
            let mut best: Option<(f64, usize, usize)> = None;
            for s in first..n {
                for e in s + gap..n {
                    let score = dist.start_probs[s] * dist.end_probs[e];
                    if best.is_none_or(|(b, _, _)| score > b) {
                        best = Some((score, s, e));
                    }
                }
            }
            best.map(|(_, s, e)| (s, e)).ok_or(none)
        }
    }
}

/// Mean of the start and end cross-entropies against one-hot gold indices.
/// Probabilities are floored at 1e-12 before the log.
pub fn span_loss(dist: &SpanDistribution, gold_s: usize, gold_e: usize) -> Result<f64, MrcError> {
    let n = check_lengths(dist)?;
    if gold_s >= n || gold_e >= n {
        return Err(MrcError::Validation(format!(
            "gold span ({gold_s}, {gold_e}) out of bounds for {n} positions"
        )));
    }
    let nll = |p: f64| -p.max(LOG_FLOOR).ln();
    Ok((nll(dist.start_probs[gold_s]) + nll(dist.end_probs[gold_e])) / 2.0)
}

/// Review substring covered by tokens `start..=end`, using the first and last
/// tokens in the range that carry an offset. `None` when nothing maps or the
/// result is blank.
pub fn span_text(
    context: &str,
    tokenization: &QaTokenization,
    start: usize,
    end: usize,
) -> Option<String> {
    let offsets = tokenization.char_offsets.get(start..=end)?;
    let char_start = offsets.iter().flatten().next()?.0;
    let char_end = offsets.iter().flatten().last()?.1;
    let byte_at = |c: usize| {
        context
            .char_indices()
            .map(|(b, _)| b)
            .chain(std::iter::once(context.len()))
            .nth(c)
    };
    let text = context.get(byte_at(char_start)?..byte_at(char_end)?)?;
    // whitespace tokenizers leave clause punctuation glued to the last word
    let text = text.trim().trim_end_matches([',', ';', ':']).trim_end();
    (!text.is_empty()).then(|| text.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionSpan {
    pub review_id: String,
    pub aspect_key: String,
    pub variant: QuestionVariant,
    pub start: usize,
    pub end: usize,
    pub text: String,
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractOptions {
    pub decoder: Decoder,
    pub strict: bool,
    pub min_confidence: f64,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            decoder: Decoder::Sequential,
            strict: false,
            min_confidence: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairError {
    pub review_id: String,
    pub question: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extraction {
    pub spans: Vec<OpinionSpan>,
    pub errors: Vec<PairError>,
    pub pairs: usize,
}

fn answer(
    backend: &dyn ModelBackend,
    review_id: &str,
    context: &str,
    query: &AspectQuery,
    options: &ExtractOptions,
) -> Result<Option<OpinionSpan>, String> {
    let out = backend.qa(&query.question, context).map_err(|e| e.to_string())?;
    out.tokenization.validate()?;
    out.distribution.validate(out.tokenization.len())?;
    let (start, end) = decode_span(
        &out.distribution,
        out.tokenization.sep_index,
        options.decoder,
        options.strict,
    )
    .map_err(|e| e.to_string())?;
    let confidence = out.distribution.start_probs[start] * out.distribution.end_probs[end];
    if confidence < options.min_confidence {
        return Ok(None);
    }
    Ok(span_text(context, &out.tokenization, start, end).map(|text| OpinionSpan {
        review_id: review_id.to_string(),
        aspect_key: query.aspect.key.clone(),
        variant: query.variant,
        start,
        end,
        text,
        confidence,
    }))
}

/// Asks every query of every review. Requests run in parallel; the result
/// keeps review-major, query-minor order. A failing pair is recorded and
/// skipped unless more than half of all pairs fail.
pub fn extract_opinions(
    corpus: &Corpus,
    queries: &[AspectQuery],
    backend: &dyn ModelBackend,
    options: &ExtractOptions,
) -> Result<Extraction, MrcError> {
    if options.min_confidence.is_nan() || options.min_confidence < 0.0 {
        return Err(MrcError::Validation(format!(
            "min_confidence {} must be >= 0",
            options.min_confidence
        )));
    }
    let pairs: Vec<(usize, usize)> = (0..corpus.reviews.len())
        .flat_map(|r| (0..queries.len()).map(move |q| (r, q)))
        .collect();
    let results: Vec<Result<Option<OpinionSpan>, String>> = pairs
        .par_iter()
        .map(|&(r, q)| {
            let review = &corpus.reviews[r];
            answer(backend, &review.id, &review.text, &queries[q], options)
        })
        .collect();

    let mut spans = Vec::new();
    let mut errors = Vec::new();
    for (&(r, q), result) in pairs.iter().zip(results) {
        match result {
            Ok(Some(span)) => spans.push(span),
            Ok(None) => {}
            Err(message) => errors.push(PairError {
                review_id: corpus.reviews[r].id.clone(),
                question: queries[q].question.clone(),
                message,
            }),
        }
    }
    if errors.len() * 2 > pairs.len() {
        return Err(MrcError::TooManyFailures {
            failed: errors.len(),
            total: pairs.len(),
        });
    }
    Ok(Extraction {
        spans,
        errors,
        pairs: pairs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(start: &[f64], end: &[f64]) -> SpanDistribution {
        SpanDistribution {
            start_probs: start.to_vec(),
            end_probs: end.to_vec(),
        }
    }

    #[test]
    fn sequential_examples() {
        let d = dist(&[0.05, 0.90, 0.05], &[0.05, 0.15, 0.80]);
        assert_eq!(decode_span_sequential(&d, 0).unwrap(), (1, 2));
        let d = dist(&[0.1, 0.2, 0.7], &[0.1, 0.8, 0.1]);
        assert_eq!(decode_span_sequential(&d, 0).unwrap(), (1, 1));
    }

    #[test]
    fn sequential_ties_take_lowest_index() {
        let d = dist(&[0.0, 0.25, 0.25, 0.25, 0.25], &[0.0, 0.0, 0.5, 0.5, 0.0]);
        assert_eq!(decode_span_sequential(&d, 0).unwrap(), (1, 2));
    }

    #[test]
    fn joint_examples() {
        let mut start = vec![0.0; 8];
        let mut end = vec![0.0; 8];
        start[3] = 1.0;
        end[5] = 1.0;
        assert_eq!(decode_span_joint(&dist(&start, &end), 1).unwrap(), (3, 5));

        // Start peak sits after the end peak: the best admissible pair wins.
        let d = dist(&[0.0, 0.1, 0.1, 0.1, 0.6, 0.1], &[0.0, 0.1, 0.5, 0.2, 0.1, 0.1]);
        assert_eq!(decode_span_joint(&d, 0).unwrap(), (4, 4));
        assert_eq!(decode_span_sequential(&d, 0).unwrap(), (1, 2));
    }

    #[test]
    fn strict_mode_forbids_single_token() {
        let d = dist(&[0.1, 0.2, 0.7], &[0.1, 0.8, 0.1]);
        assert_eq!(decode_span(&d, 0, Decoder::Sequential, true).unwrap(), (1, 2));
        assert_eq!(decode_span(&d, 0, Decoder::Joint, true).unwrap(), (1, 2));
        let d = dist(&[0.5, 0.5], &[0.5, 0.5]);
        assert!(decode_span(&d, 0, Decoder::Sequential, true).is_err());
    }

    #[test]
    fn no_admissible_position() {
        let d = dist(&[0.5, 0.5], &[0.5, 0.5]);
        assert_eq!(
            decode_span_sequential(&d, 1),
            Err(DecodeError::NoAdmissiblePosition { sep_index: 1, len: 2 })
        );
        assert!(decode_span_joint(&d, 1).is_err());
    }

    #[test]
    fn loss_examples() {
        let d = dist(&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]);
        assert_eq!(span_loss(&d, 1, 2).unwrap(), 0.0);

        let u = vec![1.0 / 8.0; 8];
        let loss = span_loss(&dist(&u, &u), 2, 5).unwrap();
        assert!((loss - 8f64.ln()).abs() < 1e-9);

        // Hand computation: (-ln 0.5 - ln 0.25) / 2 = 1.5 ln 2
        let d = dist(&[0.5, 0.5, 0.0], &[0.25, 0.25, 0.5]);
        let loss = span_loss(&d, 0, 1).unwrap();
        assert!((loss - 1.5 * 2f64.ln()).abs() < 1e-12);

        // Zero probability is floored, not infinite.
        let loss = span_loss(&d, 2, 0).unwrap();
        assert!((loss - (-(1e-12f64).ln() - 0.25f64.ln()) / 2.0).abs() < 1e-9);

        assert!(matches!(span_loss(&d, 3, 0), Err(MrcError::Validation(_))));
    }

    #[test]
    fn span_text_maps_characters() {
        let context = "Écran très lumineux";
        let tok = QaTokenization {
            tokens: ["[CLS]", "q", "[SEP]", "Écran", "très", "lumineux", "[SEP]"]
                .map(String::from)
                .to_vec(),
            sep_index: 2,
            char_offsets: vec![None, None, None, Some((0, 5)), Some((6, 10)), Some((11, 19)), None],
        };
        tok.validate().unwrap();
        assert_eq!(span_text(context, &tok, 4, 5).as_deref(), Some("très lumineux"));
        assert_eq!(span_text(context, &tok, 5, 6).as_deref(), Some("lumineux"));
        assert_eq!(span_text(context, &tok, 6, 6), None);

        let context = "lasts ten hours, but";
        let tok = QaTokenization {
            tokens: ["[CLS]", "q", "[SEP]", "lasts", "hours,", "but", "[SEP]"].map(String::from).to_vec(),
            sep_index: 2,
            char_offsets: vec![None, None, None, Some((0, 5)), Some((10, 16)), Some((17, 20)), None],
        };
        assert_eq!(span_text(context, &tok, 3, 4).as_deref(), Some("lasts ten hours"));
    }

    #[test]
    fn tokenization_validation() {
        let mut tok = QaTokenization {
            tokens: vec!["[CLS]".into(), "[SEP]".into(), "a".into(), "b".into(), "[SEP]".into()],
            sep_index: 1,
            char_offsets: vec![None, None, Some((0, 1)), Some((2, 3)), None],
        };
        assert!(tok.validate().is_ok());
        tok.char_offsets[3] = Some((0, 3));
        assert!(tok.validate().is_err());
        tok.char_offsets[3] = Some((2, 3));
        tok.sep_index = 4;
        assert!(tok.validate().is_err());
    }

    #[test]
    fn distribution_validation() {
        assert!(check_distribution(&[0.5, 0.5]).is_ok());
        assert!(check_distribution(&[0.5, 0.6]).is_err());
        assert!(check_distribution(&[1.5, -0.5]).is_err());
        assert!(dist(&[1.0], &[1.0]).validate(2).is_err());
    }
}
