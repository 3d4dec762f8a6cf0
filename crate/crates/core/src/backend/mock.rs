use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{BackendError, ModelBackend, QaOutput, SentimentProbs, SENTIMENT_CLASSES};
use crate::condense::split_sentences;
use crate::mrc::{QaTokenization, SpanDistribution};
use crate::text::word_tokens;

pub const MOCK_EMBED_DIM: usize = 16;

const CLS: &str = "[CLS]";
const SEP: &str = "[SEP]";
/// Logit for question and special tokens, far below the context logits.
const OFF_CONTEXT_LOGIT: f64 = -8.0;
const PEAK: f64 = 0.9;

const POSITIVE: &[&str] = &[
    "great", "excellent", "perfect", "good", "love", "amazing", "fantastic", "awesome", "best",
    "nice", "bright", "fast", "happy", "recommend", "wonderful", "easy", "beautiful", "solid",
];
const NEGATIVE: &[&str] = &[
    "bad", "terrible", "awful", "broken", "poor", "slow", "useless", "disappointed",
    "horrible", "worst", "hate", "defective", "dead", "laggy", "crash", "weak", "tinny",
    "cracked",
];

/// A canned QA answer: when both question and context match exactly, the mock
/// returns a distribution peaked on the tokens covering `answer`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaFixture {
    pub question: String,
    pub context: String,
    pub answer: String,
}

/// Deterministic, model-free backend. Every output is a pure function of the
/// seed, the fixtures and the request.
#[derive(Debug, Clone, Default)]
pub struct MockBackend {
    seed: u64,
    fixtures: Vec<QaFixture>,
}

impl MockBackend {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            fixtures: Vec::new(),
        }
    }

    pub fn with_fixtures(mut self, fixtures: Vec<QaFixture>) -> Self {
        self.fixtures = fixtures;
        self
    }

    /// Loads a JSON array of `{question, context, answer}` objects.
    pub fn with_fixtures_file(self, path: impl AsRef<Path>) -> Result<Self, BackendError> {
        let path = path.as_ref();
        let raw = fs::read_to_string(path)
            .map_err(|e| BackendError::Config(format!("{}: {e}", path.display())))?;
        let fixtures = serde_json::from_str(&raw)
            .map_err(|e| BackendError::Config(format!("{}: {e}", path.display())))?;
        Ok(self.with_fixtures(fixtures))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl ModelBackend for MockBackend {
    fn qa(&self, question: &str, context: &str) -> Result<QaOutput, BackendError> {
        let fixture = self
            .fixtures
            .iter()
            .find(|f| f.question == question && f.context == context);
        let tokenization = pack(question, context)?;
        let distribution = fixture
            .and_then(|f| peaked(&tokenization, context, &f.answer))
            .unwrap_or_else(|| random_distribution(&tokenization, question, context, self.seed));
        Ok(QaOutput {
            tokenization,
            distribution,
        })
    }

    fn summarize(&self, text: &str, max_tokens: usize) -> Result<String, BackendError> {
        Ok(mock_summarize(text, max_tokens))
    }

    fn embed(&self, sentences: &[String]) -> Result<Vec<Vec<f64>>, BackendError> {
        Ok(sentences.iter().map(|s| mock_embed(s)).collect())
    }

    fn sentiment(&self, text: &str) -> Result<SentimentProbs, BackendError> {
        Ok(mock_sentiment(text))
    }
}

/// Hash-seeded QA output without fixtures.
pub fn mock_qa(question: &str, context: &str, seed: u64) -> Result<QaOutput, BackendError> {
    MockBackend::new(seed).qa(question, context)
}

/// `[CLS] question [SEP] context [SEP]` with whitespace tokenization and
/// character offsets for context tokens.
fn pack(question: &str, context: &str) -> Result<QaTokenization, BackendError> {
    let mut tokens = vec![CLS.to_string()];
    tokens.extend(question.split_whitespace().map(String::from));
    let sep_index = tokens.len();
    tokens.push(SEP.to_string());
    let mut char_offsets = vec![None; tokens.len()];

    let mut start: Option<usize> = None;
    let mut word = String::new();
    let mut count = 0;
    for (i, c) in context.chars().chain(std::iter::once(' ')).enumerate() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                tokens.push(std::mem::take(&mut word));
                char_offsets.push(Some((s, i)));
                count += 1;
            }
        } else {
            start.get_or_insert(i);
            word.push(c);
        }
    }
    if count == 0 {
        return Err(BackendError::InvalidRequest("context has no tokens".into()));
    }
    tokens.push(SEP.to_string());
    char_offsets.push(None);
    Ok(QaTokenization {
        tokens,
        sep_index,
        char_offsets,
    })
}

fn request_seed(seed: u64, question: &str, context: &str) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update([0x1f]);
    hasher.update(question.as_bytes());
    hasher.update([0x1f]);
    hasher.update(context.as_bytes());
    hasher.finalize().into()
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn random_distribution(
    tokenization: &QaTokenization,
    question: &str,
    context: &str,
    seed: u64,
) -> SpanDistribution {
    let mut rng = ChaCha8Rng::from_seed(request_seed(seed, question, context));
    let mut logits = || -> Vec<f64> {
        tokenization
            .char_offsets
            .iter()
            .map(|o| match o {
                Some(_) => rng.gen_range(-2.0..2.0),
                None => OFF_CONTEXT_LOGIT,
            })
            .collect()
    };
    let start = logits();
    let end = logits();
    SpanDistribution {
        start_probs: softmax(&start),
        end_probs: softmax(&end),
    }
}

fn peak_at(n: usize, at: usize) -> Vec<f64> {
    let rest = (1.0 - PEAK) / (n - 1) as f64;
    (0..n).map(|i| if i == at { PEAK } else { rest }).collect()
}

fn peaked(tokenization: &QaTokenization, context: &str, answer: &str) -> Option<SpanDistribution> {
    let byte = context.find(answer)?;
    let a_start = context[..byte].chars().count();
    let a_end = a_start + answer.chars().count();
    let covering: Vec<usize> = tokenization
        .char_offsets
        .iter()
        .enumerate()
        .filter_map(|(i, o)| o.filter(|(s, e)| *s < a_end && *e > a_start).map(|_| i))
        .collect();
    let (&first, &last) = (covering.first()?, covering.last()?);
    let n = tokenization.len();
    Some(SpanDistribution {
        start_probs: peak_at(n, first),
        end_probs: peak_at(n, last),
    })
}

/// Lexicon score `clamp(round_half_up(2.5 + positive - negative), 0, 5)` as a
/// distribution with 0.9 on that class and the rest spread evenly.
pub fn mock_sentiment(text: &str) -> SentimentProbs {
    let (mut pos, mut neg) = (0i64, 0i64);
    for token in word_tokens(text) {
        if POSITIVE.contains(&token.as_str()) {
            pos += 1;
        } else if NEGATIVE.contains(&token.as_str()) {
            neg += 1;
        }
    }
    // round_half_up(2.5 + d) == 3 + d for integer d
    let class = (3 + pos - neg).clamp(0, 5) as usize;
    let rest = (1.0 - PEAK) / (SENTIMENT_CLASSES - 1) as f64;
    let mut probs = [rest; SENTIMENT_CLASSES];
    probs[class] = PEAK;
    probs
}

/// First sentence of every blank-line separated paragraph, joined and cut to
/// `max_tokens` whitespace tokens.
pub fn mock_summarize(text: &str, max_tokens: usize) -> String {
    let mut firsts = Vec::new();
    let mut paragraph = Vec::new();
    for line in text.lines().chain(std::iter::once("")) {
        if line.trim().is_empty() {
            if !paragraph.is_empty() {
                if let Some(first) = split_sentences(&paragraph.join(" ")).into_iter().next() {
                    firsts.push(first);
                }
                paragraph.clear();
            }
        } else {
            paragraph.push(line.trim());
        }
    }
    firsts
        .iter()
        .flat_map(|s| s.split_whitespace())
        .take(max_tokens)
        .collect::<Vec<_>>()
        .join(" ")
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf29ce484222325, |h, b| (h ^ u64::from(*b)).wrapping_mul(0x100000001b3))
}

/// Bag of hashed word tokens over 16 buckets, L2-normalized. Sentences
/// without tokens map to the zero vector.
pub fn mock_embed(sentence: &str) -> Vec<f64> {
    let mut v = vec![0.0; MOCK_EMBED_DIM];
    for token in word_tokens(sentence) {
        v[(fnv1a(token.as_bytes()) % MOCK_EMBED_DIM as u64) as usize] += 1.0;
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}
