//! Summary groups, bounded-batch summarization and clustering-based
//! condensation of many chunk summaries into one paragraph.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::aspects::Aspect;
use crate::backend::{BackendError, ModelBackend};
use crate::ingest::Corpus;
use crate::mrc::OpinionSpan;
use crate::text::whitespace_len;

/// Distance threshold for merging sentence clusters with real sentence
/// embeddings.
pub const DEFAULT_CLUSTER_THRESHOLD: f64 = 1.5;
/// Largest number of sources summarized in one backend call.
pub const DEFAULT_MAX_GROUP_SIZE: usize = 8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CondenseError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("all {count} chunks failed to summarize; first error: {first}")]
    AllChunksFailed { count: usize, first: String },
    #[error("summaries contain no sentences")]
    NoSentences,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupKey {
    AllReviews,
    Rating(u8),
    Aspect(String),
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupKey::AllReviews => f.write_str("all-reviews"),
            GroupKey::Rating(r) => write!(f, "rating{r}"),
            GroupKey::Aspect(key) => write!(f, "aspect-{}", key.replace(' ', "_")),
        }
    }
}

impl FromStr for GroupKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "all-reviews" {
            return Ok(GroupKey::AllReviews);
        }
        if let Some(r) = s.strip_prefix("rating") {
            return match r.parse::<u8>() {
                Ok(r @ 1..=5) => Ok(GroupKey::Rating(r)),
                _ => Err(format!("bad rating group `{s}`")),
            };
        }
        if let Some(key) = s.strip_prefix("aspect-").filter(|k| !k.is_empty()) {
            return Ok(GroupKey::Aspect(key.replace('_', " ")));
        }
        Err(format!("unknown group key `{s}`"))
    }
}

impl Serialize for GroupKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GroupKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryGroup {
    pub key: GroupKey,
    /// Review texts or opinion spans, in corpus order.
    pub sources: Vec<String>,
    /// Distinct reviews behind `sources`, in first-appearance order.
    pub source_review_ids: Vec<String>,
    /// Ratings aligned with `source_review_ids`.
    pub member_ratings: Vec<u8>,
    pub chunk_summaries: Vec<String>,
    pub summary: Option<String>,
}

impl SummaryGroup {
    pub fn new(key: GroupKey) -> Self {
        Self {
            key,
            sources: Vec::new(),
            source_review_ids: Vec::new(),
            member_ratings: Vec::new(),
            chunk_summaries: Vec::new(),
            summary: None,
        }
    }

    fn push(&mut self, text: &str, review_id: &str, rating: u8, seen: &mut HashSet<String>) {
        self.sources.push(text.to_string());
        if seen.insert(review_id.to_string()) {
            self.source_review_ids.push(review_id.to_string());
            self.member_ratings.push(rating);
        }
    }

    pub fn mean_rating(&self) -> Option<f64> {
        if self.member_ratings.is_empty() {
            return None;
        }
        let sum: u32 = self.member_ratings.iter().map(|&r| u32::from(r)).sum();
        Some(f64::from(sum) / self.member_ratings.len() as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupingMode {
    Rating,
    Aspect,
    AllReviews,
}

/// Buckets the corpus (or, when `spans` is given, the extracted opinions)
/// into summary groups. Empty buckets are dropped. Aspect grouping needs
/// spans and yields groups in `aspects` order.
pub fn group_reviews(
    corpus: &Corpus,
    spans: Option<&[OpinionSpan]>,
    mode: GroupingMode,
    aspects: &[Aspect],
) -> Vec<SummaryGroup> {
    let ratings: HashMap<&str, u8> = corpus.reviews.iter().map(|r| (r.id.as_str(), r.rating)).collect();
    // (text, review id, rating) in corpus order
    let items: Vec<(&str, &str, u8)> = match spans {
        Some(spans) => spans
            .iter()
            .filter_map(|s| {
                let rating = *ratings.get(s.review_id.as_str())?;
                Some((s.text.as_str(), s.review_id.as_str(), rating))
            })
            .collect(),
        None => corpus
            .reviews
            .iter()
            .map(|r| (r.text.as_str(), r.id.as_str(), r.rating))
            .collect(),
    };

    let build = |key: GroupKey, keep: &dyn Fn(usize) -> bool| {
        let mut group = SummaryGroup::new(key);
        let mut seen = HashSet::new();
        for (i, (text, id, rating)) in items.iter().enumerate() {
            if keep(i) {
                group.push(text, id, *rating, &mut seen);
            }
        }
        group
    };

    let groups: Vec<SummaryGroup> = match mode {
        GroupingMode::AllReviews => vec![build(GroupKey::AllReviews, &|_| true)],
        GroupingMode::Rating => (1..=5u8)
            .map(|r| build(GroupKey::Rating(r), &|i| items[i].2 == r))
            .collect(),
        GroupingMode::Aspect => match spans {
            None => Vec::new(),
            Some(spans) => {
                let kept: Vec<&OpinionSpan> =
                    spans.iter().filter(|s| ratings.contains_key(s.review_id.as_str())).collect();
                aspects
                    .iter()
                    .map(|a| build(GroupKey::Aspect(a.key.clone()), &|i| kept[i].aspect_key == a.key))
                    .collect()
            }
        },
    };
    groups.into_iter().filter(|g| !g.sources.is_empty()).collect()
}

/// `ceil(n / size)`.
pub fn chunk_count(n: usize, size: usize) -> usize {
    n.div_ceil(size)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChunkOutcome {
    pub summaries: Vec<String>,
    pub errors: Vec<String>,
}

/// Summarizes consecutive chunks of at most `max_group_size` sources, each
/// chunk joined by blank lines. Chunks run in parallel; results stay in
/// chunk order. Failed chunks are skipped and reported.
pub fn chunked_summaries(
    group: &SummaryGroup,
    backend: &dyn ModelBackend,
    max_group_size: usize,
    max_output_tokens: usize,
) -> Result<ChunkOutcome, CondenseError> {
    if max_group_size == 0 {
        return Err(CondenseError::Validation("max_group_size must be >= 1".into()));
    }
    if group.sources.is_empty() {
        return Err(CondenseError::Validation(format!("group {} has no sources", group.key)));
    }
    let results: Vec<Result<String, BackendError>> = group
        .sources
        .par_chunks(max_group_size)
        .map(|chunk| backend.summarize(&chunk.join("\n\n"), max_output_tokens))
        .collect();
    let total = results.len();
    let mut outcome = ChunkOutcome::default();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(s) => outcome.summaries.push(s),
            Err(e) => outcome.errors.push(format!("{} chunk {i}: {e}", group.key)),
        }
    }
    if outcome.summaries.is_empty() {
        return Err(CondenseError::AllChunksFailed {
            count: total,
            first: outcome.errors.first().cloned().unwrap_or_default(),
        });
    }
    Ok(outcome)
}

const ABBREVIATIONS: &[&str] = &["mr.", "mrs.", "dr.", "e.g.", "i.e.", "vs."];

fn ends_with_abbreviation(fragment: &str) -> bool {
    let last_word = fragment.rsplit(char::is_whitespace).next().unwrap_or("");
    let lower = last_word.to_lowercase();
    ABBREVIATIONS.iter().any(|a| lower == *a)
}

/// Splits after `.`, `!` or `?` when followed by whitespace or the end of
/// the text, keeping the delimiter. Known abbreviations ("e.g.", "Mr.") do
/// not end a sentence.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    let mut current = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        current.push(c);
        let boundary = matches!(c, '.' | '!' | '?')
            && chars.peek().is_none_or(|n| n.is_whitespace())
            && !ends_with_abbreviation(current.trim());
        if boundary {
            let s = current.trim();
            if !s.is_empty() {
                sentences.push(s.to_string());
            }
            current.clear();
        }
    }
    let tail = current.trim();
    if !tail.is_empty() {
        sentences.push(tail.to_string());
    }
    sentences
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceCluster {
    /// Ascending indices into the clustered list.
    pub member_indices: Vec<usize>,
    pub representative_index: usize,
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Upper-triangle storage for pairwise sums.
struct Triangle {
    n: usize,
    data: Vec<f64>,
}

impl Triangle {
    fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        i * self.n - i * (i + 1) / 2 + (j - i - 1)
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.index(i, j)]
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.index(i, j);
        self.data[k] += v;
    }
}

/// Average-linkage agglomerative clustering under Euclidean distance.
///
/// While the smallest average inter-cluster distance is below `threshold`,
/// the closest pair merges; ties go to the smallest `(i, j)`, where a cluster
/// is identified by its smallest member index. Clusters come back ordered by
/// smallest member, with the smallest member as representative.
pub fn agglomerative_cluster(
    vectors: &[Vec<f64>],
    threshold: f64,
) -> Result<Vec<SentenceCluster>, CondenseError> {
    let n = vectors.len();
    if n == 0 {
        return Err(CondenseError::Validation("nothing to cluster".into()));
    }
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(CondenseError::Validation(format!("threshold {threshold} must be > 0")));
    }
    let dim = vectors[0].len();
    if let Some(bad) = vectors.iter().position(|v| v.len() != dim) {
        return Err(CondenseError::Validation(format!(
            "vector {bad} has {} dims, expected {dim}",
            vectors[bad].len()
        )));
    }
    if vectors.iter().flatten().any(|x| !x.is_finite()) {
        return Err(CondenseError::Validation("non-finite vector entry".into()));
    }

    // Sum of pairwise point distances between clusters; the average linkage
    // is sum / (|a| * |b|).
    let mut sums = Triangle {
        n,
        data: vec![0.0; n * n.saturating_sub(1) / 2],
    };
    for i in 0..n {
        for j in i + 1..n {
            sums.add(i, j, euclidean(&vectors[i], &vectors[j]));
        }
    }
    let mut sizes = vec![1usize; n];
    let mut active = vec![true; n];
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();

    let linkage = |sums: &Triangle, sizes: &[usize], i: usize, j: usize| {
        sums.get(i, j) / (sizes[i] * sizes[j]) as f64
    };
    let row_best = |sums: &Triangle, sizes: &[usize], active: &[bool], i: usize| {
        let mut best: Option<(f64, usize)> = None;
        for j in (i + 1..n).filter(|&j| active[j]) {
            let d = linkage(sums, sizes, i, j);
            if best.is_none_or(|(b, _)| d < b) {
                best = Some((d, j));
            }
        }
        best
    };
    let mut best: Vec<Option<(f64, usize)>> =
        (0..n).map(|i| row_best(&sums, &sizes, &active, i)).collect();

    loop {
        let mut closest: Option<(f64, usize, usize)> = None;
        for (i, b) in best.iter().enumerate() {
            if let (true, Some((d, j))) = (active[i], b) {
                if closest.is_none_or(|(c, _, _)| *d < c) {
                    closest = Some((*d, i, *j));
                }
            }
        }
        let Some((d, a, b)) = closest else { break };
        if d >= threshold {
            break;
        }

        for k in (0..n).filter(|&k| active[k] && k != a && k != b) {
            let moved = sums.get(b, k);
            sums.add(a, k, moved);
        }
        sizes[a] += sizes[b];
        active[b] = false;
        best[b] = None;
        let absorbed = std::mem::take(&mut members[b]);
        members[a].extend(absorbed);

        best[a] = row_best(&sums, &sizes, &active, a);
        for k in 0..n {
            if !active[k] || k == a {
                continue;
            }
            match best[k] {
                Some((_, j)) if j == a || j == b => best[k] = row_best(&sums, &sizes, &active, k),
                Some((bd, bj)) if k < a => {
                    let nd = linkage(&sums, &sizes, k, a);
                    if nd < bd || (nd == bd && a < bj) {
                        best[k] = Some((nd, a));
                    }
                }
                None if k < a => best[k] = row_best(&sums, &sizes, &active, k),
                _ => {}
            }
        }
    }

    Ok((0..n)
        .filter(|&i| active[i])
        .map(|i| {
            let mut member_indices = std::mem::take(&mut members[i]);
            member_indices.sort_unstable();
            SentenceCluster {
                representative_index: member_indices[0],
                member_indices,
            }
        })
        .collect())
}

/// Intermediate state of a condensation, kept for audit output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condensed {
    pub sentences: Vec<String>,
    pub clusters: Vec<SentenceCluster>,
    pub text: String,
}

/// Splits all summaries into sentences, clusters their embeddings and keeps
/// the longest sentence of every cluster (ties: lowest index). Chosen
/// sentences are joined with single spaces in order of first cluster member.
pub fn condense_detailed(
    summaries: &[String],
    backend: &dyn ModelBackend,
    threshold: f64,
) -> Result<Condensed, CondenseError> {
    if summaries.is_empty() {
        return Err(CondenseError::Validation("no summaries to condense".into()));
    }
    let sentences: Vec<String> = summaries.iter().flat_map(|s| split_sentences(s)).collect();
    if sentences.is_empty() {
        return Err(CondenseError::NoSentences);
    }
    let vectors = backend.embed(&sentences)?;
    if vectors.len() != sentences.len() {
        return Err(CondenseError::Validation(format!(
            "{} embeddings for {} sentences",
            vectors.len(),
            sentences.len()
        )));
    }
    let mut clusters = agglomerative_cluster(&vectors, threshold)?;
    for cluster in &mut clusters {
        let mut rep = cluster.member_indices[0];
        for &m in &cluster.member_indices {
            if sentences[m].chars().count() > sentences[rep].chars().count() {
                rep = m;
            }
        }
        cluster.representative_index = rep;
    }
    let text = clusters
        .iter()
        .map(|c| sentences[c.representative_index].as_str())
        .collect::<Vec<_>>()
        .join(" ");
    Ok(Condensed {
        sentences,
        clusters,
        text,
    })
}

pub fn condense_summaries(
    summaries: &[String],
    backend: &dyn ModelBackend,
    threshold: f64,
) -> Result<String, CondenseError> {
    condense_detailed(summaries, backend, threshold).map(|c| c.text)
}

/// Keeps whole sentences, in order, while the running whitespace-token count
/// stays within `budget`. Paragraph breaks survive. When even the first
/// sentence is too long, its first `budget` tokens are kept.
pub fn truncate_to_sentence_budget(text: &str, budget: usize) -> String {
    let mut used = 0;
    let mut paragraphs: Vec<Vec<String>> = Vec::new();
    'outer: for paragraph in text.split("\n\n") {
        let mut kept = Vec::new();
        for sentence in split_sentences(paragraph) {
            let len = whitespace_len(&sentence);
            if used + len > budget {
                if used == 0 {
                    let head: Vec<&str> = sentence.split_whitespace().take(budget).collect();
                    kept.push(head.join(" "));
                }
                if !kept.is_empty() {
                    paragraphs.push(kept);
                }
                break 'outer;
            }
            used += len;
            kept.push(sentence);
        }
        if !kept.is_empty() {
            paragraphs.push(kept);
        }
    }
    paragraphs
        .iter()
        .map(|p| p.join(" "))
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// All sources in one summarize call, cut at the last sentence boundary
/// within `max_input_tokens`.
pub fn single_shot_summary(
    group: &SummaryGroup,
    backend: &dyn ModelBackend,
    max_input_tokens: usize,
    max_output_tokens: usize,
) -> Result<String, CondenseError> {
    if max_input_tokens < 64 {
        return Err(CondenseError::Validation(format!(
            "max_input_tokens {max_input_tokens} must be >= 64"
        )));
    }
    if group.sources.is_empty() {
        return Err(CondenseError::Validation(format!("group {} has no sources", group.key)));
    }
    let document = truncate_to_sentence_budget(&group.sources.join("\n\n"), max_input_tokens);
    Ok(backend.summarize(&document, max_output_tokens)?)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummarizerMode {
    /// Chunk summaries from one backend, condensed by clustering.
    Groupwise,
    /// One summarize call over the truncated, joined sources.
    SingleShot,
    /// Groupwise with the first backend, then one final pass of the
    /// condensed text through the second backend.
    #[default]
    Fused,
}

impl SummarizerMode {
    pub fn label(self) -> &'static str {
        match self {
            SummarizerMode::Groupwise => "groupwise",
            SummarizerMode::SingleShot => "single_shot",
            SummarizerMode::Fused => "fused",
        }
    }
}

impl FromStr for SummarizerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "groupwise" => Ok(SummarizerMode::Groupwise),
            "single_shot" => Ok(SummarizerMode::SingleShot),
            "fused" => Ok(SummarizerMode::Fused),
            other => Err(format!("unknown summarizer mode `{other}` (expected groupwise|single_shot|fused)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummarizeSettings {
    pub max_group_size: usize,
    pub cluster_threshold: f64,
    pub max_input_tokens: usize,
    pub max_output_tokens: usize,
}

impl Default for SummarizeSettings {
    fn default() -> Self {
        Self {
            max_group_size: DEFAULT_MAX_GROUP_SIZE,
            cluster_threshold: DEFAULT_CLUSTER_THRESHOLD,
            max_input_tokens: 512,
            max_output_tokens: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroupOutcome {
    pub chunk_summaries: Vec<String>,
    pub summary: String,
    pub errors: Vec<String>,
}

/// Produces the final summary of one group under `mode`. `second` is only
/// used by [`SummarizerMode::Fused`].
pub fn summarize_group(
    group: &SummaryGroup,
    mode: SummarizerMode,
    first: &dyn ModelBackend,
    second: &dyn ModelBackend,
    settings: &SummarizeSettings,
) -> Result<GroupOutcome, CondenseError> {
    match mode {
        SummarizerMode::SingleShot => {
            let summary =
                single_shot_summary(group, first, settings.max_input_tokens, settings.max_output_tokens)?;
            Ok(GroupOutcome {
                chunk_summaries: Vec::new(),
                summary,
                errors: Vec::new(),
            })
        }
        SummarizerMode::Groupwise | SummarizerMode::Fused => {
            let chunks =
                chunked_summaries(group, first, settings.max_group_size, settings.max_output_tokens)?;
            let condensed = condense_summaries(&chunks.summaries, first, settings.cluster_threshold)?;
            let summary = if mode == SummarizerMode::Fused {
                second.summarize(&condensed, settings.max_output_tokens)?
            } else {
                condensed
            };
            Ok(GroupOutcome {
                chunk_summaries: chunks.summaries,
                summary,
                errors: chunks.errors,
            })
        }
    }
}
