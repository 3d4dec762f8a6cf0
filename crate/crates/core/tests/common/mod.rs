//! Independent reference implementations shared by the property tests and
//! the acceptance runner. They favour obviousness over speed.

#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};

use opinionforge::backend::{BackendError, ModelBackend, QaOutput, SentimentProbs};
use opinionforge::condense::SentenceCluster;
use opinionforge::mrc::SpanDistribution;
use opinionforge::{MockBackend, RougeScore};
use rand::Rng;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture(name: &str) -> PathBuf {
    fixtures_dir().join(name)
}

// ---- ROUGE ----

fn ngrams(tokens: &[String], n: usize) -> Vec<&[String]> {
    if n == 0 || tokens.len() < n {
        return Vec::new();
    }
    (0..=tokens.len() - n).map(|i| &tokens[i..i + n]).collect()
}

fn count(list: &[&[String]], gram: &[String]) -> usize {
    list.iter().filter(|g| **g == gram).count()
}

/// Clipped n-gram overlap by linear scans, no hashing.
pub fn brute_rouge(candidate: &[String], reference: &[String], n: usize) -> RougeScore {
    let cand = ngrams(candidate, n);
    let refs = ngrams(reference, n);
    let mut seen: Vec<&[String]> = Vec::new();
    let mut overlap = 0usize;
    for g in &cand {
        if seen.contains(g) {
            continue;
        }
        seen.push(g);
        overlap += count(&cand, g).min(count(&refs, g));
    }
    let p = if cand.is_empty() { 0.0 } else { overlap as f64 / cand.len() as f64 };
    let r = if refs.is_empty() { 0.0 } else { overlap as f64 / refs.len() as f64 };
    let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    RougeScore {
        precision: p,
        recall: r,
        f1,
    }
}

pub fn random_tokens(rng: &mut impl Rng, max_len: usize) -> Vec<String> {
    const VOCAB: &[&str] = &["the", "battery", "is", "great", "screen", "bad", "very"];
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| VOCAB[rng.gen_range(0..VOCAB.len())].to_string()).collect()
}

// ---- span decoding ----

/// Every admissible `(s, e)` ranked by end probability, then lower `e`, then
/// start probability, then lower `s`.
pub fn exhaustive_sequential(dist: &SpanDistribution, sep: usize) -> Option<(usize, usize)> {
    let n = dist.start_probs.len();
    let mut best: Option<(usize, usize)> = None;
    for s in sep + 1..n {
        for e in s..n {
            let better = match best {
                None => true,
                Some((bs, be)) => {
                    let (ce, cbe) = (dist.end_probs[e], dist.end_probs[be]);
                    if ce != cbe {
                        ce > cbe
                    } else if e != be {
                        e < be
                    } else if dist.start_probs[s] != dist.start_probs[bs] {
                        dist.start_probs[s] > dist.start_probs[bs]
                    } else {
                        s < bs
                    }
                }
            };
            if better {
                best = Some((s, e));
            }
        }
    }
    best
}

fn normalized(rng: &mut impl Rng, n: usize, coarse: bool) -> Vec<f64> {
    let raw: Vec<f64> = (0..n)
        .map(|_| {
            if coarse {
                // few distinct levels so ties actually occur
                f64::from(rng.gen_range(1..4u8))
            } else {
                rng.gen_range(0.001..1.0)
            }
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / sum).collect()
}

/// Random distribution of length 2..=max_len with a separator leaving at
/// least one admissible position.
pub fn random_distribution(rng: &mut impl Rng, max_len: usize) -> (SpanDistribution, usize) {
    let n = rng.gen_range(2..=max_len);
    let sep = rng.gen_range(0..n - 1);
    let coarse = rng.gen_bool(0.3);
    let dist = SpanDistribution {
        start_probs: normalized(rng, n, coarse),
        end_probs: normalized(rng, n, coarse),
    };
    (dist, sep)
}

// ---- clustering ----

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Naive average linkage: every round recomputes all cluster distances from
/// the points.
pub fn brute_average_linkage(points: &[Vec<f64>], threshold: f64) -> Vec<Vec<usize>> {
    let mut clusters: Vec<Vec<usize>> = (0..points.len()).map(|i| vec![i]).collect();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let mut total = 0.0;
                for &i in &clusters[a] {
                    for &j in &clusters[b] {
                        total += dist(&points[i], &points[j]);
                    }
                }
                let avg = total / (clusters[a].len() * clusters[b].len()) as f64;
                if best.is_none_or(|(d, _, _)| avg < d) {
                    best = Some((avg, a, b));
                }
            }
        }
        match best {
            Some((d, a, b)) if d < threshold => {
                let moved = clusters.remove(b);
                clusters[a].extend(moved);
                clusters[a].sort_unstable();
            }
            _ => break,
        }
        // keep clusters ordered by smallest member, matching the tie rule
        clusters.sort_by_key(|c| c[0]);
    }
    clusters
}

pub fn members(clusters: &[SentenceCluster]) -> Vec<Vec<usize>> {
    clusters.iter().map(|c| c.member_indices.clone()).collect()
}

/// Every index in exactly one cluster, members ascending, representative a
/// member.
pub fn is_partition(clusters: &[SentenceCluster], n: usize) -> bool {
    let mut seen = vec![false; n];
    for c in clusters {
        if c.member_indices.is_empty()
            || !c.member_indices.windows(2).all(|w| w[0] < w[1])
            || !c.member_indices.contains(&c.representative_index)
        {
            return false;
        }
        for &i in &c.member_indices {
            if i >= n || seen[i] {
                return false;
            }
            seen[i] = true;
        }
    }
    seen.into_iter().all(|s| s)
}

pub fn random_points(rng: &mut impl Rng, max_n: usize) -> Vec<Vec<f64>> {
    let n = rng.gen_range(1..=max_n);
    let d = rng.gen_range(1..=4);
    (0..n).map(|_| (0..d).map(|_| rng.gen_range(0.0..1.0)).collect()).collect()
}

// ---- backends ----

/// Mock backend that counts summarize calls.
pub struct CountingBackend {
    inner: MockBackend,
    pub summarize_calls: AtomicUsize,
}

impl CountingBackend {
    pub fn new() -> Self {
        Self {
            inner: MockBackend::new(0),
            summarize_calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.summarize_calls.load(Ordering::SeqCst)
    }
}

impl ModelBackend for CountingBackend {
    fn qa(&self, question: &str, context: &str) -> Result<QaOutput, BackendError> {
        self.inner.qa(question, context)
    }

    fn summarize(&self, text: &str, max_tokens: usize) -> Result<String, BackendError> {
        self.summarize_calls.fetch_add(1, Ordering::SeqCst);
        self.inner.summarize(text, max_tokens)
    }

    fn embed(&self, sentences: &[String]) -> Result<Vec<Vec<f64>>, BackendError> {
        self.inner.embed(sentences)
    }

    fn sentiment(&self, text: &str) -> Result<SentimentProbs, BackendError> {
        self.inner.sentiment(text)
    }
}
