//! Review ingestion: line-delimited JSON parsing, cleaning, optional
//! pre-processing and exact-duplicate removal.
//!
//! Parsing never fails on a bad line. Each physical line of the input ends up
//! in exactly one bucket: kept, malformed, duplicate, or belonging to another
//! product, so the counts in [`Corpus`] always add up to the number of lines
//! read.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::text::word_tokens;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("failed to read input: {0}")]
    Io(#[from] io::Error),
    #[error("no reviews survived ingestion ({malformed} malformed, {duplicates} duplicate, {other_product} other-product lines)")]
    EmptyCorpus {
        malformed: usize,
        duplicates: usize,
        other_product: usize,
    },
}

/// JSON field names of the three required review attributes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldNames {
    pub text: String,
    pub rating: String,
    pub product: String,
}

impl Default for FieldNames {
    fn default() -> Self {
        Self {
            text: "reviewText".into(),
            rating: "overall".into(),
            product: "asin".into(),
        }
    }
}

/// One input line as found on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    /// 1-based line number.
    pub source_line: usize,
    pub payload: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Review {
    pub id: String,
    pub product_id: String,
    pub rating: u8,
    pub text: String,
    pub tokens: Vec<String>,
}

impl Review {
    /// Builds a review from already-cleaned text. The id and tokens are
    /// derived, never supplied.
    pub fn new(product_id: impl Into<String>, rating: u8, text: impl Into<String>) -> Self {
        let product_id = product_id.into();
        let text = text.into();
        Self {
            id: review_id(&product_id, &text, rating),
            tokens: word_tokens(&text),
            product_id,
            rating,
            text,
        }
    }
}

/// Deterministic identifier: first 64 bits of SHA-256 over
/// `product_id ␟ text ␟ rating`, hex encoded.
pub fn review_id(product_id: &str, text: &str, rating: u8) -> String {
    let mut hasher = Sha256::new();
    hasher.update(product_id.as_bytes());
    hasher.update([0x1f]);
    hasher.update(text.as_bytes());
    hasher.update([0x1f]);
    hasher.update([rating]);
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Why a line was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejection {
    pub source_line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Corpus {
    pub product_id: String,
    pub reviews: Vec<Review>,
    pub lines_read: usize,
    pub dropped_malformed: usize,
    pub dropped_duplicates: usize,
    /// Well-formed lines for a product other than the corpus product.
    pub dropped_other_product: usize,
    #[serde(skip)]
    pub rejections: Vec<Rejection>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.reviews.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reviews.is_empty()
    }

    pub fn review(&self, id: &str) -> Option<&Review> {
        self.reviews.iter().find(|r| r.id == id)
    }

    /// Applies [`preprocess`] to every review. Reviews whose text becomes
    /// empty are removed, and the rewritten texts are deduplicated again.
    /// Returns the new corpus with the number of reviews that became empty.
    pub fn preprocessed(&self, options: PreprocessOptions) -> (Corpus, usize) {
        if !options.any() {
            return (self.clone(), 0);
        }
        let mut emptied = 0;
        let rewritten: Vec<Review> = self
            .reviews
            .iter()
            .filter_map(|r| {
                let text = preprocess(&r.text, options);
                if word_tokens(&text).is_empty() {
                    emptied += 1;
                    None
                } else {
                    Some(Review::new(r.product_id.clone(), r.rating, text))
                }
            })
            .collect();
        let before = rewritten.len();
        let reviews = dedup(rewritten);
        let mut out = self.clone();
        out.dropped_duplicates += before - reviews.len();
        out.reviews = reviews;
        (out, emptied)
    }
}

impl fmt::Display for Corpus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "product {}: {} reviews kept of {} lines ({} malformed, {} duplicate, {} other product)",
            self.product_id,
            self.reviews.len(),
            self.lines_read,
            self.dropped_malformed,
            self.dropped_duplicates,
            self.dropped_other_product
        )
    }
}

/// A JSON object that refuses repeated keys. `serde_json::Value` would keep
/// the last value silently.
struct StrictObject(Map<String, Value>);

impl<'de> Deserialize<'de> for StrictObject {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ObjectVisitor;

        impl<'de> Visitor<'de> for ObjectVisitor {
            type Value = StrictObject;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a JSON object")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<StrictObject, A::Error> {
                let mut map = Map::new();
                while let Some(key) = access.next_key::<String>()? {
                    if map.contains_key(&key) {
                        return Err(de::Error::custom(format!("duplicate key `{key}`")));
                    }
                    let value: Value = access.next_value()?;
                    map.insert(key, value);
                }
                Ok(StrictObject(map))
            }
        }

        deserializer.deserialize_map(ObjectVisitor)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct ParsedRecord {
    product_id: String,
    rating: u8,
    text: String,
}

fn parse_record(raw: &RawRecord, fields: &FieldNames) -> Result<ParsedRecord, String> {
    if raw.payload.trim().is_empty() {
        return Err("empty line".into());
    }
    let StrictObject(object) =
        serde_json::from_str(&raw.payload).map_err(|e| format!("invalid JSON: {e}"))?;

    let text = match object.get(&fields.text) {
        Some(Value::String(s)) => s,
        Some(_) => return Err(format!("`{}` is not a string", fields.text)),
        None => return Err(format!("missing `{}`", fields.text)),
    };
    let product_id = match object.get(&fields.product) {
        Some(Value::String(s)) if !s.trim().is_empty() => s.trim().to_string(),
        Some(_) => return Err(format!("`{}` is not a non-empty string", fields.product)),
        None => return Err(format!("missing `{}`", fields.product)),
    };
    let rating = match object.get(&fields.rating) {
        Some(Value::Number(n)) => {
            let value = n.as_f64().filter(|v| v.is_finite());
            match value {
                Some(v) if (1.0..=5.0).contains(&v) => v.trunc() as u8,
                _ => return Err(format!("`{}` = {n} outside [1, 5]", fields.rating)),
            }
        }
        Some(_) => return Err(format!("`{}` is not numeric", fields.rating)),
        None => return Err(format!("missing `{}`", fields.rating)),
    };
    let text = clean_text(text);
    if word_tokens(&text).is_empty() {
        return Err("review text is empty after cleaning".into());
    }
    Ok(ParsedRecord {
        product_id,
        rating,
        text,
    })
}

/// Parses a line-delimited JSON review stream into a [`Corpus`].
///
/// With no `product_filter`, the product of the first well-formed line
/// becomes the corpus product.
pub fn parse_reviews<R: BufRead>(
    input: R,
    product_filter: Option<&str>,
    fields: &FieldNames,
) -> Result<Corpus, IngestError> {
    let mut product: Option<String> = product_filter.map(str::to_string);
    let mut candidates = Vec::new();
    let mut rejections = Vec::new();
    let mut other_product = 0;
    let mut lines_read = 0;

    for (index, line) in input.lines().enumerate() {
        let raw = RawRecord {
            source_line: index + 1,
            payload: line?,
        };
        lines_read += 1;
        match parse_record(&raw, fields) {
            Ok(record) => {
                let corpus_product = product.get_or_insert_with(|| record.product_id.clone());
                if *corpus_product != record.product_id {
                    other_product += 1;
                    continue;
                }
                candidates.push(Review::new(record.product_id, record.rating, record.text));
            }
            Err(reason) => rejections.push(Rejection {
                source_line: raw.source_line,
                reason,
            }),
        }
    }

    let before = candidates.len();
    let reviews = dedup(candidates);
    let dropped_duplicates = before - reviews.len();
    let dropped_malformed = rejections.len();

    if reviews.is_empty() {
        return Err(IngestError::EmptyCorpus {
            malformed: dropped_malformed,
            duplicates: dropped_duplicates,
            other_product,
        });
    }

    Ok(Corpus {
        product_id: product.unwrap_or_default(),
        reviews,
        lines_read,
        dropped_malformed,
        dropped_duplicates,
        dropped_other_product: other_product,
        rejections,
    })
}

pub fn parse_reviews_file(
    path: impl AsRef<Path>,
    product_filter: Option<&str>,
    fields: &FieldNames,
) -> Result<Corpus, IngestError> {
    let file = File::open(path)?;
    parse_reviews(BufReader::new(file), product_filter, fields)
}

fn tag_pattern() -> &'static Regex {
    static TAG: OnceLock<Regex> = OnceLock::new();
    TAG.get_or_init(|| Regex::new(r"<[A-Za-z/!?][^<>]*>").expect("valid tag regex"))
}

/// Strips HTML tags, collapses whitespace runs and trims.
///
/// Tag removal repeats until nothing matches, since removing `<b>` from
/// `<<b>i>` exposes a new tag; that makes the function idempotent.
pub fn clean_text(raw: &str) -> String {
    let tag = tag_pattern();
    let mut text = raw.to_string();
    while tag.is_match(&text) {
        text = tag.replace_all(&text, " ").into_owned();
    }
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessOptions {
    pub remove_stopwords: bool,
    pub strip_symbols_numbers: bool,
    pub stem: bool,
}

impl PreprocessOptions {
    pub fn all() -> Self {
        Self {
            remove_stopwords: true,
            strip_symbols_numbers: true,
            stem: true,
        }
    }

    pub fn any(&self) -> bool {
        self.remove_stopwords || self.strip_symbols_numbers || self.stem
    }
}

/// Optional text normalization. With every flag off the input is returned
/// untouched; otherwise tokens are lowercased and filtered in the order
/// symbols/numbers, stopwords, stemming.
pub fn preprocess(review_text: &str, options: PreprocessOptions) -> String {
    if !options.any() {
        return review_text.to_string();
    }
    let stopwords = stopword_set();
    review_text
        .split_whitespace()
        .map(str::to_lowercase)
        .filter_map(|token| {
            let token = if options.strip_symbols_numbers {
                token.chars().filter(|c| c.is_alphabetic()).collect()
            } else {
                token
            };
            if token.is_empty() {
                return None;
            }
            if options.remove_stopwords && stopwords.contains(token.as_str()) {
                return None;
            }
            Some(if options.stem { stem(&token) } else { token })
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Keeps the first review for every `(text, rating)` pair.
pub fn dedup(reviews: Vec<Review>) -> Vec<Review> {
    let mut seen: HashSet<(String, u8)> = HashSet::with_capacity(reviews.len());
    reviews
        .into_iter()
        .filter(|r| seen.insert((r.text.clone(), r.rating)))
        .collect()
}

/// Writes `{id, product_id, rating, text}` per line.
pub fn write_corpus_jsonl<W: Write>(corpus: &Corpus, mut out: W) -> io::Result<()> {
    #[derive(Serialize)]
    struct Row<'a> {
        id: &'a str,
        product_id: &'a str,
        rating: u8,
        text: &'a str,
    }
    for r in &corpus.reviews {
        let row = Row {
            id: &r.id,
            product_id: &r.product_id,
            rating: r.rating,
            text: &r.text,
        };
        serde_json::to_writer(&mut out, &row)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

const STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are",
    "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but",
    "by", "can", "could", "did", "do", "does", "doing", "down", "during", "each", "few", "for",
    "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers", "herself",
    "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it", "its", "itself", "just",
    "me", "more", "most", "my", "myself", "no", "nor", "not", "now", "of", "off", "on", "once",
    "only", "or", "other", "ought", "our", "ours", "ourselves", "out", "over", "own", "same",
    "she", "should", "so", "some", "such", "than", "that", "the", "their", "theirs", "them",
    "themselves", "then", "there", "these", "they", "this", "those", "through", "to", "too",
    "under", "until", "up", "very", "was", "we", "were", "what", "when", "where", "which",
    "while", "who", "whom", "why", "will", "with", "would", "you", "your", "yours", "yourself",
    "yourselves", "also", "s", "t", "don", "didn", "doesn", "isn", "wasn", "aren", "weren",
    "won", "wouldn", "couldn", "shouldn", "haven", "hasn", "hadn", "ll", "re", "ve", "d", "m",
    "o", "y", "let", "may", "might", "must", "shall", "us", "yet", "get", "got",
];

fn stopword_set() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| STOPWORDS.iter().copied().collect())
}

pub fn is_stopword(token: &str) -> bool {
    stopword_set().contains(token)
}

fn is_vowel(c: u8) -> bool {
    matches!(c, b'a' | b'e' | b'i' | b'o' | b'u' | b'y')
}

fn has_vowel(s: &str) -> bool {
    s.bytes().any(is_vowel)
}

fn undouble(mut stem: String) -> String {
    let b = stem.as_bytes();
    if b.len() >= 2 {
        let (x, y) = (b[b.len() - 2], b[b.len() - 1]);
        if x == y && !is_vowel(y) && !matches!(y, b'l' | b's' | b'z') {
            stem.pop();
        }
    }
    stem
}

/// Puts back the silent `e` that `-ed`/`-ing` removed, so "rating" meets
/// "rate" instead of "rat". Short consonant-vowel-consonant stems get it, as
/// do endings that cannot close an English word on their own.
fn restore_e(stem: String) -> String {
    let b = stem.as_bytes();
    let n = b.len();
    let consonant = |c: u8| !is_vowel(c);
    let vowel_groups = b
        .iter()
        .enumerate()
        .filter(|&(i, &c)| is_vowel(c) && (i == 0 || !is_vowel(b[i - 1])))
        .count();
    let short_cvc = n >= 3
        && vowel_groups == 1
        && consonant(b[n - 3])
        && is_vowel(b[n - 2])
        && consonant(b[n - 1])
        && !matches!(b[n - 1], b'w' | b'x' | b'y');
    let dangling = ["bl", "iz", "rg", "dg", "v"].iter().any(|e| stem.ends_with(e))
        || (stem.ends_with("at") && n >= 3 && consonant(b[n - 3]));
    if short_cvc || dangling {
        stem + "e"
    } else {
        stem
    }
}

/// Inflectional suffix stemmer (plurals, `-ed`, `-ing`). It stands in for a
/// lemmatizer, so derivational suffixes are left alone: "battery" stays
/// "battery" while "batteries" and "displayed" map to "battery" and
/// "display".
pub fn stem(word: &str) -> String {
    let w = word.to_lowercase();
    if w.chars().count() <= 3 || !w.is_ascii() {
        return w;
    }
    if let Some(base) = w.strip_suffix("ies") {
        return format!("{base}y");
    }
    if let Some(base) = w.strip_suffix("sses") {
        return format!("{base}ss");
    }
    if w.ends_with("ss") || w.ends_with("us") || w.ends_with("is") {
        return w;
    }
    if let Some(base) = w.strip_suffix('s') {
        return base.to_string();
    }
    if let Some(base) = w.strip_suffix("ied") {
        return format!("{base}y");
    }
    if w.ends_with("eed") {
        return w;
    }
    for suffix in ["ed", "ing"] {
        if let Some(base) = w.strip_suffix(suffix) {
            if base.len() >= 3 && has_vowel(base) {
                let undoubled = undouble(base.to_string());
                return if undoubled.len() < base.len() { undoubled } else { restore_e(undoubled) };
            }
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Corpus, IngestError> {
        parse_reviews(text.as_bytes(), None, &FieldNames::default())
    }

    fn line(rating: f64, text: &str) -> String {
        serde_json::json!({"asin": "P1", "overall": rating, "reviewText": text}).to_string()
    }

    #[test]
    fn clean_text_examples() {
        assert_eq!(clean_text("Great <br> screen"), "Great screen");
        assert_eq!(clean_text("  spaced   out  "), "spaced out");
        assert_eq!(clean_text("<<b>i>nested"), "< i>nested");
        assert_eq!(clean_text("3 < 4 and 5 > 2"), "3 < 4 and 5 > 2");
    }

    #[test]
    fn malformed_line_is_skipped() {
        let input = [
            line(5.0, "one"),
            line(4.0, "two"),
            r#"{"asin": "P1", "overall": 3.0, "reviewText": "broken <a href="x">html</a>"}"#.into(),
            line(3.0, "three"),
        ]
        .join("\n");
        let corpus = parse(&input).unwrap();
        assert_eq!(corpus.len(), 3);
        assert_eq!(corpus.dropped_malformed, 1);
        assert_eq!(corpus.rejections[0].source_line, 3);
    }

    #[test]
    fn exact_duplicates_dropped_but_rating_distinguishes() {
        let input = [line(5.0, "same"), line(5.0, "same"), line(4.0, "same")].join("\n");
        let corpus = parse(&input).unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus.dropped_duplicates, 1);
        assert_eq!(corpus.reviews[0].rating, 5);
        assert_eq!(corpus.reviews[1].rating, 4);
    }

    #[test]
    fn duplicate_keys_are_malformed() {
        let input = r#"{"asin": "P1", "overall": 3, "reviewText": "a", "reviewText": "b"}"#;
        assert!(matches!(parse(input), Err(IngestError::EmptyCorpus { malformed: 1, .. })));
    }

    #[test]
    fn rating_rules() {
        let input = [line(4.0, "a"), line(2.7, "b"), line(0.0, "c"), line(5.5, "d")].join("\n");
        let corpus = parse(&input).unwrap();
        let ratings: Vec<u8> = corpus.reviews.iter().map(|r| r.rating).collect();
        assert_eq!(ratings, vec![4, 2]);
        assert_eq!(corpus.dropped_malformed, 2);

        let text_rating = r#"{"asin": "P1", "overall": "5", "reviewText": "x"}"#;
        assert!(parse(text_rating).is_err());
    }

    #[test]
    fn product_filter_and_first_product_rule() {
        let input = [
            line(5.0, "mine"),
            serde_json::json!({"asin": "P2", "overall": 5, "reviewText": "theirs"}).to_string(),
        ]
        .join("\n");
        let corpus = parse(&input).unwrap();
        assert_eq!(corpus.product_id, "P1");
        assert_eq!(corpus.dropped_other_product, 1);

        let filtered = parse_reviews(input.as_bytes(), Some("P2"), &FieldNames::default()).unwrap();
        assert_eq!(filtered.reviews[0].text, "theirs");
        assert_eq!(filtered.dropped_other_product, 1);
    }

    #[test]
    fn custom_field_names() {
        let fields = FieldNames {
            text: "body".into(),
            rating: "stars".into(),
            product: "sku".into(),
        };
        let input = r#"{"sku": "S", "stars": 2, "body": "fine"}"#;
        let corpus = parse_reviews(input.as_bytes(), None, &fields).unwrap();
        assert_eq!(corpus.reviews[0].rating, 2);
    }

    #[test]
    fn empty_corpus_error() {
        assert!(matches!(parse(""), Err(IngestError::EmptyCorpus { .. })));
        assert!(matches!(parse("not json"), Err(IngestError::EmptyCorpus { malformed: 1, .. })));
    }

    #[test]
    fn dedup_examples() {
        let a = Review::new("P", 5, "a");
        let b = Review::new("P", 5, "b");
        assert_eq!(dedup(vec![a.clone(), a.clone(), b.clone()]), vec![a.clone(), b]);
        assert!(dedup(Vec::new()).is_empty());
        let a4 = Review::new("P", 4, "a");
        assert_eq!(dedup(vec![a.clone(), a4.clone()]).len(), 2);
    }

    #[test]
    fn review_id_is_pure_and_sensitive() {
        assert_eq!(review_id("P", "t", 5), review_id("P", "t", 5));
        assert_ne!(review_id("P", "t", 5), review_id("P", "t", 4));
        assert_ne!(review_id("P", "t", 5), review_id("Q", "t", 5));
        assert_eq!(review_id("P", "t", 5).len(), 16);
    }

    #[test]
    fn preprocess_examples() {
        assert_eq!(
            preprocess("The battery is 100% great!", PreprocessOptions::all()),
            "battery great"
        );
        let text = "Whatever, The TEXT 42!";
        assert_eq!(preprocess(text, PreprocessOptions::default()), text);
        let stemmed = preprocess(
            "displays displayed",
            PreprocessOptions {
                stem: true,
                ..Default::default()
            },
        );
        assert_eq!(stemmed, "display display");
    }

    #[test]
    fn stemmer_table() {
        let cases = [
            ("displays", "display"),
            ("displayed", "display"),
            ("displaying", "display"),
            ("batteries", "battery"),
            ("battery", "battery"),
            ("glasses", "glass"),
            ("glass", "glass"),
            ("stopped", "stop"),
            ("worked", "work"),
            ("speakers", "speaker"),
            ("bus", "bus"),
            ("red", "red"),
            ("agreed", "agreed"),
            ("copied", "copy"),
            ("rating", "rate"),
            ("rated", "rate"),
            ("hoping", "hope"),
            ("charged", "charge"),
            ("updated", "update"),
            ("heated", "heat"),
            ("lasting", "last"),
            ("ringing", "ring"),
            ("stopping", "stop"),
        ];
        for (word, expected) in cases {
            assert_eq!(stem(word), expected, "{word}");
        }
    }

    #[test]
    fn preprocessed_corpus_drops_empties_and_recomputes_ids() {
        let input = [line(5.0, "The battery"), line(5.0, "the the"), line(5.0, "THE batteries")].join("\n");
        let corpus = parse(&input).unwrap();
        let (pre, emptied) = corpus.preprocessed(PreprocessOptions::all());
        assert_eq!(emptied, 1);
        assert_eq!(pre.len(), 1);
        assert_eq!(pre.reviews[0].text, "battery");
        assert_eq!(pre.reviews[0].id, review_id("P1", "battery", 5));
        assert_eq!(pre.dropped_duplicates, corpus.dropped_duplicates + 1);
    }

    #[test]
    fn corpus_dump_shape() {
        let corpus = parse(&line(3.0, "ok")).unwrap();
        let mut buf = Vec::new();
        write_corpus_jsonl(&corpus, &mut buf).unwrap();
        let v: Value = serde_json::from_slice(&buf).unwrap();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys.len(), 4);
        assert_eq!(v["rating"], 3);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]
            #[test]
            fn clean_text_idempotent_and_shrinking(s in "[a-z <>/!\\t\\n]{0,60}") {
                let once = clean_text(&s);
                prop_assert_eq!(clean_text(&once), once.clone());
                prop_assert!(once.len() <= s.len());
            }

            #[test]
            fn dedup_idempotent(items in proptest::collection::vec((0u8..4, 1u8..=5), 0..30)) {
                let reviews: Vec<Review> = items
                    .iter()
                    .map(|(t, r)| Review::new("P", *r, format!("text {t}")))
                    .collect();
                let once = dedup(reviews);
                prop_assert_eq!(dedup(once.clone()), once);
            }
        }
    }
}
