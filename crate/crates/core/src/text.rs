//! Word-level tokenization shared by ingest, the mock backend and ROUGE.

/// Lowercases and splits on every run of non-alphanumeric characters.
///
/// No stemming is applied and digits are kept, so `"The iPad-2 works!"`
/// becomes `["the", "ipad", "2", "works"]`.
pub fn word_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Number of whitespace-separated tokens.
pub fn whitespace_len(text: &str) -> usize {
    text.split_whitespace().count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_on_symbols() {
        assert_eq!(word_tokens("The iPad-2 works!"), vec!["the", "ipad", "2", "works"]);
        assert!(word_tokens("").is_empty());
        assert!(word_tokens("  ?!  ").is_empty());
    }
}
