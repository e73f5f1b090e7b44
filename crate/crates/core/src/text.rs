//! String normalization. Raw mention text is never modified in place; these
//! helpers produce the keys used for comparison.

/// Lowercases and collapses runs of whitespace to a single space.
/// Used by alignment and embedding lookup. Hyphens and punctuation are kept.
pub fn normalize_mention(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().flat_map(char::to_lowercase));
    }
    out
}

/// Normalizes one token for IDF statistics and generic-mention checks:
/// lowercase with surrounding punctuation stripped. May return an empty string.
pub fn normalize_token(token: &str) -> String {
    token.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase()
}

/// Pronouns, articles and determiners ignored when deciding whether a
/// mention is generic.
pub const STOPLIST: &[&str] = &[
    // articles
    "a",
    "an",
    "the",
    // demonstratives
    "this",
    "that",
    "these",
    "those",
    // personal pronouns
    "i",
    "me",
    "my",
    "mine",
    "myself",
    "we",
    "us",
    "our",
    "ours",
    "ourselves",
    "you",
    "your",
    "yours",
    "yourself",
    "yourselves",
    "he",
    "him",
    "his",
    "himself",
    "she",
    "her",
    "hers",
    "herself",
    "it",
    "its",
    "itself",
    "they",
    "them",
    "their",
    "theirs",
    "themselves",
    "one",
    "ones",
    // relative and interrogative pronouns
    "who",
    "whom",
    "whose",
    "which",
    "what",
    "whatever",
    "whichever",
    "whoever",
    // quantifying determiners
    "all",
    "any",
    "both",
    "each",
    "either",
    "neither",
    "every",
    "some",
    "such",
    "no",
    "other",
    "another",
    "several",
    "many",
    "much",
    "few",
    "more",
    "most",
];

pub fn is_stopword(normalized_token: &str) -> bool {
    STOPLIST.contains(&normalized_token)
}

/// Normalized content tokens of a mention: stoplisted and empty tokens removed.
pub fn content_tokens(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(normalize_token)
        .filter(|t| !t.is_empty() && !is_stopword(t))
        .collect()
}
