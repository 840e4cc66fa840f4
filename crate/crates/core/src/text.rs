//! Word tokenization, stopwords and suffix stemming shared by the selector and
//! the linter. All rules here are fixed so that findings reproduce exactly.

use std::collections::HashSet;
use std::sync::LazyLock;

const STOPWORDS_RESOURCE: &str = include_str!("../resources/stopwords.txt");

static STOPWORDS: LazyLock<HashSet<&'static str>> = LazyLock::new(|| {
    STOPWORDS_RESOURCE
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
});

pub fn is_stopword(lowercase_word: &str) -> bool {
    STOPWORDS.contains(lowercase_word)
}

/// A maximal run of letters and digits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word<'a> {
    pub text: &'a str,
    /// Byte offset into the source.
    pub start: usize,
}

impl Word<'_> {
    pub fn end(&self) -> usize {
        self.start + self.text.len()
    }

    pub fn lower(&self) -> String {
        self.text.to_lowercase()
    }

    pub fn is_capitalized(&self) -> bool {
        self.text.chars().next().is_some_and(char::is_uppercase)
    }
}

pub fn words(text: &str) -> Vec<Word<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in text.char_indices() {
        if ch.is_alphanumeric() {
            if start.is_none() {
                start = Some(i);
            }
        } else if let Some(s) = start.take() {
            out.push(Word {
                text: &text[s..i],
                start: s,
            });
        }
    }
    if let Some(s) = start {
        out.push(Word {
            text: &text[s..],
            start: s,
        });
    }
    out
}

/// Lowercased words with stopwords removed; numerals are kept.
pub fn content_tokens(text: &str) -> Vec<String> {
    words(text)
        .into_iter()
        .map(|w| w.lower())
        .filter(|w| !is_stopword(w))
        .collect()
}

const SUFFIXES: [&str; 7] = ["ions", "ion", "ings", "ing", "ed", "es", "s"];

/// Suffix-stripping stem: removes the first matching suffix of
/// `-ions/-ion/-ings/-ing/-ed/-es/-s` (keeping at least three characters), then a
/// trailing `e`. Numerals are returned unchanged.
pub fn stem(token: &str) -> String {
    let lower = token.to_lowercase();
    if lower.chars().all(|c| c.is_ascii_digit()) {
        return lower;
    }
    let mut base = lower.as_str();
    for suffix in SUFFIXES {
        if let Some(rest) = base.strip_suffix(suffix) {
            if rest.chars().count() >= 3 {
                base = rest;
                break;
            }
        }
    }
    let base = match base.strip_suffix('e') {
        Some(rest) if rest.chars().count() >= 3 => rest,
        _ => base,
    };
    base.to_string()
}

/// Collapses every whitespace run to one space and trims the ends.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}
