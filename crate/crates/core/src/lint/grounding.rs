use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{LintCode, LintFinding, Severity};
use crate::corpus::Clause;
use crate::norm::{Norm, NormElementKind};
use crate::text::{is_stopword, stem, words, Word};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundingReport {
    pub element_kind: NormElementKind,
    pub content_tokens: Vec<String>,
    pub grounded_tokens: Vec<String>,
    /// `grounded / content`, or 1.0 when there are no content tokens.
    pub grounding_ratio: f64,
}

pub(crate) struct ClauseIndex<'a> {
    tokens: HashSet<String>,
    stems: HashSet<String>,
    words: Vec<Word<'a>>,
}

impl<'a> ClauseIndex<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        let words = words(text);
        let tokens: HashSet<String> = words.iter().map(Word::lower).collect();
        let stems = tokens.iter().map(|t| stem(t)).collect();
        ClauseIndex {
            tokens,
            stems,
            words,
        }
    }

    fn grounds(&self, word: &Word<'_>) -> bool {
        let lower = word.lower();
        self.tokens.contains(&lower)
            || self.stems.contains(&stem(&lower))
            || self.spells_acronym(word.text)
    }

    /// An all-caps token whose letters are the initials of consecutive clause
    /// words (stopwords inside the run may be skipped), e.g. `JSMA` for
    /// "Joint Sales and Marketing Agreement".
    fn spells_acronym(&self, token: &str) -> bool {
        let letters: Vec<char> = token.chars().collect();
        if !(2..=8).contains(&letters.len()) || !letters.iter().all(|c| c.is_uppercase()) {
            return false;
        }
        let initial = |w: &Word<'_>| w.text.chars().next().and_then(|c| c.to_uppercase().next());
        (0..self.words.len()).any(|start| {
            let mut pos = 0;
            let mut j = start;
            while j < self.words.len() && pos < letters.len() {
                let w = &self.words[j];
                if initial(w) == Some(letters[pos]) {
                    pos += 1;
                } else if pos == 0 || !is_stopword(&w.lower()) {
                    break;
                }
                j += 1;
            }
            pos == letters.len()
        })
    }
}

/// Maximal runs of capitalized words joined only by whitespace, parentheses,
/// hyphens or ampersands.
fn capitalized_runs<'a>(text: &str, ws: &'a [Word<'a>]) -> Vec<Vec<&'a Word<'a>>> {
    let mut runs: Vec<Vec<&Word>> = Vec::new();
    let mut current: Vec<&Word> = Vec::new();
    let mut prev_end: Option<usize> = None;
    for w in ws {
        let joined = prev_end.is_some_and(|end| {
            text[end..w.start]
                .chars()
                .all(|c| c.is_whitespace() || matches!(c, '(' | ')' | '-' | '&'))
        });
        if !(w.is_capitalized() && (joined || current.is_empty())) {
            if current.len() >= 2 {
                runs.push(std::mem::take(&mut current));
            }
            current.clear();
        }
        if w.is_capitalized() {
            current.push(w);
        }
        prev_end = Some(w.end());
    }
    if current.len() >= 2 {
        runs.push(current);
    }
    runs
}

pub(crate) struct ElementGrounding {
    pub report: GroundingReport,
    /// Surface forms of ungrounded content words, in order, deduplicated.
    pub ungrounded: Vec<String>,
    /// Ungrounded content words that sit inside a capitalized multi-word name.
    pub ungrounded_in_names: Vec<String>,
}

pub(crate) fn ground_text(
    kind: NormElementKind,
    text: &str,
    index: &ClauseIndex<'_>,
) -> ElementGrounding {
    let ws = words(text);
    let mut content = Vec::new();
    let mut grounded = Vec::new();
    let mut ungrounded = Vec::new();
    let mut ungrounded_starts = HashSet::new();
    for w in &ws {
        let lower = w.lower();
        if is_stopword(&lower) {
            continue;
        }
        content.push(lower.clone());
        if index.grounds(w) {
            grounded.push(lower);
        } else {
            ungrounded_starts.insert(w.start);
            if !ungrounded.iter().any(|u: &String| u == w.text) {
                ungrounded.push(w.text.to_string());
            }
        }
    }
    let mut in_names: Vec<String> = Vec::new();
    for run in capitalized_runs(text, &ws) {
        for w in run {
            if ungrounded_starts.contains(&w.start) && !in_names.iter().any(|u| u == w.text) {
                in_names.push(w.text.to_string());
            }
        }
    }
    let ratio = if content.is_empty() {
        1.0
    } else {
        grounded.len() as f64 / content.len() as f64
    };
    ElementGrounding {
        report: GroundingReport {
            element_kind: kind,
            content_tokens: content,
            grounded_tokens: grounded,
            grounding_ratio: ratio,
        },
        ungrounded,
        ungrounded_in_names: in_names,
    }
}

/// Grounding report for one element against a clause text.
pub fn ground_element(
    kind: NormElementKind,
    element_text: &str,
    clause_text: &str,
) -> GroundingReport {
    ground_text(kind, element_text, &ClauseIndex::new(clause_text)).report
}

/// Checks every present element against the clause with the default
/// threshold (0.6).
pub fn lint_grounding(norm: &Norm, clause: &Clause) -> (Vec<GroundingReport>, Vec<LintFinding>) {
    lint_grounding_with(
        norm,
        clause,
        super::LintConfig::default().grounding_threshold,
    )
}

/// A content token is grounded when the clause contains it, a word with the
/// same stem, or (for an all-caps token) the words it abbreviates. An
/// element is flagged when its ratio is below `threshold` or when a
/// capitalized multi-word name in it contains an ungrounded token.
pub fn lint_grounding_with(
    norm: &Norm,
    clause: &Clause,
    threshold: f64,
) -> (Vec<GroundingReport>, Vec<LintFinding>) {
    let index = ClauseIndex::new(&clause.text);
    let mut reports = Vec::new();
    let mut findings = Vec::new();
    for (kind, value) in norm.elements() {
        let Some(text) = value.text() else { continue };
        let g = ground_text(kind, text, &index);
        let ratio = g.report.grounding_ratio;
        let low_ratio = ratio < threshold && !g.ungrounded.is_empty();
        if low_ratio || !g.ungrounded_in_names.is_empty() {
            let message = if !g.ungrounded_in_names.is_empty() {
                format!(
                    "norm {} {kind}: name contains text not found in the clause ({})",
                    norm.ordinal,
                    g.ungrounded_in_names.join(", ")
                )
            } else {
                format!(
                    "norm {} {kind}: grounding ratio {ratio:.2} below {threshold:.2}",
                    norm.ordinal
                )
            };
            let mut evidence = g.ungrounded_in_names.clone();
            for u in &g.ungrounded {
                if !evidence.contains(u) {
                    evidence.push(u.clone());
                }
            }
            findings.push(
                LintFinding::new(LintCode::UngroundedSpan, Severity::Error, message)
                    .norm(norm.ordinal)
                    .element(kind)
                    .evidence(evidence),
            );
        }
        reports.push(g.report);
    }
    (reports, findings)
}
