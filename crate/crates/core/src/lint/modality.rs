use serde::{Deserialize, Serialize};

use super::{LintCode, LintFinding, Severity};
use crate::corpus::Clause;
use crate::norm::{Norm, NormType};
use crate::text::{words, Word};

/// Modal phrases found in a clause, as they appear in the text.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModalProfile {
    /// "may", "is entitled to", "has the right to", ...
    pub permissive: Vec<String>,
    /// Affirmative "shall", "must", "will <verb>", "is required to".
    pub obligatory: Vec<String>,
    /// "shall not", "may not", "cannot", ...
    pub negated: Vec<String>,
}

impl ModalProfile {
    pub fn all(&self) -> impl Iterator<Item = &String> {
        self.permissive
            .iter()
            .chain(&self.obligatory)
            .chain(&self.negated)
    }
}

const NEGATORS: [&str; 2] = ["not", "never"];
const MODALS: [&str; 4] = ["shall", "must", "will", "may"];
// "the will of", "at will"
const NOUN_WILL_PRECEDERS: [&str; 8] = ["the", "its", "his", "her", "their", "a", "at", "free"];

fn span(text: &str, ws: &[Word<'_>], from: usize, to: usize) -> String {
    text[ws[from].start..ws[to].end()].to_string()
}

pub fn modal_profile(text: &str) -> ModalProfile {
    let ws = words(text);
    let low: Vec<String> = ws.iter().map(Word::lower).collect();
    let at = |i: usize| low.get(i).map(String::as_str);
    let mut p = ModalProfile::default();
    let mut i = 0;
    while i < ws.len() {
        let w = low[i].as_str();
        if w == "cannot" {
            p.negated.push(span(text, &ws, i, i));
        } else if (w == "can" && at(i + 1) == Some("not"))
            || (MODALS.contains(&w) && at(i + 1).is_some_and(|n| NEGATORS.contains(&n)))
        {
            p.negated.push(span(text, &ws, i, i + 1));
            i += 1;
        } else if w == "may" {
            p.permissive.push(span(text, &ws, i, i));
        } else if w == "shall" || w == "must" {
            p.obligatory.push(span(text, &ws, i, i));
        } else if w == "will" {
            let noun = i > 0 && NOUN_WILL_PRECEDERS.contains(&low[i - 1].as_str());
            let verb_follows = ws
                .get(i + 1)
                .is_some_and(|n| n.text.chars().all(|c| c.is_lowercase()));
            if !noun && verb_follows {
                p.obligatory.push(span(text, &ws, i, i + 1));
            }
        } else if matches!(w, "is" | "are" | "be")
            && at(i + 1) == Some("entitled")
            && at(i + 2) == Some("to")
        {
            p.permissive.push(span(text, &ws, i, i + 2));
            i += 2;
        } else if matches!(w, "has" | "have")
            && at(i + 1) == Some("the")
            && at(i + 2) == Some("right")
            && at(i + 3) == Some("to")
        {
            p.permissive.push(span(text, &ws, i, i + 3));
            i += 3;
        } else if matches!(w, "is" | "are" | "be")
            && at(i + 1) == Some("required")
            && at(i + 2) == Some("to")
        {
            p.obligatory.push(span(text, &ws, i, i + 2));
            i += 2;
        }
        i += 1;
    }
    p
}

/// Clause-level check that the norm's type agrees with the clause's modal
/// language:
/// - a commitment over a clause with permissive but no affirmative obligatory modal;
/// - an authorization or power over a clause with obligatory but no permissive modal;
/// - a prohibition over a clause with no negated modal.
pub fn lint_modality(norm: &Norm, clause: &Clause) -> Vec<LintFinding> {
    let p = modal_profile(&clause.text);
    let mut out = Vec::new();
    for &t in &norm.types {
        let evidence: Option<Vec<String>> = match t {
            NormType::Commitment if !p.permissive.is_empty() && p.obligatory.is_empty() => {
                Some(p.permissive.clone())
            }
            NormType::Authorization | NormType::Power
                if !p.obligatory.is_empty() && p.permissive.is_empty() =>
            {
                Some(p.obligatory.clone())
            }
            NormType::Prohibition if p.negated.is_empty() => {
                let found: Vec<String> = p.all().cloned().collect();
                Some(if found.is_empty() {
                    vec![clause.text.clone()]
                } else {
                    found
                })
            }
            _ => None,
        };
        if let Some(evidence) = evidence {
            let why = match t {
                NormType::Commitment => "clause only uses permissive modals",
                NormType::Prohibition => "clause has no negated modal",
                _ => "clause only uses obligatory modals",
            };
            out.push(
                LintFinding::new(
                    LintCode::ModalitySuspect,
                    Severity::Warn,
                    format!("norm {} typed {t} but {why}", norm.ordinal),
                )
                .norm(norm.ordinal)
                .evidence(evidence),
            );
        }
    }
    out
}
