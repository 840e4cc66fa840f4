use std::collections::HashSet;

use super::{LintCode, LintConfig, LintFinding, Severity};
use crate::corpus::Clause;
use crate::norm::{Norm, NormElementKind};
use crate::text::{is_stopword, stem, words, Word};

fn is_conjunction(w: &Word<'_>) -> bool {
    matches!(w.lower().as_str(), "and" | "or")
}

/// Words that open a condition; a conjunct never spans one.
const CONDITION_WORDS: [&str; 9] = [
    "unless",
    "if",
    "provided",
    "upon",
    "when",
    "where",
    "whereas",
    "except",
    "notwithstanding",
];

fn is_boundary_word(w: &Word<'_>) -> bool {
    is_conjunction(w) || CONDITION_WORDS.contains(&w.lower().as_str())
}

fn content_stems<'a>(ws: impl IntoIterator<Item = &'a Word<'a>>) -> HashSet<String> {
    ws.into_iter()
        .map(Word::lower)
        .filter(|l| !is_stopword(l))
        .map(|l| stem(&l))
        .collect()
}

fn coverage(part: &HashSet<String>, of: &HashSet<String>) -> f64 {
    if part.is_empty() {
        return 0.0;
    }
    part.intersection(of).count() as f64 / part.len() as f64
}

/// [`lint_conjunction_with`] under the default configuration.
pub fn lint_conjunction_complexity(norm: &Norm, clause: &Clause) -> Vec<LintFinding> {
    lint_conjunction_with(norm, clause, &LintConfig::default())
}

/// Reviewer-attention flags (Info) for three shapes of conjunction trouble:
/// - an element with many `and`/`or` and many content tokens;
/// - on a challenging clause, an element copying most of the clause;
/// - the two sides of one clause conjunction landing in the antecedent and
///   the consequent respectively.
pub(crate) fn lint_conjunction_with(
    norm: &Norm,
    clause: &Clause,
    cfg: &LintConfig,
) -> Vec<LintFinding> {
    let clause_words = words(&clause.text);
    let clause_stems = content_stems(&clause_words);
    let mut out = Vec::new();

    for (kind, value) in norm.elements() {
        let Some(text) = value.text() else { continue };
        let ws = words(text);
        let conjunctions = ws.iter().filter(|w| is_conjunction(w)).count();
        let content = ws.iter().filter(|w| !is_stopword(&w.lower())).count();
        if conjunctions >= cfg.conjunction_min_count && content > cfg.conjunction_min_tokens {
            out.push(
                LintFinding::new(
                    LintCode::ConjunctionComplex,
                    Severity::Info,
                    format!(
                        "norm {} {kind} has {conjunctions} conjunctions over {content} content tokens",
                        norm.ordinal
                    ),
                )
                .norm(norm.ordinal)
                .element(kind)
                .evidence([text]),
            );
            continue;
        }
        if clause.flags.challenging && !clause_stems.is_empty() {
            let share = coverage(&clause_stems, &content_stems(&ws));
            if share > cfg.conjunction_clause_coverage {
                out.push(
                    LintFinding::new(
                        LintCode::ConjunctionComplex,
                        Severity::Info,
                        format!(
                            "norm {} {kind} copies {:.0}% of a challenging clause",
                            norm.ordinal,
                            share * 100.0
                        ),
                    )
                    .norm(norm.ordinal)
                    .element(kind)
                    .evidence([text]),
                );
            }
        }
    }

    if let Some(f) = split_conjunct(norm, clause, &clause_words, cfg.conjunct_overlap) {
        out.push(f);
    }
    out
}

/// The conjuncts around each clause `and`/`or`, each running to the nearest
/// punctuation, other conjunction or condition word.
fn conjunct_pairs<'a>(text: &str, ws: &'a [Word<'a>]) -> Vec<(&'a [Word<'a>], &'a [Word<'a>])> {
    let breaks_before = |i: usize| {
        i > 0
            && text[ws[i - 1].end()..ws[i].start]
                .chars()
                .any(|c| matches!(c, ',' | ';' | ':' | '.'))
    };
    let mut pairs = Vec::new();
    for (i, w) in ws.iter().enumerate() {
        if !is_conjunction(w) {
            continue;
        }
        let mut from = i;
        while from > 0 && !breaks_before(from) && !is_boundary_word(&ws[from - 1]) {
            from -= 1;
        }
        let mut to = i + 1;
        while to < ws.len() && !breaks_before(to) && !is_boundary_word(&ws[to]) {
            to += 1;
        }
        if breaks_before(i) || (i + 1 < ws.len() && breaks_before(i + 1)) {
            continue;
        }
        pairs.push((&ws[from..i], &ws[i + 1..to]));
    }
    pairs
}

fn split_conjunct(
    norm: &Norm,
    clause: &Clause,
    ws: &[Word<'_>],
    min_overlap: f64,
) -> Option<LintFinding> {
    let ante = content_stems(&words(norm.element(NormElementKind::Antecedent).text()?));
    let cons = content_stems(&words(norm.element(NormElementKind::Consequent).text()?));
    let text = &clause.text;
    for (left, right) in conjunct_pairs(text, ws) {
        let (l, r) = (content_stems(left), content_stems(right));
        let homes = |side: &HashSet<String>, a: &HashSet<String>, b: &HashSet<String>| {
            let (ca, cb) = (coverage(side, a), coverage(side, b));
            ca >= min_overlap && ca > cb
        };
        let split = (homes(&l, &ante, &cons) && homes(&r, &cons, &ante))
            || (homes(&l, &cons, &ante) && homes(&r, &ante, &cons));
        if split {
            let span =
                |part: &[Word<'_>]| text[part[0].start..part[part.len() - 1].end()].to_string();
            return Some(
                LintFinding::new(
                    LintCode::ConjunctionComplex,
                    Severity::Info,
                    format!(
                        "norm {} splits one clause conjunction across antecedent and consequent",
                        norm.ordinal
                    ),
                )
                .norm(norm.ordinal)
                .evidence([span(left), span(right)]),
            );
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ClauseCategory;
    use crate::norm::{ElementValue, NormType};

    const EX6: &str = "Nothwithstanding the foregoing, this Agreement may be assigned without the AS Parties' consent by MusclePharm in connection with a change of control transaction; provided that the acquirer of MusclePharm shall have financial resources substantially similar or greater than MusclePharm and shall specifically assume the obligations of MusclePharm under this Agreement in writing prior to the consummation of the change of control transaction.";

    fn clause(text: &str) -> Clause {
        Clause::new(
            "c",
            "k",
            ClauseCategory::parse("Change Of Control").unwrap(),
            text,
        )
    }

    fn norm(elems: [&str; 4]) -> Norm {
        Norm {
            ordinal: 1,
            types: vec![NormType::Authorization],
            subject: ElementValue::Present(elems[0].into()),
            object: ElementValue::Present(elems[1].into()),
            antecedent: ElementValue::Present(elems[2].into()),
            consequent: ElementValue::Present(elems[3].into()),
            clause_id: "c".into(),
        }
    }

    #[test]
    fn example_six_split_is_flagged() {
        let n = norm([
            "MusclePharm",
            "AS Parties",
            "The acquirer of MusclePharm shall have financial resources substantially similar or greater than MusclePharm",
            "The acquirer of MusclePharm shall specifically assume the obligations of MusclePharm under this Agreement in writing prior to the consummation of the change of control transaction.",
        ]);
        let f = lint_conjunction_complexity(&n, &clause(EX6));
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].severity, Severity::Info);
        assert_eq!(f[0].evidence[0], "greater than MusclePharm");
        assert!(f[0].evidence[1].starts_with("shall specifically assume"));
    }

    #[test]
    fn conjunct_windows_stop_at_punctuation() {
        let text = "A, b c and d e; f or g unless h.";
        let ws = words(text);
        let pairs: Vec<(Vec<&str>, Vec<&str>)> = conjunct_pairs(text, &ws)
            .into_iter()
            .map(|(l, r)| {
                (
                    l.iter().map(|w| w.text).collect(),
                    r.iter().map(|w| w.text).collect(),
                )
            })
            .collect();
        assert_eq!(
            pairs,
            [(vec!["b", "c"], vec!["d", "e"]), (vec!["f"], vec!["g"])]
        );
    }

    #[test]
    fn example_one_and_short_elements_pass() {
        let c = clause("Notwithstanding any other provision of this Agreement, Rogers may terminate this Agreement, at any time, upon sixty (60) days prior written notice to Licensor.");
        let n = norm([
            "Rogers",
            "Licensor",
            "Rogers providing sixty (60) days' prior written notice",
            "termination of the Agreement",
        ]);
        assert!(lint_conjunction_complexity(&n, &c).is_empty());
        let n = norm(["payment"; 4]);
        assert!(lint_conjunction_complexity(&n, &c).is_empty());
    }

    #[test]
    fn long_element_with_conjunctions() {
        let long = "alpha beta gamma delta and epsilon zeta eta theta iota or kappa lambda mu nu xi omicron pi rho sigma tau upsilon phi";
        let n = norm(["a", "b", "c", long]);
        let f = lint_conjunction_complexity(&n, &clause("x"));
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].element_kind, Some(NormElementKind::Consequent));
    }

    #[test]
    fn challenging_clause_copy() {
        let mut c = clause("Seller shall deliver the goods and Buyer shall pay upon delivery.");
        let n = norm([
            "Seller",
            "Buyer",
            "delivery",
            "Seller shall deliver the goods and Buyer shall pay",
        ]);
        assert!(lint_conjunction_complexity(&n, &c).is_empty());
        c.flags.challenging = true;
        let f = lint_conjunction_complexity(&n, &c);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].element_kind, Some(NormElementKind::Consequent));
    }
}
