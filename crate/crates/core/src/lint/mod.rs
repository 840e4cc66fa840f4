//! Lints over extracted norms, one per observed failure mode: empty
//! elements, ungrounded text, duplicate norms, multiple types, modality
//! confusion, omitted details and conjunction trouble.
//!
//! Every lint is a pure function of its inputs. Lints report; they never
//! repair a norm.

mod conjunction;
mod details;
mod grounding;
mod modality;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::Clause;
use crate::norm::{ElementValue, Norm, NormElementKind};
use crate::parser::ParseResult;
use crate::text::normalize_whitespace;

pub use conjunction::lint_conjunction_complexity;
pub use details::{extract_details, lint_detail_coverage, Detail, DetailKey, DetailKind};
pub use grounding::{ground_element, lint_grounding, GroundingReport};
pub use modality::{lint_modality, modal_profile, ModalProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LintCode {
    EmptyElement,
    UngroundedSpan,
    DuplicateExceptType,
    MultiType,
    ModalitySuspect,
    DetailOmitted,
    ConjunctionComplex,
    RedactedSource,
    NoNorms,
}

impl LintCode {
    pub const ALL: [LintCode; 9] = [
        LintCode::EmptyElement,
        LintCode::UngroundedSpan,
        LintCode::DuplicateExceptType,
        LintCode::MultiType,
        LintCode::ModalitySuspect,
        LintCode::DetailOmitted,
        LintCode::ConjunctionComplex,
        LintCode::RedactedSource,
        LintCode::NoNorms,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LintCode::EmptyElement => "EMPTY_ELEMENT",
            LintCode::UngroundedSpan => "UNGROUNDED_SPAN",
            LintCode::DuplicateExceptType => "DUPLICATE_EXCEPT_TYPE",
            LintCode::MultiType => "MULTI_TYPE",
            LintCode::ModalitySuspect => "MODALITY_SUSPECT",
            LintCode::DetailOmitted => "DETAIL_OMITTED",
            LintCode::ConjunctionComplex => "CONJUNCTION_COMPLEX",
            LintCode::RedactedSource => "REDACTED_SOURCE",
            LintCode::NoNorms => "NO_NORMS",
        }
    }
}

impl fmt::Display for LintCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Info,
    Warn,
    Error,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Info => "info",
            Severity::Warn => "warn",
            Severity::Error => "error",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintFinding {
    pub code: LintCode,
    pub severity: Severity,
    pub norm_ordinal: Option<u32>,
    /// Second norm of a pair (duplicate findings).
    #[serde(default)]
    pub related_ordinal: Option<u32>,
    pub element_kind: Option<NormElementKind>,
    pub message: String,
    /// Text from the clause and/or the norm supporting the finding.
    pub evidence: Vec<String>,
}

impl LintFinding {
    pub(crate) fn new(code: LintCode, severity: Severity, message: impl Into<String>) -> Self {
        LintFinding {
            code,
            severity,
            norm_ordinal: None,
            related_ordinal: None,
            element_kind: None,
            message: message.into(),
            evidence: Vec::new(),
        }
    }

    pub(crate) fn norm(mut self, ordinal: u32) -> Self {
        self.norm_ordinal = Some(ordinal);
        self
    }

    pub(crate) fn element(mut self, kind: NormElementKind) -> Self {
        self.element_kind = Some(kind);
        self
    }

    pub(crate) fn evidence<I, S>(mut self, items: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.evidence.extend(items.into_iter().map(Into::into));
        self
    }

    /// Warn or Error.
    pub fn is_actionable(&self) -> bool {
        self.severity >= Severity::Warn
    }
}

/// Which detail classes count as crucial for [`lint_detail_coverage`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetailToggles {
    pub dates: bool,
    pub durations: bool,
    pub amounts: bool,
    pub percentages: bool,
}

impl Default for DetailToggles {
    fn default() -> Self {
        DetailToggles {
            dates: true,
            durations: true,
            amounts: true,
            percentages: true,
        }
    }
}

impl DetailToggles {
    pub fn allows(&self, kind: DetailKind) -> bool {
        match kind {
            DetailKind::Date => self.dates,
            DetailKind::Duration => self.durations,
            DetailKind::Amount => self.amounts,
            DetailKind::Percentage => self.percentages,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LintConfig {
    /// Codes that are never reported.
    pub disabled: Vec<LintCode>,
    /// Elements whose grounding ratio falls below this are flagged.
    pub grounding_threshold: f64,
    /// Long-element rule: at least this many `and`/`or`...
    pub conjunction_min_count: usize,
    /// ...and more than this many content tokens.
    pub conjunction_min_tokens: usize,
    /// Challenging clauses: flag an element covering more than this share of
    /// the clause's content tokens.
    pub conjunction_clause_coverage: f64,
    /// Split-conjunct rule: minimum share of a conjunct's tokens an element
    /// must cover to be considered its home.
    pub conjunct_overlap: f64,
    pub details: DetailToggles,
}

impl Default for LintConfig {
    fn default() -> Self {
        LintConfig {
            disabled: Vec::new(),
            grounding_threshold: 0.6,
            conjunction_min_count: 2,
            conjunction_min_tokens: 20,
            conjunction_clause_coverage: 0.6,
            conjunct_overlap: 0.5,
            details: DetailToggles::default(),
        }
    }
}

impl LintConfig {
    pub fn enabled(&self, code: LintCode) -> bool {
        !self.disabled.contains(&code)
    }
}

/// One finding per empty element: Warn for antecedents (an unconditional
/// norm legitimately has none), Error otherwise.
pub fn lint_empty_elements(norm: &Norm) -> Vec<LintFinding> {
    norm.elements()
        .filter_map(|(kind, value)| match value {
            ElementValue::Present(_) => None,
            ElementValue::Empty { marker } => {
                let severity = if kind == NormElementKind::Antecedent {
                    Severity::Warn
                } else {
                    Severity::Error
                };
                let how = match marker {
                    Some(m) => format!("given as `{m}`"),
                    None => "missing".to_string(),
                };
                Some(
                    LintFinding::new(
                        LintCode::EmptyElement,
                        severity,
                        format!("norm {} has an empty {kind} ({how})", norm.ordinal),
                    )
                    .norm(norm.ordinal)
                    .element(kind)
                    .evidence(marker.clone()),
                )
            }
        })
        .collect()
}

pub fn lint_multitype(norm: &Norm) -> Vec<LintFinding> {
    if norm.types.len() <= 1 {
        return Vec::new();
    }
    let labels: Vec<&str> = norm.types.iter().map(|t| t.label()).collect();
    vec![LintFinding::new(
        LintCode::MultiType,
        Severity::Error,
        format!(
            "norm {} has {} types: {}",
            norm.ordinal,
            labels.len(),
            labels.join(", ")
        ),
    )
    .norm(norm.ordinal)
    .evidence(labels)]
}

fn element_key(value: &ElementValue) -> Option<String> {
    value.text().map(|t| normalize_whitespace(t).to_lowercase())
}

/// Pairs of norms with equal elements (casefolded, whitespace collapsed; all
/// empty values compare equal). Differing type sets and exact duplicates are
/// both reported.
pub fn lint_duplicate(norms: &[Norm]) -> Vec<LintFinding> {
    let keys: Vec<[Option<String>; 4]> = norms
        .iter()
        .map(|n| NormElementKind::ALL.map(|k| element_key(n.element(k))))
        .collect();
    let mut out = Vec::new();
    for i in 0..norms.len() {
        for j in i + 1..norms.len() {
            if keys[i] != keys[j] {
                continue;
            }
            let (a, b) = (&norms[i], &norms[j]);
            let mut ta = a.types.clone();
            let mut tb = b.types.clone();
            ta.sort();
            tb.sort();
            let label = |n: &Norm| {
                let names: Vec<&str> = n.types.iter().map(|t| t.label()).collect();
                format!("norm {}: {}", n.ordinal, names.join(", "))
            };
            let message = if ta == tb {
                format!("norms {} and {} are exact duplicates", a.ordinal, b.ordinal)
            } else {
                format!(
                    "norms {} and {} have identical elements but different types",
                    a.ordinal, b.ordinal
                )
            };
            let mut f = LintFinding::new(LintCode::DuplicateExceptType, Severity::Warn, message)
                .norm(a.ordinal)
                .evidence([label(a), label(b)]);
            f.related_ordinal = Some(b.ordinal);
            out.push(f);
        }
    }
    out
}

/// Runs the enabled lints with a fixed configuration.
#[derive(Debug, Clone, Default)]
pub struct Linter {
    pub config: LintConfig,
}

impl Linter {
    pub fn new(config: LintConfig) -> Self {
        Linter { config }
    }

    /// Union of every enabled lint plus REDACTED_SOURCE and NO_NORMS, sorted by
    /// severity (most severe first), code, then norm ordinal.
    pub fn lint_all(&self, result: &ParseResult, clause: &Clause) -> Vec<LintFinding> {
        let cfg = &self.config;
        let mut out = Vec::new();
        for norm in &result.norms {
            out.extend(lint_empty_elements(norm));
            out.extend(grounding::lint_grounding_with(norm, clause, cfg.grounding_threshold).1);
            out.extend(lint_multitype(norm));
            out.extend(lint_modality(norm, clause));
            out.extend(conjunction::lint_conjunction_with(norm, clause, cfg));
        }
        out.extend(lint_duplicate(&result.norms));
        out.extend(details::lint_detail_coverage_with(
            &result.norms,
            clause,
            &cfg.details,
        ));
        if clause.flags.redacted {
            out.push(
                LintFinding::new(
                    LintCode::RedactedSource,
                    Severity::Info,
                    "source clause contains redacted text",
                )
                .evidence([clause.clause_id.clone()]),
            );
        }
        if result.norms.is_empty() {
            out.push(
                LintFinding::new(
                    LintCode::NoNorms,
                    Severity::Error,
                    "no norms were extracted",
                )
                .evidence(result.diagnostics.iter().map(|d| d.message.clone())),
            );
        }
        out.retain(|f| cfg.enabled(f.code));
        sort_findings(&mut out);
        out
    }
}

pub fn sort_findings(findings: &mut [LintFinding]) {
    findings.sort_by(|a, b| {
        b.severity
            .cmp(&a.severity)
            .then(a.code.cmp(&b.code))
            .then(a.norm_ordinal.cmp(&b.norm_ordinal))
            .then(a.element_kind.cmp(&b.element_kind))
            .then(a.related_ordinal.cmp(&b.related_ordinal))
            .then(a.message.cmp(&b.message))
    });
}

/// [`Linter::lint_all`] with the default configuration.
pub fn lint_all(result: &ParseResult, clause: &Clause) -> Vec<LintFinding> {
    Linter::default().lint_all(result, clause)
}
