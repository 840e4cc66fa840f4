//! Loading annotated contracts (CUAD question-answering JSON or a flat JSONL
//! clause file) into contracts and clauses.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use regex::{Regex, RegexSet};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

/// The 41 CUAD clause categories, in the dataset's own order.
pub const CUAD_CATEGORIES: [&str; 41] = [
    "Document Name",
    "Parties",
    "Agreement Date",
    "Effective Date",
    "Expiration Date",
    "Renewal Term",
    "Notice Period To Terminate Renewal",
    "Governing Law",
    "Most Favored Nation",
    "Non-Compete",
    "Exclusivity",
    "No-Solicit Of Customers",
    "Competitive Restriction Exception",
    "No-Solicit Of Employees",
    "Non-Disparagement",
    "Termination For Convenience",
    "Rofr/Rofo/Rofn",
    "Change Of Control",
    "Anti-Assignment",
    "Revenue/Profit Sharing",
    "Price Restrictions",
    "Minimum Commitment",
    "Volume Restriction",
    "Ip Ownership Assignment",
    "Joint Ip Ownership",
    "License Grant",
    "Non-Transferable License",
    "Affiliate License-Licensor",
    "Affiliate License-Licensee",
    "Unlimited/All-You-Can-Eat-License",
    "Irrevocable Or Perpetual License",
    "Source Code Escrow",
    "Post-Termination Services",
    "Audit Rights",
    "Uncapped Liability",
    "Cap On Liability",
    "Liquidated Damages",
    "Warranty Duration",
    "Insurance",
    "Covenant Not To Sue",
    "Third Party Beneficiary",
];

/// Categories processed when none are given.
pub const DEFAULT_CATEGORIES: [&str; 4] = [
    "Termination For Convenience",
    "Rofr/Rofo/Rofn",
    "Post-Termination Services",
    "Change Of Control",
];

fn canonical_key(name: &str) -> String {
    let collapsed = name.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed
        .to_lowercase()
        .replace(" / ", "/")
        .replace("/ ", "/")
        .replace(" /", "/")
        .replace(" - ", "-")
        .replace("- ", "-")
        .replace(" -", "-")
}

static CATEGORY_INDEX: LazyLock<BTreeMap<String, &'static str>> = LazyLock::new(|| {
    CUAD_CATEGORIES
        .iter()
        .map(|c| (canonical_key(c), *c))
        .collect()
});

/// A CUAD clause category, always holding the canonical table spelling.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct ClauseCategory(String);

impl ClauseCategory {
    /// Canonicalizes `name` (trimmed, case-insensitive, whitespace collapsed)
    /// against the category table.
    pub fn parse(name: &str) -> Result<Self, CorpusError> {
        CATEGORY_INDEX
            .get(&canonical_key(name))
            .map(|c| ClauseCategory((*c).to_string()))
            .ok_or_else(|| CorpusError::UnknownCategory(name.to_string()))
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    pub fn defaults() -> Vec<ClauseCategory> {
        DEFAULT_CATEGORIES
            .iter()
            .map(|c| ClauseCategory((*c).to_string()))
            .collect()
    }
}

impl fmt::Display for ClauseCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for ClauseCategory {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        ClauseCategory::parse(&raw).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contract {
    pub contract_id: String,
    pub title: String,
    pub full_text: String,
}

/// Keyword occurrences found by the challenging-clause detector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordHit {
    pub keyword: String,
    /// Byte offsets of each match in the clause text.
    pub positions: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClauseFlags {
    pub redacted: bool,
    pub challenging: bool,
    pub keyword_hits: Vec<KeywordHit>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clause {
    pub clause_id: String,
    pub contract_id: String,
    pub category: ClauseCategory,
    pub text: String,
    /// Character (code point) offset into the contract text. Absent when the
    /// source had no offset or the offset did not reproduce the span.
    pub char_start: Option<usize>,
    #[serde(default)]
    pub flags: ClauseFlags,
}

impl Clause {
    /// Builds a clause with redaction detected and no keyword hits.
    pub fn new(
        clause_id: impl Into<String>,
        contract_id: impl Into<String>,
        category: ClauseCategory,
        text: impl Into<String>,
    ) -> Self {
        let text = text.into();
        let redacted = detect_redaction_in(&text);
        Clause {
            clause_id: clause_id.into(),
            contract_id: contract_id.into(),
            category,
            text,
            char_start: None,
            flags: ClauseFlags {
                redacted,
                ..ClauseFlags::default()
            },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub contracts: Vec<Contract>,
    pub clauses: Vec<Clause>,
    /// Non-fatal observations made while loading (offset mismatches and the like).
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("cannot read corpus {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed corpus at {location}: {message}")]
    MalformedCorpus { location: String, message: String },
    #[error("corpus contains no contracts")]
    EmptyCorpus,
    #[error("unknown clause category `{0}`")]
    UnknownCategory(String),
    #[error("no categories requested")]
    NoCategories,
}

fn malformed(location: impl Into<String>, message: impl Into<String>) -> CorpusError {
    CorpusError::MalformedCorpus {
        location: location.into(),
        message: message.into(),
    }
}

/// Reads a corpus file, detecting CUAD JSON versus JSONL clause lines by the
/// top-level structure.
pub fn load_corpus(path: &Path) -> Result<Corpus, CorpusError> {
    if !path.exists() {
        return Err(CorpusError::FileNotFound(path.to_path_buf()));
    }
    let raw = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_corpus(&raw)
}

pub fn parse_corpus(raw: &str) -> Result<Corpus, CorpusError> {
    let trimmed = raw.trim_start();
    if trimmed.starts_with('{') {
        // A single JSON document with a `data` array is CUAD; anything else
        // starting with `{` is treated as JSONL.
        if let Ok(Value::Object(doc)) = serde_json::from_str::<Value>(raw) {
            if doc.contains_key("data") {
                return parse_cuad(&Value::Object(doc));
            }
        }
        return parse_clause_lines(raw);
    }
    if trimmed.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    Err(malformed(
        "$",
        "expected a CUAD JSON object or JSONL clause records",
    ))
}

fn parse_cuad(doc: &Value) -> Result<Corpus, CorpusError> {
    let data = doc
        .get("data")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed("$.data", "expected an array"))?;
    if data.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }

    let mut corpus = Corpus::default();
    let mut seen_ids = BTreeSet::new();
    for (ci, entry) in data.iter().enumerate() {
        let loc = format!("$.data[{ci}]");
        let title = entry
            .get("title")
            .and_then(Value::as_str)
            .ok_or_else(|| malformed(format!("{loc}.title"), "expected a string"))?;
        if !seen_ids.insert(title.to_string()) {
            return Err(malformed(
                format!("{loc}.title"),
                format!("duplicate contract id `{title}`"),
            ));
        }
        let paragraphs = entry
            .get("paragraphs")
            .and_then(Value::as_array)
            .ok_or_else(|| malformed(format!("{loc}.paragraphs"), "expected an array"))?;

        let mut full_text = String::new();
        // spans keyed by category: (answer order, text, char offset)
        let mut spans: BTreeMap<ClauseCategory, Vec<(String, Option<usize>)>> = BTreeMap::new();
        let mut char_base = 0usize;
        for (pi, para) in paragraphs.iter().enumerate() {
            let ploc = format!("{loc}.paragraphs[{pi}]");
            let context = para
                .get("context")
                .and_then(Value::as_str)
                .ok_or_else(|| malformed(format!("{ploc}.context"), "expected a string"))?;
            if pi > 0 {
                full_text.push('\n');
                char_base += 1;
            }
            let context_chars: Vec<(usize, char)> = context.char_indices().collect();
            let qas = para
                .get("qas")
                .and_then(Value::as_array)
                .ok_or_else(|| malformed(format!("{ploc}.qas"), "expected an array"))?;
            for (qi, qa) in qas.iter().enumerate() {
                let qloc = format!("{ploc}.qas[{qi}]");
                let category = qa_category(qa).ok_or_else(|| {
                    malformed(
                        &qloc,
                        "cannot determine clause category from question or id",
                    )
                })??;
                let answers = qa
                    .get("answers")
                    .and_then(Value::as_array)
                    .ok_or_else(|| malformed(format!("{qloc}.answers"), "expected an array"))?;
                for (ai, answer) in answers.iter().enumerate() {
                    let aloc = format!("{qloc}.answers[{ai}]");
                    let text = answer
                        .get("text")
                        .and_then(Value::as_str)
                        .ok_or_else(|| malformed(format!("{aloc}.text"), "expected a string"))?;
                    let start = match answer.get("answer_start") {
                        None | Some(Value::Null) => None,
                        Some(v) => Some(v.as_u64().ok_or_else(|| {
                            malformed(format!("{aloc}.answer_start"), "expected an integer")
                        })? as usize),
                    };
                    let verified = start.and_then(|s| {
                        if span_matches(context, &context_chars, s, text) {
                            Some(char_base + s)
                        } else {
                            corpus.warnings.push(format!(
                                "{aloc}: answer_start {s} does not reproduce the answer text"
                            ));
                            None
                        }
                    });
                    spans
                        .entry(category.clone())
                        .or_default()
                        .push((text.to_string(), verified));
                }
            }
            full_text.push_str(context);
            char_base += context_chars.len();
        }
        if full_text.trim().is_empty() {
            return Err(malformed(
                format!("{loc}.paragraphs"),
                "contract text is empty",
            ));
        }

        for (category, answers) in spans {
            for (ai, (text, char_start)) in answers.into_iter().enumerate() {
                let mut clause = Clause::new(
                    clause_id_for(title, &category, ai),
                    title,
                    category.clone(),
                    text,
                );
                clause.char_start = char_start;
                corpus.clauses.push(clause);
            }
        }
        corpus.contracts.push(Contract {
            contract_id: title.to_string(),
            title: title.to_string(),
            full_text,
        });
    }
    sort_clauses(&mut corpus.clauses);
    Ok(corpus)
}

/// Deterministic clause id: `<contract>::<category>::<answer index>`.
pub fn clause_id_for(contract_id: &str, category: &ClauseCategory, index: usize) -> String {
    format!("{contract_id}::{}::{index:03}", category.name())
}

fn span_matches(context: &str, chars: &[(usize, char)], start: usize, text: &str) -> bool {
    let Some(&(byte_start, _)) = chars.get(start) else {
        return text.is_empty() && start == chars.len();
    };
    context[byte_start..].starts_with(text)
}

static QUOTED: LazyLock<Regex> = LazyLock::new(|| Regex::new(r#""([^"]+)""#).unwrap());

fn qa_category(qa: &Value) -> Option<Result<ClauseCategory, CorpusError>> {
    if let Some(question) = qa.get("question").and_then(Value::as_str) {
        if let Some(c) = QUOTED.captures(question) {
            if let Ok(cat) = ClauseCategory::parse(&c[1]) {
                return Some(Ok(cat));
            }
        }
    }
    let id = qa.get("id").and_then(Value::as_str)?;
    let (_, suffix) = id.rsplit_once("__")?;
    Some(ClauseCategory::parse(suffix))
}

#[derive(Deserialize)]
struct ClauseLine {
    clause_id: String,
    contract_id: String,
    category: String,
    text: String,
}

fn parse_clause_lines(raw: &str) -> Result<Corpus, CorpusError> {
    let mut clauses = Vec::new();
    let mut ids = BTreeSet::new();
    let mut texts: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (lineno, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let loc = format!("line {}", lineno + 1);
        let rec: ClauseLine =
            serde_json::from_str(line).map_err(|e| malformed(&loc, e.to_string()))?;
        let category = ClauseCategory::parse(&rec.category).map_err(|_| {
            malformed(
                format!("{loc}.category"),
                format!("unknown clause category `{}`", rec.category),
            )
        })?;
        if !ids.insert(rec.clause_id.clone()) {
            return Err(malformed(
                format!("{loc}.clause_id"),
                format!("duplicate clause id `{}`", rec.clause_id),
            ));
        }
        texts
            .entry(rec.contract_id.clone())
            .or_default()
            .push(rec.text.clone());
        clauses.push(Clause::new(
            rec.clause_id,
            rec.contract_id,
            category,
            rec.text,
        ));
    }
    if texts.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let contracts = texts
        .into_iter()
        .map(|(id, parts)| Contract {
            title: id.clone(),
            contract_id: id,
            full_text: parts.join("\n\n"),
        })
        .collect();
    sort_clauses(&mut clauses);
    Ok(Corpus {
        contracts,
        clauses,
        warnings: Vec::new(),
    })
}

fn sort_clauses(clauses: &mut [Clause]) {
    clauses.sort_by(|a, b| {
        (&a.contract_id, &a.category, &a.clause_id).cmp(&(
            &b.contract_id,
            &b.category,
            &b.clause_id,
        ))
    });
}

/// Clauses whose category is in `categories`, in corpus order
/// (contract, category, answer index).
pub fn clauses_by_category(
    corpus: &Corpus,
    categories: &[ClauseCategory],
) -> Result<Vec<Clause>, CorpusError> {
    if categories.is_empty() {
        return Err(CorpusError::NoCategories);
    }
    let wanted: BTreeSet<&ClauseCategory> = categories.iter().collect();
    Ok(corpus
        .clauses
        .iter()
        .filter(|c| wanted.contains(&c.category))
        .cloned()
        .collect())
}

/// Like [`clauses_by_category`] but takes raw names, failing on any name not in
/// the category table.
pub fn clauses_by_category_names<S: AsRef<str>>(
    corpus: &Corpus,
    names: &[S],
) -> Result<Vec<Clause>, CorpusError> {
    let cats = names
        .iter()
        .map(|n| ClauseCategory::parse(n.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    clauses_by_category(corpus, &cats)
}

/// Built-in masking conventions.
pub const DEFAULT_REDACTION_PATTERNS: [&str; 6] = [
    r"\*{3,}|X{3,}|_{3,}|█{3,}",
    r"\[\s*\*+\s*\]",
    r"(?i)\[\s*redacted\s*\]",
    r"(?i)\[\s*confidential treatment requested\s*\]",
    r"\(b\)\s*\(\d\)",
    r"(?i)\*\s*confidential\s*\*",
];

static DEFAULT_REDACTION: LazyLock<RegexSet> =
    LazyLock::new(|| RegexSet::new(DEFAULT_REDACTION_PATTERNS).unwrap());

/// Redaction matcher; extra patterns extend (never replace) the built-in set.
#[derive(Debug, Clone)]
pub struct RedactionDetector {
    set: RegexSet,
}

impl Default for RedactionDetector {
    fn default() -> Self {
        RedactionDetector {
            set: DEFAULT_REDACTION.clone(),
        }
    }
}

impl RedactionDetector {
    pub fn with_extra_patterns<S: AsRef<str>>(extra: &[S]) -> Result<Self, regex::Error> {
        let patterns = DEFAULT_REDACTION_PATTERNS
            .iter()
            .map(|p| p.to_string())
            .chain(extra.iter().map(|p| p.as_ref().to_string()));
        Ok(RedactionDetector {
            set: RegexSet::new(patterns)?,
        })
    }

    pub fn is_redacted(&self, text: &str) -> bool {
        self.set.is_match(text)
    }
}

pub fn detect_redaction(clause: &Clause) -> bool {
    detect_redaction_in(&clause.text)
}

pub fn detect_redaction_in(text: &str) -> bool {
    DEFAULT_REDACTION.is_match(text)
}
