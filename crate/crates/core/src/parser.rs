//! Lenient parser for the model's semi-structured norm listings.
//!
//! A response is a sequence of norm blocks. A block opens with either a
//! `Norm <k>: <types>` header or a `Norm type(s): <types>` line (types may
//! follow on the next line as a dash bullet), and holds `Subject:`, `Object:`,
//! `Antecedent:` and `Consequent:` fields. Matching is case-insensitive and
//! tolerates bullets, enumerations and markdown emphasis. Nothing here fails:
//! every problem becomes a [`Diagnostic`].

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::norm::{ElementValue, Norm, NormElementKind, NormType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiagnosticSeverity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: DiagnosticSeverity,
    pub message: String,
    /// 1-based; 0 when the diagnostic concerns the whole response.
    pub line_number: usize,
}

impl Diagnostic {
    fn warning(line_number: usize, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: DiagnosticSeverity::Warning,
            message: message.into(),
            line_number,
        }
    }

    fn error(line_number: usize, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: DiagnosticSeverity::Error,
            message: message.into(),
            line_number,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseResult {
    /// Ordered by ordinal.
    pub norms: Vec<Norm>,
    pub diagnostics: Vec<Diagnostic>,
}

impl ParseResult {
    pub fn has_errors(&self) -> bool {
        self.diagnostics
            .iter()
            .any(|d| d.severity == DiagnosticSeverity::Error)
    }
}

/// Literal texts a model writes for "no value" (compared case-insensitively
/// after trimming quotes and a trailing period).
pub const EMPTY_MARKERS: [&str; 9] = [
    "",
    "n/a",
    "na",
    "null",
    "none",
    "not specified",
    "none explicitly stated",
    "not applicable",
    "-",
];

const QUOTES: [char; 7] = [
    '\'', '"', '`', '\u{2018}', '\u{2019}', '\u{201C}', '\u{201D}',
];

fn strip_surrounding_quotes(mut s: &str) -> &str {
    loop {
        let mut chars = s.chars();
        match (chars.next(), chars.next_back()) {
            (Some(a), Some(b)) if QUOTES.contains(&a) && QUOTES.contains(&b) => {
                s = s[a.len_utf8()..s.len() - b.len_utf8()].trim();
            }
            _ => return s,
        }
    }
}

/// Trims whitespace and surrounding quotes; recognized empty markers map to
/// [`ElementValue::Empty`] carrying the original (trimmed) text.
pub fn normalize_element(raw_text: &str) -> ElementValue {
    let trimmed = raw_text.trim();
    let residue = strip_surrounding_quotes(trimmed);
    let lowered = residue.to_lowercase();
    let probe = lowered.strip_suffix('.').unwrap_or(&lowered).trim_end();
    if EMPTY_MARKERS.contains(&probe) || EMPTY_MARKERS.contains(&lowered.as_str()) {
        ElementValue::Empty {
            marker: Some(trimmed.to_string()),
        }
    } else {
        ElementValue::Present(residue.to_string())
    }
}

static TYPE_SEPARATORS: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)[,;/&|+]|\s-\s|^\s*[-*•]|\band\b").unwrap());

fn type_token(token: &str) -> Option<NormType> {
    let cleaned = token
        .trim()
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase();
    let cleaned = cleaned
        .strip_suffix(" norms")
        .or_else(|| cleaned.strip_suffix(" norm"))
        .unwrap_or(&cleaned);
    let singular = cleaned.strip_suffix('s').unwrap_or(cleaned);
    cleaned
        .parse::<NormType>()
        .or_else(|_| singular.parse::<NormType>())
        .ok()
}

/// Splits a type list on commas, slashes, `and` and dash bullets and matches
/// each token case-insensitively. Unknown tokens are dropped with a warning.
pub fn parse_norm_type(raw: &str) -> (Vec<NormType>, Vec<Diagnostic>) {
    parse_norm_type_at(raw, 0)
}

fn parse_norm_type_at(raw: &str, line: usize) -> (Vec<NormType>, Vec<Diagnostic>) {
    let mut types = Vec::new();
    let mut diagnostics = Vec::new();
    for token in TYPE_SEPARATORS.split(raw) {
        if token
            .trim_matches(|c: char| !c.is_alphanumeric())
            .is_empty()
        {
            continue;
        }
        match type_token(token) {
            Some(t) if !types.contains(&t) => types.push(t),
            Some(_) => {}
            None => diagnostics.push(Diagnostic::warning(
                line,
                format!("unknown norm type `{}`", token.trim()),
            )),
        }
    }
    (types, diagnostics)
}

static DECORATION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(?:[-*•#>]+\s*|\d{1,2}[.)]\s+|\(?[a-z]\)\s+)*").unwrap());
// `[*_]{2}` admits markdown emphasis closing around a label ("**Subject:** x").
static NUMBERED_HEADER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^norm\s*#?\s*(\d+)\s*(?:[*_]{2})?\s*(?:[:.)\-–—]\s*(.*))?$").unwrap()
});
static TYPE_HEADER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^norm\s+types?\s*(?:[*_]{2})?\s*[:\-–—]\s*(?:[*_]{2})?(.*)$").unwrap()
});
static FIELD: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)^(subject|object|antecedent|consequent)\s*(?:\([^)]*\))?\s*(?:[*_]{2})?\s*:\s*(?:[*_]{2})?\s*(.*)$",
    )
    .unwrap()
});

/// Drops leading bullets, enumerations and emphasis markers. Values are
/// never rewritten, so field text stays a substring of the response.
fn strip_decoration(line: &str) -> &str {
    let t = line.trim();
    let t = DECORATION.find(t).map_or(t, |m| &t[m.end()..]);
    t.trim_start_matches(['*', '_']).trim_start()
}

fn field_kind(name: &str) -> NormElementKind {
    match name.to_lowercase().as_str() {
        "subject" => NormElementKind::Subject,
        "object" => NormElementKind::Object,
        "antecedent" => NormElementKind::Antecedent,
        _ => NormElementKind::Consequent,
    }
}

#[derive(Default)]
struct Block {
    ordinal: Option<u32>,
    line: usize,
    types: Vec<NormType>,
    awaiting_types: bool,
    fields: [Option<String>; 4],
    /// Field currently accepting continuation lines.
    open_field: Option<usize>,
}

impl Block {
    fn opened(line: usize, ordinal: Option<u32>) -> Self {
        Block {
            ordinal,
            line,
            ..Block::default()
        }
    }

    fn has_fields(&self) -> bool {
        self.fields.iter().any(Option::is_some)
    }
}

struct Builder {
    blocks: Vec<Block>,
    current: Option<Block>,
    diagnostics: Vec<Diagnostic>,
}

impl Builder {
    fn close(&mut self) {
        if let Some(b) = self.current.take() {
            self.blocks.push(b);
        }
    }

    fn set_types(&mut self, raw: &str, line: usize) {
        let (types, diags) = parse_norm_type_at(raw, line);
        self.diagnostics.extend(diags);
        if let Some(b) = self.current.as_mut() {
            for t in types {
                if !b.types.contains(&t) {
                    b.types.push(t);
                }
            }
            b.awaiting_types = raw.trim().is_empty();
        }
    }
}

/// Parses a model response into norms attributed to `clause_id`.
pub fn parse_norms(response_text: &str, clause_id: &str) -> ParseResult {
    let mut b = Builder {
        blocks: Vec::new(),
        current: None,
        diagnostics: Vec::new(),
    };

    for (idx, raw_line) in response_text.lines().enumerate() {
        let lineno = idx + 1;
        if raw_line.trim().is_empty() {
            if let Some(cur) = b.current.as_mut() {
                cur.open_field = None;
            }
            continue;
        }
        let line = strip_decoration(raw_line);

        if let Some(c) = NUMBERED_HEADER.captures(line) {
            b.close();
            let ordinal = c[1].parse::<u32>().ok();
            b.current = Some(Block::opened(lineno, ordinal));
            let rest = c.get(2).map_or("", |m| m.as_str());
            b.set_types(rest, lineno);
            continue;
        }

        if let Some(c) = TYPE_HEADER.captures(line) {
            let reuse = b.current.as_ref().is_some_and(|cur| cur.types.is_empty());
            if !reuse {
                b.close();
                b.current = Some(Block::opened(lineno, None));
            }
            if let Some(cur) = b.current.as_mut() {
                cur.open_field = None;
            }
            b.set_types(&c[1], lineno);
            continue;
        }

        if let Some(c) = FIELD.captures(line) {
            let kind = field_kind(&c[1]);
            let slot = kind as usize;
            let value = c[2].trim().to_string();
            match b.current.as_mut() {
                None => b.diagnostics.push(Diagnostic::warning(
                    lineno,
                    format!("{kind} field outside any norm block ignored"),
                )),
                Some(cur) => {
                    cur.awaiting_types = false;
                    if cur.fields[slot].is_some() {
                        cur.open_field = None;
                        b.diagnostics.push(Diagnostic::warning(
                            lineno,
                            format!("repeated {kind} field ignored (first occurrence kept)"),
                        ));
                    } else {
                        cur.fields[slot] = Some(value);
                        cur.open_field = Some(slot);
                    }
                }
            }
            continue;
        }

        let raw = raw_line.trim();
        if let Some(cur) = b.current.as_mut() {
            if cur.awaiting_types && !cur.has_fields() {
                b.set_types(raw, lineno);
                continue;
            }
            if let Some(slot) = cur.open_field {
                let field = cur.fields[slot].get_or_insert_with(String::new);
                if !field.is_empty() {
                    field.push(' ');
                }
                field.push_str(raw);
                continue;
            }
        }
        b.diagnostics.push(Diagnostic::warning(
            lineno,
            format!("unrecognized line: {}", preview(raw)),
        ));
    }
    b.close();

    finish(b.blocks, b.diagnostics, clause_id)
}

fn preview(s: &str) -> String {
    const MAX: usize = 60;
    match s.char_indices().nth(MAX) {
        Some((i, _)) => format!("{}…", &s[..i]),
        None => s.to_string(),
    }
}

fn finish(blocks: Vec<Block>, mut diagnostics: Vec<Diagnostic>, clause_id: &str) -> ParseResult {
    if blocks.is_empty() {
        diagnostics.push(Diagnostic::error(0, "no norm blocks found in response"));
        return ParseResult {
            norms: Vec::new(),
            diagnostics,
        };
    }

    let mut norms: Vec<Norm> = Vec::new();
    let mut used: Vec<u32> = Vec::new();
    for block in blocks {
        if block.types.is_empty() {
            diagnostics.push(Diagnostic::error(
                block.line,
                "norm block has no recognizable norm type; dropped",
            ));
            continue;
        }
        let next = used.iter().max().copied().unwrap_or(0) + 1;
        let ordinal = match block.ordinal {
            Some(k) if k >= 1 && !used.contains(&k) => k,
            Some(k) => {
                diagnostics.push(Diagnostic::warning(
                    block.line,
                    format!("norm number {k} is invalid or repeated; renumbered as {next}"),
                ));
                next
            }
            None => next,
        };
        used.push(ordinal);
        let [subject, object, antecedent, consequent] = block.fields.map(|f| {
            f.as_deref()
                .map_or_else(ElementValue::absent, normalize_element)
        });
        norms.push(Norm {
            ordinal,
            types: block.types,
            subject,
            object,
            antecedent,
            consequent,
            clause_id: clause_id.to_string(),
        });
    }
    norms.sort_by_key(|n| n.ordinal);

    if norms
        .iter()
        .enumerate()
        .any(|(i, n)| n.ordinal as usize != i + 1)
    {
        let seq: Vec<String> = norms.iter().map(|n| n.ordinal.to_string()).collect();
        diagnostics.push(Diagnostic::warning(
            0,
            format!("norm numbering is not contiguous: {}", seq.join(", ")),
        ));
    }
    ParseResult { norms, diagnostics }
}

/// Renders norms in the canonical block format that [`parse_norms`] reads
/// back unchanged.
pub fn render_norms(norms: &[Norm]) -> String {
    let mut out = String::new();
    for (i, n) in norms.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let types: Vec<&str> = n.types.iter().map(|t| t.label()).collect();
        out.push_str(&format!("Norm {}: {}\n", n.ordinal, types.join(", ")));
        for (kind, value) in n.elements() {
            match value {
                ElementValue::Present(t) => out.push_str(&format!("{kind}: {t}\n")),
                ElementValue::Empty { marker: Some(m) } => out.push_str(&format!("{kind}: {m}\n")),
                ElementValue::Empty { marker: None } => {}
            }
        }
    }
    out
}
