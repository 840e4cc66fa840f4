use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::lint::{LintCode, LintFinding};
use crate::norm::{ElementValue, Norm, NormElementKind};
use crate::pipeline::{ExtractionRecord, RunSummary};

pub const RECORDS_FILE: &str = "records.jsonl";
pub const SUMMARY_JSON_FILE: &str = "summary.json";
pub const CSV_FILE: &str = "norms.csv";
pub const SUMMARY_TEXT_FILE: &str = "summary.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Jsonl,
    Csv,
    Text,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "jsonl" => Ok(ReportFormat::Jsonl),
            "csv" => Ok(ReportFormat::Csv),
            "text" | "txt" => Ok(ReportFormat::Text),
            other => Err(format!(
                "unknown format `{other}` (expected jsonl, csv or text)"
            )),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Jsonl => "jsonl",
            ReportFormat::Csv => "csv",
            ReportFormat::Text => "text",
        })
    }
}

/// One record per line, in the given order.
pub fn render_jsonl(records: &[ExtractionRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_jsonl(raw: &str) -> serde_json::Result<Vec<ExtractionRecord>> {
    raw.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

const CSV_HEADER: [&str; 12] = [
    "clause_id",
    "contract_id",
    "category",
    "redacted",
    "challenging",
    "norm_ordinal",
    "types",
    "subject",
    "object",
    "antecedent",
    "consequent",
    "findings",
];

fn element_cell(value: &ElementValue) -> &str {
    value.text().unwrap_or("")
}

/// Codes of findings about `ordinal` (either side of a pair) or about the
/// whole clause.
fn findings_cell(findings: &[LintFinding], ordinal: Option<u32>) -> String {
    let mut codes: Vec<&str> = Vec::new();
    for f in findings {
        let about = f.norm_ordinal.is_none()
            || ordinal.is_some_and(|o| f.norm_ordinal == Some(o) || f.related_ordinal == Some(o));
        if about && !codes.contains(&f.code.as_str()) {
            codes.push(f.code.as_str());
        }
    }
    codes.join(";")
}

/// One row per norm; a clause with no norms still gets one row, with the
/// norm columns left empty.
pub fn render_csv(records: &[ExtractionRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory csv");
    for r in records {
        let c = &r.clause;
        let base = [
            c.clause_id.clone(),
            c.contract_id.clone(),
            c.category.to_string(),
            c.flags.redacted.to_string(),
            c.flags.challenging.to_string(),
        ];
        let norms: Vec<Option<&Norm>> = if r.parse.norms.is_empty() {
            vec![None]
        } else {
            r.parse.norms.iter().map(Some).collect()
        };
        for norm in norms {
            let mut row: Vec<String> = base.to_vec();
            match norm {
                Some(n) => {
                    row.push(n.ordinal.to_string());
                    row.push(
                        n.types
                            .iter()
                            .map(|t| t.label())
                            .collect::<Vec<_>>()
                            .join(";"),
                    );
                    for kind in NormElementKind::ALL {
                        row.push(element_cell(n.element(kind)).to_string());
                    }
                }
                None => row.extend(std::iter::repeat_n(String::new(), 6)),
            }
            row.push(findings_cell(&r.findings, norm.map(|n| n.ordinal)));
            w.write_record(&row).expect("in-memory csv");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv of utf-8 input")
}

fn excerpt(s: &str, max: usize) -> String {
    let flat = crate::text::normalize_whitespace(s);
    if flat.chars().count() <= max {
        return flat;
    }
    let cut: String = flat.chars().take(max).collect();
    format!("{cut}...")
}

/// Human-readable summary: the counts of [`RunSummary`] plus the first
/// finding of each code as an example.
pub fn render_text(records: &[ExtractionRecord], summary: &RunSummary) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "clauses processed: {}", summary.clauses_processed);
    let _ = writeln!(s, "  clean:   {}", summary.clean_clause_count);
    let _ = writeln!(s, "  flagged: {}", summary.flagged_clause_count);
    let _ = writeln!(s, "  failed:  {}", summary.failures.len());
    let _ = writeln!(s, "norms extracted: {}", summary.norms_extracted);
    for (t, n) in &summary.norms_by_type {
        let _ = writeln!(s, "  {:<14} {n}", t.as_str());
    }
    let _ = writeln!(s, "findings:");
    for code in LintCode::ALL {
        let _ = writeln!(
            s,
            "  {:<22} {}",
            code.as_str(),
            summary.findings_by_code.get(&code).copied().unwrap_or(0)
        );
    }

    let mut examples: BTreeMap<LintCode, (&str, &LintFinding)> = BTreeMap::new();
    for r in records {
        for f in &r.findings {
            examples.entry(f.code).or_insert((&r.clause.clause_id, f));
        }
    }
    if !examples.is_empty() {
        let _ = writeln!(s, "examples:");
        for (code, (clause_id, f)) in examples {
            let _ = writeln!(s, "  {code} [{clause_id}] {} ({})", f.message, f.severity);
            if !f.evidence.is_empty() {
                let ev: Vec<String> = f.evidence.iter().map(|e| excerpt(e, 80)).collect();
                let _ = writeln!(s, "    evidence: {}", ev.join(" | "));
            }
        }
    }
    if !summary.failures.is_empty() {
        let _ = writeln!(s, "failures:");
        for f in &summary.failures {
            let _ = writeln!(s, "  {} ({:?}): {}", f.clause_id, f.stage, f.message);
        }
    }
    s
}

/// Writes each requested format into `dir` and returns the paths written.
/// JSONL output also writes the summary as JSON.
pub fn emit_report(
    records: &[ExtractionRecord],
    summary: &RunSummary,
    formats: &[ReportFormat],
    dir: &Path,
) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut formats = formats.to_vec();
    formats.sort();
    formats.dedup();
    for format in formats {
        let files: Vec<(&str, String)> = match format {
            ReportFormat::Jsonl => vec![
                (RECORDS_FILE, render_jsonl(records)),
                (
                    SUMMARY_JSON_FILE,
                    serde_json::to_string_pretty(summary).expect("summary serializes") + "\n",
                ),
            ],
            ReportFormat::Csv => vec![(CSV_FILE, render_csv(records))],
            ReportFormat::Text => vec![(SUMMARY_TEXT_FILE, render_text(records, summary))],
        };
        for (name, body) in files {
            let path = dir.join(name);
            let tmp = dir.join(format!(".{name}.tmp"));
            fs::write(&tmp, body)?;
            fs::rename(&tmp, &path)?;
            written.push(path);
        }
    }
    Ok(written)
}
