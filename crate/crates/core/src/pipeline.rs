//! End-to-end driver: load, select, prompt, complete, parse, lint.
//!
//! Each clause is isolated: a failed prompt or completion is recorded and the
//! run moves on. Completed records are appended to a journal in the output
//! directory as they arrive, so an interrupted run can be resumed; on resume
//! a journaled exchange is reused when its request key and model match, and
//! its parse and findings are recomputed under the current settings.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;

use log::{debug, info, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::corpus::{clauses_by_category, load_corpus, Clause, CorpusError, RedactionDetector};
use crate::gateway::{
    backend_from_config, record_fixture, request_key, BackendKind, ChatBackend, GatewayError,
    ModelExchange,
};
use crate::lint::{LintCode, LintFinding, Linter};
use crate::norm::NormType;
use crate::parser::{parse_norms, ParseResult};
use crate::prompt::{
    build_prompt, PromptError, PromptRequest, PromptTemplate, DEFAULT_TEMPLATE_VERSION,
};
use crate::selection::{select, Selection};

pub const PIPELINE_VERSION: &str = concat!("normforge/", env!("CARGO_PKG_VERSION"));

/// Append-only record journal inside the output directory.
pub const JOURNAL_FILE: &str = "journal.jsonl";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("prompt template: {0}")]
    Template(#[from] PromptError),
    #[error("backend: {0}")]
    Backend(#[from] GatewayError),
    #[error("cannot open journal {path}: {source}")]
    Journal {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionRecord {
    pub clause: Clause,
    pub exchange: ModelExchange,
    pub parse: ParseResult,
    pub findings: Vec<LintFinding>,
    pub pipeline_version: String,
}

impl ExtractionRecord {
    /// Parses the exchange's response and lints it against the clause.
    pub fn build(clause: Clause, exchange: ModelExchange, linter: &Linter) -> Self {
        let parse = parse_norms(&exchange.response_text, &clause.clause_id);
        let findings = linter.lint_all(&parse, &clause);
        ExtractionRecord {
            clause,
            exchange,
            parse,
            findings,
            pipeline_version: PIPELINE_VERSION.to_string(),
        }
    }

    /// No Warn or Error findings.
    pub fn is_clean(&self) -> bool {
        !self.findings.iter().any(LintFinding::is_actionable)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FailureStage {
    Prompt,
    Backend,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClauseFailure {
    pub clause_id: String,
    pub stage: FailureStage,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    /// Every selected clause: clean + flagged + failed.
    pub clauses_processed: usize,
    pub norms_extracted: usize,
    /// A multi-typed norm counts once under each of its types.
    pub norms_by_type: BTreeMap<NormType, usize>,
    pub findings_by_code: BTreeMap<LintCode, usize>,
    pub clean_clause_count: usize,
    pub flagged_clause_count: usize,
    pub failures: Vec<ClauseFailure>,
}

impl RunSummary {
    pub fn from_records(records: &[ExtractionRecord], failures: &[ClauseFailure]) -> Self {
        let mut s = RunSummary {
            clauses_processed: records.len() + failures.len(),
            failures: failures.to_vec(),
            ..RunSummary::default()
        };
        for r in records {
            s.norms_extracted += r.parse.norms.len();
            for t in r.parse.norms.iter().flat_map(|n| &n.types) {
                *s.norms_by_type.entry(*t).or_default() += 1;
            }
            for f in &r.findings {
                *s.findings_by_code.entry(f.code).or_default() += 1;
            }
            if r.is_clean() {
                s.clean_clause_count += 1;
            } else {
                s.flagged_clause_count += 1;
            }
        }
        s
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    /// Sorted by clause id.
    pub records: Vec<ExtractionRecord>,
    pub summary: RunSummary,
    pub selection_size: usize,
    /// Exchanges taken from an earlier run's journal.
    pub reused: usize,
    pub warnings: Vec<String>,
}

/// Loads the prompt template named by the config.
pub fn load_template(config: &RunConfig) -> Result<PromptTemplate, PromptError> {
    match &config.run.template_dir {
        Some(dir) => PromptTemplate::from_dir(dir, &config.run.template_version),
        None if config.run.template_version == DEFAULT_TEMPLATE_VERSION => {
            Ok(PromptTemplate::builtin())
        }
        None => Err(PromptError::UnknownVersion(
            config.run.template_version.clone(),
        )),
    }
}

/// Runs the configured pipeline with the configured backend.
pub fn run_pipeline(config: &RunConfig) -> Result<RunOutput, PipelineError> {
    config.validate()?;
    let template = load_template(config)?;
    let backend = backend_from_config(&config.backend)?;
    run_pipeline_with(config, &template, backend.as_ref())
}

/// Loads the corpus and picks the clauses to process, sorted by clause id.
pub fn selected_clauses(config: &RunConfig) -> Result<(Selection, Vec<String>), PipelineError> {
    let path = config
        .corpus
        .path
        .as_deref()
        .ok_or_else(|| ConfigError::Invalid("corpus path is required".into()))?;
    let mut corpus = load_corpus(path)?;
    let mut warnings = std::mem::take(&mut corpus.warnings);
    if !config.corpus.redaction_patterns.is_empty() {
        let detector = RedactionDetector::with_extra_patterns(&config.corpus.redaction_patterns)
            .map_err(|e| ConfigError::Invalid(format!("redaction pattern: {e}")))?;
        for c in &mut corpus.clauses {
            c.flags.redacted = detector.is_redacted(&c.text);
        }
    }
    let pool = clauses_by_category(&corpus, &config.categories()?)?;
    if pool.is_empty() {
        warnings.push("no clauses in the requested categories".into());
        return Ok((Selection::default(), warnings));
    }
    let selection =
        select(&pool, &config.selection).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    warnings.extend(selection.warnings.iter().cloned());
    Ok((selection, warnings))
}

fn read_journal(path: &Path, warnings: &mut Vec<String>) -> HashMap<String, ExtractionRecord> {
    let mut out = HashMap::new();
    let Ok(file) = File::open(path) else {
        return out;
    };
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<ExtractionRecord>(&line) {
            Ok(r) => {
                out.insert(r.clause.clause_id.clone(), r);
            }
            // typically the torn last line of an interrupted run
            Err(e) => warnings.push(format!("journal line {} skipped: {e}", i + 1)),
        }
    }
    out
}

fn ends_with_newline(path: &Path) -> bool {
    let Ok(mut f) = File::open(path) else {
        return true;
    };
    let Ok(len) = f.seek(SeekFrom::End(0)) else {
        return true;
    };
    if len == 0 {
        return true;
    }
    let mut last = [0u8];
    f.seek(SeekFrom::End(-1)).is_ok() && f.read_exact(&mut last).is_ok() && last[0] == b'\n'
}

struct Journal {
    path: PathBuf,
    file: Option<File>,
}

impl Journal {
    fn append(&mut self, record: &ExtractionRecord, warnings: &mut Vec<String>) {
        let Some(file) = self.file.as_mut() else {
            return;
        };
        let mut line = serde_json::to_string(record).expect("records serialize");
        line.push('\n');
        if let Err(e) = file.write_all(line.as_bytes()).and_then(|_| file.flush()) {
            warnings.push(format!("journal {} disabled: {e}", self.path.display()));
            self.file = None;
        }
    }
}

/// Runs the pipeline against an already built backend.
pub fn run_pipeline_with(
    config: &RunConfig,
    template: &PromptTemplate,
    backend: &dyn ChatBackend,
) -> Result<RunOutput, PipelineError> {
    let (selection, mut warnings) = selected_clauses(config)?;
    let mut clauses: Vec<Clause> = selection.all().cloned().collect();
    clauses.sort_by(|a, b| a.clause_id.cmp(&b.clause_id));
    info!("{} clause(s) selected", clauses.len());

    let mut previous = HashMap::new();
    let mut journal = Journal {
        path: PathBuf::new(),
        file: None,
    };
    if let Some(dir) = &config.output.dir {
        let path = dir.join(JOURNAL_FILE);
        let journal_err = |source| PipelineError::Journal {
            path: path.clone(),
            source,
        };
        fs::create_dir_all(dir).map_err(journal_err)?;
        if config.run.resume {
            previous = read_journal(&path, &mut warnings);
        }
        let mut file = OpenOptions::new()
            .create(true)
            .append(config.run.resume)
            .write(true)
            .truncate(!config.run.resume)
            .open(&path)
            .map_err(journal_err)?;
        if config.run.resume && !ends_with_newline(&path) {
            file.write_all(b"\n").map_err(journal_err)?;
        }
        journal = Journal {
            path,
            file: Some(file),
        };
    }

    let linter = Linter::new(config.lints.clone());
    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut jobs: Vec<(usize, PromptRequest)> = Vec::new();
    let mut reused = 0;
    for (i, clause) in clauses.iter().enumerate() {
        let request = match build_prompt(clause, template) {
            Ok(r) => r,
            Err(e) => {
                failures.push(ClauseFailure {
                    clause_id: clause.clause_id.clone(),
                    stage: FailureStage::Prompt,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let prior = previous
            .remove(&clause.clause_id)
            .filter(|r: &ExtractionRecord| {
                r.exchange.model_name == config.backend.model_name
                    && request_key(&r.exchange.request) == request_key(&request)
            });
        match prior {
            Some(r) => {
                debug!("{}: reusing journaled exchange", clause.clause_id);
                reused += 1;
                records.push(ExtractionRecord::build(clause.clone(), r.exchange, &linter));
            }
            None => jobs.push((i, request)),
        }
    }

    let recorder = (config.run.record_fixtures && backend.kind() == BackendKind::Live)
        .then_some(config.backend.fixture_path.as_deref())
        .flatten();
    let next = AtomicUsize::new(0);
    let workers = config.run.parallel.max(1).min(jobs.len().max(1));
    thread::scope(|scope| {
        let (tx, rx) = mpsc::channel();
        for _ in 0..workers {
            let tx = tx.clone();
            let (jobs, next) = (&jobs, &next);
            scope.spawn(move || loop {
                let j = next.fetch_add(1, Ordering::Relaxed);
                let Some((i, request)) = jobs.get(j) else {
                    break;
                };
                if tx.send((*i, backend.complete(request))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (i, result) in rx {
            let clause = &clauses[i];
            match result {
                Ok(exchange) => {
                    if let Some(path) = recorder {
                        if let Err(e) = record_fixture(&exchange, path) {
                            warnings
                                .push(format!("{}: fixture not recorded: {e}", clause.clause_id));
                        }
                    }
                    let record = ExtractionRecord::build(clause.clone(), exchange, &linter);
                    journal.append(&record, &mut warnings);
                    records.push(record);
                }
                Err(e) => {
                    warn!("{}: {e}", clause.clause_id);
                    failures.push(ClauseFailure {
                        clause_id: clause.clause_id.clone(),
                        stage: FailureStage::Backend,
                        message: e.to_string(),
                    });
                }
            }
        }
    });

    records.sort_by(|a, b| a.clause.clause_id.cmp(&b.clause.clause_id));
    failures.sort_by(|a, b| a.clause_id.cmp(&b.clause_id));
    let summary = RunSummary::from_records(&records, &failures);
    Ok(RunOutput {
        records,
        summary,
        selection_size: clauses.len(),
        reused,
        warnings,
    })
}
