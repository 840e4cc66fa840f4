mod common;

use std::fs;
use std::sync::atomic::{AtomicUsize, Ordering};

use common::*;
use normforge::gateway::{
    write_fixtures, BackendKind, ChatBackend, GatewayError, ModelExchange, ReplayBackend,
};
use normforge::lint::LintCode;
use normforge::pipeline::{
    run_pipeline, run_pipeline_with, FailureStage, RunSummary, JOURNAL_FILE,
};
use normforge::prompt::{PromptRequest, PromptTemplate};
use normforge::report::{
    emit_report, parse_jsonl, render_text, CSV_FILE, RECORDS_FILE, SUMMARY_TEXT_FILE,
};

struct Counting {
    inner: ReplayBackend,
    calls: AtomicUsize,
}

impl ChatBackend for Counting {
    fn kind(&self) -> BackendKind {
        BackendKind::Replay
    }

    fn complete(&self, request: &PromptRequest) -> Result<ModelExchange, GatewayError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.complete(request)
    }
}

fn counting(path: &std::path::Path) -> Counting {
    Counting {
        inner: ReplayBackend::open(path).unwrap(),
        calls: AtomicUsize::new(0),
    }
}

#[test]
fn golden_run_summary() {
    let out = run_pipeline(&golden_run_config(None)).unwrap();
    assert_eq!(out.records.len(), 6);
    let ids: Vec<&str> = out
        .records
        .iter()
        .map(|r| r.clause.clause_id.as_str())
        .collect();
    assert_eq!(ids, GOLDEN_IDS);
    let s = &out.summary;
    assert_eq!(s.clauses_processed, 6);
    assert_eq!(s.clean_clause_count, 1);
    assert!(out.records[0].is_clean());
    assert_eq!(s.flagged_clause_count, 5);
    assert!(s.failures.is_empty());
    assert_eq!(s.norms_extracted, 11);
    let at_least = [
        (LintCode::EmptyElement, 1),
        (LintCode::UngroundedSpan, 1),
        (LintCode::DuplicateExceptType, 2),
        (LintCode::MultiType, 1),
        (LintCode::DetailOmitted, 2),
    ];
    for (code, n) in at_least {
        assert!(
            s.findings_by_code.get(&code).copied().unwrap_or(0) >= n,
            "{code}"
        );
    }
    let text = render_text(&out.records, s);
    assert!(text.contains("clean:   1"));
    assert!(text.contains("DETAIL_OMITTED         2"));
}

#[test]
fn replay_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for (dir, parallel) in [(a.path(), 1), (b.path(), 4)] {
        let mut config = golden_run_config(Some(dir));
        config.run.parallel = parallel;
        let out = run_pipeline(&config).unwrap();
        emit_report(&out.records, &out.summary, &config.output.formats, dir).unwrap();
    }
    for name in [RECORDS_FILE, CSV_FILE, SUMMARY_TEXT_FILE] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{name}");
    }
    let raw = fs::read_to_string(a.path().join(RECORDS_FILE)).unwrap();
    assert_eq!(raw.lines().count(), 6);
    assert_eq!(
        parse_jsonl(&raw).unwrap(),
        run_pipeline(&golden_run_config(None)).unwrap().records
    );
}

#[test]
fn missing_fixture_is_a_clause_failure() {
    let dir = tempfile::tempdir().unwrap();
    let partial = dir.path().join("five.jsonl");
    let entries: Vec<_> = expected_replay_entries()
        .into_iter()
        .filter(|e| e.clause_id != "golden-04")
        .collect();
    write_fixtures(&partial, &entries).unwrap();
    let mut config = golden_run_config(None);
    config.backend.fixture_path = Some(partial);
    let out = run_pipeline(&config).unwrap();
    assert_eq!(out.records.len(), 5);
    assert_eq!(out.summary.failures.len(), 1);
    assert_eq!(out.summary.failures[0].clause_id, "golden-04");
    assert_eq!(out.summary.failures[0].stage, FailureStage::Backend);
    let s = &out.summary;
    assert_eq!(
        s.clauses_processed,
        s.clean_clause_count + s.flagged_clause_count + s.failures.len()
    );
}

#[test]
fn empty_selection() {
    let mut config = golden_run_config(None);
    config.selection.random_count = 0;
    config.selection.challenging_count = 0;
    let out = run_pipeline(&config).unwrap();
    assert!(out.records.is_empty());
    assert_eq!(out.summary, RunSummary::default());
}

#[test]
fn category_filter_limits_the_pool() {
    let mut config = golden_run_config(None);
    config.corpus.categories = vec!["Rofr/Rofo/Rofn".into()];
    let out = run_pipeline(&config).unwrap();
    assert_eq!(out.records.len(), 1);
    assert_eq!(out.records[0].clause.clause_id, "golden-05");
    config.corpus.categories = vec!["Audit Rights".into()];
    let out = run_pipeline(&config).unwrap();
    assert!(out.records.is_empty());
    assert!(out.warnings.iter().any(|w| w.contains("no clauses")));
}

#[test]
fn interrupted_run_resumes_to_the_same_records() {
    let dir = tempfile::tempdir().unwrap();
    let fresh = run_pipeline(&golden_run_config(None)).unwrap().records;

    // first attempt loses golden-02 and golden-05
    let partial = dir.path().join("partial.jsonl");
    let entries: Vec<_> = expected_replay_entries()
        .into_iter()
        .filter(|e| e.clause_id != "golden-02" && e.clause_id != "golden-05")
        .collect();
    write_fixtures(&partial, &entries).unwrap();
    let out_dir = dir.path().join("out");
    let config = golden_run_config(Some(&out_dir));
    let template = PromptTemplate::builtin();
    let first = run_pipeline_with(&config, &template, &counting(&partial)).unwrap();
    assert_eq!(first.records.len(), 4);
    assert_eq!(first.summary.failures.len(), 2);

    // a torn trailing line, as left by a killed process
    let journal = out_dir.join(JOURNAL_FILE);
    let mut raw = fs::read_to_string(&journal).unwrap();
    raw.push_str("{\"clause\":{\"clause_id\":\"golden-0");
    fs::write(&journal, raw).unwrap();

    let backend = counting(&golden_replay_path());
    let second = run_pipeline_with(&config, &template, &backend).unwrap();
    assert_eq!(backend.calls.load(Ordering::SeqCst), 2);
    assert_eq!(second.reused, 4);
    assert!(second.warnings.iter().any(|w| w.contains("journal line")));
    assert_eq!(second.records, fresh);

    let backend = counting(&golden_replay_path());
    let third = run_pipeline_with(&config, &template, &backend).unwrap();
    assert_eq!(
        backend.calls.load(Ordering::SeqCst),
        0,
        "every clause journaled"
    );
    assert!(third.warnings.iter().any(|w| w.contains("journal line")));
    assert_eq!(third.records, fresh);

    let backend = counting(&golden_replay_path());
    let mut no_resume = config.clone();
    no_resume.run.resume = false;
    let fourth = run_pipeline_with(&no_resume, &template, &backend).unwrap();
    assert_eq!(backend.calls.load(Ordering::SeqCst), 6);
    assert_eq!(fourth.records, fresh);
}

#[test]
fn resumed_records_follow_current_lint_settings() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = golden_run_config(Some(dir.path()));
    run_pipeline(&config).unwrap();
    config.lints.disabled = vec![LintCode::MultiType];
    let backend = counting(&golden_replay_path());
    let out = run_pipeline_with(&config, &PromptTemplate::builtin(), &backend).unwrap();
    assert_eq!(backend.calls.load(Ordering::SeqCst), 0);
    assert!(out
        .records
        .iter()
        .all(|r| r.findings.iter().all(|f| f.code != LintCode::MultiType)));
}

#[test]
fn extra_redaction_patterns() {
    let mut config = golden_run_config(None);
    config.corpus.redaction_patterns = vec!["MusclePharm".into()];
    let out = run_pipeline(&config).unwrap();
    let redacted: Vec<&str> = out
        .records
        .iter()
        .filter(|r| {
            r.findings
                .iter()
                .any(|f| f.code == LintCode::RedactedSource)
        })
        .map(|r| r.clause.clause_id.as_str())
        .collect();
    assert_eq!(redacted, ["golden-06"]);
}

#[test]
fn fatal_errors_happen_before_the_loop() {
    let mut config = golden_run_config(None);
    config.corpus.path = Some("/nonexistent/corpus.jsonl".into());
    assert!(matches!(
        run_pipeline(&config),
        Err(normforge::pipeline::PipelineError::Corpus(_))
    ));
    let mut config = golden_run_config(None);
    config.backend.fixture_path = Some("/nonexistent/replay.jsonl".into());
    assert!(matches!(
        run_pipeline(&config),
        Err(normforge::pipeline::PipelineError::Backend(_))
    ));
    let mut config = golden_run_config(None);
    config.run.template_version = "cuad-norms-v9".into();
    assert!(run_pipeline(&config).is_err());
}
