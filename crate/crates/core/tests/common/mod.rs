#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use normforge::config::RunConfig;
use normforge::corpus::{load_corpus, Clause};
use normforge::gateway::{fixture_entry, read_fixtures, BackendKind, FixtureEntry, ModelExchange};
use normforge::norm::{ElementValue, NormElementKind, NormType};
use normforge::prompt::{build_prompt, PromptTemplate};
use normforge::report::ReportFormat;
use serde::Deserialize;

pub const GOLDEN_IDS: [&str; 6] = [
    "golden-01",
    "golden-02",
    "golden-03",
    "golden-04",
    "golden-05",
    "golden-06",
];

pub const RECORDED_AT: &str = "2023-06-01T00:00:00Z";

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn golden_dir() -> PathBuf {
    fixtures_dir().join("golden")
}

pub fn golden_corpus_path() -> PathBuf {
    golden_dir().join("corpus.jsonl")
}

pub fn golden_replay_path() -> PathBuf {
    golden_dir().join("replay.jsonl")
}

pub fn golden_clauses() -> Vec<Clause> {
    load_corpus(&golden_corpus_path()).unwrap().clauses
}

pub fn golden_clause(id: &str) -> Clause {
    golden_clauses()
        .into_iter()
        .find(|c| c.clause_id == id)
        .unwrap()
}

pub fn golden_response(id: &str) -> String {
    fs::read_to_string(golden_dir().join(format!("{id}.response.txt"))).unwrap()
}

/// Replay entries derived from the corpus and the response files.
pub fn expected_replay_entries() -> Vec<FixtureEntry> {
    let template = PromptTemplate::builtin();
    let mut clauses = golden_clauses();
    clauses.sort_by(|a, b| a.clause_id.cmp(&b.clause_id));
    clauses
        .iter()
        .map(|c| {
            fixture_entry(&ModelExchange {
                request: build_prompt(c, &template).unwrap(),
                response_text: golden_response(&c.clause_id),
                model_name: "gpt-3.5-turbo".into(),
                latency_ms: 0,
                backend_kind: BackendKind::Live,
                retrieved_from_fixture: false,
                timestamp: RECORDED_AT.into(),
            })
        })
        .collect()
}

pub fn checked_in_replay_entries() -> Vec<FixtureEntry> {
    read_fixtures(&golden_replay_path()).unwrap()
}

/// Replay run over the six golden clauses, writing into `out`.
pub fn golden_run_config(out: Option<&Path>) -> RunConfig {
    let mut c = RunConfig::default();
    c.corpus.path = Some(golden_corpus_path());
    c.backend.fixture_path = Some(golden_replay_path());
    c.selection.random_count = 6;
    c.selection.challenging_count = 0;
    c.output.dir = out.map(Path::to_path_buf);
    c.output.formats = vec![ReportFormat::Jsonl, ReportFormat::Csv, ReportFormat::Text];
    c
}

pub enum E {
    P(&'static str),
    Empty(&'static str),
}

impl E {
    pub fn value(&self) -> ElementValue {
        match self {
            E::P(t) => ElementValue::Present((*t).to_string()),
            E::Empty(m) => ElementValue::Empty {
                marker: Some((*m).to_string()),
            },
        }
    }
}

pub struct ExpectedNorm {
    pub ordinal: u32,
    pub types: &'static [NormType],
    /// Subject, object, antecedent, consequent.
    pub elements: [E; 4],
}

use NormType::{Authorization as Auth, Commitment as Comm, Power, Prohibition as Proh};
use E::{Empty, P};

/// The norms each golden response should yield, transcribed by hand.
pub fn expected_norms(id: &str) -> Vec<ExpectedNorm> {
    let n = |ordinal, types, elements| ExpectedNorm {
        ordinal,
        types,
        elements,
    };
    const EX3_ANTE: &str = "Assignment of rights and obligations under the Agreement in connection with the transfer or sale of business, merger, consolidation, or change in control";
    match id {
        "golden-01" => vec![n(
            1,
            &[Auth],
            [
                P("Rogers"),
                P("Licensor"),
                P("Rogers providing sixty (60) days' prior written notice"),
                P("termination of the Agreement"),
            ],
        )],
        "golden-02" => vec![
            n(
                1,
                &[Auth],
                [P("A Party"), P("the other Party"), P("Change in Control"), P("Termination of the JSMA")],
            ),
            n(
                2,
                &[Comm],
                [P("A Party"), P("the other Party"), P("Change in Control"), P("Termination of the JSMA")],
            ),
        ],
        "golden-03" => vec![
            n(
                1,
                &[Auth],
                [
                    P("Each party"),
                    P("Third Party or Affiliate"),
                    P(EX3_ANTE),
                    P("The assignee assumes in writing and becomes directly obligated to perform all obligations of the assignor under the Agreement"),
                ],
            ),
            n(
                2,
                &[Comm],
                [
                    P("Assignee"),
                    P("Other Party"),
                    P(EX3_ANTE),
                    P("The assignee becomes directly obligated to perform all obligations of the assignor under the Agreement"),
                ],
            ),
        ],
        "golden-04" => vec![
            n(
                1,
                &[Comm],
                [P("Either party"), P("Either party"), P("Written notice of termination"), P("Termination of the Agreement")],
            ),
            n(
                2,
                &[Auth],
                [P("Either party"), P("Either party"), P("Written notice of termination"), P("Termination of the Agreement")],
            ),
            n(
                3,
                &[Power],
                [P("Either party"), P("Either party"), P("Termination of the Agreement"), P("End of the Agreement period")],
            ),
        ],
        "golden-05" => vec![n(
            1,
            &[Proh, Comm],
            [
                P("VS (Vendor Services)"),
                P("Any other third party provider"),
                P("PPD declines to bid on such opportunity or does not offer the service in question"),
                P("VS shall not refer that opportunity to any other third party provider"),
            ],
        )],
        "golden-06" => vec![
            n(
                1,
                &[Auth],
                [
                    P("MusclePharm"),
                    P("AS Parties"),
                    P("The acquirer of MusclePharm shall have financial resources substantially similar or greater than MusclePharm"),
                    P("The acquirer of MusclePharm shall specifically assume the obligations of MusclePharm under this Agreement in writing prior to the consummation of the change of control transaction."),
                ],
            ),
            n(
                2,
                &[Comm],
                [
                    P("MusclePharm"),
                    P("AS Parties"),
                    Empty("None explicitly stated"),
                    P("MusclePharm commits to ensuring that the acquirer of MusclePharm specifically assumes the obligations of MusclePharm under this Agreement in writing prior to the consummation of the change of control transaction."),
                ],
            ),
        ],
        other => panic!("no golden example {other}"),
    }
}

#[derive(Debug, Deserialize)]
pub struct CalibrationCase {
    pub id: String,
    pub clause: String,
    pub element_kind: NormElementKind,
    pub element: String,
    pub planted: Option<String>,
}

pub fn calibration_cases() -> Vec<CalibrationCase> {
    fs::read_to_string(fixtures_dir().join("grounding/calibration.jsonl"))
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}
