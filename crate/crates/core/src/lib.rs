//! Extract deontic norms (commitments, prohibitions, authorizations and
//! powers) from contract clauses with a chat model, parse the model's
//! semi-structured answers and lint them for known failure modes.
//!
//! The stages are usable on their own:
//! [`corpus::load_corpus`] → [`selection::select`] → [`prompt::build_prompt`]
//! → [`gateway::ChatBackend::complete`] → [`parser::parse_norms`] →
//! [`lint::lint_all`], or end to end through [`pipeline::run_pipeline`].

pub mod config;
pub mod corpus;
pub mod gateway;
pub mod lint;
pub mod norm;
pub mod parser;
pub mod pipeline;
pub mod prompt;
pub mod report;
pub mod selection;
pub mod text;

pub use config::RunConfig;
pub use corpus::{Clause, ClauseCategory, Corpus};
pub use gateway::{BackendConfig, BackendKind, ModelExchange};
pub use lint::{LintCode, LintFinding, Severity};
pub use norm::{ElementValue, Norm, NormElementKind, NormType};
pub use parser::{parse_norms, ParseResult};
pub use pipeline::{run_pipeline, ExtractionRecord, RunSummary};
pub use prompt::{build_prompt, PromptRequest, PromptTemplate};
