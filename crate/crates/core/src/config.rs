//! Run configuration, loadable from TOML:
//!
//! ```toml
//! [run]
//! parallel = 4
//!
//! [corpus]
//! path = "CUADv1.json"
//! categories = ["Change Of Control"]
//!
//! [selection]
//! random_count = 100
//! seed = 42
//!
//! [backend]
//! kind = "replay"
//! fixture_path = "fixtures.jsonl"
//!
//! [lints]
//! disabled = ["CONJUNCTION_COMPLEX"]
//!
//! [output]
//! dir = "out"
//! formats = ["jsonl", "text"]
//! ```
//!
//! Relative paths are resolved against the directory of the file they
//! appear in.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ClauseCategory, DEFAULT_CATEGORIES};
use crate::gateway::{BackendConfig, BackendKind};
use crate::lint::LintConfig;
use crate::prompt::DEFAULT_TEMPLATE_VERSION;
use crate::report::ReportFormat;
use crate::selection::SelectionSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunSection {
    /// Clauses processed concurrently.
    pub parallel: usize,
    /// Live runs also write every exchange to `backend.fixture_path`.
    pub record_fixtures: bool,
    /// Reuse exchanges already journaled in the output directory.
    pub resume: bool,
    pub template_version: String,
    /// Directory holding `<version>.txt` and `SHA256SUMS`; the built-in
    /// template is used when unset.
    pub template_dir: Option<PathBuf>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            parallel: 1,
            record_fixtures: false,
            resume: true,
            template_version: DEFAULT_TEMPLATE_VERSION.to_string(),
            template_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusSection {
    pub path: Option<PathBuf>,
    pub categories: Vec<String>,
    /// Extra redaction regexes, added to the built-in ones.
    pub redaction_patterns: Vec<String>,
}

impl Default for CorpusSection {
    fn default() -> Self {
        CorpusSection {
            path: None,
            categories: DEFAULT_CATEGORIES.iter().map(|c| c.to_string()).collect(),
            redaction_patterns: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputSection {
    /// Where the journal and reports go. Nothing is written when unset.
    pub dir: Option<PathBuf>,
    pub formats: Vec<ReportFormat>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: None,
            formats: vec![ReportFormat::Jsonl, ReportFormat::Text],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub run: RunSection,
    pub corpus: CorpusSection,
    pub selection: SelectionSpec,
    pub backend: BackendConfig,
    pub lints: LintConfig,
    pub output: OutputSection,
}

fn read(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn resolve(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p.as_mut() {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(raw: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(raw)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let mut config =
            Self::from_toml_str(&read(path)?).map_err(|source| ConfigError::Parse {
                path: path.to_path_buf(),
                source,
            })?;
        let base = path.parent().unwrap_or(Path::new("."));
        resolve(base, &mut config.corpus.path);
        resolve(base, &mut config.backend.fixture_path);
        resolve(base, &mut config.run.template_dir);
        resolve(base, &mut config.output.dir);
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config is always representable as TOML")
    }

    /// Parsed and canonicalized `corpus.categories`.
    pub fn categories(&self) -> Result<Vec<ClauseCategory>, ConfigError> {
        if self.corpus.categories.is_empty() {
            return Err(ConfigError::Invalid("no categories requested".into()));
        }
        self.corpus
            .categories
            .iter()
            .map(|c| ClauseCategory::parse(c).map_err(|e| ConfigError::Invalid(e.to_string())))
            .collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.corpus.path.is_none() {
            return invalid("corpus path is required");
        }
        self.categories()?;
        if self.run.parallel == 0 {
            return invalid("run.parallel must be at least 1");
        }
        if self.backend.temperature.is_nan() || self.backend.temperature < 0.0 {
            return invalid("backend.temperature must be >= 0");
        }
        if self.backend.requests_per_minute == 0 {
            return invalid("backend.requests_per_minute must be positive");
        }
        if self.backend.kind == BackendKind::Replay && self.backend.fixture_path.is_none() {
            return invalid("the replay backend needs backend.fixture_path");
        }
        if self.run.record_fixtures {
            if self.backend.kind != BackendKind::Live {
                return invalid("run.record_fixtures only applies to the live backend");
            }
            if self.backend.fixture_path.is_none() {
                return invalid("run.record_fixtures needs backend.fixture_path");
            }
        }
        if !(0.0..=1.0).contains(&self.lints.grounding_threshold) {
            return invalid("lints.grounding_threshold must be within [0, 1]");
        }
        if self.selection.challenging_count > 0 && self.selection.keywords.is_empty() {
            return invalid("selection.keywords is empty but challenging_count > 0");
        }
        Ok(())
    }
}

/// Reads a lint configuration file: either a `[lints]` table or the lint
/// keys at top level.
pub fn load_lint_config(path: &Path) -> Result<LintConfig, ConfigError> {
    let raw = read(path)?;
    let parse_err = |source| ConfigError::Parse {
        path: path.to_path_buf(),
        source,
    };
    let table: toml::Table = toml::from_str(&raw).map_err(parse_err)?;
    let section = match table.get("lints") {
        Some(toml::Value::Table(t)) => t.clone(),
        _ => table,
    };
    section.try_into().map_err(parse_err)
}
