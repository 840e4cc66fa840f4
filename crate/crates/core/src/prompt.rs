//! Versioned, checksum-pinned extraction prompt and request rendering.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::Clause;

pub const DEFAULT_TEMPLATE_VERSION: &str = "cuad-norms-v1";

const BUILTIN_BODY: &str = include_str!("../prompts/cuad-norms-v1.txt");
const BUILTIN_MANIFEST: &str = include_str!("../prompts/SHA256SUMS");

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("clause `{0}` has empty text")]
    EmptyClause(String),
    #[error("no prompt template `{0}`")]
    UnknownVersion(String),
    #[error("checksum mismatch for template `{version}`: manifest {expected}, body {actual}")]
    ChecksumMismatch {
        version: String,
        expected: String,
        actual: String,
    },
    #[error("cannot read prompt resources: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    body: String,
    version_id: String,
}

impl PromptTemplate {
    /// The template compiled into the library.
    pub fn builtin() -> Self {
        Self::verified(DEFAULT_TEMPLATE_VERSION, BUILTIN_BODY, BUILTIN_MANIFEST)
            .expect("built-in prompt template does not match its checksum manifest")
    }

    /// Loads `<dir>/<version>.txt` and checks it against `<dir>/SHA256SUMS`.
    pub fn from_dir(dir: &Path, version: &str) -> Result<Self, PromptError> {
        let manifest = fs::read_to_string(dir.join("SHA256SUMS"))?;
        let body_path = dir.join(format!("{version}.txt"));
        if !body_path.exists() {
            return Err(PromptError::UnknownVersion(version.to_string()));
        }
        let body = fs::read_to_string(body_path)?;
        Self::verified(version, &body, &manifest)
    }

    /// Builds a template after checking `body` against the `sha256sum`-style
    /// manifest line for `<version>.txt`.
    pub fn verified(version: &str, body: &str, manifest: &str) -> Result<Self, PromptError> {
        let file_name = format!("{version}.txt");
        let expected = manifest
            .lines()
            .filter_map(|l| l.split_once(char::is_whitespace))
            .find(|(_, name)| name.trim().trim_start_matches('*') == file_name)
            .map(|(sum, _)| sum.to_lowercase())
            .ok_or_else(|| PromptError::UnknownVersion(version.to_string()))?;
        let actual = sha256_hex(body.as_bytes());
        if actual != expected {
            return Err(PromptError::ChecksumMismatch {
                version: version.to_string(),
                expected,
                actual,
            });
        }
        Ok(PromptTemplate {
            body: body.to_string(),
            version_id: version.to_string(),
        })
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    pub fn version_id(&self) -> &str {
        &self.version_id
    }

    pub fn checksum(&self) -> String {
        sha256_hex(self.body.as_bytes())
    }
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRequest {
    pub clause_id: String,
    pub rendered_text: String,
    pub template_version: String,
}

/// Template body, a newline, then the clause text verbatim.
pub fn build_prompt(
    clause: &Clause,
    template: &PromptTemplate,
) -> Result<PromptRequest, PromptError> {
    if clause.text.trim().is_empty() {
        return Err(PromptError::EmptyClause(clause.clause_id.clone()));
    }
    let mut rendered = String::with_capacity(template.body.len() + 1 + clause.text.len());
    rendered.push_str(&template.body);
    rendered.push('\n');
    rendered.push_str(&clause.text);
    Ok(PromptRequest {
        clause_id: clause.clause_id.clone(),
        rendered_text: rendered,
        template_version: template.version_id.clone(),
    })
}
