//! Chat-completion backends: a live HTTP client and a fixture-driven replay
//! backend that never touches the network.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::prompt::{sha256_hex, PromptRequest};

pub const DEFAULT_MODEL: &str = "gpt-3.5-turbo";
pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1";
pub const DEFAULT_CREDENTIAL_VAR: &str = "NORMFORGE_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Live,
    Replay,
}

impl std::str::FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "live" => Ok(BackendKind::Live),
            "replay" => Ok(BackendKind::Replay),
            other => Err(format!(
                "unknown backend `{other}` (expected live or replay)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub model_name: String,
    pub temperature: f64,
    /// Base URL; `/chat/completions` is appended.
    pub endpoint_url: String,
    /// Name of the environment variable holding the API key.
    pub credential_source: String,
    pub fixture_path: Option<PathBuf>,
    pub max_retries: u32,
    pub requests_per_minute: u32,
    pub initial_backoff_ms: u64,
    pub timeout_secs: u64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Replay,
            model_name: DEFAULT_MODEL.to_string(),
            temperature: 0.0,
            endpoint_url: DEFAULT_ENDPOINT.to_string(),
            credential_source: DEFAULT_CREDENTIAL_VAR.to_string(),
            fixture_path: None,
            max_retries: 3,
            requests_per_minute: 60,
            initial_backoff_ms: 500,
            timeout_secs: 120,
        }
    }
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("environment variable {0} is not set")]
    MissingCredential(String),
    #[error("rate limited after {attempts} attempt(s)")]
    RateLimited { attempts: u32 },
    #[error("transport error: {0}")]
    TransportError(String),
    #[error("no recorded response for clause `{clause_id}` (key {key})")]
    FixtureMiss { clause_id: String, key: String },
    #[error("fixture file {0} does not exist")]
    FixtureFileMissing(PathBuf),
    #[error("malformed fixture file {path} line {line}: {message}")]
    MalformedFixture {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("only live exchanges can be recorded (clause `{0}`)")]
    NotLive(String),
    #[error("invalid backend configuration: {0}")]
    InvalidConfig(String),
    #[error("fixture i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// A prompt sent and the raw response received.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelExchange {
    pub request: PromptRequest,
    pub response_text: String,
    pub model_name: String,
    pub latency_ms: u64,
    pub backend_kind: BackendKind,
    pub retrieved_from_fixture: bool,
    /// RFC 3339. For replayed exchanges this is the original recording time.
    pub timestamp: String,
}

/// Replay key: SHA-256 over template version, clause id and rendered prompt,
/// NUL-separated.
pub fn fixture_key(template_version: &str, clause_id: &str, rendered_text: &str) -> String {
    let mut buf =
        Vec::with_capacity(template_version.len() + clause_id.len() + rendered_text.len() + 2);
    buf.extend_from_slice(template_version.as_bytes());
    buf.push(0);
    buf.extend_from_slice(clause_id.as_bytes());
    buf.push(0);
    buf.extend_from_slice(rendered_text.as_bytes());
    sha256_hex(&buf)
}

pub fn request_key(request: &PromptRequest) -> String {
    fixture_key(
        &request.template_version,
        &request.clause_id,
        &request.rendered_text,
    )
}

/// One line of a fixture file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub key: String,
    pub template_version: String,
    pub clause_id: String,
    pub response_text: String,
    pub model_name: String,
    pub recorded_at: String,
}

/// Reads every entry in file order.
pub fn read_fixtures(path: &Path) -> Result<Vec<FixtureEntry>, GatewayError> {
    if !path.exists() {
        return Err(GatewayError::FixtureFileMissing(path.to_path_buf()));
    }
    let reader = BufReader::new(fs::File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry = serde_json::from_str(&line).map_err(|e| GatewayError::MalformedFixture {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(entry);
    }
    Ok(out)
}

/// Writes entries atomically (temp file + rename).
pub fn write_fixtures(path: &Path, entries: &[FixtureEntry]) -> Result<(), GatewayError> {
    let tmp = path.with_extension("jsonl.tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        for e in entries {
            let line = serde_json::to_string(e).expect("fixture entries serialize");
            writeln!(f, "{line}")?;
        }
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Inserts or replaces the entry for `entry.key`, keeping file order.
pub fn upsert_fixture(path: &Path, entry: FixtureEntry) -> Result<(), GatewayError> {
    let mut entries = if path.exists() {
        read_fixtures(path)?
    } else {
        Vec::new()
    };
    match entries.iter_mut().find(|e| e.key == entry.key) {
        Some(slot) => *slot = entry,
        None => entries.push(entry),
    }
    write_fixtures(path, &entries)
}

/// Stores a live exchange so that a replay of the same request returns the
/// same response text.
pub fn record_fixture(exchange: &ModelExchange, fixture_path: &Path) -> Result<(), GatewayError> {
    if exchange.backend_kind != BackendKind::Live || exchange.retrieved_from_fixture {
        return Err(GatewayError::NotLive(exchange.request.clause_id.clone()));
    }
    upsert_fixture(fixture_path, fixture_entry(exchange))
}

pub fn fixture_entry(exchange: &ModelExchange) -> FixtureEntry {
    FixtureEntry {
        key: request_key(&exchange.request),
        template_version: exchange.request.template_version.clone(),
        clause_id: exchange.request.clause_id.clone(),
        response_text: exchange.response_text.clone(),
        model_name: exchange.model_name.clone(),
        recorded_at: exchange.timestamp.clone(),
    }
}

pub trait ChatBackend: Send + Sync {
    fn kind(&self) -> BackendKind;
    fn complete(&self, request: &PromptRequest) -> Result<ModelExchange, GatewayError>;
}

/// Builds the backend named by `config.kind`. Live backends fail here, before
/// any network I/O, when the credential variable is unset.
pub fn backend_from_config(config: &BackendConfig) -> Result<Box<dyn ChatBackend>, GatewayError> {
    Ok(match config.kind {
        BackendKind::Live => Box::new(LiveBackend::new(config)?),
        BackendKind::Replay => Box::new(ReplayBackend::from_config(config)?),
    })
}

/// One-shot completion with a freshly built backend.
pub fn complete(
    request: &PromptRequest,
    config: &BackendConfig,
) -> Result<ModelExchange, GatewayError> {
    backend_from_config(config)?.complete(request)
}

#[derive(Debug, Clone)]
pub struct ReplayBackend {
    entries: HashMap<String, FixtureEntry>,
}

impl ReplayBackend {
    pub fn from_config(config: &BackendConfig) -> Result<Self, GatewayError> {
        let path = config.fixture_path.as_deref().ok_or_else(|| {
            GatewayError::InvalidConfig("replay backend needs a fixture path".into())
        })?;
        Self::open(path)
    }

    pub fn open(path: &Path) -> Result<Self, GatewayError> {
        Ok(Self::from_entries(read_fixtures(path)?))
    }

    /// Later entries win over earlier ones with the same key.
    pub fn from_entries(entries: impl IntoIterator<Item = FixtureEntry>) -> Self {
        ReplayBackend {
            entries: entries.into_iter().map(|e| (e.key.clone(), e)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl ChatBackend for ReplayBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Replay
    }

    fn complete(&self, request: &PromptRequest) -> Result<ModelExchange, GatewayError> {
        let key = request_key(request);
        let entry = self
            .entries
            .get(&key)
            .ok_or_else(|| GatewayError::FixtureMiss {
                clause_id: request.clause_id.clone(),
                key: key.clone(),
            })?;
        Ok(ModelExchange {
            request: request.clone(),
            response_text: entry.response_text.clone(),
            model_name: entry.model_name.clone(),
            latency_ms: 0,
            backend_kind: BackendKind::Replay,
            retrieved_from_fixture: true,
            timestamp: entry.recorded_at.clone(),
        })
    }
}

/// Spaces request starts at least `60s / requests_per_minute` apart. Shared by
/// all workers; callers sleep outside the lock.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    next_slot: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn per_minute(requests_per_minute: u32) -> Self {
        let rpm = requests_per_minute.max(1);
        RateLimiter {
            interval: Duration::from_secs(60) / rpm,
            next_slot: Mutex::new(None),
        }
    }

    pub fn interval(&self) -> Duration {
        self.interval
    }

    /// Blocks until the caller may start a request.
    pub fn acquire(&self) {
        let wait = {
            let mut next = self.next_slot.lock().expect("rate limiter poisoned");
            let now = Instant::now();
            let slot = match *next {
                Some(t) if t > now => t,
                _ => now,
            };
            *next = Some(slot + self.interval);
            slot.saturating_duration_since(now)
        };
        if !wait.is_zero() {
            thread::sleep(wait);
        }
    }
}

pub struct LiveBackend {
    agent: ureq::Agent,
    url: String,
    api_key: String,
    model_name: String,
    temperature: f64,
    max_retries: u32,
    initial_backoff: Duration,
    limiter: RateLimiter,
}

impl std::fmt::Debug for LiveBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LiveBackend")
            .field("url", &self.url)
            .field("model_name", &self.model_name)
            .field("temperature", &self.temperature)
            .finish_non_exhaustive()
    }
}

enum Attempt {
    Done(String),
    Retry(GatewayError),
    Fatal(GatewayError),
}

impl LiveBackend {
    pub fn new(config: &BackendConfig) -> Result<Self, GatewayError> {
        if config.temperature.is_nan() || config.temperature < 0.0 {
            return Err(GatewayError::InvalidConfig(format!(
                "temperature must be >= 0, got {}",
                config.temperature
            )));
        }
        let api_key = std::env::var(&config.credential_source)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| GatewayError::MissingCredential(config.credential_source.clone()))?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(config.timeout_secs.max(1))))
            .build()
            .into();
        Ok(LiveBackend {
            agent,
            url: format!(
                "{}/chat/completions",
                config.endpoint_url.trim_end_matches('/')
            ),
            api_key,
            model_name: config.model_name.clone(),
            temperature: config.temperature,
            max_retries: config.max_retries,
            initial_backoff: Duration::from_millis(config.initial_backoff_ms),
            limiter: RateLimiter::per_minute(config.requests_per_minute),
        })
    }

    /// Request body: the rendered prompt as the only user message.
    pub fn request_body(&self, request: &PromptRequest) -> Value {
        json!({
            "model": self.model_name,
            "temperature": self.temperature,
            "messages": [{"role": "user", "content": request.rendered_text}],
        })
    }

    fn attempt(&self, body: &Value) -> Attempt {
        let sent = self
            .agent
            .post(&self.url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(body);
        let mut response = match sent {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(GatewayError::TransportError(e.to_string())),
        };
        let status = response.status().as_u16();
        let text = match response.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(GatewayError::TransportError(e.to_string())),
        };
        match status {
            200..=299 => match first_choice_text(&text) {
                Some(content) => Attempt::Done(content),
                None => Attempt::Fatal(GatewayError::TransportError(format!(
                    "response has no choices[0].message.content: {}",
                    truncate(&text, 200)
                ))),
            },
            429 => Attempt::Retry(GatewayError::RateLimited { attempts: 0 }),
            500..=599 => Attempt::Retry(GatewayError::TransportError(format!(
                "HTTP {status}: {}",
                truncate(&text, 200)
            ))),
            _ => Attempt::Fatal(GatewayError::TransportError(format!(
                "HTTP {status}: {}",
                truncate(&text, 200)
            ))),
        }
    }
}

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

/// `choices[0].message.content` of a chat-completions response body.
pub fn first_choice_text(body: &str) -> Option<String> {
    let v: Value = serde_json::from_str(body).ok()?;
    v.get("choices")?
        .get(0)?
        .get("message")?
        .get("content")?
        .as_str()
        .map(str::to_string)
}

impl ChatBackend for LiveBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Live
    }

    fn complete(&self, request: &PromptRequest) -> Result<ModelExchange, GatewayError> {
        let body = self.request_body(request);
        let mut attempts = 0u32;
        loop {
            attempts += 1;
            self.limiter.acquire();
            let started = Instant::now();
            let err = match self.attempt(&body) {
                Attempt::Done(response_text) => {
                    return Ok(ModelExchange {
                        request: request.clone(),
                        response_text,
                        model_name: self.model_name.clone(),
                        latency_ms: started.elapsed().as_millis() as u64,
                        backend_kind: BackendKind::Live,
                        retrieved_from_fixture: false,
                        timestamp: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
                    })
                }
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retry(e) => e,
            };
            if attempts > self.max_retries {
                return Err(match err {
                    GatewayError::RateLimited { .. } => GatewayError::RateLimited { attempts },
                    other => other,
                });
            }
            let backoff = self.initial_backoff * 2u32.saturating_pow(attempts - 1);
            log::warn!(
                "clause {}: attempt {attempts} failed ({err}); retrying in {backoff:?}",
                request.clause_id
            );
            thread::sleep(backoff.min(Duration::from_secs(60)));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(id: &str) -> PromptRequest {
        PromptRequest {
            clause_id: id.to_string(),
            rendered_text: format!("prompt\n{id} text"),
            template_version: "cuad-norms-v1".to_string(),
        }
    }

    fn live_exchange(id: &str, text: &str) -> ModelExchange {
        ModelExchange {
            request: request(id),
            response_text: text.to_string(),
            model_name: DEFAULT_MODEL.to_string(),
            latency_ms: 12,
            backend_kind: BackendKind::Live,
            retrieved_from_fixture: false,
            timestamp: "2024-01-01T00:00:00.000Z".to_string(),
        }
    }

    #[test]
    fn key_depends_on_every_component() {
        let base = fixture_key("v1", "c", "text");
        assert_eq!(base.len(), 64);
        assert_ne!(base, fixture_key("v2", "c", "text"));
        assert_ne!(base, fixture_key("v1", "d", "text"));
        assert_ne!(base, fixture_key("v1", "c", "text!"));
        // separators keep the fields from running together
        assert_ne!(fixture_key("v1", "ct", "ext"), base);
    }

    #[test]
    fn record_then_replay() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fx.jsonl");
        record_fixture(&live_exchange("a", "Norm 1: Power"), &path).unwrap();
        record_fixture(&live_exchange("b", "Norm 1: Commitment"), &path).unwrap();
        let entries = read_fixtures(&path).unwrap();
        assert_eq!(entries.len(), 2);
        assert_ne!(entries[0].key, entries[1].key);

        let replay = ReplayBackend::open(&path).unwrap();
        let ex = replay.complete(&request("a")).unwrap();
        assert_eq!(ex.response_text, "Norm 1: Power");
        assert!(ex.retrieved_from_fixture);
        assert_eq!(ex.timestamp, "2024-01-01T00:00:00.000Z");
        assert_eq!(ex.latency_ms, 0);

        record_fixture(&live_exchange("a", "Norm 1: Authorization"), &path).unwrap();
        assert_eq!(read_fixtures(&path).unwrap().len(), 2);
        let replay = ReplayBackend::open(&path).unwrap();
        assert_eq!(
            replay.complete(&request("a")).unwrap().response_text,
            "Norm 1: Authorization"
        );
    }

    #[test]
    fn replay_miss_and_missing_file() {
        let replay = ReplayBackend::from_entries([]);
        assert!(matches!(
            replay.complete(&request("zz")),
            Err(GatewayError::FixtureMiss { .. })
        ));
        let cfg = BackendConfig {
            fixture_path: Some(PathBuf::from("/nope/fixtures.jsonl")),
            ..BackendConfig::default()
        };
        assert!(matches!(
            backend_from_config(&cfg),
            Err(GatewayError::FixtureFileMissing(_))
        ));
    }

    #[test]
    fn replayed_exchanges_cannot_be_recorded() {
        let mut ex = live_exchange("a", "x");
        ex.backend_kind = BackendKind::Replay;
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            record_fixture(&ex, &dir.path().join("f.jsonl")),
            Err(GatewayError::NotLive(_))
        ));
    }

    #[test]
    fn missing_credential_before_network() {
        let cfg = BackendConfig {
            kind: BackendKind::Live,
            credential_source: "NORMFORGE_TEST_UNSET_VARIABLE_7731".into(),
            // unroutable: any I/O attempt would hang or fail differently
            endpoint_url: "http://192.0.2.1:9".into(),
            ..BackendConfig::default()
        };
        let err = complete(&request("a"), &cfg).unwrap_err();
        assert!(
            matches!(err, GatewayError::MissingCredential(v) if v == "NORMFORGE_TEST_UNSET_VARIABLE_7731")
        );
    }

    #[test]
    fn extracts_first_choice() {
        let body = r#"{"choices":[{"message":{"role":"assistant","content":"Norm 1: Power"}},{"message":{"content":"no"}}]}"#;
        assert_eq!(first_choice_text(body).as_deref(), Some("Norm 1: Power"));
        assert_eq!(first_choice_text(r#"{"choices":[]}"#), None);
        assert_eq!(first_choice_text("not json"), None);
    }

    #[test]
    fn limiter_spaces_requests() {
        let limiter = RateLimiter::per_minute(1200); // 50ms apart
        let start = Instant::now();
        for _ in 0..3 {
            limiter.acquire();
        }
        assert!(start.elapsed() >= Duration::from_millis(100));
    }
}
