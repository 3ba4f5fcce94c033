//! HTTP client for a remote masked-LM service.
//!
//! The wire format is described in `docs/bridge-protocol.md`. Every request
//! and response body is a JSON object carrying `"protocol": "becpro-bridge/1"`.
//! Responses have `"status": "ok"` with a `result` object, or
//! `"status": "error"` with an `error` object holding `code` and `message`.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use ureq::Agent;

use crate::mlm::{Encoding, MlmError, MlmScorer, SpecialTokens, Tokenizer};

pub const PROTOCOL: &str = "becpro-bridge/1";

/// Service identity reported by `GET /v1/health`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub model: String,
    #[serde(default)]
    pub revision: Option<String>,
    pub vocab_size: usize,
    pub special_tokens: SpecialTokens,
    #[serde(default)]
    pub max_length: Option<usize>,
    #[serde(default)]
    pub supports_finetune: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinetuneStatus {
    pub job: String,
    pub state: JobState,
    #[serde(default)]
    pub steps_done: usize,
    #[serde(default)]
    pub total_steps: usize,
    /// Handle of the post-state model once the job is done.
    #[serde(default)]
    pub checkpoint: Option<String>,
    #[serde(default)]
    pub message: Option<String>,
}

#[derive(Deserialize)]
struct Envelope {
    #[serde(default)]
    protocol: Option<String>,
    status: String,
    #[serde(default)]
    result: Value,
    #[serde(default)]
    error: Option<ErrorBody>,
}

#[derive(Deserialize)]
struct ErrorBody {
    code: String,
    message: String,
}

#[derive(Deserialize)]
struct TokenizeResult {
    ids: Vec<u32>,
    tokens: Vec<String>,
    #[serde(default)]
    word_ids: Option<Vec<Option<usize>>>,
}

#[derive(Deserialize)]
struct VocabResult {
    index: Option<u32>,
}

#[derive(Deserialize)]
struct ProbResult {
    probability: f64,
}

#[derive(Deserialize)]
struct DistributionResult {
    probabilities: Vec<f64>,
}

#[derive(Deserialize)]
struct JobResult {
    job: String,
}

/// A remote scorer; vocabulary lookups are cached per client.
pub struct BridgeClient {
    base: String,
    agent: Agent,
    health: Health,
    vocab_cache: Mutex<HashMap<String, Option<u32>>>,
}

impl std::fmt::Debug for BridgeClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BridgeClient").field("base", &self.base).field("health", &self.health).finish()
    }
}

impl BridgeClient {
    /// Connects to `base_url` (e.g. `http://127.0.0.1:8765`) and reads its health record.
    pub fn connect(base_url: &str) -> Result<Self, MlmError> {
        Self::connect_with_timeout(base_url, Duration::from_secs(60))
    }

    pub fn connect_with_timeout(base_url: &str, timeout: Duration) -> Result<Self, MlmError> {
        let agent: Agent =
            Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(false).build().into();
        let base = base_url.trim_end_matches('/').to_string();
        let mut response =
            agent.get(format!("{base}/v1/health")).call().map_err(|e| MlmError::BackendUnavailable(format!("{base}: {e}")))?;
        let envelope: Envelope = response
            .body_mut()
            .read_json()
            .map_err(|e| MlmError::BackendUnavailable(format!("{base}: unreadable health response: {e}")))?;
        let health: Health = unwrap_envelope(envelope)?;
        Ok(Self { base, agent, health, vocab_cache: Mutex::new(HashMap::new()) })
    }

    pub fn health(&self) -> &Health {
        &self.health
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn post<T: DeserializeOwned>(&self, endpoint: &str, mut body: Value) -> Result<T, MlmError> {
        body["protocol"] = json!(PROTOCOL);
        let url = format!("{}/v1/{endpoint}", self.base);
        let mut response =
            self.agent.post(&url).send_json(&body).map_err(|e| MlmError::BackendUnavailable(format!("{url}: {e}")))?;
        let status = response.status().as_u16();
        let envelope: Envelope = response.body_mut().read_json().map_err(|e| MlmError::Backend {
            code: format!("http-{status}"),
            message: format!("{url}: unreadable response: {e}"),
        })?;
        unwrap_envelope(envelope)
    }

    /// Starts a fine-tuning job on the service; returns its job handle.
    pub fn finetune_start<C: Serialize>(&self, sentences: &[String], config: &C) -> Result<String, MlmError> {
        let r: JobResult = self.post("finetune", json!({"action": "start", "sentences": sentences, "config": config}))?;
        Ok(r.job)
    }

    pub fn finetune_status(&self, job: &str) -> Result<FinetuneStatus, MlmError> {
        self.post("finetune", json!({"action": "status", "job": job}))
    }
}

fn unwrap_envelope<T: DeserializeOwned>(envelope: Envelope) -> Result<T, MlmError> {
    if let Some(p) = &envelope.protocol {
        if p != PROTOCOL {
            return Err(MlmError::Backend { code: "protocol".into(), message: format!("service speaks {p}") });
        }
    }
    if envelope.status != "ok" {
        let e = envelope.error.unwrap_or(ErrorBody { code: "unknown".into(), message: envelope.status });
        return Err(MlmError::Backend { code: e.code, message: e.message });
    }
    serde_json::from_value(envelope.result)
        .map_err(|e| MlmError::Backend { code: "malformed-result".into(), message: e.to_string() })
}

impl Tokenizer for BridgeClient {
    fn tokenize(&self, text: &str) -> Result<Encoding, MlmError> {
        let r: TokenizeResult = self.post("tokenize", json!({"text": text, "add_special_tokens": false}))?;
        if r.ids.len() != r.tokens.len() {
            return Err(MlmError::Backend {
                code: "malformed-result".into(),
                message: format!("{} ids but {} tokens", r.ids.len(), r.tokens.len()),
            });
        }
        let word_ids = r.word_ids.unwrap_or_else(|| vec![None; r.ids.len()]);
        Ok(Encoding { ids: r.ids, tokens: r.tokens, word_ids })
    }

    fn special_tokens(&self) -> SpecialTokens {
        self.health.special_tokens.clone()
    }

    fn vocab_index(&self, token: &str) -> Option<u32> {
        if let Some(hit) = self.vocab_cache.lock().expect("cache lock").get(token) {
            return *hit;
        }
        match self.post::<VocabResult>("vocab", json!({"token": token})) {
            Ok(r) => {
                self.vocab_cache.lock().expect("cache lock").insert(token.to_string(), r.index);
                r.index
            }
            Err(e) => {
                log::warn!("vocab lookup for {token:?} failed: {e}");
                None
            }
        }
    }

    fn vocab_size(&self) -> usize {
        self.health.vocab_size
    }
}

impl MlmScorer for BridgeClient {
    fn distribution(&self, ids: &[u32], attention: &[u8], position: usize) -> Result<Vec<f64>, MlmError> {
        let r: DistributionResult =
            self.post("distribution", json!({"ids": ids, "attention": attention, "position": position}))?;
        if r.probabilities.len() != self.health.vocab_size {
            return Err(MlmError::Backend {
                code: "malformed-result".into(),
                message: format!("{} probabilities for vocabulary of {}", r.probabilities.len(), self.health.vocab_size),
            });
        }
        Ok(r.probabilities)
    }

    fn probability(&self, ids: &[u32], attention: &[u8], position: usize, token: u32) -> Result<f64, MlmError> {
        let r: ProbResult = self.post(
            "prob",
            json!({"ids": ids, "attention": attention, "position": position, "token_index": token}),
        )?;
        Ok(r.probability)
    }

    fn describe(&self) -> String {
        match &self.health.revision {
            Some(rev) => format!("bridge:{} ({}@{rev})", self.base, self.health.model),
            None => format!("bridge:{} ({})", self.base, self.health.model),
        }
    }
}
