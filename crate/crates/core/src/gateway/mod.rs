//! Chat-completion client with retries, an in-flight bound, token accounting and
//! record/replay.
//!
//! Wire format (OpenAI-style chat completions):
//!
//! ```text
//! POST <endpoint>
//! Authorization: Bearer $<api_key_env>          (when the variable is set)
//! {"model": "...", "messages": [{"role": "system", "content": "..."},
//!                               {"role": "user", "content": "..."}],
//!  "temperature": 0.7, "max_tokens": 2048, "stream": false}
//!
//! 200 {"choices": [{"message": {"content": "..."}}],
//!      "usage": {"prompt_tokens": 10, "completion_tokens": 20}}
//! ```
//!
//! 429 and 5xx responses as well as transport failures are retried with
//! exponential backoff up to `max_retries` times.
//!
//! In replay mode responses come from a [`ReplayStore`] keyed by the request
//! tag and a hash of the prompt; a missing entry is an error, never a fallback.

mod fence;
mod replay;

use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub use fence::{extract_json_fence, fenced_blocks, wrap_in_fence, FencedBlock};
pub use replay::{prompt_hash, replay_key, ReplayEntry, ReplayStore};

pub const DEFAULT_TEMPERATURE: f64 = 0.7;
pub const DEFAULT_MAX_OUTPUT_TOKENS: u32 = 2048;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("invalid gateway config: {0}")]
    Config(String),
    #[error("invalid request: {0}")]
    Request(String),
    #[error("replay store {0} does not exist")]
    StoreMissing(PathBuf),
    #[error("replay store: {0}")]
    Store(String),
    #[error("replay miss for key {key} (tag {tag})")]
    ReplayMiss { key: String, tag: String },
    #[error("retries exhausted after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("http status {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed response: {0}")]
    Response(String),
    #[error("no ``` fence found in: {snippet}")]
    NoFence { snippet: String },
    #[error("fenced block is not valid JSON ({error}): {snippet}")]
    FenceNotJson { snippet: String, error: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GatewayMode {
    Live,
    Record,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatewayConfig {
    pub endpoint: String,
    pub model: String,
    pub max_retries: u32,
    pub max_inflight: usize,
    pub mode: GatewayMode,
    pub replay_store: PathBuf,
    /// Name of the environment variable holding the API credential.
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub retry_backoff_ms: u64,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://127.0.0.1:8000/v1/chat/completions".into(),
            model: "ernie-4.0".into(),
            max_retries: 3,
            max_inflight: 4,
            mode: GatewayMode::Replay,
            replay_store: PathBuf::from("fixtures/replay"),
            api_key_env: "DOCSYNTH_API_KEY".into(),
            timeout_secs: 120,
            retry_backoff_ms: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system_text: Option<String>,
    pub user_text: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    /// Free-form label; part of the replay key.
    pub tag: String,
}

impl ChatRequest {
    pub fn new(tag: impl Into<String>, user_text: impl Into<String>) -> Self {
        Self {
            system_text: None,
            user_text: user_text.into(),
            temperature: DEFAULT_TEMPERATURE,
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
            tag: tag.into(),
        }
    }

    fn check(&self) -> Result<(), GatewayError> {
        if self.user_text.trim().is_empty() {
            return Err(GatewayError::Request("user_text is empty".into()));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(GatewayError::Request(format!("temperature {} < 0", self.temperature)));
        }
        if self.max_output_tokens == 0 {
            return Err(GatewayError::Request("max_output_tokens must be positive".into()));
        }
        Ok(())
    }

    pub fn key(&self) -> String {
        replay_key(&self.tag, &self.user_text)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl TokenUsage {
    pub fn total(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }

    /// Rough count used when a provider omits usage: one token per CJK char,
    /// one per four other chars.
    pub fn estimate(prompt: &str, completion: &str) -> Self {
        fn est(s: &str) -> u64 {
            let cjk = s.chars().filter(|c| crate::corpus::is_cjk(*c)).count() as u64;
            let other = s.chars().count() as u64 - cjk;
            cjk + other.div_ceil(4)
        }
        Self { prompt_tokens: est(prompt), completion_tokens: est(completion) }
    }
}

impl std::ops::AddAssign for TokenUsage {
    fn add_assign(&mut self, rhs: Self) {
        self.prompt_tokens += rhs.prompt_tokens;
        self.completion_tokens += rhs.completion_tokens;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub usage: TokenUsage,
    /// Network attempts made; zero for replayed responses.
    pub attempts: u32,
}

struct Inflight {
    count: Mutex<usize>,
    freed: Condvar,
    limit: usize,
}

struct Permit<'a>(&'a Inflight);

impl Inflight {
    fn acquire(&self) -> Permit<'_> {
        let mut n = self.count.lock().unwrap();
        while *n >= self.limit {
            n = self.freed.wait(n).unwrap();
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.count.lock().unwrap() -= 1;
        self.0.freed.notify_one();
    }
}

/// Shareable across threads; see the module docs for the protocol.
pub struct Gateway {
    config: GatewayConfig,
    agent: ureq::Agent,
    store: Option<ReplayStore>,
    inflight: Inflight,
    usage: Mutex<TokenUsage>,
    network_attempts: AtomicU64,
}

impl Gateway {
    pub fn new(config: GatewayConfig) -> Result<Self, GatewayError> {
        if config.max_inflight == 0 {
            return Err(GatewayError::Config("max_inflight must be positive".into()));
        }
        let store = match config.mode {
            GatewayMode::Replay => Some(ReplayStore::open(&config.replay_store)?),
            GatewayMode::Record => Some(ReplayStore::create(&config.replay_store)?),
            GatewayMode::Live => None,
        };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(config.timeout_secs.max(1))))
            .build()
            .into();
        Ok(Self {
            inflight: Inflight {
                count: Mutex::new(0),
                freed: Condvar::new(),
                limit: config.max_inflight,
            },
            config,
            agent,
            store,
            usage: Mutex::new(TokenUsage::default()),
            network_attempts: AtomicU64::new(0),
        })
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    pub fn model(&self) -> &str {
        &self.config.model
    }

    /// Usage summed over every completed call so far.
    pub fn usage(&self) -> TokenUsage {
        *self.usage.lock().unwrap()
    }

    pub fn network_attempts(&self) -> u64 {
        self.network_attempts.load(Ordering::SeqCst)
    }

    pub fn complete(&self, req: &ChatRequest) -> Result<Completion, GatewayError> {
        req.check()?;
        let completion = match self.config.mode {
            GatewayMode::Replay => {
                let store = self.store.as_ref().expect("replay mode has a store");
                let entry = store.get(req)?.ok_or_else(|| GatewayError::ReplayMiss {
                    key: req.key(),
                    tag: req.tag.clone(),
                })?;
                Completion { text: entry.text, usage: entry.usage, attempts: 0 }
            }
            GatewayMode::Live => self.call_live(req)?,
            GatewayMode::Record => {
                let c = self.call_live(req)?;
                let store = self.store.as_ref().expect("record mode has a store");
                store.put(req, &self.config.model, &c.text, c.usage)?;
                c
            }
        };
        *self.usage.lock().unwrap() += completion.usage;
        Ok(completion)
    }

    fn request_body(&self, req: &ChatRequest) -> Value {
        let mut messages = Vec::new();
        if let Some(system) = &req.system_text {
            messages.push(json!({"role": "system", "content": system}));
        }
        messages.push(json!({"role": "user", "content": req.user_text}));
        json!({
            "model": self.config.model,
            "messages": messages,
            "temperature": req.temperature,
            "max_tokens": req.max_output_tokens,
            "stream": false,
        })
    }

    fn call_live(&self, req: &ChatRequest) -> Result<Completion, GatewayError> {
        let body = self.request_body(req);
        let api_key = std::env::var(&self.config.api_key_env).ok();
        let _permit = self.inflight.acquire();
        let max_attempts = self.config.max_retries + 1;
        let mut last = String::new();
        for attempt in 1..=max_attempts {
            if attempt > 1 {
                let shift = (attempt - 2).min(16);
                let wait = self.config.retry_backoff_ms.saturating_mul(1 << shift).min(30_000);
                std::thread::sleep(Duration::from_millis(wait));
            }
            self.network_attempts.fetch_add(1, Ordering::SeqCst);
            let mut call = self.agent.post(&self.config.endpoint);
            if let Some(key) = &api_key {
                call = call.header("Authorization", format!("Bearer {key}"));
            }
            match call.send_json(&body) {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    let text = resp.body_mut().read_to_string().unwrap_or_default();
                    if status == 200 {
                        return parse_response(&req.user_text, &text, attempt);
                    }
                    if status == 429 || (500..600).contains(&status) {
                        last = format!("http status {status}");
                        continue;
                    }
                    return Err(GatewayError::Http { status, body: text });
                }
                Err(e) => last = e.to_string(),
            }
        }
        Err(GatewayError::RetriesExhausted { attempts: max_attempts, last })
    }
}

fn parse_response(prompt: &str, body: &str, attempts: u32) -> Result<Completion, GatewayError> {
    #[derive(Deserialize)]
    struct Message {
        content: String,
    }
    #[derive(Deserialize)]
    struct Choice {
        message: Message,
    }
    #[derive(Deserialize)]
    struct Body {
        choices: Vec<Choice>,
        usage: Option<TokenUsage>,
    }
    let parsed: Body = serde_json::from_str(body).map_err(|e| GatewayError::Response(e.to_string()))?;
    let text = parsed
        .choices
        .into_iter()
        .next()
        .map(|c| c.message.content)
        .ok_or_else(|| GatewayError::Response("no choices".into()))?;
    let usage = parsed.usage.unwrap_or_else(|| TokenUsage::estimate(prompt, &text));
    Ok(Completion { text, usage, attempts })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replay_hit_and_miss() {
        let dir = tempfile::tempdir().unwrap();
        let store = ReplayStore::create(dir.path()).unwrap();
        let req = ChatRequest::new("doc:a", "prompt text");
        store
            .put(&req, "m", "stored answer", TokenUsage { prompt_tokens: 3, completion_tokens: 4 })
            .unwrap();
        let gw = Gateway::new(GatewayConfig {
            mode: GatewayMode::Replay,
            replay_store: dir.path().to_path_buf(),
            ..Default::default()
        })
        .unwrap();
        let c = gw.complete(&req).unwrap();
        assert_eq!(c.text, "stored answer");
        assert_eq!(c.attempts, 0);
        assert_eq!(gw.network_attempts(), 0);
        assert_eq!(gw.usage().total(), 7);

        let miss = ChatRequest::new("doc:a", "edited prompt text");
        match gw.complete(&miss) {
            Err(GatewayError::ReplayMiss { key, .. }) => assert_eq!(key, miss.key()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn replay_requires_existing_store() {
        let cfg = GatewayConfig {
            mode: GatewayMode::Replay,
            replay_store: PathBuf::from("/nonexistent/replay/store"),
            ..Default::default()
        };
        assert!(matches!(Gateway::new(cfg), Err(GatewayError::StoreMissing(_))));
    }

    #[test]
    fn empty_prompt_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let gw = Gateway::new(GatewayConfig {
            replay_store: dir.path().to_path_buf(),
            ..Default::default()
        })
        .unwrap();
        assert!(matches!(gw.complete(&ChatRequest::new("t", "  ")), Err(GatewayError::Request(_))));
    }

    #[test]
    fn key_depends_on_tag_and_prompt() {
        assert_ne!(replay_key("a", "x"), replay_key("b", "x"));
        assert_ne!(replay_key("a", "x"), replay_key("a", "y"));
        assert_eq!(replay_key("a", "x"), replay_key("a", "x"));
    }

    #[test]
    fn usage_estimate() {
        let u = TokenUsage::estimate("营业收入", "abcdefgh");
        assert_eq!(u, TokenUsage { prompt_tokens: 4, completion_tokens: 2 });
    }
}
