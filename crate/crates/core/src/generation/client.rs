use std::path::Path;
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LlmError {
    /// Worth retrying: connection failures, timeouts, 429 and 5xx replies.
    #[error("transient transport error: {0}")]
    Transient(String),
    #[error("transport error: {0}")]
    Fatal(String),
}

/// Text in, text out.
pub trait LlmClient: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, LlmError>;
}

impl<C: LlmClient + ?Sized> LlmClient for &C {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        (**self).complete(prompt)
    }
}

impl<C: LlmClient + ?Sized> LlmClient for Box<C> {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        (**self).complete(prompt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 4,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(20),
        }
    }
}

impl RetryPolicy {
    pub fn none() -> Self {
        RetryPolicy {
            max_retries: 0,
            ..Self::default()
        }
    }

    /// Delay before retry number `attempt` (0-based): base * 2^attempt, capped.
    pub fn delay(&self, attempt: u32) -> Duration {
        self.base_delay
            .saturating_mul(1u32.checked_shl(attempt).unwrap_or(u32::MAX))
            .min(self.max_delay)
    }

    pub fn run<T>(&self, mut f: impl FnMut() -> Result<T, LlmError>) -> Result<T, LlmError> {
        let mut attempt = 0;
        loop {
            match f() {
                Err(LlmError::Transient(msg)) if attempt < self.max_retries => {
                    let wait = self.delay(attempt);
                    log::warn!("transient LLM failure ({msg}); retry {} in {wait:?}", attempt + 1);
                    thread::sleep(wait);
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

/// Wraps a client with exponential-backoff retries on transient errors.
pub struct RetryingClient<C> {
    inner: C,
    policy: RetryPolicy,
}

impl<C: LlmClient> RetryingClient<C> {
    pub fn new(inner: C, policy: RetryPolicy) -> Self {
        RetryingClient { inner, policy }
    }
}

impl<C: LlmClient> LlmClient for RetryingClient<C> {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        self.policy.run(|| self.inner.complete(prompt))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HttpChatConfig {
    pub base_url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout: Duration,
}

impl HttpChatConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        HttpChatConfig {
            base_url: base_url.into(),
            model: model.into(),
            api_key: None,
            temperature: 0.0,
            max_tokens: 1024,
            timeout: Duration::from_secs(120),
        }
    }

    /// Reads `TQA_LLM_BASE_URL`, `TQA_LLM_MODEL` and the optional
    /// `TQA_LLM_API_KEY`.
    pub fn from_env() -> Result<Self, String> {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.trim().is_empty());
        let base = var("TQA_LLM_BASE_URL").ok_or("TQA_LLM_BASE_URL is not set")?;
        let model = var("TQA_LLM_MODEL").ok_or("TQA_LLM_MODEL is not set")?;
        let mut cfg = HttpChatConfig::new(base, model);
        cfg.api_key = var("TQA_LLM_API_KEY");
        Ok(cfg)
    }
}

/// Client for an OpenAI-style `POST {base}/chat/completions` endpoint.
/// Makes a single attempt per call; wrap it in [`RetryingClient`] for
/// backoff.
pub struct HttpChatClient {
    cfg: HttpChatConfig,
    agent: ureq::Agent,
}

impl HttpChatClient {
    pub fn new(cfg: HttpChatConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpChatClient { cfg, agent }
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.cfg.base_url.trim_end_matches('/'))
    }
}

impl LlmClient for HttpChatClient {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        let body = json!({
            "model": self.cfg.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.cfg.temperature,
            "max_tokens": self.cfg.max_tokens,
        });
        let mut req = self.agent.post(&self.url());
        if let Some(key) = &self.cfg.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(&body)
            .map_err(|e| LlmError::Transient(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| LlmError::Transient(e.to_string()))?;
        if status == 429 || status >= 500 {
            return Err(LlmError::Transient(format!("HTTP {status}: {text}")));
        }
        if !(200..300).contains(&status) {
            return Err(LlmError::Fatal(format!("HTTP {status}: {text}")));
        }
        let v: Value = serde_json::from_str(&text).map_err(|e| LlmError::Fatal(format!("bad JSON reply: {e}")))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_owned)
            .ok_or_else(|| LlmError::Fatal("reply has no choices[0].message.content".into()))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ScriptedReply {
    Text(String),
    Error {
        error: String,
        #[serde(default)]
        transient: bool,
    },
}

#[derive(Debug, Clone, Deserialize)]
struct ScriptEntry {
    #[serde(default, rename = "match")]
    pattern: Option<String>,
    replies: Vec<ScriptedReply>,
}

/// Replays canned completions from a JSONL script.
///
/// Each line is `{"match": "substring", "replies": [...]}`. A prompt is
/// served by the first entry whose `match` occurs in it (an entry without
/// `match` accepts any prompt) and which still has replies left. Replies are
/// handed out in order; a reply may be `{"error": "...", "transient": bool}`
/// to simulate a transport failure.
pub struct ScriptedClient {
    entries: Vec<ScriptEntry>,
    cursors: Mutex<Vec<usize>>,
}

impl ScriptedClient {
    pub fn from_jsonl(text: &str) -> Result<Self, String> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let e: ScriptEntry =
                serde_json::from_str(line).map_err(|e| format!("script line {}: {e}", i + 1))?;
            entries.push(e);
        }
        let n = entries.len();
        Ok(ScriptedClient {
            entries,
            cursors: Mutex::new(vec![0; n]),
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_jsonl(&text)
    }

    /// A script with one catch-all entry.
    pub fn replies<I: IntoIterator<Item = S>, S: Into<String>>(replies: I) -> Self {
        ScriptedClient {
            entries: vec![ScriptEntry {
                pattern: None,
                replies: replies.into_iter().map(|r| ScriptedReply::Text(r.into())).collect(),
            }],
            cursors: Mutex::new(vec![0]),
        }
    }

    /// Total replies handed out so far.
    pub fn served(&self) -> usize {
        self.cursors.lock().unwrap().iter().sum()
    }
}

impl LlmClient for ScriptedClient {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        let mut cursors = self.cursors.lock().unwrap();
        for (i, e) in self.entries.iter().enumerate() {
            let matches = e.pattern.as_deref().is_none_or(|p| prompt.contains(p));
            if matches && cursors[i] < e.replies.len() {
                let reply = e.replies[cursors[i]].clone();
                cursors[i] += 1;
                return match reply {
                    ScriptedReply::Text(t) => Ok(t),
                    ScriptedReply::Error { error, transient: true } => Err(LlmError::Transient(error)),
                    ScriptedReply::Error { error, .. } => Err(LlmError::Fatal(error)),
                };
            }
        }
        Err(LlmError::Fatal("script has no reply left for this prompt".into()))
    }
}
