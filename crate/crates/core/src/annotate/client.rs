use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LmmRequest {
    pub model: String,
    pub prompt: String,
    /// PNG bytes of the marked image, if any.
    pub image_png: Option<Vec<u8>>,
}

impl LmmRequest {
    fn image_digest(&self) -> Option<String> {
        self.image_png
            .as_ref()
            .map(|b| hex::encode(Sha256::digest(b)))
    }

    /// Stable key for replay and de-duplication: hash of model, prompt and image digest.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.model.as_bytes());
        h.update([0]);
        h.update(self.prompt.as_bytes());
        h.update([0]);
        h.update(self.image_digest().unwrap_or_default().as_bytes());
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LmmReply {
    pub text: String,
    #[serde(default)]
    pub usage: Usage,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LmmError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited")]
    RateLimited { retry_after: Option<Duration> },
    #[error("transient endpoint failure: {0}")]
    Transient(String),
    #[error("malformed reply envelope: {0}")]
    MalformedEnvelope(String),
    #[error("request budget exhausted")]
    BudgetExhausted,
    #[error("no recorded reply for request {0}")]
    ReplayMiss(String),
    #[error("request log: {0}")]
    Log(String),
}

impl LmmError {
    pub fn code(&self) -> &'static str {
        match self {
            LmmError::Auth(_) => "auth",
            LmmError::RateLimited { .. } => "rate-limited",
            LmmError::Transient(_) => "transient",
            LmmError::MalformedEnvelope(_) => "malformed-envelope",
            LmmError::BudgetExhausted => "budget-exhausted",
            LmmError::ReplayMiss(_) => "replay-miss",
            LmmError::Log(_) => "log",
        }
    }

    pub fn is_retryable(&self) -> bool {
        matches!(self, LmmError::RateLimited { .. } | LmmError::Transient(_))
    }
}

pub trait LmmClient: Send + Sync {
    fn complete(&self, request: &LmmRequest) -> Result<LmmReply, LmmError>;
}

impl<T: LmmClient + ?Sized> LmmClient for Arc<T> {
    fn complete(&self, request: &LmmRequest) -> Result<LmmReply, LmmError> {
        (**self).complete(request)
    }
}

impl<T: LmmClient + ?Sized> LmmClient for Box<T> {
    fn complete(&self, request: &LmmRequest) -> Result<LmmReply, LmmError> {
        (**self).complete(request)
    }
}

impl<T: LmmClient + ?Sized> LmmClient for &T {
    fn complete(&self, request: &LmmRequest) -> Result<LmmReply, LmmError> {
        (**self).complete(request)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    /// Base URL of an OpenAI-compatible API, e.g. `https://api.example.com/v1`.
    pub base_url: String,
    pub model: String,
    /// Environment variable holding the bearer token.
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub max_tokens: Option<u32>,
    /// Minimum spacing between requests, in milliseconds.
    pub min_interval_ms: u64,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            base_url: "http://localhost:8000/v1".into(),
            model: "gpt-4-vision-preview".into(),
            api_key_env: "PANCAP_API_KEY".into(),
            timeout_secs: 120,
            max_tokens: Some(2048),
            min_interval_ms: 0,
        }
    }
}

/// Chat-completions client sending the prompt and the marked image as a data URL.
pub struct HttpClient {
    config: EndpointConfig,
    agent: ureq::Agent,
    token: Option<String>,
    last: Mutex<Option<Instant>>,
}

impl HttpClient {
    pub fn new(config: EndpointConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .build()
            .into();
        let token = std::env::var(&config.api_key_env).ok();
        HttpClient {
            config,
            agent,
            token,
            last: Mutex::new(None),
        }
    }

    fn body(&self, request: &LmmRequest) -> serde_json::Value {
        let mut content = vec![json!({"type": "text", "text": request.prompt})];
        if let Some(png) = &request.image_png {
            let b64 = base64::engine::general_purpose::STANDARD.encode(png);
            content.push(json!({
                "type": "image_url",
                "image_url": {"url": format!("data:image/png;base64,{b64}")}
            }));
        }
        let mut body = json!({
            "model": request.model,
            "messages": [{"role": "user", "content": content}],
            "temperature": 0,
        });
        if let Some(m) = self.config.max_tokens {
            body["max_tokens"] = json!(m);
        }
        body
    }

    fn pace(&self) {
        if self.config.min_interval_ms == 0 {
            return;
        }
        let gap = Duration::from_millis(self.config.min_interval_ms);
        let mut last = self.last.lock().expect("rate limiter lock");
        if let Some(t) = *last {
            let elapsed = t.elapsed();
            if elapsed < gap {
                std::thread::sleep(gap - elapsed);
            }
        }
        *last = Some(Instant::now());
    }
}

pub(crate) fn parse_envelope(text: &str) -> Result<LmmReply, LmmError> {
    let v: serde_json::Value =
        serde_json::from_str(text).map_err(|e| LmmError::MalformedEnvelope(e.to_string()))?;
    let content = v
        .pointer("/choices/0/message/content")
        .and_then(|c| c.as_str())
        .ok_or_else(|| LmmError::MalformedEnvelope("no choices[0].message.content".into()))?;
    let usage = Usage {
        prompt_tokens: v.pointer("/usage/prompt_tokens").and_then(|x| x.as_u64()),
        completion_tokens: v
            .pointer("/usage/completion_tokens")
            .and_then(|x| x.as_u64()),
    };
    Ok(LmmReply {
        text: content.to_string(),
        usage,
    })
}

impl LmmClient for HttpClient {
    fn complete(&self, request: &LmmRequest) -> Result<LmmReply, LmmError> {
        self.pace();
        let url = format!(
            "{}/chat/completions",
            self.config.base_url.trim_end_matches('/')
        );
        let mut req = self
            .agent
            .post(&url)
            .header("Content-Type", "application/json");
        if let Some(t) = &self.token {
            req = req.header("Authorization", format!("Bearer {t}"));
        }
        let body = serde_json::to_string(&self.body(request)).expect("request serializes");
        let mut resp = req
            .send(body)
            .map_err(|e| LmmError::Transient(e.to_string()))?;
        let status = resp.status().as_u16();
        let retry_after = resp
            .headers()
            .get("retry-after")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<u64>().ok())
            .map(Duration::from_secs);
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| LmmError::Transient(e.to_string()))?;
        match status {
            200..=299 => parse_envelope(&text),
            401 | 403 => Err(LmmError::Auth(format!("HTTP {status}"))),
            429 => Err(LmmError::RateLimited { retry_after }),
            408 | 500..=599 => Err(LmmError::Transient(format!("HTTP {status}"))),
            _ => Err(LmmError::MalformedEnvelope(format!(
                "HTTP {status}: {}",
                text.trim()
            ))),
        }
    }
}

/// One line of a request log / replay cassette.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CassetteEntry {
    pub fingerprint: String,
    pub model: String,
    pub image_sha256: Option<String>,
    pub prompt: String,
    pub reply: LmmReply,
}

fn read_cassette(path: &Path) -> Result<HashMap<String, LmmReply>, LmmError> {
    let mut out = HashMap::new();
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
        Err(e) => return Err(LmmError::Log(format!("{}: {e}", path.display()))),
    };
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| LmmError::Log(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<CassetteEntry>(&line) {
            Ok(e) => {
                out.insert(e.fingerprint, e.reply);
            }
            // A torn final line from an interrupted run is skipped.
            Err(e) => log::warn!(
                "{}:{}: skipping unreadable entry: {e}",
                path.display(),
                n + 1
            ),
        }
    }
    Ok(out)
}

/// Serves replies recorded in a cassette; unknown requests fail with [`LmmError::ReplayMiss`].
pub struct ReplayClient {
    replies: HashMap<String, LmmReply>,
}

impl ReplayClient {
    pub fn open(path: &Path) -> Result<Self, LmmError> {
        if !path.exists() {
            return Err(LmmError::Log(format!("{} does not exist", path.display())));
        }
        Ok(ReplayClient {
            replies: read_cassette(path)?,
        })
    }

    pub fn from_entries(entries: impl IntoIterator<Item = CassetteEntry>) -> Self {
        ReplayClient {
            replies: entries
                .into_iter()
                .map(|e| (e.fingerprint, e.reply))
                .collect(),
        }
    }
}

impl LmmClient for ReplayClient {
    fn complete(&self, request: &LmmRequest) -> Result<LmmReply, LmmError> {
        let fp = request.fingerprint();
        self.replies
            .get(&fp)
            .cloned()
            .ok_or(LmmError::ReplayMiss(fp))
    }
}

/// Append-only request log that doubles as an idempotency cache: a request whose fingerprint is
/// already logged is answered from the log without reaching the inner client.
pub struct LoggingClient<C> {
    inner: C,
    path: PathBuf,
    state: Mutex<(HashMap<String, LmmReply>, Option<File>)>,
    calls: AtomicUsize,
}

impl<C: LmmClient> LoggingClient<C> {
    pub fn open(inner: C, path: &Path) -> Result<Self, LmmError> {
        let known = read_cassette(path)?;
        Ok(LoggingClient {
            inner,
            path: path.to_path_buf(),
            state: Mutex::new((known, None)),
            calls: AtomicUsize::new(0),
        })
    }

    /// Requests forwarded to the inner client so far.
    pub fn forwarded(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn into_inner(self) -> C {
        self.inner
    }
}

impl<C: LmmClient> LmmClient for LoggingClient<C> {
    fn complete(&self, request: &LmmRequest) -> Result<LmmReply, LmmError> {
        let fp = request.fingerprint();
        if let Some(r) = self.state.lock().expect("log lock").0.get(&fp) {
            return Ok(r.clone());
        }
        self.calls.fetch_add(1, Ordering::SeqCst);
        let reply = self.inner.complete(request)?;
        let entry = CassetteEntry {
            fingerprint: fp.clone(),
            model: request.model.clone(),
            image_sha256: request.image_digest(),
            prompt: request.prompt.clone(),
            reply: reply.clone(),
        };
        let mut state = self.state.lock().expect("log lock");
        if state.1.is_none() {
            let f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&self.path)
                .map_err(|e| LmmError::Log(format!("{}: {e}", self.path.display())))?;
            state.1 = Some(f);
        }
        let mut line = serde_json::to_string(&entry).expect("entry serializes");
        line.push('\n');
        let file = state.1.as_mut().expect("opened above");
        file.write_all(line.as_bytes())
            .and_then(|_| file.flush())
            .map_err(|e| LmmError::Log(e.to_string()))?;
        state.0.insert(fp, reply.clone());
        Ok(reply)
    }
}

/// Hard cap on requests reaching the inner client.
pub struct BudgetClient<C> {
    inner: C,
    limit: usize,
    used: AtomicUsize,
}

impl<C: LmmClient> BudgetClient<C> {
    pub fn new(inner: C, limit: usize) -> Self {
        BudgetClient {
            inner,
            limit,
            used: AtomicUsize::new(0),
        }
    }

    pub fn used(&self) -> usize {
        self.used.load(Ordering::SeqCst).min(self.limit)
    }
}

impl<C: LmmClient> LmmClient for BudgetClient<C> {
    fn complete(&self, request: &LmmRequest) -> Result<LmmReply, LmmError> {
        if self.used.fetch_add(1, Ordering::SeqCst) >= self.limit {
            return Err(LmmError::BudgetExhausted);
        }
        self.inner.complete(request)
    }
}

pub type Sleeper = Arc<dyn Fn(Duration) + Send + Sync>;

/// Retries rate-limit and transient failures with exponential backoff.
pub struct RetryClient<C> {
    inner: C,
    pub max_retries: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
    sleeper: Sleeper,
    retries: AtomicUsize,
}

impl<C: LmmClient> RetryClient<C> {
    pub fn new(inner: C) -> Self {
        RetryClient {
            inner,
            max_retries: 5,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(60),
            sleeper: Arc::new(std::thread::sleep),
            retries: AtomicUsize::new(0),
        }
    }

    pub fn with_sleeper(mut self, sleeper: Sleeper) -> Self {
        self.sleeper = sleeper;
        self
    }

    pub fn with_max_retries(mut self, n: u32) -> Self {
        self.max_retries = n;
        self
    }

    pub fn retries(&self) -> usize {
        self.retries.load(Ordering::SeqCst)
    }
}

impl<C: LmmClient> LmmClient for RetryClient<C> {
    fn complete(&self, request: &LmmRequest) -> Result<LmmReply, LmmError> {
        let mut attempt = 0u32;
        loop {
            match self.inner.complete(request) {
                Err(e) if e.is_retryable() && attempt < self.max_retries => {
                    let backoff = self
                        .base_delay
                        .saturating_mul(1u32 << attempt.min(16))
                        .min(self.max_delay);
                    let delay = match &e {
                        LmmError::RateLimited {
                            retry_after: Some(d),
                        } => (*d).max(backoff),
                        _ => backoff,
                    };
                    attempt += 1;
                    self.retries.fetch_add(1, Ordering::SeqCst);
                    log::warn!("{} (attempt {attempt}); retrying in {delay:?}", e.code());
                    (self.sleeper)(delay);
                }
                other => return other,
            }
        }
    }
}
