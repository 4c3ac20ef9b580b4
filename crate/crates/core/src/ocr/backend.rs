use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use base64::Engine;
use serde::Deserialize;
use serde_json::{json, Value};

use super::{BackendConfig, Prompt};

/// One image crop and its prompt.
#[derive(Debug, Clone, Copy)]
pub struct BackendRequest<'a> {
    pub box_id: &'a str,
    /// Tile label: `"0"`, `"1"`, ... or `"1a"`/`"1b"` for a halved retry.
    pub tile: &'a str,
    pub image_png: &'a [u8],
    pub prompt: &'a Prompt,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendResponse {
    pub text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    /// The backend stopped because it ran out of tokens.
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    /// Worth retrying: network failure, timeout, throttling, server error,
    /// unparseable reply.
    #[error("transport: {0}")]
    Transport(String),
    /// Credentials rejected; the run cannot continue.
    #[error("authentication: {0}")]
    Auth(String),
}

/// An image-to-text engine: image bytes plus prompt in, text and token
/// counts out.
pub trait OcrBackend: Send + Sync {
    fn name(&self) -> &str;
    fn send(&self, request: &BackendRequest<'_>) -> Result<BackendResponse, BackendError>;
}

/// OpenAI-style chat-completions client.
///
/// Request body:
/// `{"model", "max_tokens", "temperature": 0, "messages": [{"role": "user",
/// "content": [{"type": "text", "text": <prompt>}, {"type": "image_url",
/// "image_url": {"url": "data:image/png;base64,<crop>"}}]}]}`.
/// Reads `choices[0].message.content`, `choices[0].finish_reason` and
/// `usage.prompt_tokens` / `usage.completion_tokens`. The API key comes
/// from the environment variable named by `api_key_env` and is sent as a
/// bearer token.
pub struct HttpBackend {
    client: reqwest::blocking::Client,
    endpoint: String,
    model: String,
    token_limit: u64,
    api_key: Option<String>,
}

impl HttpBackend {
    pub fn new(cfg: &BackendConfig) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(cfg.timeout_secs))
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let api_key = std::env::var(&cfg.api_key_env).ok().filter(|k| !k.is_empty());
        Ok(HttpBackend {
            client,
            endpoint: cfg.endpoint.clone(),
            model: cfg.model.clone(),
            token_limit: cfg.token_limit,
            api_key,
        })
    }

    pub fn request_body(&self, request: &BackendRequest<'_>) -> Value {
        let image = base64::engine::general_purpose::STANDARD.encode(request.image_png);
        json!({
            "model": self.model,
            "max_tokens": self.token_limit,
            "temperature": 0,
            "messages": [{
                "role": "user",
                "content": [
                    {"type": "text", "text": request.prompt.text},
                    {"type": "image_url", "image_url": {"url": format!("data:image/png;base64,{image}")}}
                ]
            }]
        })
    }
}

fn content_text(content: &Value) -> Option<String> {
    match content {
        Value::String(s) => Some(s.clone()),
        Value::Array(parts) => Some(
            parts
                .iter()
                .filter_map(|p| p.get("text").and_then(Value::as_str))
                .collect::<Vec<_>>()
                .join(""),
        ),
        Value::Null => Some(String::new()),
        _ => None,
    }
}

/// Pull text, finish reason and usage out of a chat-completions reply.
pub fn parse_chat_response(body: &Value) -> Result<BackendResponse, BackendError> {
    let bad = |what: &str| BackendError::Transport(format!("malformed response: {what}"));
    let choice = body.pointer("/choices/0").ok_or_else(|| bad("no choices"))?;
    let text = choice
        .pointer("/message/content")
        .and_then(content_text)
        .ok_or_else(|| bad("no message content"))?;
    let truncated = choice.get("finish_reason").and_then(Value::as_str) == Some("length");
    let usage = |key: &str| body.pointer(&format!("/usage/{key}")).and_then(Value::as_u64).unwrap_or(0);
    Ok(BackendResponse {
        text,
        prompt_tokens: usage("prompt_tokens"),
        completion_tokens: usage("completion_tokens"),
        truncated,
    })
}

impl OcrBackend for HttpBackend {
    fn name(&self) -> &str {
        &self.model
    }

    fn send(&self, request: &BackendRequest<'_>) -> Result<BackendResponse, BackendError> {
        let body = serde_json::to_vec(&self.request_body(request)).expect("json body");
        let mut req = self
            .client
            .post(&self.endpoint)
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status();
        let bytes = resp.bytes().map_err(|e| BackendError::Transport(e.to_string()))?;
        if status == reqwest::StatusCode::UNAUTHORIZED || status == reqwest::StatusCode::FORBIDDEN {
            return Err(BackendError::Auth(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(BackendError::Transport(format!(
                "HTTP {status}: {}",
                String::from_utf8_lossy(&bytes).chars().take(200).collect::<String>()
            )));
        }
        let value: Value = serde_json::from_slice(&bytes)
            .map_err(|e| BackendError::Transport(format!("malformed response: {e}")))?;
        parse_chat_response(&value)
    }
}

/// A scripted reply, as stored in a mock response file.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct CannedResponse {
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub prompt_tokens: u64,
    #[serde(default)]
    pub completion_tokens: u64,
    #[serde(default)]
    pub finish_reason: Option<String>,
    /// `"transport"` or `"auth"` to simulate a failure.
    #[serde(default)]
    pub error: Option<String>,
    /// With `error` set, fail only this many times and then succeed.
    #[serde(default)]
    pub fail_times: Option<u32>,
}

/// Offline backend serving canned replies.
///
/// A request for tile `t` of box `b` is answered from the first of
/// `<b>.<t>.json`, `<b>.json`, `default.json` that exists. `{box_id}` and
/// `{tile}` in the text are replaced by the request's values.
pub struct MockBackend {
    dir: Option<PathBuf>,
    canned: HashMap<String, CannedResponse>,
    calls: Mutex<HashMap<String, u32>>,
    served: Mutex<(u64, u64, u64)>,
}

impl MockBackend {
    pub fn from_dir(dir: &Path) -> Self {
        MockBackend {
            dir: Some(dir.to_path_buf()),
            canned: HashMap::new(),
            calls: Mutex::new(HashMap::new()),
            served: Mutex::new((0, 0, 0)),
        }
    }

    /// In-memory variant; keys follow the file stems (`"b.0"`, `"b"`, `"default"`).
    pub fn from_map(canned: HashMap<String, CannedResponse>) -> Self {
        MockBackend { dir: None, canned, calls: Mutex::new(HashMap::new()), served: Mutex::new((0, 0, 0)) }
    }

    fn lookup(&self, key: &str) -> Result<Option<CannedResponse>, BackendError> {
        if let Some(c) = self.canned.get(key) {
            return Ok(Some(c.clone()));
        }
        let Some(dir) = &self.dir else {
            return Ok(None);
        };
        let path = dir.join(format!("{key}.json"));
        if !path.exists() {
            return Ok(None);
        }
        let bytes = std::fs::read(&path).map_err(|e| BackendError::Transport(format!("{}: {e}", path.display())))?;
        serde_json::from_slice(&bytes)
            .map(Some)
            .map_err(|e| BackendError::Transport(format!("{}: {e}", path.display())))
    }

    /// Requests answered, and prompt and completion tokens reported, so far.
    pub fn served(&self) -> (u64, u64, u64) {
        *self.served.lock().expect("mock counters")
    }
}

impl OcrBackend for MockBackend {
    fn name(&self) -> &str {
        "mock"
    }

    fn send(&self, request: &BackendRequest<'_>) -> Result<BackendResponse, BackendError> {
        let specific = format!("{}.{}", request.box_id, request.tile);
        let canned = match self.lookup(&specific)? {
            Some(c) => c,
            None => match self.lookup(request.box_id)? {
                Some(c) => c,
                None => self
                    .lookup("default")?
                    .ok_or_else(|| BackendError::Transport(format!("no canned response for {specific}")))?,
            },
        };
        let attempt = {
            let mut calls = self.calls.lock().expect("mock counters");
            let n = calls.entry(specific).or_insert(0);
            *n += 1;
            *n
        };
        if let Some(kind) = &canned.error {
            if canned.fail_times.map_or(true, |k| attempt <= k) {
                return Err(match kind.as_str() {
                    "auth" => BackendError::Auth("mock credentials rejected".into()),
                    other => BackendError::Transport(format!("mock {other} failure")),
                });
            }
        }
        {
            let mut served = self.served.lock().expect("mock counters");
            served.0 += 1;
            served.1 += canned.prompt_tokens;
            served.2 += canned.completion_tokens;
        }
        Ok(BackendResponse {
            text: canned.text.replace("{box_id}", request.box_id).replace("{tile}", request.tile),
            prompt_tokens: canned.prompt_tokens,
            completion_tokens: canned.completion_tokens,
            truncated: canned.finish_reason.as_deref() == Some("length"),
        })
    }
}
