use std::collections::BTreeMap;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::GenParams;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("backend returned HTTP {0}: {1}")]
    Status(u16, String),
    #[error("protocol violation: {0}")]
    Protocol(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

/// Anything that turns a rendered prompt into generated text.
///
/// Implementations are shared across worker threads and must be stateless
/// per request or synchronize internally.
pub trait CompletionBackend: Send + Sync {
    fn complete(&self, prompt: &str, params: &GenParams, request_id: u64) -> Result<Completion, BackendError>;
}

impl<B: CompletionBackend + ?Sized> CompletionBackend for &B {
    fn complete(&self, prompt: &str, params: &GenParams, request_id: u64) -> Result<Completion, BackendError> {
        (**self).complete(prompt, params, request_id)
    }
}

impl<B: CompletionBackend + ?Sized> CompletionBackend for Box<B> {
    fn complete(&self, prompt: &str, params: &GenParams, request_id: u64) -> Result<Completion, BackendError> {
        (**self).complete(prompt, params, request_id)
    }
}

#[derive(Debug, Serialize)]
pub(crate) struct CompleteRequest<'a> {
    pub prompt: &'a str,
    pub top_p: f64,
    pub temperature: f64,
    pub max_tokens: u32,
    pub request_id: u64,
}

#[derive(Debug, Deserialize)]
struct CompleteResponse {
    text: String,
    #[serde(default)]
    meta: BTreeMap<String, serde_json::Value>,
}

/// Client for `POST {base}/v1/complete`.
#[derive(Debug, Clone)]
pub struct HttpCompletionBackend {
    endpoint: String,
    agent: ureq::Agent,
}

impl HttpCompletionBackend {
    pub fn new(base_url: &str) -> Self {
        Self {
            endpoint: format!("{}/v1/complete", base_url.trim_end_matches('/')),
            agent: http_agent(),
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

impl CompletionBackend for HttpCompletionBackend {
    fn complete(&self, prompt: &str, params: &GenParams, request_id: u64) -> Result<Completion, BackendError> {
        let request = CompleteRequest {
            prompt,
            top_p: params.top_p,
            temperature: params.temperature,
            max_tokens: params.max_tokens,
            request_id,
        };
        let response: CompleteResponse = post_json(&self.agent, &self.endpoint, &request)?;
        Ok(Completion {
            text: response.text,
            meta: stringify_meta(response.meta),
        })
    }
}

pub(crate) fn http_agent() -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(Duration::from_secs(300)))
        .build()
        .into()
}

/// POSTs `body` as JSON and decodes a 200 response. Any other status is an
/// error so the caller's retry policy applies.
pub(crate) fn post_json<Req: Serialize, Resp: DeserializeOwned>(agent: &ureq::Agent, url: &str, body: &Req) -> Result<Resp, BackendError> {
    let mut response = agent
        .post(url)
        .send_json(body)
        .map_err(|e| BackendError::Transport(format!("{url}: {e}")))?;
    let status = response.status().as_u16();
    if status != 200 {
        let detail = response.body_mut().read_to_string().unwrap_or_default();
        return Err(BackendError::Status(status, detail));
    }
    response
        .body_mut()
        .read_json()
        .map_err(|e| BackendError::Protocol(e.to_string()))
}

pub(crate) fn stringify_meta(meta: BTreeMap<String, serde_json::Value>) -> BTreeMap<String, String> {
    meta.into_iter()
        .map(|(k, v)| {
            let v = match v {
                serde_json::Value::String(s) => s,
                other => other.to_string(),
            };
            (k, v)
        })
        .collect()
}
