//! Chat-completions client for OpenAI-compatible endpoints.
//!
//! POSTs `/v1/chat/completions` with a single user message carrying the
//! rendered prompt. Retries transport failures and retryable statuses (429,
//! 5xx) within the configured budget, and bounds in-flight requests with a
//! counting semaphore so grouped rollouts cannot stampede the endpoint.

use super::{Agent, AgentError, AgentFactory, AgentHandle, AgentRequest};
use crate::chunking::ChunkPlan;
use crate::types::Task;
use serde::{Deserialize, Serialize};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

/// Endpoint connection settings. The API key is named by environment
/// variable, never stored in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the API key, if any.
    pub api_key_env: Option<String>,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub max_concurrency: usize,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            base_url: "http://localhost:8000".to_string(),
            model: "default".to_string(),
            api_key_env: None,
            timeout_ms: 120_000,
            max_retries: 2,
            max_concurrency: 8,
        }
    }
}

#[derive(Debug, Serialize)]
struct ChatMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Debug, Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    temperature: f64,
    top_p: f64,
    max_tokens: usize,
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Debug, Deserialize)]
struct ChatChoice {
    message: ChatResponseMessage,
}

#[derive(Debug, Deserialize)]
struct ChatResponseMessage {
    content: Option<String>,
}

/// Counting semaphore bounding in-flight requests.
struct Gate {
    permits: Mutex<usize>,
    available: Condvar,
}

impl Gate {
    fn new(permits: usize) -> Self {
        Gate {
            permits: Mutex::new(permits.max(1)),
            available: Condvar::new(),
        }
    }

    fn acquire(&self) -> GateGuard<'_> {
        let mut permits = self.permits.lock().unwrap();
        while *permits == 0 {
            permits = self.available.wait(permits).unwrap();
        }
        *permits -= 1;
        GateGuard { gate: self }
    }
}

struct GateGuard<'a> {
    gate: &'a Gate,
}

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.gate.permits.lock().unwrap() += 1;
        self.gate.available.notify_one();
    }
}

/// Blocking chat-completions client. One instance serves both roles and any
/// number of concurrent trajectories.
pub struct HttpAgent {
    cfg: EndpointConfig,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
    gate: Gate,
}

impl HttpAgent {
    pub fn new(cfg: EndpointConfig) -> Result<Self, AgentError> {
        let api_key = match &cfg.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                AgentError::InvalidConfig(format!("environment variable {var} is not set"))
            })?),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(cfg.timeout_ms))
            .build()
            .map_err(|e| AgentError::InvalidConfig(e.to_string()))?;
        let gate = Gate::new(cfg.max_concurrency);
        Ok(HttpAgent {
            cfg,
            api_key,
            client,
            gate,
        })
    }

    fn url(&self) -> String {
        format!(
            "{}/v1/chat/completions",
            self.cfg.base_url.trim_end_matches('/')
        )
    }

    /// The serialized request body. Field order is fixed, so identical
    /// requests serialize to identical bytes.
    pub fn request_body(&self, request: &AgentRequest) -> Vec<u8> {
        let body = ChatRequest {
            model: &self.cfg.model,
            messages: vec![ChatMessage {
                role: "user",
                content: &request.prompt,
            }],
            temperature: request.sampling.temperature,
            top_p: request.sampling.top_p,
            max_tokens: request.sampling.max_tokens,
        };
        serde_json::to_vec(&body).expect("chat request serializes")
    }

    fn send_once(&self, body: &[u8]) -> Result<String, (bool, AgentError)> {
        let mut builder = self
            .client
            .post(self.url())
            .header("Content-Type", "application/json")
            .body(body.to_vec());
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().map_err(|e| {
            // Connection and timeout failures are retryable.
            (
                true,
                AgentError::Transport {
                    status: None,
                    body: e.to_string(),
                },
            )
        })?;
        let status = response.status();
        let text = response.text().unwrap_or_default();
        if !status.is_success() {
            let retryable = status.as_u16() == 429 || status.is_server_error();
            return Err((
                retryable,
                AgentError::Transport {
                    status: Some(status.as_u16()),
                    body: text,
                },
            ));
        }
        let parsed: ChatResponse = serde_json::from_str(&text)
            .map_err(|e| (false, AgentError::MalformedResponse(e.to_string())))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or((
                false,
                AgentError::MalformedResponse("response carries no message content".to_string()),
            ))
    }
}

impl Agent for HttpAgent {
    fn complete(&self, request: &AgentRequest) -> Result<String, AgentError> {
        if request.prompt.is_empty() {
            return Err(AgentError::EmptyPrompt);
        }
        let body = self.request_body(request);
        let _permit = self.gate.acquire();
        let mut attempt = 0u32;
        loop {
            match self.send_once(&body) {
                Ok(text) => return Ok(text),
                Err((retryable, error)) => {
                    if !retryable || attempt >= self.cfg.max_retries {
                        return Err(error);
                    }
                    attempt += 1;
                    std::thread::sleep(Duration::from_millis(50 * u64::from(attempt)));
                }
            }
        }
    }
}

/// Factory returning the shared endpoint client for every trajectory.
pub struct EndpointFactory {
    client: Arc<HttpAgent>,
}

impl EndpointFactory {
    pub fn new(cfg: EndpointConfig) -> Result<Self, AgentError> {
        Ok(EndpointFactory {
            client: Arc::new(HttpAgent::new(cfg)?),
        })
    }
}

impl AgentFactory for EndpointFactory {
    fn agents(
        &self,
        _task: &Task,
        _plan: &ChunkPlan,
        _trajectory: u64,
    ) -> Result<(AgentHandle, AgentHandle), AgentError> {
        let handle: AgentHandle = self.client.clone();
        Ok((handle.clone(), handle))
    }

    fn label(&self) -> &'static str {
        "endpoint"
    }
}
