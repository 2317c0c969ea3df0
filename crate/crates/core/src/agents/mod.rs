//! The agent abstraction shared by the memory and answer roles, plus its
//! implementations: three deterministic simulators and an HTTP
//! chat-completions client.
//!
//! Handles are `Arc<dyn Agent>` and must be safely shareable across
//! concurrent trajectories; simulators are stateless per call, deriving
//! everything from the prompt and their construction-time seed.

mod http;
mod simulators;

pub use http::{EndpointConfig, EndpointFactory, HttpAgent};
pub use simulators::{
    exploder_agent, noisy_agent, oracle_agent, ExploderFactory, MemoryStyle, NoisyFactory,
    OracleFactory, SimulatorScript,
};

use crate::chunking::ChunkPlan;
use crate::types::Task;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Which of the two workflow roles a request is for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    #[serde(rename = "MEMORY")]
    Memory,
    #[serde(rename = "ANSWER")]
    Answer,
}

/// Sampling parameters sent with each request. Defaults are the validation
/// settings: temperature 1.0, top_p 0.7.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: usize,
}

impl Default for SamplingParams {
    fn default() -> Self {
        SamplingParams {
            temperature: 1.0,
            top_p: 0.7,
            max_tokens: 2048,
        }
    }
}

/// One completion request: the fully rendered prompt plus sampling settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRequest {
    pub role: Role,
    pub prompt: String,
    pub sampling: SamplingParams,
}

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error("transport error (status {status:?}): {body}")]
    Transport { status: Option<u16>, body: String },
    #[error("prompt must not be empty")]
    EmptyPrompt,
    #[error("simulator could not locate the prompt section in its chunk plan")]
    UnknownChunk,
    #[error("malformed endpoint response: {0}")]
    MalformedResponse(String),
    #[error("invalid agent configuration: {0}")]
    InvalidConfig(String),
}

/// A completion backend. One handle may serve both roles, switching on
/// [`AgentRequest::role`].
pub trait Agent: Send + Sync {
    fn complete(&self, request: &AgentRequest) -> Result<String, AgentError>;
}

pub type AgentHandle = Arc<dyn Agent>;

impl<F> Agent for F
where
    F: Fn(&AgentRequest) -> Result<String, AgentError> + Send + Sync,
{
    fn complete(&self, request: &AgentRequest) -> Result<String, AgentError> {
        self(request)
    }
}

/// Builds the (memory, answer) handle pair for one trajectory of one task.
///
/// `trajectory` indexes the rollout within its group; simulators fold it into
/// their random stream so grouped rollouts differ but stay replayable.
pub trait AgentFactory: Send + Sync {
    fn agents(
        &self,
        task: &Task,
        plan: &ChunkPlan,
        trajectory: u64,
    ) -> Result<(AgentHandle, AgentHandle), AgentError>;

    /// Short label used in reports and dynamics tables.
    fn label(&self) -> &'static str;
}
