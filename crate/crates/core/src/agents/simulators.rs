//! Deterministic simulator agents: a perfect gater, a noise-injected variant,
//! and an indiscriminate updater that reproduces memory explosion.
//!
//! Simulators are stateless across calls. They recover the current chunk by
//! matching the prompt's `<section>` block against the chunk plan, and the
//! carried memory from the `<memory>` block, so one handle can serve any
//! number of concurrent trajectories.

use super::{Agent, AgentError, AgentFactory, AgentHandle, AgentRequest, Role};
use crate::chunking::{evidence_docs_by_chunk, ChunkPlan};
use crate::protocol::{compose_turn, EMPTY_MEMORY_TEXT};
use crate::types::Task;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

/// How a simulator composes its candidate memory on an update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MemoryStyle {
    /// Append the needle sentences of the current chunk to the carried memory.
    #[default]
    #[serde(rename = "APPEND_EVIDENCE")]
    AppendEvidence,
    /// Append something every update, needles or not.
    #[serde(rename = "APPEND_ALWAYS")]
    AppendAlways,
    /// Keep only this turn's needles, discarding the carried memory.
    #[serde(rename = "REWRITE_MINIMAL")]
    RewriteMinimal,
}

/// Error rates and seed for the noise-injected simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulatorScript {
    /// Probability of flipping the oracle's update decision, per turn.
    pub update_error_rate: f64,
    /// Probability of flipping the oracle's exit decision, per turn.
    pub exit_error_rate: f64,
    pub memory_style: MemoryStyle,
    pub seed: u64,
}

impl Default for SimulatorScript {
    fn default() -> Self {
        SimulatorScript {
            update_error_rate: 0.0,
            exit_error_rate: 0.0,
            memory_style: MemoryStyle::AppendEvidence,
            seed: 0,
        }
    }
}

impl SimulatorScript {
    fn validate(&self) -> Result<(), AgentError> {
        for (name, rate) in [
            ("update_error_rate", self.update_error_rate),
            ("exit_error_rate", self.exit_error_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(AgentError::InvalidConfig(format!(
                    "{name} must lie in [0, 1], got {rate}"
                )));
            }
        }
        Ok(())
    }
}

/// The shared chunk-plan view a simulator works from.
#[derive(Debug)]
struct PlanView {
    requires_full_scan: bool,
    /// chunk text -> 0-based chunk position.
    lookup: HashMap<String, usize>,
    /// (contains_evidence, is_last_evidence) per chunk position.
    flags: Vec<(bool, bool)>,
    /// Trimmed text of the marked documents overlapping each chunk.
    needles: Vec<Vec<String>>,
}

impl PlanView {
    fn new(task: &Task, plan: &ChunkPlan) -> Self {
        let by_chunk = evidence_docs_by_chunk(task, plan);
        let needles = by_chunk
            .iter()
            .map(|docs| {
                docs.iter()
                    .map(|&d| task.documents[d].trim().to_string())
                    .collect()
            })
            .collect();
        PlanView {
            requires_full_scan: task.requires_full_scan,
            lookup: plan
                .chunks
                .iter()
                .map(|c| (c.text.clone(), c.index - 1))
                .collect(),
            flags: plan
                .chunks
                .iter()
                .map(|c| (c.contains_evidence, c.is_last_evidence))
                .collect(),
            needles,
        }
    }

    fn locate(&self, section: &str) -> Result<usize, AgentError> {
        self.lookup
            .get(section)
            .copied()
            .ok_or(AgentError::UnknownChunk)
    }
}

/// Extracts the payload of a prompt block. `last_close` selects whether the
/// closing tag is matched first-after-open (inner blocks) or last-in-prompt
/// (the trailing `<section>` block, whose payload is arbitrary corpus text).
fn prompt_block<'a>(prompt: &'a str, open: &str, close: &str, last_close: bool) -> Option<&'a str> {
    let start = prompt.find(open)? + open.len();
    let rel_end = if last_close {
        prompt[start..].rfind(close)?
    } else {
        prompt[start..].find(close)?
    };
    Some(&prompt[start..start + rel_end])
}

fn prompt_memory(prompt: &str) -> String {
    let memory = prompt_block(prompt, "<memory>\n", "\n</memory>", false).unwrap_or_default();
    if memory == EMPTY_MEMORY_TEXT {
        String::new()
    } else {
        memory.to_string()
    }
}

fn prompt_section(prompt: &str) -> Result<&str, AgentError> {
    prompt_block(prompt, "<section>\n", "\n</section>", true).ok_or(AgentError::UnknownChunk)
}

fn append(memory: &str, addition: &str) -> String {
    if memory.is_empty() {
        addition.to_string()
    } else if addition.is_empty() {
        memory.to_string()
    } else {
        format!("{memory} {addition}")
    }
}

/// The candidate emitted when the update gate stays closed: echo the carried
/// memory, or the empty-memory literal when nothing is held yet.
fn echo_candidate(memory: &str) -> String {
    if memory.is_empty() {
        EMPTY_MEMORY_TEXT.to_string()
    } else {
        memory.to_string()
    }
}

/// Parses `One of the special magic uuids for {key} is: {value}` statements
/// out of a memory text, in order of appearance.
fn needle_values(memory: &str) -> Vec<String> {
    const LEAD: &str = "One of the special magic uuids for ";
    const SEP: &str = " is: ";
    let mut values = Vec::new();
    let mut rest = memory;
    while let Some(at) = rest.find(LEAD) {
        rest = &rest[at + LEAD.len()..];
        let Some(sep) = rest.find(SEP) else { break };
        let tail = &rest[sep + SEP.len()..];
        let value: String = tail
            .chars()
            .take_while(|c| c.is_ascii_hexdigit() || *c == '-')
            .collect();
        if !value.is_empty() {
            values.push(value);
        }
        rest = tail;
    }
    values
}

/// Boxed answer derived from the accumulated needles in the terminal memory;
/// `boxed{unknown}` when the memory holds none.
fn derive_answer(memory: &str) -> String {
    let values: BTreeSet<String> = needle_values(memory).into_iter().collect();
    if values.is_empty() {
        "Based on the memory, no magic uuid was collected. \\boxed{unknown}".to_string()
    } else {
        let joined = values.into_iter().collect::<Vec<_>>().join(", ");
        format!("Based on the memory, the answer is \\boxed{{{joined}}}.")
    }
}

fn require_prompt(request: &AgentRequest) -> Result<(), AgentError> {
    if request.prompt.is_empty() {
        Err(AgentError::EmptyPrompt)
    } else {
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Oracle
// ---------------------------------------------------------------------------

/// Perfect gater: updates exactly on evidence chunks, exits exactly on the
/// last-evidence chunk (never on full-scan tasks), and answers from the
/// needles it accumulated.
struct OracleAgent {
    view: PlanView,
}

impl OracleAgent {
    fn decide(&self, chunk_pos: usize) -> (bool, bool) {
        let (evidence, last) = self.view.flags[chunk_pos];
        (evidence, last && !self.view.requires_full_scan)
    }

    fn candidate(&self, memory: &str, chunk_pos: usize) -> String {
        append(memory, &self.view.needles[chunk_pos].join(" "))
    }
}

impl Agent for OracleAgent {
    fn complete(&self, request: &AgentRequest) -> Result<String, AgentError> {
        require_prompt(request)?;
        match request.role {
            Role::Answer => Ok(derive_answer(&prompt_memory(&request.prompt))),
            Role::Memory => {
                let chunk_pos = self.view.locate(prompt_section(&request.prompt)?)?;
                let memory = prompt_memory(&request.prompt);
                let (update, exit) = self.decide(chunk_pos);
                let (think, candidate) = if update {
                    (
                        "This section contains information relevant to the problem; recording it.",
                        self.candidate(&memory, chunk_pos),
                    )
                } else {
                    (
                        "This section contains no information relevant to the problem.",
                        echo_candidate(&memory),
                    )
                };
                Ok(compose_turn(think, update, &candidate, exit))
            }
        }
    }
}

/// Deterministic perfect gater over one task's chunk plan.
pub fn oracle_agent(task: &Task, plan: &ChunkPlan) -> AgentHandle {
    Arc::new(OracleAgent {
        view: PlanView::new(task, plan),
    })
}

// ---------------------------------------------------------------------------
// Noisy
// ---------------------------------------------------------------------------

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

fn mixed_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0u64, |acc, &p| splitmix64(acc ^ p))
}

/// Oracle decisions, each independently flipped with the scripted error
/// rates. The random stream is keyed by (script seed, trajectory, turn) so a
/// shared handle is race-free and every run replays exactly.
struct NoisyAgent {
    oracle: OracleAgent,
    script: SimulatorScript,
    trajectory: u64,
}

impl NoisyAgent {
    fn flip(&self, chunk_pos: usize, salt: u64, rate: f64) -> bool {
        if rate <= 0.0 {
            return false;
        }
        let seed = mixed_seed(&[self.script.seed, self.trajectory, chunk_pos as u64, salt]);
        ChaCha8Rng::seed_from_u64(seed).gen::<f64>() < rate
    }

    fn candidate(&self, memory: &str, chunk_pos: usize, evidence: bool) -> String {
        const NOISE_NOTE: &str = "Noted details from this section that may matter later.";
        let needles = self.oracle.view.needles[chunk_pos].join(" ");
        match (self.script.memory_style, evidence) {
            // A wrong update on a filler chunk adds nothing under this style.
            (MemoryStyle::AppendEvidence, true) => append(memory, &needles),
            (MemoryStyle::AppendEvidence, false) => echo_candidate(memory),
            (MemoryStyle::AppendAlways, true) => append(memory, &needles),
            (MemoryStyle::AppendAlways, false) => append(memory, NOISE_NOTE),
            (MemoryStyle::RewriteMinimal, true) => needles,
            (MemoryStyle::RewriteMinimal, false) => NOISE_NOTE.to_string(),
        }
    }
}

impl Agent for NoisyAgent {
    fn complete(&self, request: &AgentRequest) -> Result<String, AgentError> {
        require_prompt(request)?;
        match request.role {
            Role::Answer => Ok(derive_answer(&prompt_memory(&request.prompt))),
            Role::Memory => {
                let chunk_pos = self.oracle.view.locate(prompt_section(&request.prompt)?)?;
                let memory = prompt_memory(&request.prompt);
                let (base_update, base_exit) = self.oracle.decide(chunk_pos);
                let update = base_update ^ self.flip(chunk_pos, 0, self.script.update_error_rate);
                let exit = base_exit ^ self.flip(chunk_pos, 1, self.script.exit_error_rate);
                let (evidence, _) = self.oracle.view.flags[chunk_pos];
                let (think, candidate) = if update {
                    (
                        "This section looks relevant; updating the memory.",
                        self.candidate(&memory, chunk_pos, evidence),
                    )
                } else {
                    (
                        "Nothing in this section seems relevant; keeping the memory.",
                        echo_candidate(&memory),
                    )
                };
                Ok(compose_turn(think, update, &candidate, exit))
            }
        }
    }
}

/// Oracle behavior with scripted flip probabilities on both gates.
pub fn noisy_agent(
    script: SimulatorScript,
    task: &Task,
    plan: &ChunkPlan,
    trajectory: u64,
) -> Result<AgentHandle, AgentError> {
    script.validate()?;
    Ok(Arc::new(NoisyAgent {
        oracle: OracleAgent {
            view: PlanView::new(task, plan),
        },
        script,
        trajectory,
    }))
}

// ---------------------------------------------------------------------------
// Exploder
// ---------------------------------------------------------------------------

/// Indiscriminate updater: always opens the update gate, never exits, and
/// appends a fixed-size digest of every chunk until the memory budget caps
/// out. Truncation keeps the head of the memory and drops the tail.
struct ExploderAgent {
    view: PlanView,
    cap_tokens: usize,
    summary_tokens: usize,
}

impl ExploderAgent {
    fn truncate(&self, text: &str) -> String {
        text.split_whitespace()
            .take(self.cap_tokens)
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl Agent for ExploderAgent {
    fn complete(&self, request: &AgentRequest) -> Result<String, AgentError> {
        require_prompt(request)?;
        match request.role {
            Role::Answer => Ok(derive_answer(&prompt_memory(&request.prompt))),
            Role::Memory => {
                let section = prompt_section(&request.prompt)?;
                self.view.locate(section)?;
                let memory = prompt_memory(&request.prompt);
                let digest: String = section
                    .split_whitespace()
                    .take(self.summary_tokens)
                    .collect::<Vec<_>>()
                    .join(" ");
                let candidate =
                    self.truncate(&append(&memory, &format!("From this section: {digest}")));
                Ok(compose_turn(
                    "Recording everything from this section in case it matters.",
                    true,
                    &candidate,
                    false,
                ))
            }
        }
    }
}

/// Always-update agent capped at `cap_tokens` of memory.
pub fn exploder_agent(task: &Task, plan: &ChunkPlan, cap_tokens: usize) -> AgentHandle {
    Arc::new(ExploderAgent {
        view: PlanView::new(task, plan),
        cap_tokens: cap_tokens.max(1),
        summary_tokens: 48,
    })
}

// ---------------------------------------------------------------------------
// Factories
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Default)]
pub struct OracleFactory;

impl AgentFactory for OracleFactory {
    fn agents(
        &self,
        task: &Task,
        plan: &ChunkPlan,
        _trajectory: u64,
    ) -> Result<(AgentHandle, AgentHandle), AgentError> {
        let handle = oracle_agent(task, plan);
        Ok((handle.clone(), handle))
    }

    fn label(&self) -> &'static str {
        "oracle"
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NoisyFactory {
    pub script: SimulatorScript,
}

impl AgentFactory for NoisyFactory {
    fn agents(
        &self,
        task: &Task,
        plan: &ChunkPlan,
        trajectory: u64,
    ) -> Result<(AgentHandle, AgentHandle), AgentError> {
        // Fold the task id in so different tasks draw independent streams.
        let task_mix = task
            .id
            .bytes()
            .fold(0u64, |acc, b| splitmix64(acc ^ b as u64));
        let script = SimulatorScript {
            seed: mixed_seed(&[self.script.seed, task_mix]),
            ..self.script
        };
        let handle = noisy_agent(script, task, plan, trajectory)?;
        Ok((handle.clone(), handle))
    }

    fn label(&self) -> &'static str {
        "noisy"
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ExploderFactory {
    pub cap_tokens: usize,
}

impl AgentFactory for ExploderFactory {
    fn agents(
        &self,
        task: &Task,
        plan: &ChunkPlan,
        _trajectory: u64,
    ) -> Result<(AgentHandle, AgentHandle), AgentError> {
        let handle = exploder_agent(task, plan, self.cap_tokens);
        Ok((handle.clone(), handle))
    }

    fn label(&self) -> &'static str {
        "exploder"
    }
}
