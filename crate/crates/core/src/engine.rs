//! The gated recurrent loop: walk the chunk plan in order, let the memory
//! agent decide per turn whether to adopt its candidate memory and whether to
//! stop, then ask the answer agent once with the terminal memory.
//!
//! One trajectory is strictly sequential (each turn depends on the previous
//! memory); a group of trajectories for the same task runs in parallel.

use crate::agents::{AgentHandle, AgentRequest, Role, SamplingParams};
use crate::chunking::{ChunkPlan, TokenCounter};
use crate::protocol::{extract_boxed_answer, parse_turn, PromptTemplate};
use crate::types::{Task, Trajectory, TrajectoryRewards, TurnRecord};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Workflow settings. `use_exit_gate` distinguishes the two inference modes;
/// everything else carries budgets through to agents and requests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub use_exit_gate: bool,
    pub chunk_size_s: usize,
    pub max_memory_tokens: usize,
    pub max_response_tokens: usize,
    pub group_size_g: usize,
    pub record_wall_clock: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            use_exit_gate: true,
            chunk_size_s: 5000,
            max_memory_tokens: 1024,
            max_response_tokens: 2048,
            group_size_g: 16,
            record_wall_clock: true,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.chunk_size_s == 0 || self.max_memory_tokens == 0 || self.group_size_g == 0 {
            return Err(EngineError::InvalidConfig(
                "chunk_size_s, max_memory_tokens, and group_size_g must all be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn sampling(&self) -> SamplingParams {
        SamplingParams {
            max_tokens: self.max_response_tokens,
            ..SamplingParams::default()
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("chunk plan is empty")]
    EmptyPlan,
    #[error("chunk plan was built with chunk size {plan} but the engine expects {expected}")]
    PlanMismatch { plan: usize, expected: usize },
    #[error("{role:?} agent failed at turn {turn}: {source}")]
    AgentFailure {
        role: Role,
        turn: usize,
        source: crate::agents::AgentError,
    },
    #[error("invalid engine config: {0}")]
    InvalidConfig(String),
}

/// Outcome of a group rollout: trajectories that completed, plus the failures
/// by trajectory index. Callers decide whether a partial batch is usable.
#[derive(Debug)]
pub struct GroupRun {
    pub completed: Vec<Trajectory>,
    pub failures: Vec<(usize, EngineError)>,
}

/// Runs one trajectory over the plan.
///
/// The exit gate is honored only when `cfg.use_exit_gate` is set and the task
/// does not require a full scan; otherwise exit flags are recorded but the
/// loop runs to the last chunk. The answer agent is called exactly once, with
/// the terminal memory.
pub fn run_trajectory(
    task: &Task,
    plan: &ChunkPlan,
    memory_agent: &AgentHandle,
    answer_agent: &AgentHandle,
    cfg: &EngineConfig,
) -> Result<Trajectory, EngineError> {
    run_trajectory_with_templates(
        task,
        plan,
        memory_agent,
        answer_agent,
        cfg,
        PromptTemplate::embedded(),
    )
}

/// As [`run_trajectory`], with explicit prompt templates.
pub fn run_trajectory_with_templates(
    task: &Task,
    plan: &ChunkPlan,
    memory_agent: &AgentHandle,
    answer_agent: &AgentHandle,
    cfg: &EngineConfig,
    templates: &PromptTemplate,
) -> Result<Trajectory, EngineError> {
    cfg.validate()?;
    if plan.chunks.is_empty() {
        return Err(EngineError::EmptyPlan);
    }
    if plan.chunk_size_s != cfg.chunk_size_s {
        return Err(EngineError::PlanMismatch {
            plan: plan.chunk_size_s,
            expected: cfg.chunk_size_s,
        });
    }

    // Full-scan questions cannot judge evidence sufficiency, so the gate is
    // never honored for them regardless of mode.
    let honor_exit = cfg.use_exit_gate && !task.requires_full_scan;
    let started = Instant::now();

    let mut memory = String::new();
    let mut turns: Vec<TurnRecord> = Vec::new();
    let mut exited_via_gate = false;

    for chunk in &plan.chunks {
        let t = chunk.index;
        let prompt = templates.render_memory_prompt(&task.question, &memory, &chunk.text);
        let raw = memory_agent
            .complete(&AgentRequest {
                role: Role::Memory,
                prompt,
                sampling: cfg.sampling(),
            })
            .map_err(|source| EngineError::AgentFailure {
                role: Role::Memory,
                turn: t,
                source,
            })?;
        let output = parse_turn(&raw);
        let memory_out = if output.update_flag {
            output.candidate_memory.clone()
        } else {
            memory.clone()
        };
        let exit_now = honor_exit && output.exit_flag;
        turns.push(TurnRecord {
            t,
            chunk_index: t,
            memory_in: std::mem::replace(&mut memory, memory_out.clone()),
            output,
            memory_out,
            update_reward: None,
        });
        if exit_now {
            exited_via_gate = true;
            break;
        }
    }

    let answer_prompt = templates.render_answer_prompt(&task.question, &memory);
    let answer_raw = answer_agent
        .complete(&AgentRequest {
            role: Role::Answer,
            prompt: answer_prompt,
            sampling: cfg.sampling(),
        })
        .map_err(|source| EngineError::AgentFailure {
            role: Role::Answer,
            turn: turns.len() + 1,
            source,
        })?;
    let answer_extracted = extract_boxed_answer(&answer_raw);

    // First turn that signaled exit when the gate fired; otherwise the
    // never-exited sentinel T + 1.
    let t_exit = if exited_via_gate {
        turns
            .iter()
            .find(|turn| turn.output.exit_flag)
            .map(|turn| turn.t)
            .expect("gate exit implies an exit-flagged turn")
    } else {
        plan.total_chunks + 1
    };

    let wall_clock_ms = if cfg.record_wall_clock {
        started.elapsed().as_millis() as u64
    } else {
        0
    };

    Ok(Trajectory {
        task_id: task.id.clone(),
        turns,
        answer_raw,
        answer_extracted,
        t_exit,
        exited_via_gate,
        rewards: TrajectoryRewards::default(),
        wall_clock_ms,
    })
}

/// Rolls out `group_size` independent trajectories for one task, in parallel.
/// Agent handles come from the factory per trajectory index, so seeded
/// simulators diverge between rollouts yet replay exactly.
pub fn run_group(
    task: &Task,
    plan: &ChunkPlan,
    factory: &dyn crate::agents::AgentFactory,
    cfg: &EngineConfig,
    group_size: usize,
) -> GroupRun {
    let results: Vec<Result<Trajectory, EngineError>> = (0..group_size)
        .into_par_iter()
        .map(|g| {
            let (memory_agent, answer_agent) =
                factory.agents(task, plan, g as u64).map_err(|source| {
                    EngineError::AgentFailure {
                        role: Role::Memory,
                        turn: 0,
                        source,
                    }
                })?;
            run_trajectory(task, plan, &memory_agent, &answer_agent, cfg)
        })
        .collect();

    let mut run = GroupRun {
        completed: Vec::new(),
        failures: Vec::new(),
    };
    for (g, result) in results.into_iter().enumerate() {
        match result {
            Ok(trajectory) => run.completed.push(trajectory),
            Err(error) => run.failures.push((g, error)),
        }
    }
    run
}

/// Memory size after each turn, in approximate tokens.
pub fn memory_token_series(trajectory: &Trajectory, counter: TokenCounter) -> Vec<usize> {
    trajectory
        .turns
        .iter()
        .map(|turn| counter.count(&turn.memory_out))
        .collect()
}

/// Audit over a finished trajectory: every invariant the loop must uphold.
/// Returns one description per violation; used by post-hoc log checks.
pub fn audit_trajectory(trajectory: &Trajectory, total_chunks: usize) -> Vec<String> {
    let mut violations = Vec::new();
    if trajectory.turns.is_empty() || trajectory.turns.len() > total_chunks {
        violations.push(format!(
            "turn count {} outside 1..={} for task {}",
            trajectory.turns.len(),
            total_chunks,
            trajectory.task_id
        ));
    }
    let mut carried = String::new();
    for turn in &trajectory.turns {
        if turn.memory_in != carried {
            violations.push(format!(
                "turn {}: memory_in does not chain from the previous turn",
                turn.t
            ));
        }
        if turn.output.update_flag {
            if turn.memory_out != turn.output.candidate_memory {
                violations.push(format!(
                    "turn {}: update did not adopt the candidate memory",
                    turn.t
                ));
            }
        } else if turn.memory_out != turn.memory_in {
            violations.push(format!(
                "turn {}: non-update turn changed the memory",
                turn.t
            ));
        }
        carried = turn.memory_out.clone();
    }
    if trajectory.exited_via_gate {
        let last = trajectory.turns.last();
        if last.is_none_or(|turn| !turn.output.exit_flag) {
            violations.push("gate exit recorded but the last turn carries no exit flag".into());
        }
        if last.is_some_and(|turn| turn.t != trajectory.t_exit) {
            violations.push(format!(
                "t_exit {} does not match the exiting turn",
                trajectory.t_exit
            ));
        }
    } else if trajectory.t_exit != total_chunks + 1 {
        violations.push(format!(
            "no gate exit but t_exit {} is not the sentinel {}",
            trajectory.t_exit,
            total_chunks + 1
        ));
    }
    violations
}

/// Checks the mode-agnostic prefix property: under a deterministic agent the
/// gated run must be a turn-for-turn prefix of the ungated run.
pub fn audit_prefix(gated: &Trajectory, ungated: &Trajectory) -> Vec<String> {
    let mut violations = Vec::new();
    if gated.turns.len() > ungated.turns.len() {
        violations.push(format!(
            "gated run has more turns ({}) than ungated ({})",
            gated.turns.len(),
            ungated.turns.len()
        ));
        return violations;
    }
    for (a, b) in gated.turns.iter().zip(&ungated.turns) {
        if a != b {
            violations.push(format!("turn {} differs between modes", a.t));
        }
    }
    violations
}
