//! Gated recurrent memory for long-context reasoning.
//!
//! A long context is split into fixed-budget chunks and walked by a memory
//! agent that carries a bounded textual memory between turns. Two
//! text-controlled gates shape the walk: an update gate deciding whether the
//! turn's candidate memory replaces the carried one, and an exit gate that
//! ends the walk once the collected evidence suffices. An answer agent then
//! responds from the terminal memory.
//!
//! The crate provides the full loop ([`engine`]) with pluggable agents
//! ([`agents`]: an HTTP chat-completions client plus deterministic
//! simulators), the strict tag protocol ([`protocol`]), the reward and
//! group-relative advantage arithmetic used to train the gates ([`rewards`],
//! [`advantage`]), a synthetic needle-retrieval task generator ([`taskgen`]),
//! and an evaluation harness ([`harness`]).

pub mod advantage;
pub mod agents;
pub mod chunking;
pub mod engine;
pub mod harness;
pub mod io;
pub mod protocol;
pub mod rewards;
pub mod taskgen;
pub mod types;

pub use advantage::{AdvantageConfig, TokenStats};
pub use chunking::{count_tokens, plan_chunks, ChunkPlan, TokenCounter};
pub use engine::EngineConfig;
pub use harness::{EvalReport, ExitClass};
pub use rewards::RewardConfig;
pub use types::{
    Chunk, EvidenceMark, GroupBatch, Task, TaskKind, Trajectory, TrajectoryRewards, TurnOutput,
    TurnRecord,
};
