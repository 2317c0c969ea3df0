//! Domain types shared by every other module: tasks, chunks, turn records,
//! trajectories, and rollout groups. No I/O, no policy decisions.
//!
//! All types are immutable after construction and serialize to canonical JSON
//! (one object per line in `.jsonl` files, unset fields as `null`).

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Task family. SK/MK/MQ/MV are the synthetic needle-retrieval variants,
/// with the trailing digit encoding difficulty; `External` covers tasks
/// loaded from outside the generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskKind {
    SK1,
    SK2,
    SK3,
    MK1,
    MK2,
    MK3,
    MQ,
    MV,
    #[serde(rename = "EXTERNAL")]
    External,
}

impl TaskKind {
    /// Kinds whose question asks for several answers at once.
    pub fn is_multi_answer(self) -> bool {
        matches!(self, TaskKind::MQ | TaskKind::MV)
    }
}

impl std::fmt::Display for TaskKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            TaskKind::SK1 => "SK1",
            TaskKind::SK2 => "SK2",
            TaskKind::SK3 => "SK3",
            TaskKind::MK1 => "MK1",
            TaskKind::MK2 => "MK2",
            TaskKind::MK3 => "MK3",
            TaskKind::MQ => "MQ",
            TaskKind::MV => "MV",
            TaskKind::External => "EXTERNAL",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "SK1" => Ok(TaskKind::SK1),
            "SK2" => Ok(TaskKind::SK2),
            "SK3" => Ok(TaskKind::SK3),
            "MK1" => Ok(TaskKind::MK1),
            "MK2" => Ok(TaskKind::MK2),
            "MK3" => Ok(TaskKind::MK3),
            "MQ" => Ok(TaskKind::MQ),
            "MV" => Ok(TaskKind::MV),
            "EXTERNAL" => Ok(TaskKind::External),
            other => Err(format!("unknown task kind: {other}")),
        }
    }
}

/// Marks one document as carrying evidence for the answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceMark {
    /// 0-based index into [`Task::documents`].
    pub document_index: usize,
    /// Stable identifier of the needle the document carries.
    pub needle_id: String,
}

/// One long-context question-answering task: a question, an ordered list of
/// documents composing the context, and the gold answer set.
///
/// Gold answers are stored pre-normalized (see [`crate::rewards::normalize_answer`])
/// so downstream equality is plain string/set comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: String,
    pub question: String,
    /// Ordered text segments; their direct concatenation is the full context.
    pub documents: Vec<String>,
    /// Non-empty set of normalized answer strings.
    pub gold_answers: BTreeSet<String>,
    /// Which documents carry evidence, by index.
    pub evidence_marks: Vec<EvidenceMark>,
    pub task_kind: TaskKind,
    /// True for "all values" questions that require reading the whole context;
    /// the exit gate is never honored for these.
    pub requires_full_scan: bool,
}

impl Task {
    /// The full context: documents concatenated directly, no separator added.
    pub fn context(&self) -> String {
        self.documents.concat()
    }
}

/// Checks the `Task` invariants, returning one description per violation.
/// Violations are data, not failures: an empty list means the task is valid.
pub fn validate_task(task: &Task) -> Vec<String> {
    let mut violations = Vec::new();
    if task.gold_answers.is_empty() {
        violations.push("gold_answers empty".to_string());
    }
    for mark in &task.evidence_marks {
        if mark.document_index >= task.documents.len() {
            violations.push(format!(
                "evidence_mark out of range: document_index {} but only {} documents",
                mark.document_index,
                task.documents.len()
            ));
        }
    }
    if task.task_kind != TaskKind::External && task.evidence_marks.is_empty() {
        violations.push("evidence_marks empty for non-EXTERNAL task".to_string());
    }
    violations
}

/// One fixed-budget slice of the context, 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    /// 1-based position in the plan.
    pub index: usize,
    pub text: String,
    /// Approximate token count of `text` under the planning counter.
    pub token_count: usize,
    pub contains_evidence: bool,
    /// True on the single chunk holding the last evidence, when any exists.
    pub is_last_evidence: bool,
}

/// Parsed emission of the memory agent for one turn: the reasoning text,
/// the two gate decisions, and the candidate memory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnOutput {
    pub think: String,
    /// Update gate: adopt the candidate memory this turn.
    pub update_flag: bool,
    pub candidate_memory: String,
    /// Exit gate: stop scanning further chunks.
    pub exit_flag: bool,
    /// The raw emission the flags were parsed from.
    pub raw: String,
    /// True iff `raw` satisfies the strict tag grammar. When false the flags
    /// hold the documented fallback (no update, no exit, empty candidate).
    pub well_formed: bool,
}

/// One executed memory turn: the carried memory before and after, plus the
/// parsed output that decided the transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    /// 1-based turn number; equals `chunk_index` because chunks are visited in order.
    pub t: usize,
    pub chunk_index: usize,
    pub memory_in: String,
    pub output: TurnOutput,
    pub memory_out: String,
    /// Set once rewards are attached; `null` until then.
    pub update_reward: Option<f64>,
}

/// The scalar reward components of one trajectory. Fields stay `null` until
/// scored; `exit` stays `null` for full-scan tasks where exiting is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrajectoryRewards {
    pub outcome: Option<f64>,
    pub exit: Option<f64>,
    pub format: Option<f64>,
    pub trajectory: Option<f64>,
}

/// One full workflow execution: the memory turns, the answer turn, the exit
/// position, and attached rewards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub task_id: String,
    pub turns: Vec<TurnRecord>,
    pub answer_raw: String,
    pub answer_extracted: Option<String>,
    /// Turn at which the agent exited, or `T + 1` when it never exited
    /// (with `T` the task's total chunk count).
    pub t_exit: usize,
    /// True iff the loop broke on an honored exit gate.
    pub exited_via_gate: bool,
    pub rewards: TrajectoryRewards,
    pub wall_clock_ms: u64,
}

impl Trajectory {
    /// Number of memory turns processed.
    pub fn turn_count(&self) -> usize {
        self.turns.len()
    }
}

/// A group of trajectories rolled out for the same task over the same
/// chunking; the baseline population for relative advantages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupBatch {
    pub task_id: String,
    pub trajectories: Vec<Trajectory>,
}

impl GroupBatch {
    /// Builds a batch, checking that all trajectories belong to one task.
    pub fn new(trajectories: Vec<Trajectory>) -> Result<Self, GroupBatchError> {
        let first = trajectories.first().ok_or(GroupBatchError::Empty)?;
        let task_id = first.task_id.clone();
        if let Some(stray) = trajectories.iter().find(|t| t.task_id != task_id) {
            return Err(GroupBatchError::MixedTasks {
                expected: task_id,
                found: stray.task_id.clone(),
            });
        }
        Ok(GroupBatch {
            task_id,
            trajectories,
        })
    }

    pub fn group_size(&self) -> usize {
        self.trajectories.len()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GroupBatchError {
    #[error("group batch must contain at least one trajectory")]
    Empty,
    #[error("group batch mixes tasks: expected {expected}, found {found}")]
    MixedTasks { expected: String, found: String },
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_task() -> Task {
        Task {
            id: "t1".into(),
            question: "What is the special magic uuid for steady-harbor mentioned in the provided text?".into(),
            documents: vec![
                "Filler paragraph one. ".into(),
                "One of the special magic uuids for steady-harbor is: 00000000-0000-4000-8000-000000000001. ".into(),
                "Filler paragraph two.".into(),
            ],
            gold_answers: BTreeSet::from(["00000000-0000-4000-8000-000000000001".to_string()]),
            evidence_marks: vec![EvidenceMark {
                document_index: 1,
                needle_id: "n0".into(),
            }],
            task_kind: TaskKind::SK1,
            requires_full_scan: false,
        }
    }

    #[test]
    fn valid_task_has_no_violations() {
        assert!(validate_task(&sample_task()).is_empty());
    }

    #[test]
    fn empty_gold_answers_is_reported() {
        let mut task = sample_task();
        task.gold_answers.clear();
        let violations = validate_task(&task);
        assert_eq!(violations, vec!["gold_answers empty".to_string()]);
    }

    #[test]
    fn out_of_range_evidence_mark_is_reported() {
        let mut task = sample_task();
        task.evidence_marks.push(EvidenceMark {
            document_index: 99,
            needle_id: "n9".into(),
        });
        let violations = validate_task(&task);
        assert_eq!(violations.len(), 1);
        assert!(violations[0].starts_with("evidence_mark out of range"));
    }

    #[test]
    fn non_external_task_requires_evidence_marks() {
        let mut task = sample_task();
        task.evidence_marks.clear();
        let violations = validate_task(&task);
        assert_eq!(
            violations,
            vec!["evidence_marks empty for non-EXTERNAL task".to_string()]
        );
        task.task_kind = TaskKind::External;
        assert!(validate_task(&task).is_empty());
    }

    #[test]
    fn task_json_round_trip() {
        let task = sample_task();
        let encoded = serde_json::to_string(&task).unwrap();
        let decoded: Task = serde_json::from_str(&encoded).unwrap();
        assert_eq!(task, decoded);
    }

    #[test]
    fn task_kind_serializes_to_bare_names() {
        assert_eq!(serde_json::to_string(&TaskKind::SK1).unwrap(), "\"SK1\"");
        assert_eq!(
            serde_json::to_string(&TaskKind::External).unwrap(),
            "\"EXTERNAL\""
        );
    }

    fn turn_strategy() -> impl Strategy<Value = TurnRecord> {
        (
            1usize..20,
            ".{0,30}",
            any::<bool>(),
            any::<bool>(),
            any::<bool>(),
        )
            .prop_map(
                |(t, text, update_flag, exit_flag, well_formed)| TurnRecord {
                    t,
                    chunk_index: t,
                    memory_in: text.clone(),
                    output: TurnOutput {
                        think: text.clone(),
                        update_flag,
                        candidate_memory: text.clone(),
                        exit_flag,
                        raw: text.clone(),
                        well_formed,
                    },
                    memory_out: text,
                    update_reward: update_flag.then_some(1.0),
                },
            )
    }

    fn trajectory_strategy() -> impl Strategy<Value = Trajectory> {
        (
            "[a-z0-9-]{1,12}",
            proptest::collection::vec(turn_strategy(), 1..6),
            proptest::option::of(".{0,20}"),
            any::<bool>(),
            proptest::option::of(-1.0f64..2.0),
        )
            .prop_map(
                |(task_id, turns, answer, exited_via_gate, reward)| Trajectory {
                    task_id,
                    t_exit: turns.len() + 1,
                    turns,
                    answer_raw: answer.clone().unwrap_or_default(),
                    answer_extracted: answer,
                    exited_via_gate,
                    rewards: TrajectoryRewards {
                        outcome: reward.map(|r| r.floor().clamp(0.0, 1.0)),
                        exit: reward,
                        format: None,
                        trajectory: reward,
                    },
                    wall_clock_ms: 17,
                },
            )
    }

    proptest! {
        #[test]
        fn trajectory_json_round_trip(trajectory in trajectory_strategy()) {
            let encoded = serde_json::to_string(&trajectory).unwrap();
            let decoded: Trajectory = serde_json::from_str(&encoded).unwrap();
            prop_assert_eq!(trajectory, decoded);
        }
    }

    #[test]
    fn trajectory_json_uses_the_documented_field_names() {
        let trajectory = Trajectory {
            task_id: "t".into(),
            turns: vec![],
            answer_raw: "r".into(),
            answer_extracted: None,
            t_exit: 1,
            exited_via_gate: false,
            rewards: TrajectoryRewards::default(),
            wall_clock_ms: 0,
        };
        let value: serde_json::Value = serde_json::to_value(&trajectory).unwrap();
        for field in [
            "task_id",
            "turns",
            "answer_raw",
            "answer_extracted",
            "t_exit",
            "exited_via_gate",
            "rewards",
            "wall_clock_ms",
        ] {
            assert!(value.get(field).is_some(), "missing field {field}");
        }
        assert!(
            value["answer_extracted"].is_null(),
            "unset serializes as null"
        );
        assert!(value["rewards"]["outcome"].is_null());
    }

    #[test]
    fn group_batch_rejects_mixed_tasks() {
        let traj = |task_id: &str| Trajectory {
            task_id: task_id.into(),
            turns: vec![],
            answer_raw: String::new(),
            answer_extracted: None,
            t_exit: 1,
            exited_via_gate: false,
            rewards: TrajectoryRewards::default(),
            wall_clock_ms: 0,
        };
        assert!(GroupBatch::new(vec![traj("a"), traj("a")]).is_ok());
        assert!(matches!(
            GroupBatch::new(vec![traj("a"), traj("b")]),
            Err(GroupBatchError::MixedTasks { .. })
        ));
        assert!(matches!(
            GroupBatch::new(vec![]),
            Err(GroupBatchError::Empty)
        ));
    }
}
