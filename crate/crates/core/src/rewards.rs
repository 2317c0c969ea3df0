//! The four reward signals and the combined trajectory-level reward.
//!
//! Update gates earn +1/-1 per turn against the chunk's evidence flag. The
//! exit reward compares the exit turn with the last-evidence turn: early
//! exits lose more (-0.75) than late ones (-0.5) because they forfeit
//! evidence, and an exact exit costs nothing. Format is all-or-nothing over
//! every emission of the trajectory, answer turn included.

use crate::chunking::ChunkPlan;
use crate::types::{Chunk, Task, TaskKind, Trajectory, TrajectoryRewards, TurnRecord};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Reward constants. The defaults are the canonical values; overriding them
/// is supported for ablations and echoed into run metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub exit_early_penalty: f64,
    pub exit_late_penalty: f64,
    pub exit_exact: f64,
    pub update_correct: f64,
    pub update_incorrect: f64,
    pub format_ok: f64,
    pub format_bad: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            exit_early_penalty: -0.75,
            exit_late_penalty: -0.5,
            exit_exact: 0.0,
            update_correct: 1.0,
            update_incorrect: -1.0,
            format_ok: 1.0,
            format_bad: 0.0,
        }
    }
}

/// Canonical answer form: case-folded, surrounding punctuation stripped,
/// article tokens (a/an/the) dropped, whitespace collapsed.
///
/// Gold answers are stored already normalized so scoring reduces to string
/// comparison plus the numeric-prefix rule in [`answers_match`].
pub fn normalize_answer(text: &str) -> String {
    let lowered = text.to_lowercase();
    let trimmed = lowered.trim_matches(|c: char| !c.is_alphanumeric());
    trimmed
        .split_whitespace()
        .filter(|word| !matches!(*word, "a" | "an" | "the"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn leading_numeric_token(normalized: &str) -> Option<&str> {
    let first = normalized.split_whitespace().next()?;
    let mut chars = first.chars();
    let head = chars.next()?;
    if head.is_ascii_digit() && chars.all(|c| c.is_ascii_digit() || c == ',' || c == '.') {
        Some(first)
    } else {
        None
    }
}

/// Whether a normalized prediction matches a normalized gold answer.
/// Accepts an exact match, or equality with the gold's leading numeric token
/// (so "276,170" matches "276,170 inhabitants").
pub fn answers_match(prediction: &str, gold: &str) -> bool {
    if prediction == gold {
        return true;
    }
    leading_numeric_token(gold).is_some_and(|token| prediction == token)
}

/// Outcome reward: 1 iff the prediction is equivalent to the gold answer.
///
/// Multi-answer kinds (MQ, MV) treat the prediction as a comma-separated set
/// and require set equality; everything else matches any single gold element.
/// An absent prediction scores 0.
pub fn outcome_reward(
    predicted: Option<&str>,
    gold_answers: &BTreeSet<String>,
    task_kind: TaskKind,
) -> f64 {
    let Some(predicted) = predicted else {
        return 0.0;
    };
    let correct = if task_kind.is_multi_answer() {
        let predictions: BTreeSet<String> = predicted
            .split(',')
            .map(normalize_answer)
            .filter(|p| !p.is_empty())
            .collect();
        predictions.len() == gold_answers.len()
            && gold_answers
                .iter()
                .all(|g| predictions.iter().any(|p| answers_match(p, g)))
            && predictions
                .iter()
                .all(|p| gold_answers.iter().any(|g| answers_match(p, g)))
    } else {
        let prediction = normalize_answer(predicted);
        gold_answers.iter().any(|g| answers_match(&prediction, g))
    };
    if correct {
        1.0
    } else {
        0.0
    }
}

/// Per-turn update reward: correct gate status earns `update_correct`,
/// anything else `update_incorrect`. The turn must correspond to the chunk.
pub fn update_reward(turn: &TurnRecord, chunk: &Chunk, cfg: &RewardConfig) -> f64 {
    debug_assert_eq!(turn.chunk_index, chunk.index);
    if turn.output.update_flag == chunk.contains_evidence {
        cfg.update_correct
    } else {
        cfg.update_incorrect
    }
}

/// Exit reward from the exit turn and the last-evidence turn. The
/// never-exited sentinel (`T + 1`) classifies as late whenever evidence
/// exists before the end.
pub fn exit_reward(t_exit: usize, t_last_evidence: usize, cfg: &RewardConfig) -> f64 {
    match t_exit.cmp(&t_last_evidence) {
        std::cmp::Ordering::Less => cfg.exit_early_penalty,
        std::cmp::Ordering::Equal => cfg.exit_exact,
        std::cmp::Ordering::Greater => cfg.exit_late_penalty,
    }
}

/// Format reward: `format_ok` iff every memory turn is well-formed and the
/// answer emission carries a boxed answer, else `format_bad` for the whole
/// trajectory.
pub fn format_reward(trajectory: &Trajectory, cfg: &RewardConfig) -> f64 {
    let all_turns_ok = trajectory.turns.iter().all(|t| t.output.well_formed);
    if all_turns_ok && trajectory.answer_extracted.is_some() {
        cfg.format_ok
    } else {
        cfg.format_bad
    }
}

/// The trajectory-level reward shared by every conversation of the rollout.
pub fn trajectory_reward(outcome: f64, exit: f64, format: f64) -> f64 {
    outcome + exit + format
}

/// Attaches every reward component to a trajectory in place: per-turn update
/// rewards plus the outcome/exit/format/trajectory scalars.
///
/// Full-scan tasks leave the exit component unset (exiting is undefined for
/// them); the trajectory sum then covers outcome and format only.
pub fn score_trajectory(
    trajectory: &mut Trajectory,
    task: &Task,
    plan: &ChunkPlan,
    cfg: &RewardConfig,
) {
    for turn in &mut trajectory.turns {
        if let Some(chunk) = plan.chunk(turn.chunk_index) {
            turn.update_reward = Some(update_reward(turn, chunk, cfg));
        }
    }
    let outcome = outcome_reward(
        trajectory.answer_extracted.as_deref(),
        &task.gold_answers,
        task.task_kind,
    );
    // Evidence-free tasks treat running to the end as the exact exit.
    let t_last = plan.t_last_evidence().unwrap_or(plan.total_chunks);
    let exit = (!task.requires_full_scan).then(|| exit_reward(trajectory.t_exit, t_last, cfg));
    let format = format_reward(trajectory, cfg);
    trajectory.rewards = TrajectoryRewards {
        outcome: Some(outcome),
        exit,
        format: Some(format),
        trajectory: Some(trajectory_reward(outcome, exit.unwrap_or(0.0), format)),
    };
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::TurnOutput;
    use proptest::prelude::*;

    fn gold(values: &[&str]) -> BTreeSet<String> {
        values.iter().map(|v| v.to_string()).collect()
    }

    fn turn(update_flag: bool) -> TurnRecord {
        TurnRecord {
            t: 1,
            chunk_index: 1,
            memory_in: String::new(),
            output: TurnOutput {
                think: String::new(),
                update_flag,
                candidate_memory: String::new(),
                exit_flag: false,
                raw: String::new(),
                well_formed: true,
            },
            memory_out: String::new(),
            update_reward: None,
        }
    }

    fn chunk(contains_evidence: bool) -> Chunk {
        Chunk {
            index: 1,
            text: "x".into(),
            token_count: 1,
            contains_evidence,
            is_last_evidence: contains_evidence,
        }
    }

    #[test]
    fn outcome_matches_case_folded_answer() {
        assert_eq!(
            outcome_reward(Some("Animorphs"), &gold(&["animorphs"]), TaskKind::SK1),
            1.0
        );
    }

    #[test]
    fn outcome_accepts_the_numeric_core_of_the_gold() {
        assert_eq!(
            outcome_reward(
                Some("276,170"),
                &gold(&["276,170 inhabitants"]),
                TaskKind::External
            ),
            1.0
        );
        assert_eq!(
            outcome_reward(
                Some("484,157"),
                &gold(&["276,170 inhabitants"]),
                TaskKind::External
            ),
            0.0
        );
    }

    #[test]
    fn absent_prediction_scores_zero() {
        assert_eq!(
            outcome_reward(None, &gold(&["anything"]), TaskKind::SK1),
            0.0
        );
    }

    #[test]
    fn surrounding_punctuation_and_articles_are_ignored() {
        assert_eq!(normalize_answer("\"The Animorphs.\""), "animorphs");
        assert_eq!(normalize_answer("  a  quiet   place "), "quiet place");
        assert_eq!(
            normalize_answer("ac5f891e-ac5d-4d3b-b830-a7efe7cf807a."),
            "ac5f891e-ac5d-4d3b-b830-a7efe7cf807a"
        );
    }

    #[test]
    fn multi_answer_requires_set_equality() {
        let golds = gold(&["alpha", "beta"]);
        assert_eq!(
            outcome_reward(Some("beta, alpha"), &golds, TaskKind::MV),
            1.0
        );
        assert_eq!(outcome_reward(Some("alpha"), &golds, TaskKind::MV), 0.0);
        assert_eq!(
            outcome_reward(Some("alpha, beta, gamma"), &golds, TaskKind::MV),
            0.0
        );
        // Single-answer kinds only need one element to match.
        assert_eq!(outcome_reward(Some("alpha"), &golds, TaskKind::SK1), 1.0);
    }

    #[test]
    fn update_reward_follows_the_gate_truth_table() {
        let cfg = RewardConfig::default();
        assert_eq!(update_reward(&turn(true), &chunk(true), &cfg), 1.0);
        assert_eq!(update_reward(&turn(true), &chunk(false), &cfg), -1.0);
        assert_eq!(update_reward(&turn(false), &chunk(false), &cfg), 1.0);
        assert_eq!(update_reward(&turn(false), &chunk(true), &cfg), -1.0);
    }

    #[test]
    fn exit_reward_cases() {
        let cfg = RewardConfig::default();
        assert_eq!(exit_reward(3, 5, &cfg), -0.75);
        assert_eq!(exit_reward(4, 4, &cfg), 0.0);
        assert_eq!(exit_reward(6, 4, &cfg), -0.5);
        // Never-exited sentinel with T = 10: 11 > 4 classifies as late.
        assert_eq!(exit_reward(11, 4, &cfg), -0.5);
    }

    #[test]
    fn trajectory_reward_is_the_component_sum() {
        assert_eq!(trajectory_reward(1.0, 0.0, 1.0), 2.0);
        assert_eq!(trajectory_reward(0.0, -0.75, 1.0), 0.25);
        assert_eq!(trajectory_reward(1.0, -0.5, 0.0), 0.5);
    }

    #[test]
    fn format_reward_is_strict_over_all_turns_and_the_answer() {
        let cfg = RewardConfig::default();
        let mut trajectory = Trajectory {
            task_id: "t".into(),
            turns: vec![turn(true), turn(false)],
            answer_raw: "\\boxed{x}".into(),
            answer_extracted: Some("x".into()),
            t_exit: 3,
            exited_via_gate: false,
            rewards: TrajectoryRewards::default(),
            wall_clock_ms: 0,
        };
        assert_eq!(format_reward(&trajectory, &cfg), 1.0);

        trajectory.turns[1].output.well_formed = false;
        assert_eq!(format_reward(&trajectory, &cfg), 0.0);

        trajectory.turns[1].output.well_formed = true;
        trajectory.answer_extracted = None;
        assert_eq!(format_reward(&trajectory, &cfg), 0.0);
    }

    proptest! {
        #[test]
        fn exit_reward_is_zero_on_exact(t in 1usize..100) {
            prop_assert_eq!(exit_reward(t, t, &RewardConfig::default()), 0.0);
        }

        #[test]
        fn update_reward_is_symmetric_under_double_flip(
            update_flag in any::<bool>(),
            evidence in any::<bool>(),
        ) {
            let cfg = RewardConfig::default();
            let straight = update_reward(&turn(update_flag), &chunk(evidence), &cfg);
            let flipped = update_reward(&turn(!update_flag), &chunk(!evidence), &cfg);
            prop_assert_eq!(straight, flipped);
        }

        #[test]
        fn trajectory_reward_range_under_default_constants(
            outcome in prop_oneof![Just(0.0), Just(1.0)],
            exit in prop_oneof![Just(-0.75), Just(0.0), Just(-0.5)],
            format in prop_oneof![Just(0.0), Just(1.0)],
        ) {
            let total = trajectory_reward(outcome, exit, format);
            prop_assert!((-0.75..=2.0).contains(&total));
        }
    }
}
