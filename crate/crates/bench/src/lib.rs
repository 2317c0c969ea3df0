//! Sample-data builders shared by the pipeline benchmarks.

use gatedmem_core::taskgen::{generate, GenSpec};
use gatedmem_core::types::{
    GroupBatch, Task, TaskKind, Trajectory, TrajectoryRewards, TurnOutput, TurnRecord,
};
use gatedmem_core::TokenStats;

/// A generated single-needle task with roughly `tokens` planner tokens.
pub fn sample_task(tokens: usize, seed: u64) -> Task {
    generate(&GenSpec::for_kind(TaskKind::SK1, tokens, seed)).expect("sample task generates")
}

/// A rollout group with attached rewards, `group_size` trajectories of
/// `turns` memory turns each.
pub fn sample_batch(group_size: usize, turns: usize) -> GroupBatch {
    let trajectories = (0..group_size)
        .map(|g| Trajectory {
            task_id: "bench".into(),
            turns: (1..=turns)
                .map(|t| TurnRecord {
                    t,
                    chunk_index: t,
                    memory_in: String::new(),
                    output: TurnOutput {
                        think: String::new(),
                        update_flag: (g + t) % 3 == 0,
                        candidate_memory: String::new(),
                        exit_flag: false,
                        raw: String::new(),
                        well_formed: true,
                    },
                    memory_out: String::new(),
                    update_reward: Some(if (g + t) % 3 == 0 { 1.0 } else { -1.0 }),
                })
                .collect(),
            answer_raw: String::new(),
            answer_extracted: None,
            t_exit: turns + 1,
            exited_via_gate: false,
            rewards: TrajectoryRewards {
                outcome: Some(f64::from(g as u32 % 2)),
                exit: Some(-0.5),
                format: Some(1.0),
                trajectory: Some(f64::from(g as u32 % 2) + 0.5),
            },
            wall_clock_ms: 0,
        })
        .collect();
    GroupBatch::new(trajectories).expect("uniform task ids")
}

/// A flat token batch for the objective benchmark.
pub fn sample_tokens(count: usize) -> Vec<TokenStats> {
    (0..count)
        .map(|i| TokenStats {
            ratio_rho: 0.5 + (i % 100) as f64 / 64.0,
            advantage: ((i % 17) as f64 - 8.0) / 8.0,
            kl_term: (i % 7) as f64 / 100.0,
        })
        .collect()
}
