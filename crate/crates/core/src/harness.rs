//! Evaluation harness: run task suites through the engine, compute the
//! gating and efficiency measurements, and assemble machine-readable reports.
//!
//! Evaluation is single-pass (one trajectory per task); group rollouts exist
//! separately for advantage studies. Reports are deterministic given seeded
//! agents, apart from wall-clock fields.

use crate::agents::AgentFactory;
use crate::chunking::{plan_chunks, ChunkPlan, TokenCounter};
use crate::engine::{
    memory_token_series, run_trajectory_with_templates, EngineConfig, EngineError,
};
use crate::protocol::PromptTemplate;
use crate::rewards::{score_trajectory, RewardConfig};
use crate::types::{Task, Trajectory};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Exit classification of one trajectory against the last-evidence turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExitClass {
    #[serde(rename = "EARLY")]
    Early,
    #[serde(rename = "EXACT")]
    Exact,
    #[serde(rename = "LATE")]
    Late,
    /// Exit undefined: full-scan tasks have no meaningful exit position.
    #[serde(rename = "NA")]
    Na,
}

/// Per-task evaluation row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub task_id: String,
    pub correct: bool,
    pub turns: usize,
    pub t_exit: usize,
    pub exit_class: ExitClass,
    pub wall_clock_ms: u64,
    pub memory_series: Vec<usize>,
}

/// Suite-level aggregates. Fractions whose denominator can be empty (no
/// evidence-present turns, all-NA exits) are `null` rather than fabricated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub accuracy: f64,
    pub mean_turns: f64,
    pub mean_wall_clock_ms: f64,
    pub update_acc_evidence_present: Option<f64>,
    pub update_acc_evidence_free: Option<f64>,
    pub exact_exit_ratio: Option<f64>,
    pub early_exit_ratio: Option<f64>,
    pub late_exit_ratio: Option<f64>,
    pub mean_exit_deviation: Option<f64>,
    pub mean_abs_exit_deviation: Option<f64>,
    pub format_ok_ratio: f64,
    pub excluded_tasks: usize,
}

/// Settings echo and provenance notes carried with every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub agent: String,
    pub engine: EngineConfig,
    pub rewards: RewardConfig,
    /// What the wall-clock fields span.
    pub timing_boundary: String,
}

/// A task excluded from aggregates by an agent or planning failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedTask {
    pub task_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metadata: ReportMetadata,
    pub per_task: Vec<TaskResult>,
    pub aggregate: Aggregate,
    pub excluded: Vec<ExcludedTask>,
}

impl EvalReport {
    /// Zeroes every wall-clock field, for byte-stable comparisons.
    pub fn redact_wall_clock(&mut self) {
        for row in &mut self.per_task {
            row.wall_clock_ms = 0;
        }
        self.aggregate.mean_wall_clock_ms = 0.0;
    }
}

/// A finished evaluation: the report plus the raw trajectories behind it,
/// aligned with `report.per_task`.
#[derive(Debug)]
pub struct EvalRun {
    pub report: EvalReport,
    pub trajectories: Vec<Trajectory>,
}

/// Both inference modes over the same tasks, with the turn-count efficiency
/// ratio between them.
#[derive(Debug)]
pub struct ModeComparison {
    pub with_eg: EvalRun,
    pub no_eg: EvalRun,
    pub turn_savings_ratio: f64,
}

/// The serializable slice of a mode comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub with_eg: EvalReport,
    pub no_eg: EvalReport,
    pub turn_savings_ratio: f64,
}

impl ModeComparison {
    pub fn report(&self) -> CompareReport {
        CompareReport {
            with_eg: self.with_eg.report.clone(),
            no_eg: self.no_eg.report.clone(),
            turn_savings_ratio: self.turn_savings_ratio,
        }
    }
}

/// One row of the memory-dynamics table: mean memory size at a turn index
/// for one agent label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsRow {
    pub label: String,
    pub turn: usize,
    pub mean_memory_tokens: f64,
    pub trajectories: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("no tasks to evaluate")]
    EmptyBatch,
    #[error("all {excluded} tasks failed; first error: {first}")]
    AllTasksFailed { excluded: usize, first: String },
    #[error("task {0} requires a full scan and cannot run under the exit gate")]
    FullScanWithGate(String),
    #[error("worker pool: {0}")]
    Pool(String),
}

struct TaskOutcome {
    result: TaskResult,
    trajectory: Trajectory,
    evidence_turns: (usize, usize),
    free_turns: (usize, usize),
    exit_deviation: Option<i64>,
    format_ok: bool,
}

fn classify_exit(task: &Task, plan: &ChunkPlan, t_exit: usize) -> (ExitClass, Option<i64>) {
    if task.requires_full_scan {
        return (ExitClass::Na, None);
    }
    let t_last = plan.t_last_evidence().unwrap_or(plan.total_chunks);
    let deviation = t_exit as i64 - t_last as i64;
    let class = match deviation.cmp(&0) {
        std::cmp::Ordering::Less => ExitClass::Early,
        std::cmp::Ordering::Equal => ExitClass::Exact,
        std::cmp::Ordering::Greater => ExitClass::Late,
    };
    (class, Some(deviation))
}

fn run_task(
    task: &Task,
    factory: &dyn AgentFactory,
    engine_cfg: &EngineConfig,
    reward_cfg: &RewardConfig,
    templates: &PromptTemplate,
) -> Result<TaskOutcome, String> {
    let plan = plan_chunks(task, engine_cfg.chunk_size_s).map_err(|e| e.to_string())?;
    let (memory_agent, answer_agent) = factory.agents(task, &plan, 0).map_err(|e| e.to_string())?;
    let mut trajectory = run_trajectory_with_templates(
        task,
        &plan,
        &memory_agent,
        &answer_agent,
        engine_cfg,
        templates,
    )
    .map_err(|e: EngineError| e.to_string())?;
    score_trajectory(&mut trajectory, task, &plan, reward_cfg);

    let mut evidence_turns = (0usize, 0usize);
    let mut free_turns = (0usize, 0usize);
    for turn in &trajectory.turns {
        let Some(chunk) = plan.chunk(turn.chunk_index) else {
            continue;
        };
        let bucket = if chunk.contains_evidence {
            &mut evidence_turns
        } else {
            &mut free_turns
        };
        bucket.1 += 1;
        if turn.output.update_flag == chunk.contains_evidence {
            bucket.0 += 1;
        }
    }

    let (exit_class, exit_deviation) = classify_exit(task, &plan, trajectory.t_exit);
    let format_ok = trajectory.turns.iter().all(|t| t.output.well_formed)
        && trajectory.answer_extracted.is_some();
    let result = TaskResult {
        task_id: task.id.clone(),
        correct: trajectory.rewards.outcome == Some(1.0),
        turns: trajectory.turns.len(),
        t_exit: trajectory.t_exit,
        exit_class,
        wall_clock_ms: trajectory.wall_clock_ms,
        memory_series: memory_token_series(&trajectory, TokenCounter::Words),
    };
    Ok(TaskOutcome {
        result,
        trajectory,
        evidence_turns,
        free_turns,
        exit_deviation,
        format_ok,
    })
}

fn ratio(n: usize, d: usize) -> Option<f64> {
    (d > 0).then(|| n as f64 / d as f64)
}

/// Evaluates every task once and aggregates the suite metrics. Tasks run
/// concurrently up to `workers` threads (0 uses the default pool); per-task
/// failures are excluded from aggregates and counted.
pub fn evaluate(
    tasks: &[Task],
    factory: &dyn AgentFactory,
    engine_cfg: &EngineConfig,
    reward_cfg: &RewardConfig,
    workers: usize,
) -> Result<EvalRun, HarnessError> {
    evaluate_with_templates(
        tasks,
        factory,
        engine_cfg,
        reward_cfg,
        workers,
        PromptTemplate::embedded(),
    )
}

/// As [`evaluate`], with explicit prompt templates.
pub fn evaluate_with_templates(
    tasks: &[Task],
    factory: &dyn AgentFactory,
    engine_cfg: &EngineConfig,
    reward_cfg: &RewardConfig,
    workers: usize,
    templates: &PromptTemplate,
) -> Result<EvalRun, HarnessError> {
    if tasks.is_empty() {
        return Err(HarnessError::EmptyBatch);
    }
    let run_all = || -> Vec<(usize, Result<TaskOutcome, String>)> {
        tasks
            .par_iter()
            .enumerate()
            .map(|(i, task)| {
                (
                    i,
                    run_task(task, factory, engine_cfg, reward_cfg, templates),
                )
            })
            .collect()
    };
    let outcomes = if workers == 0 {
        run_all()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| HarnessError::Pool(e.to_string()))?
            .install(run_all)
    };

    let mut per_task = Vec::new();
    let mut trajectories = Vec::new();
    let mut excluded = Vec::new();
    let mut evidence_turns = (0usize, 0usize);
    let mut free_turns = (0usize, 0usize);
    let mut deviations: Vec<i64> = Vec::new();
    let mut exit_counts = (0usize, 0usize, 0usize); // early, exact, late
    let mut format_ok_count = 0usize;

    for (i, outcome) in outcomes {
        match outcome {
            Ok(outcome) => {
                evidence_turns.0 += outcome.evidence_turns.0;
                evidence_turns.1 += outcome.evidence_turns.1;
                free_turns.0 += outcome.free_turns.0;
                free_turns.1 += outcome.free_turns.1;
                if let Some(d) = outcome.exit_deviation {
                    deviations.push(d);
                }
                match outcome.result.exit_class {
                    ExitClass::Early => exit_counts.0 += 1,
                    ExitClass::Exact => exit_counts.1 += 1,
                    ExitClass::Late => exit_counts.2 += 1,
                    ExitClass::Na => {}
                }
                if outcome.format_ok {
                    format_ok_count += 1;
                }
                per_task.push(outcome.result);
                trajectories.push(outcome.trajectory);
            }
            Err(error) => excluded.push(ExcludedTask {
                task_id: tasks[i].id.clone(),
                error,
            }),
        }
    }

    let included = per_task.len();
    if included == 0 {
        return Err(HarnessError::AllTasksFailed {
            excluded: excluded.len(),
            first: excluded
                .first()
                .map(|e| format!("{}: {}", e.task_id, e.error))
                .unwrap_or_default(),
        });
    }
    let classified = exit_counts.0 + exit_counts.1 + exit_counts.2;
    let aggregate = Aggregate {
        accuracy: per_task.iter().filter(|r| r.correct).count() as f64 / included as f64,
        mean_turns: per_task.iter().map(|r| r.turns).sum::<usize>() as f64 / included as f64,
        mean_wall_clock_ms: per_task.iter().map(|r| r.wall_clock_ms).sum::<u64>() as f64
            / included as f64,
        update_acc_evidence_present: ratio(evidence_turns.0, evidence_turns.1),
        update_acc_evidence_free: ratio(free_turns.0, free_turns.1),
        early_exit_ratio: ratio(exit_counts.0, classified),
        exact_exit_ratio: ratio(exit_counts.1, classified),
        late_exit_ratio: ratio(exit_counts.2, classified),
        mean_exit_deviation: (!deviations.is_empty())
            .then(|| deviations.iter().sum::<i64>() as f64 / deviations.len() as f64),
        mean_abs_exit_deviation: (!deviations.is_empty()).then(|| {
            deviations.iter().map(|d| d.unsigned_abs()).sum::<u64>() as f64
                / deviations.len() as f64
        }),
        format_ok_ratio: format_ok_count as f64 / included as f64,
        excluded_tasks: excluded.len(),
    };

    Ok(EvalRun {
        report: EvalReport {
            metadata: ReportMetadata {
                agent: factory.label().to_string(),
                engine: engine_cfg.clone(),
                rewards: *reward_cfg,
                timing_boundary:
                    "wall_clock_ms spans the full trajectory: prompt rendering, agent calls, and parsing"
                        .to_string(),
            },
            per_task,
            aggregate,
            excluded,
        },
        trajectories,
    })
}

/// Runs both inference modes over the same tasks with the same agent
/// determinism. Refuses full-scan tasks, which cannot run under the gate.
pub fn compare_modes(
    tasks: &[Task],
    factory: &dyn AgentFactory,
    engine_cfg: &EngineConfig,
    reward_cfg: &RewardConfig,
    workers: usize,
) -> Result<ModeComparison, HarnessError> {
    compare_modes_with_templates(
        tasks,
        factory,
        engine_cfg,
        reward_cfg,
        workers,
        PromptTemplate::embedded(),
    )
}

/// As [`compare_modes`], with explicit prompt templates.
pub fn compare_modes_with_templates(
    tasks: &[Task],
    factory: &dyn AgentFactory,
    engine_cfg: &EngineConfig,
    reward_cfg: &RewardConfig,
    workers: usize,
    templates: &PromptTemplate,
) -> Result<ModeComparison, HarnessError> {
    if let Some(task) = tasks.iter().find(|t| t.requires_full_scan) {
        return Err(HarnessError::FullScanWithGate(task.id.clone()));
    }
    let gated_cfg = EngineConfig {
        use_exit_gate: true,
        ..engine_cfg.clone()
    };
    let ungated_cfg = EngineConfig {
        use_exit_gate: false,
        ..engine_cfg.clone()
    };
    let with_eg =
        evaluate_with_templates(tasks, factory, &gated_cfg, reward_cfg, workers, templates)?;
    let no_eg =
        evaluate_with_templates(tasks, factory, &ungated_cfg, reward_cfg, workers, templates)?;
    let turn_savings_ratio =
        no_eg.report.aggregate.mean_turns / with_eg.report.aggregate.mean_turns;
    Ok(ModeComparison {
        with_eg,
        no_eg,
        turn_savings_ratio,
    })
}

/// Mean memory size per turn index, per agent label. Trajectories shorter
/// than a turn index simply drop out of that row's mean.
pub fn memory_dynamics_report(
    groups: &[(String, Vec<Trajectory>)],
    counter: TokenCounter,
) -> Vec<DynamicsRow> {
    let mut rows = Vec::new();
    for (label, trajectories) in groups {
        let series: Vec<Vec<usize>> = trajectories
            .iter()
            .map(|t| memory_token_series(t, counter))
            .collect();
        let longest = series.iter().map(Vec::len).max().unwrap_or(0);
        for turn in 1..=longest {
            let present: Vec<usize> = series
                .iter()
                .filter_map(|s| s.get(turn - 1).copied())
                .collect();
            if present.is_empty() {
                continue;
            }
            rows.push(DynamicsRow {
                label: label.clone(),
                turn,
                mean_memory_tokens: present.iter().sum::<usize>() as f64 / present.len() as f64,
                trajectories: present.len(),
            });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{ExploderFactory, NoisyFactory, OracleFactory, SimulatorScript};
    use crate::taskgen::{generate_suite, SuiteSpec};
    use crate::types::TaskKind;

    fn engine_cfg() -> EngineConfig {
        EngineConfig {
            chunk_size_s: 500,
            record_wall_clock: false,
            ..EngineConfig::default()
        }
    }

    fn small_suite(kind: TaskKind, n: usize, seed: u64) -> Vec<Task> {
        let (tasks, _) = generate_suite(&SuiteSpec::new(vec![kind], vec![3000], n, seed)).unwrap();
        tasks
    }

    #[test]
    fn oracle_suite_scores_perfectly() {
        let tasks = small_suite(TaskKind::SK1, 8, 42);
        let run = evaluate(
            &tasks,
            &OracleFactory,
            &engine_cfg(),
            &RewardConfig::default(),
            0,
        )
        .unwrap();
        let agg = &run.report.aggregate;
        assert_eq!(agg.accuracy, 1.0);
        assert_eq!(agg.exact_exit_ratio, Some(1.0));
        assert_eq!(agg.update_acc_evidence_present, Some(1.0));
        assert_eq!(agg.update_acc_evidence_free, Some(1.0));
        assert_eq!(agg.format_ok_ratio, 1.0);
        assert_eq!(agg.excluded_tasks, 0);
        assert_eq!(agg.mean_exit_deviation, Some(0.0));
        // Oracle trajectories score the full (outcome, exit, format) triplet.
        for trajectory in &run.trajectories {
            assert_eq!(trajectory.rewards.outcome, Some(1.0));
            assert_eq!(trajectory.rewards.exit, Some(0.0));
            assert_eq!(trajectory.rewards.format, Some(1.0));
            assert_eq!(trajectory.rewards.trajectory, Some(2.0));
        }
    }

    #[test]
    fn oracle_solves_every_generated_kind() {
        for kind in [
            TaskKind::SK1,
            TaskKind::SK2,
            TaskKind::SK3,
            TaskKind::MK1,
            TaskKind::MK2,
            TaskKind::MK3,
            TaskKind::MQ,
            TaskKind::MV,
        ] {
            let tasks = small_suite(kind, 2, 31);
            let run = evaluate(
                &tasks,
                &OracleFactory,
                &engine_cfg(),
                &RewardConfig::default(),
                0,
            )
            .unwrap();
            assert_eq!(run.report.aggregate.accuracy, 1.0, "{kind}");
        }
    }

    #[test]
    fn accuracy_equals_mean_outcome_reward() {
        let tasks = small_suite(TaskKind::SK1, 6, 7);
        let script = SimulatorScript {
            update_error_rate: 0.4,
            exit_error_rate: 0.4,
            seed: 1,
            ..Default::default()
        };
        let run = evaluate(
            &tasks,
            &NoisyFactory { script },
            &engine_cfg(),
            &RewardConfig::default(),
            0,
        )
        .unwrap();
        let mean_outcome: f64 = run
            .trajectories
            .iter()
            .map(|t| t.rewards.outcome.unwrap())
            .sum::<f64>()
            / run.trajectories.len() as f64;
        assert!((run.report.aggregate.accuracy - mean_outcome).abs() < 1e-12);
    }

    #[test]
    fn exit_ratios_partition_for_noisy_agents() {
        let tasks = small_suite(TaskKind::SK1, 12, 9);
        let script = SimulatorScript {
            exit_error_rate: 0.3,
            seed: 2,
            ..Default::default()
        };
        let run = evaluate(
            &tasks,
            &NoisyFactory { script },
            &engine_cfg(),
            &RewardConfig::default(),
            0,
        )
        .unwrap();
        let agg = &run.report.aggregate;
        let total = agg.early_exit_ratio.unwrap()
            + agg.exact_exit_ratio.unwrap()
            + agg.late_exit_ratio.unwrap();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(agg.exact_exit_ratio.unwrap() < 1.0);
    }

    #[test]
    fn empty_task_list_is_an_error() {
        assert!(matches!(
            evaluate(
                &[],
                &OracleFactory,
                &engine_cfg(),
                &RewardConfig::default(),
                0
            ),
            Err(HarnessError::EmptyBatch)
        ));
    }

    #[test]
    fn mv_tasks_classify_as_na_and_stay_out_of_ratios() {
        let tasks = small_suite(TaskKind::MV, 4, 13);
        let run = evaluate(
            &tasks,
            &OracleFactory,
            &engine_cfg(),
            &RewardConfig::default(),
            0,
        )
        .unwrap();
        assert!(run
            .report
            .per_task
            .iter()
            .all(|r| r.exit_class == ExitClass::Na));
        assert_eq!(run.report.aggregate.exact_exit_ratio, None);
        assert_eq!(run.report.aggregate.accuracy, 1.0, "oracle still solves MV");
    }

    #[test]
    fn compare_modes_rejects_full_scan_tasks() {
        let tasks = small_suite(TaskKind::MV, 2, 3);
        assert!(matches!(
            compare_modes(
                &tasks,
                &OracleFactory,
                &engine_cfg(),
                &RewardConfig::default(),
                0
            ),
            Err(HarnessError::FullScanWithGate(_))
        ));
    }

    #[test]
    fn gated_mode_is_a_prefix_and_saves_turns() {
        let (tasks, _) = generate_suite(&SuiteSpec {
            evidence_position_cap: 0.3,
            ..SuiteSpec::new(vec![TaskKind::SK1], vec![3000], 8, 21)
        })
        .unwrap();
        let comparison = compare_modes(
            &tasks,
            &OracleFactory,
            &engine_cfg(),
            &RewardConfig::default(),
            0,
        )
        .unwrap();
        assert!(comparison.turn_savings_ratio > 1.0);
        for (gated, ungated) in comparison
            .with_eg
            .trajectories
            .iter()
            .zip(&comparison.no_eg.trajectories)
        {
            assert!(crate::engine::audit_prefix(gated, ungated).is_empty());
        }
    }

    #[test]
    fn uniform_placement_saves_about_half_the_turns() {
        // A single needle placed uniformly sits halfway through the context
        // in expectation, so exact exits roughly halve the processed turns.
        let (tasks, _) =
            generate_suite(&SuiteSpec::new(vec![TaskKind::SK1], vec![4000], 32, 63)).unwrap();
        let comparison = compare_modes(
            &tasks,
            &OracleFactory,
            &engine_cfg(),
            &RewardConfig::default(),
            0,
        )
        .unwrap();
        assert!(
            (1.5..=3.0).contains(&comparison.turn_savings_ratio),
            "expected a ratio near 2, got {:.2}",
            comparison.turn_savings_ratio
        );
    }

    #[test]
    fn determinism_modulo_wall_clock() {
        let tasks = small_suite(TaskKind::MK1, 4, 55);
        let cfg = EngineConfig {
            record_wall_clock: true,
            ..engine_cfg()
        };
        let mut a = evaluate(&tasks, &OracleFactory, &cfg, &RewardConfig::default(), 2)
            .unwrap()
            .report;
        let mut b = evaluate(&tasks, &OracleFactory, &cfg, &RewardConfig::default(), 2)
            .unwrap()
            .report;
        a.redact_wall_clock();
        b.redact_wall_clock();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn dynamics_report_aligns_by_turn() {
        let tasks = small_suite(TaskKind::SK1, 3, 77);
        let cfg = EngineConfig {
            use_exit_gate: false,
            ..engine_cfg()
        };
        let oracle = evaluate(&tasks, &OracleFactory, &cfg, &RewardConfig::default(), 0).unwrap();
        let exploder = evaluate(
            &tasks,
            &ExploderFactory { cap_tokens: 64 },
            &cfg,
            &RewardConfig::default(),
            0,
        )
        .unwrap();
        let rows = memory_dynamics_report(
            &[
                ("oracle".to_string(), oracle.trajectories),
                ("exploder".to_string(), exploder.trajectories),
            ],
            TokenCounter::Words,
        );
        assert!(rows.iter().any(|r| r.label == "oracle"));
        assert!(rows.iter().any(|r| r.label == "exploder"));
        let exploder_last = rows.iter().rfind(|r| r.label == "exploder").unwrap();
        assert!(exploder_last.mean_memory_tokens >= 63.0, "reaches the cap");
        // One row per (label, turn) with a full population at turn 1.
        let turn1 = rows
            .iter()
            .find(|r| r.label == "oracle" && r.turn == 1)
            .unwrap();
        assert_eq!(turn1.trajectories, 3);
    }
}
