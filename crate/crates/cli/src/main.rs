//! `gatedmem`: generate needle-retrieval task suites, run them through the
//! gated recurrent memory workflow, and report gating, efficiency, and
//! advantage measurements.
//!
//! Subcommands: `gen`, `eval`, `compare`, `advantage-report`, `dump-chunks`.
//! Exit codes: 0 success, 1 config/parse errors, 2 completed runs with
//! agent-failure exclusions.

mod config;
mod output;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use config::RunConfig;
use gatedmem_core::advantage::{blend, blended_turn_table, trajectory_advantages, BlendedTurnRow};
use gatedmem_core::agents::{
    AgentFactory, EndpointFactory, ExploderFactory, NoisyFactory, OracleFactory,
};
use gatedmem_core::chunking::{plan_chunks, plan_chunks_with, TokenCounter};
use gatedmem_core::engine::run_group;
use gatedmem_core::harness::{
    compare_modes_with_templates, evaluate_with_templates, memory_dynamics_report, EvalRun,
};
use gatedmem_core::io::{read_jsonl, write_jsonl};
use gatedmem_core::protocol::PromptTemplate;
use gatedmem_core::rewards::score_trajectory;
use gatedmem_core::taskgen::{generate_suite, FillerSource, SuiteSpec};
use gatedmem_core::types::{GroupBatch, Task, TaskKind, Trajectory};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "gatedmem",
    version,
    about = "Gated recurrent memory over long contexts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic task suite (tasks.jsonl + manifest.json).
    Gen(GenArgs),
    /// Evaluate tasks with one agent in one inference mode.
    Eval(EvalArgs),
    /// Evaluate tasks in both inference modes and report turn savings.
    Compare(CompareArgs),
    /// Compute per-turn advantage tables from grouped trajectory logs.
    AdvantageReport(AdvantageReportArgs),
    /// Write the chunk plans of tasks as JSON, for debugging.
    DumpChunks(DumpChunksArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Task kinds, comma separated (SK1 SK2 SK3 MK1 MK2 MK3 MQ MV).
    #[arg(long, value_delimiter = ',', required = true)]
    kind: Vec<String>,
    /// Context lengths, comma separated; K/M suffixes allowed (e.g. 112K).
    #[arg(long, value_delimiter = ',', required = true)]
    length: Vec<String>,
    /// Tasks per (kind, length) cell.
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Evidence position cap in (0, 1]; 0.2 confines needles to the first
    /// fifth of the documents.
    #[arg(long)]
    cap: Option<f64>,
    /// Filler source: ESSAY_CORPUS or LOREM.
    #[arg(long)]
    filler: Option<String>,
    /// Values per key (MV).
    #[arg(long)]
    needles: Option<usize>,
    /// Keys asked per question (MQ).
    #[arg(long)]
    queries: Option<usize>,
    /// Near-miss distractor needles (MK).
    #[arg(long)]
    distractors: Option<usize>,
    /// JSON config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum AgentChoice {
    Oracle,
    Noisy,
    Exploder,
    Endpoint,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Honor the exit gate (full-scan tasks still ignore it).
    WithExit,
    /// Record exit flags but never break the loop.
    NoExit,
}

#[derive(Args)]
struct EvalArgs {
    /// tasks.jsonl to evaluate.
    #[arg(long)]
    tasks: PathBuf,
    #[arg(long, value_enum)]
    agent: AgentChoice,
    /// Inference mode; defaults to with-exit (or the config file's setting).
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    out: PathBuf,
    /// Update-gate flip probability for the noisy agent.
    #[arg(long)]
    update_err: Option<f64>,
    /// Exit-gate flip probability for the noisy agent.
    #[arg(long)]
    exit_err: Option<f64>,
    /// Simulator seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = default pool).
    #[arg(long)]
    workers: Option<usize>,
    /// Chunk size in planner tokens.
    #[arg(long)]
    chunk_size: Option<usize>,
    /// Directory holding memory_agent.txt / answer_agent.txt overrides.
    #[arg(long)]
    prompt_dir: Option<PathBuf>,
    /// Rollouts per task; values above 1 write grouped trajectory logs for
    /// advantage-report.
    #[arg(long, default_value_t = 1)]
    groups: usize,
    /// Also write each task's chunk plan to chunks.json.
    #[arg(long)]
    dump_chunks: bool,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    tasks: PathBuf,
    #[arg(long, value_enum)]
    agent: AgentChoice,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    update_err: Option<f64>,
    #[arg(long)]
    exit_err: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    chunk_size: Option<usize>,
    #[arg(long)]
    prompt_dir: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct AdvantageReportArgs {
    /// Directory of grouped trajectory logs, one <task>.jsonl per group.
    #[arg(long)]
    groups: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Trajectory/turn blend weight.
    #[arg(long)]
    alpha: Option<f64>,
    /// Rewards/advantage metadata (any config JSON with those sections).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct DumpChunksArgs {
    #[arg(long)]
    tasks: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    chunk_size: Option<usize>,
    /// Token counter: words or chars4.
    #[arg(long)]
    counter: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    // Usage errors exit 1; exit code 2 is reserved for runs completed with
    // agent-failure exclusions.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Compare(args) => cmd_compare(args),
        Command::AdvantageReport(args) => cmd_advantage_report(args),
        Command::DumpChunks(args) => cmd_dump_chunks(args),
    }
}

fn parse_length(text: &str) -> Result<usize> {
    let upper = text.trim().to_ascii_uppercase();
    let (digits, scale) = if let Some(d) = upper.strip_suffix('K') {
        (d, 1_000usize)
    } else if let Some(d) = upper.strip_suffix('M') {
        (d, 1_000_000usize)
    } else {
        (upper.as_str(), 1usize)
    };
    let value: usize = digits
        .parse()
        .with_context(|| format!("invalid length: {text}"))?;
    Ok(value * scale)
}

fn parse_kinds(kinds: &[String]) -> Result<Vec<TaskKind>> {
    kinds
        .iter()
        .map(|k| k.parse::<TaskKind>().map_err(|e| anyhow!(e)))
        .collect()
}

fn ensure_out_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path)
        .with_context(|| format!("creating output directory {}", path.display()))
}

fn load_templates(prompt_dir: Option<&Path>) -> Result<PromptTemplate> {
    match prompt_dir {
        Some(dir) => Ok(PromptTemplate::from_dir(dir)?),
        None => Ok(PromptTemplate::embedded().clone()),
    }
}

fn build_factory(choice: AgentChoice, cfg: &RunConfig) -> Result<Box<dyn AgentFactory>> {
    Ok(match choice {
        AgentChoice::Oracle => Box::new(OracleFactory),
        AgentChoice::Noisy => Box::new(NoisyFactory {
            script: cfg.simulator,
        }),
        AgentChoice::Exploder => Box::new(ExploderFactory {
            cap_tokens: cfg.engine.max_memory_tokens,
        }),
        AgentChoice::Endpoint => Box::new(EndpointFactory::new(cfg.endpoint.clone())?),
    })
}

fn apply_sim_flags(
    cfg: &mut RunConfig,
    update_err: Option<f64>,
    exit_err: Option<f64>,
    seed: Option<u64>,
) {
    if let Some(rate) = update_err {
        cfg.simulator.update_error_rate = rate;
        cfg.mark_flag("simulator.update_error_rate");
    }
    if let Some(rate) = exit_err {
        cfg.simulator.exit_error_rate = rate;
        cfg.mark_flag("simulator.exit_error_rate");
    }
    if let Some(seed) = seed {
        cfg.simulator.seed = seed;
        cfg.mark_flag("simulator.seed");
    }
}

fn apply_run_flags(cfg: &mut RunConfig, workers: Option<usize>, chunk_size: Option<usize>) {
    if let Some(workers) = workers {
        cfg.workers = workers;
        cfg.mark_flag("workers");
    }
    if let Some(size) = chunk_size {
        cfg.engine.chunk_size_s = size;
        cfg.mark_flag("engine.chunk_size_s");
    }
}

// ---------------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------------

fn cmd_gen(args: GenArgs) -> Result<u8> {
    let mut cfg = RunConfig::load(args.config.as_deref())?;
    if let Some(cap) = args.cap {
        cfg.gen.evidence_position_cap = cap;
        cfg.mark_flag("gen.evidence_position_cap");
    }
    if let Some(filler) = &args.filler {
        cfg.gen.filler_source = filler.parse::<FillerSource>().map_err(|e| anyhow!(e))?;
        cfg.mark_flag("gen.filler_source");
    }
    if let Some(n) = args.needles {
        cfg.gen.num_needles = Some(n);
        cfg.mark_flag("gen.num_needles");
    }
    if let Some(n) = args.queries {
        cfg.gen.num_queries = Some(n);
        cfg.mark_flag("gen.num_queries");
    }
    if let Some(n) = args.distractors {
        cfg.gen.distractor_needles = Some(n);
        cfg.mark_flag("gen.distractor_needles");
    }
    cfg.validate()?;

    let suite = SuiteSpec {
        evidence_position_cap: cfg.gen.evidence_position_cap,
        filler_source: cfg.gen.filler_source,
        num_needles: cfg.gen.num_needles,
        num_queries: cfg.gen.num_queries,
        distractor_needles: cfg.gen.distractor_needles,
        ..SuiteSpec::new(
            parse_kinds(&args.kind)?,
            args.length
                .iter()
                .map(|l| parse_length(l))
                .collect::<Result<Vec<_>>>()?,
            args.n,
            args.seed,
        )
    };
    let (tasks, manifest) = generate_suite(&suite)?;

    ensure_out_dir(&args.out)?;
    write_jsonl(&args.out.join("tasks.jsonl"), &tasks)?;
    output::write_json_pretty(&args.out.join("manifest.json"), &manifest)?;
    cfg.write_effective(&args.out)?;
    println!(
        "gen: {} tasks across {} cells -> {}",
        tasks.len(),
        manifest.cells.len(),
        args.out.display()
    );
    Ok(0)
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ChunkDump<'a> {
    task_id: &'a str,
    plan: gatedmem_core::ChunkPlan,
}

fn write_eval_outputs(out: &Path, run: &EvalRun, label: &str) -> Result<()> {
    output::write_json_pretty(&out.join("report.json"), &run.report)?;
    let rows: Vec<_> = run.report.per_task.iter().map(|r| (None, r)).collect();
    output::write_metrics_csv(&out.join("metrics.csv"), &rows, false)?;
    let dynamics = memory_dynamics_report(
        &[(label.to_string(), run.trajectories.clone())],
        TokenCounter::Words,
    );
    output::write_dynamics_csv(&out.join("dynamics.csv"), &dynamics)?;
    write_jsonl(&out.join("trajectories.jsonl"), &run.trajectories)?;
    Ok(())
}

fn run_grouped_rollouts(
    tasks: &[Task],
    factory: &dyn AgentFactory,
    cfg: &RunConfig,
    group_size: usize,
    out: &Path,
) -> Result<usize> {
    let groups_dir = out.join("groups");
    ensure_out_dir(&groups_dir)?;
    let mut failures = 0usize;
    for task in tasks {
        let plan = plan_chunks(task, cfg.engine.chunk_size_s)?;
        let run = run_group(task, &plan, factory, &cfg.engine, group_size);
        failures += run.failures.len();
        let mut scored = run.completed;
        for trajectory in &mut scored {
            score_trajectory(trajectory, task, &plan, &cfg.rewards);
        }
        write_jsonl(&groups_dir.join(format!("{}.jsonl", task.id)), &scored)?;
    }
    Ok(failures)
}

fn cmd_eval(args: EvalArgs) -> Result<u8> {
    let mut cfg = RunConfig::load(args.config.as_deref())?;
    apply_sim_flags(&mut cfg, args.update_err, args.exit_err, args.seed);
    apply_run_flags(&mut cfg, args.workers, args.chunk_size);
    if let Some(mode) = args.mode {
        cfg.engine.use_exit_gate = mode == Mode::WithExit;
        cfg.mark_flag("engine.use_exit_gate");
    }
    cfg.validate()?;
    if args.groups == 0 {
        bail!("--groups must be at least 1");
    }

    let tasks: Vec<Task> = read_jsonl(&args.tasks)?;
    let templates = load_templates(args.prompt_dir.as_deref())?;
    let factory = build_factory(args.agent, &cfg)?;

    let run = match evaluate_with_templates(
        &tasks,
        factory.as_ref(),
        &cfg.engine,
        &cfg.rewards,
        cfg.workers,
        &templates,
    ) {
        Ok(run) => run,
        Err(err @ gatedmem_core::harness::HarnessError::AllTasksFailed { .. }) => {
            eprintln!("error: {err}");
            return Ok(2);
        }
        Err(err) => return Err(err.into()),
    };

    ensure_out_dir(&args.out)?;
    write_eval_outputs(&args.out, &run, factory.label())?;
    if args.dump_chunks {
        let dumps = tasks
            .iter()
            .map(|task| {
                Ok(ChunkDump {
                    task_id: &task.id,
                    plan: plan_chunks(task, cfg.engine.chunk_size_s)?,
                })
            })
            .collect::<Result<Vec<_>, gatedmem_core::chunking::ChunkingError>>()?;
        output::write_json_pretty(&args.out.join("chunks.json"), &dumps)?;
    }
    let group_failures = if args.groups > 1 {
        run_grouped_rollouts(&tasks, factory.as_ref(), &cfg, args.groups, &args.out)?
    } else {
        0
    };
    cfg.write_effective(&args.out)?;

    let agg = &run.report.aggregate;
    println!(
        "eval[{}]: {} tasks, accuracy {:.3}, mean turns {:.2}, excluded {} -> {}",
        factory.label(),
        run.report.per_task.len(),
        agg.accuracy,
        agg.mean_turns,
        agg.excluded_tasks,
        args.out.display()
    );
    Ok(if agg.excluded_tasks > 0 || group_failures > 0 {
        2
    } else {
        0
    })
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

fn cmd_compare(args: CompareArgs) -> Result<u8> {
    let mut cfg = RunConfig::load(args.config.as_deref())?;
    apply_sim_flags(&mut cfg, args.update_err, args.exit_err, args.seed);
    apply_run_flags(&mut cfg, args.workers, args.chunk_size);
    cfg.validate()?;

    let tasks: Vec<Task> = read_jsonl(&args.tasks)?;
    let templates = load_templates(args.prompt_dir.as_deref())?;
    let factory = build_factory(args.agent, &cfg)?;

    let comparison = compare_modes_with_templates(
        &tasks,
        factory.as_ref(),
        &cfg.engine,
        &cfg.rewards,
        cfg.workers,
        &templates,
    )?;

    ensure_out_dir(&args.out)?;
    output::write_json_pretty(&args.out.join("report.json"), &comparison.report())?;
    let rows: Vec<_> = comparison
        .with_eg
        .report
        .per_task
        .iter()
        .map(|r| (Some("with_eg"), r))
        .chain(
            comparison
                .no_eg
                .report
                .per_task
                .iter()
                .map(|r| (Some("no_eg"), r)),
        )
        .collect();
    output::write_metrics_csv(&args.out.join("metrics.csv"), &rows, true)?;
    let label = factory.label();
    let dynamics = memory_dynamics_report(
        &[
            (
                format!("{label}:with_eg"),
                comparison.with_eg.trajectories.clone(),
            ),
            (
                format!("{label}:no_eg"),
                comparison.no_eg.trajectories.clone(),
            ),
        ],
        TokenCounter::Words,
    );
    output::write_dynamics_csv(&args.out.join("dynamics.csv"), &dynamics)?;
    write_jsonl(
        &args.out.join("trajectories_with_eg.jsonl"),
        &comparison.with_eg.trajectories,
    )?;
    write_jsonl(
        &args.out.join("trajectories_no_eg.jsonl"),
        &comparison.no_eg.trajectories,
    )?;
    cfg.write_effective(&args.out)?;

    let excluded = comparison.with_eg.report.aggregate.excluded_tasks
        + comparison.no_eg.report.aggregate.excluded_tasks;
    println!(
        "compare[{}]: {} tasks, turn savings {:.2}x (mean turns {:.2} -> {:.2}), excluded {} -> {}",
        label,
        tasks.len(),
        comparison.turn_savings_ratio,
        comparison.no_eg.report.aggregate.mean_turns,
        comparison.with_eg.report.aggregate.mean_turns,
        excluded,
        args.out.display()
    );
    Ok(if excluded > 0 { 2 } else { 0 })
}

// ---------------------------------------------------------------------------
// advantage-report
// ---------------------------------------------------------------------------

fn cmd_advantage_report(args: AdvantageReportArgs) -> Result<u8> {
    let mut cfg = RunConfig::load(args.config.as_deref())?;
    if let Some(alpha) = args.alpha {
        cfg.advantage.alpha = alpha;
        cfg.mark_flag("advantage.alpha");
    }
    cfg.validate()?;

    let mut group_files: Vec<PathBuf> = std::fs::read_dir(&args.groups)
        .with_context(|| format!("reading groups directory {}", args.groups.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "jsonl"))
        .collect();
    group_files.sort();
    if group_files.is_empty() {
        bail!("no .jsonl group files found in {}", args.groups.display());
    }

    let mut rows: Vec<(String, BlendedTurnRow)> = Vec::new();
    for path in &group_files {
        let trajectories: Vec<Trajectory> = read_jsonl(path)?;
        let batch = GroupBatch::new(trajectories)
            .with_context(|| format!("group file {}", path.display()))?;
        let task_id = batch.task_id.clone();
        let traj_advs = trajectory_advantages(&batch)
            .with_context(|| format!("group file {}", path.display()))?;
        let mut group_rows = blended_turn_table(&batch, &cfg.advantage)
            .with_context(|| format!("group file {}", path.display()))?;
        // The answer turn carries only the trajectory-level term.
        for (g, trajectory) in batch.trajectories.iter().enumerate() {
            let answer_t = trajectory.turns.last().map(|t| t.t + 1).unwrap_or(1);
            group_rows.push(BlendedTurnRow {
                trajectory: g,
                t: answer_t,
                traj_adv: traj_advs[g],
                turn_adv: None,
                blended: blend(traj_advs[g], None, cfg.advantage.alpha),
            });
        }
        group_rows.sort_by_key(|r| (r.trajectory, r.t));
        rows.extend(group_rows.into_iter().map(|r| (task_id.clone(), r)));
    }

    ensure_out_dir(&args.out)?;
    output::write_advantages_csv(&args.out.join("advantages.csv"), &rows)?;
    cfg.write_effective(&args.out)?;
    println!(
        "advantage-report: {} rows from {} groups (alpha {}) -> {}",
        rows.len(),
        group_files.len(),
        cfg.advantage.alpha,
        args.out.display()
    );
    Ok(0)
}

// ---------------------------------------------------------------------------
// dump-chunks
// ---------------------------------------------------------------------------

fn cmd_dump_chunks(args: DumpChunksArgs) -> Result<u8> {
    let mut cfg = RunConfig::load(args.config.as_deref())?;
    apply_run_flags(&mut cfg, None, args.chunk_size);
    if let Some(counter) = &args.counter {
        cfg.chunking.counter = match counter.to_ascii_lowercase().as_str() {
            "words" => TokenCounter::Words,
            "chars4" | "chars_div4" => TokenCounter::CharsDiv4,
            other => bail!("unknown counter: {other} (expected words or chars4)"),
        };
        cfg.mark_flag("chunking.counter");
    }
    cfg.validate()?;

    let tasks: Vec<Task> = read_jsonl(&args.tasks)?;
    let dumps = tasks
        .iter()
        .map(|task| {
            Ok(ChunkDump {
                task_id: &task.id,
                plan: plan_chunks_with(task, cfg.engine.chunk_size_s, cfg.chunking.counter)?,
            })
        })
        .collect::<Result<Vec<_>, gatedmem_core::chunking::ChunkingError>>()?;

    ensure_out_dir(&args.out)?;
    output::write_json_pretty(&args.out.join("chunks.json"), &dumps)?;
    cfg.write_effective(&args.out)?;
    let total_chunks: usize = dumps.iter().map(|d| d.plan.total_chunks).sum();
    println!(
        "dump-chunks: {} tasks, {} chunks (size {}, {:?}) -> {}",
        dumps.len(),
        total_chunks,
        cfg.engine.chunk_size_s,
        cfg.chunking.counter,
        args.out.display()
    );
    Ok(0)
}
