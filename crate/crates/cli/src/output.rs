//! Run-directory writers: pretty JSON, per-task metrics CSV, memory-dynamics
//! CSV, and the per-turn advantage table.

use anyhow::{Context, Result};
use gatedmem_core::advantage::BlendedTurnRow;
use gatedmem_core::harness::{DynamicsRow, TaskResult};
use serde::Serialize;
use std::path::Path;

pub fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn exit_class_name(result: &TaskResult) -> &'static str {
    match result.exit_class {
        gatedmem_core::ExitClass::Early => "EARLY",
        gatedmem_core::ExitClass::Exact => "EXACT",
        gatedmem_core::ExitClass::Late => "LATE",
        gatedmem_core::ExitClass::Na => "NA",
    }
}

/// Per-task rows. `with_mode` adds a leading mode column for compare runs.
pub fn write_metrics_csv(
    path: &Path,
    rows: &[(Option<&str>, &TaskResult)],
    with_mode: bool,
) -> Result<()> {
    let mut writer =
        csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    let mut header = vec![
        "task_id",
        "correct",
        "turns",
        "t_exit",
        "exit_class",
        "wall_clock_ms",
    ];
    if with_mode {
        header.insert(0, "mode");
    }
    writer.write_record(&header)?;
    for (mode, row) in rows {
        let mut record = vec![
            row.task_id.clone(),
            row.correct.to_string(),
            row.turns.to_string(),
            row.t_exit.to_string(),
            exit_class_name(row).to_string(),
            row.wall_clock_ms.to_string(),
        ];
        if with_mode {
            record.insert(0, mode.unwrap_or("").to_string());
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_dynamics_csv(path: &Path, rows: &[DynamicsRow]) -> Result<()> {
    let mut writer =
        csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    writer.write_record(["label", "turn", "mean_memory_tokens", "trajectories"])?;
    for row in rows {
        writer.write_record([
            row.label.clone(),
            row.turn.to_string(),
            format!("{:.3}", row.mean_memory_tokens),
            row.trajectories.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Advantage table rows. `group` is the rollout index g within the task's
/// batch; memory turns carry a turn-level term, the answer turn's cell stays
/// empty.
pub fn write_advantages_csv(path: &Path, rows: &[(String, BlendedTurnRow)]) -> Result<()> {
    let mut writer =
        csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    writer.write_record(["task_id", "group", "t", "traj_adv", "turn_adv", "blended"])?;
    for (task_id, row) in rows {
        writer.write_record([
            task_id.clone(),
            row.trajectory.to_string(),
            row.t.to_string(),
            format!("{:.12}", row.traj_adv),
            row.turn_adv.map(|v| format!("{v:.12}")).unwrap_or_default(),
            format!("{:.12}", row.blended),
        ])?;
    }
    writer.flush()?;
    Ok(())
}
