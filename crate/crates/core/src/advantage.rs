//! Group-relative advantage arithmetic: trajectory- and turn-level baselines,
//! the alpha blend, and the clipped-surrogate/KL scalar objective.
//!
//! No standard-deviation normalization is applied anywhere; baselines are
//! plain group means. Gradients and logprobs are out of scope: callers supply
//! per-token importance ratios.

use crate::types::GroupBatch;
use serde::{Deserialize, Serialize};

/// Blend and clipping constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdvantageConfig {
    /// Weight of the trajectory-level term; `1 - alpha` weights the turn-level term.
    pub alpha: f64,
    pub eps_low: f64,
    pub eps_high: f64,
    /// KL penalty coefficient; the pathway is wired but defaults to off.
    pub beta_kl: f64,
}

impl Default for AdvantageConfig {
    fn default() -> Self {
        AdvantageConfig {
            alpha: 0.9,
            eps_low: 0.2,
            eps_high: 0.2,
            beta_kl: 0.0,
        }
    }
}

impl AdvantageConfig {
    pub fn validate(&self) -> Result<(), AdvantageError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(AdvantageError::InvalidConfig(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        if self.eps_low < 0.0 || self.eps_high < 0.0 {
            return Err(AdvantageError::InvalidConfig(format!(
                "clip epsilons must be non-negative, got ({}, {})",
                self.eps_low, self.eps_high
            )));
        }
        Ok(())
    }
}

/// Per-token statistics supplied by the caller; the importance ratio for a
/// token together with its blended advantage and KL term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenStats {
    pub ratio_rho: f64,
    pub advantage: f64,
    pub kl_term: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum AdvantageError {
    #[error("group must contain at least 2 trajectories, got {group_size}")]
    DegenerateGroup { group_size: usize },
    #[error("batch contains no tokens")]
    EmptyBatch,
    #[error("trajectory {trajectory} has no trajectory-level reward attached")]
    MissingTrajectoryReward { trajectory: usize },
    #[error("trajectory {trajectory} turn {t} has no update reward attached")]
    MissingUpdateReward { trajectory: usize, t: usize },
    #[error("token {index} has non-positive importance ratio {ratio}")]
    InvalidRatio { index: usize, ratio: f64 },
    #[error("token {index} has negative KL term {kl}")]
    InvalidKl { index: usize, kl: f64 },
    #[error("invalid advantage config: {0}")]
    InvalidConfig(String),
}

/// Compensated (Kahan) sum, so parallel-friendly accumulation stays within
/// the documented 1e-12 tolerances.
fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Trajectory-level advantages: each trajectory's reward minus the group
/// mean. The same scalar applies to every token of every turn in the
/// trajectory.
pub fn trajectory_advantages(batch: &GroupBatch) -> Result<Vec<f64>, AdvantageError> {
    let group_size = batch.group_size();
    if group_size < 2 {
        return Err(AdvantageError::DegenerateGroup { group_size });
    }
    let rewards: Vec<f64> = batch
        .trajectories
        .iter()
        .enumerate()
        .map(|(i, traj)| {
            traj.rewards
                .trajectory
                .ok_or(AdvantageError::MissingTrajectoryReward { trajectory: i })
        })
        .collect::<Result<_, _>>()?;
    let mean = kahan_sum(rewards.iter().copied()) / group_size as f64;
    Ok(rewards.into_iter().map(|r| r - mean).collect())
}

/// Turn-level advantages at step `t`: each present trajectory's update reward
/// minus the mean over the `G_t` trajectories that reached that step.
/// Trajectories that exited earlier get `None` — no turn-level term exists
/// for them at `t`.
pub fn turn_advantages(batch: &GroupBatch, t: usize) -> Result<Vec<Option<f64>>, AdvantageError> {
    let mut present: Vec<(usize, f64)> = Vec::new();
    for (i, traj) in batch.trajectories.iter().enumerate() {
        if let Some(turn) = traj.turns.iter().find(|turn| turn.chunk_index == t) {
            let reward = turn
                .update_reward
                .ok_or(AdvantageError::MissingUpdateReward { trajectory: i, t })?;
            present.push((i, reward));
        }
    }
    let mut out = vec![None; batch.group_size()];
    if present.is_empty() {
        return Ok(out);
    }
    let mean = kahan_sum(present.iter().map(|(_, r)| *r)) / present.len() as f64;
    for (i, reward) in present {
        out[i] = Some(reward - mean);
    }
    Ok(out)
}

/// Combines the two advantage terms: `alpha * traj + (1 - alpha) * turn` for
/// memory turns. The answer turn (and any turn without a turn-level term)
/// carries only the trajectory part.
pub fn blend(traj_adv: f64, turn_adv: Option<f64>, alpha: f64) -> f64 {
    match turn_adv {
        Some(turn) => alpha * traj_adv + (1.0 - alpha) * turn,
        None => alpha * traj_adv,
    }
}

/// The clipped surrogate for one token:
/// `min(rho * A, clip(rho, 1 - eps_low, 1 + eps_high) * A)`.
pub fn clipped_surrogate(stats: &TokenStats, eps_low: f64, eps_high: f64) -> f64 {
    let clipped_rho = stats.ratio_rho.clamp(1.0 - eps_low, 1.0 + eps_high);
    (stats.ratio_rho * stats.advantage).min(clipped_rho * stats.advantage)
}

/// The token-count-normalized objective over every token of every turn of
/// every group: mean of `l_clip - beta * kl`.
pub fn batch_objective(
    tokens: &[TokenStats],
    cfg: &AdvantageConfig,
) -> Result<f64, AdvantageError> {
    cfg.validate()?;
    if tokens.is_empty() {
        return Err(AdvantageError::EmptyBatch);
    }
    for (index, token) in tokens.iter().enumerate() {
        // NaN ratios fail this check too.
        if token.ratio_rho.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(AdvantageError::InvalidRatio {
                index,
                ratio: token.ratio_rho,
            });
        }
        if token.kl_term < 0.0 {
            return Err(AdvantageError::InvalidKl {
                index,
                kl: token.kl_term,
            });
        }
    }
    let total = kahan_sum(tokens.iter().map(|token| {
        clipped_surrogate(token, cfg.eps_low, cfg.eps_high) - cfg.beta_kl * token.kl_term
    }));
    Ok(total / tokens.len() as f64)
}

/// One row of the per-turn advantage table emitted by `advantage-report`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlendedTurnRow {
    pub trajectory: usize,
    pub t: usize,
    pub traj_adv: f64,
    pub turn_adv: Option<f64>,
    pub blended: f64,
}

/// The full per-turn advantage table for one group, covering every memory
/// turn of every trajectory.
pub fn blended_turn_table(
    batch: &GroupBatch,
    cfg: &AdvantageConfig,
) -> Result<Vec<BlendedTurnRow>, AdvantageError> {
    cfg.validate()?;
    let traj_advs = trajectory_advantages(batch)?;
    let max_t = batch
        .trajectories
        .iter()
        .flat_map(|traj| traj.turns.iter().map(|turn| turn.chunk_index))
        .max()
        .unwrap_or(0);
    let mut rows = Vec::new();
    for t in 1..=max_t {
        let turn_advs = turn_advantages(batch, t)?;
        for (g, turn_adv) in turn_advs.into_iter().enumerate() {
            if let Some(turn_adv) = turn_adv {
                rows.push(BlendedTurnRow {
                    trajectory: g,
                    t,
                    traj_adv: traj_advs[g],
                    turn_adv: Some(turn_adv),
                    blended: blend(traj_advs[g], Some(turn_adv), cfg.alpha),
                });
            }
        }
    }
    Ok(rows)
}
