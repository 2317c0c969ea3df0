//! Layered run configuration: compiled defaults, then an optional JSON
//! config file, then command-line flags. Every effective value remembers
//! which layer set it, and the merged view round-trips through
//! `config_effective.json` so a run can be reproduced from its own output.

use anyhow::{bail, Context, Result};
use gatedmem_core::agents::{EndpointConfig, MemoryStyle, SimulatorScript};
use gatedmem_core::chunking::TokenCounter;
use gatedmem_core::taskgen::FillerSource;
use gatedmem_core::{AdvantageConfig, EngineConfig, RewardConfig};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// Where an effective value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Default,
    File,
    Flag,
}

/// Generation settings carried in config files (per-command flags such as
/// `--kind` stay on the command line; these are the reusable knobs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenSettings {
    pub evidence_position_cap: f64,
    pub filler_source: FillerSource,
    pub num_needles: Option<usize>,
    pub num_queries: Option<usize>,
    pub distractor_needles: Option<usize>,
}

impl Default for GenSettings {
    fn default() -> Self {
        GenSettings {
            evidence_position_cap: 1.0,
            filler_source: FillerSource::EssayCorpus,
            num_needles: None,
            num_queries: None,
            distractor_needles: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChunkingSettings {
    pub counter: TokenCounter,
}

/// The merged view of every setting a run can carry.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunConfig {
    pub engine: EngineConfig,
    pub rewards: RewardConfig,
    pub advantage: AdvantageConfig,
    pub endpoint: EndpointConfig,
    pub simulator: SimulatorScript,
    pub gen: GenSettings,
    pub chunking: ChunkingSettings,
    pub workers: usize,
    /// Per-key source layer, serialized into `config_effective.json`.
    #[serde(rename = "_provenance")]
    pub provenance: BTreeMap<String, Provenance>,
}

macro_rules! patch {
    ($cfg:expr, $patch:expr, $prov:expr, $layer:expr, $section:ident, { $($field:ident),+ $(,)? }) => {
        if let Some(section) = $patch.$section {
            $(
                if let Some(value) = section.$field {
                    $cfg.$section.$field = value;
                    $prov.insert(
                        concat!(stringify!($section), ".", stringify!($field)).to_string(),
                        $layer,
                    );
                }
            )+
        }
    };
}

/// Partial config file: every key optional, unknown keys rejected with a
/// diagnostic naming the offender.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    engine: Option<EnginePatch>,
    rewards: Option<RewardsPatch>,
    advantage: Option<AdvantagePatch>,
    endpoint: Option<EndpointPatch>,
    simulator: Option<SimulatorPatch>,
    gen: Option<GenPatch>,
    chunking: Option<ChunkingPatch>,
    workers: Option<usize>,
    /// Present when re-loading a `config_effective.json`; ignored.
    #[serde(rename = "_provenance")]
    _provenance: Option<BTreeMap<String, Provenance>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct EnginePatch {
    use_exit_gate: Option<bool>,
    chunk_size_s: Option<usize>,
    max_memory_tokens: Option<usize>,
    max_response_tokens: Option<usize>,
    group_size_g: Option<usize>,
    record_wall_clock: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RewardsPatch {
    exit_early_penalty: Option<f64>,
    exit_late_penalty: Option<f64>,
    exit_exact: Option<f64>,
    update_correct: Option<f64>,
    update_incorrect: Option<f64>,
    format_ok: Option<f64>,
    format_bad: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct AdvantagePatch {
    alpha: Option<f64>,
    eps_low: Option<f64>,
    eps_high: Option<f64>,
    beta_kl: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct EndpointPatch {
    base_url: Option<String>,
    model: Option<String>,
    api_key_env: Option<Option<String>>,
    timeout_ms: Option<u64>,
    max_retries: Option<u32>,
    max_concurrency: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SimulatorPatch {
    update_error_rate: Option<f64>,
    exit_error_rate: Option<f64>,
    memory_style: Option<MemoryStyle>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GenPatch {
    evidence_position_cap: Option<f64>,
    filler_source: Option<FillerSource>,
    num_needles: Option<Option<usize>>,
    num_queries: Option<Option<usize>>,
    distractor_needles: Option<Option<usize>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ChunkingPatch {
    counter: Option<TokenCounter>,
}

impl RunConfig {
    /// Defaults layered with an optional config file. Flags are applied
    /// afterwards through [`RunConfig::set_flag`].
    pub fn load(config_path: Option<&Path>) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let Some(path) = config_path else {
            return Ok(cfg);
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("config file not found: {}", path.display()))?;
        let file: FileConfig = serde_json::from_str(&text)
            .with_context(|| format!("invalid config file {}", path.display()))?;
        let layer = Provenance::File;
        let prov = &mut cfg.provenance;
        patch!(cfg, file, prov, layer, engine, {
            use_exit_gate, chunk_size_s, max_memory_tokens, max_response_tokens,
            group_size_g, record_wall_clock,
        });
        patch!(cfg, file, prov, layer, rewards, {
            exit_early_penalty, exit_late_penalty, exit_exact, update_correct,
            update_incorrect, format_ok, format_bad,
        });
        patch!(cfg, file, prov, layer, advantage, { alpha, eps_low, eps_high, beta_kl });
        patch!(cfg, file, prov, layer, endpoint, {
            base_url, model, api_key_env, timeout_ms, max_retries, max_concurrency,
        });
        patch!(cfg, file, prov, layer, simulator, {
            update_error_rate, exit_error_rate, memory_style, seed,
        });
        patch!(cfg, file, prov, layer, gen, {
            evidence_position_cap, filler_source, num_needles, num_queries, distractor_needles,
        });
        patch!(cfg, file, prov, layer, chunking, { counter });
        if let Some(workers) = file.workers {
            cfg.workers = workers;
            cfg.provenance
                .insert("workers".to_string(), Provenance::File);
        }
        Ok(cfg)
    }

    /// Records a flag-layer override for `key` (already applied by the caller).
    pub fn mark_flag(&mut self, key: &str) {
        self.provenance.insert(key.to_string(), Provenance::Flag);
    }

    /// Validates the cross-cutting invariants after all layers are applied.
    pub fn validate(&self) -> Result<()> {
        self.advantage
            .validate()
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        if self.engine.chunk_size_s == 0 {
            bail!("engine.chunk_size_s must be at least 1");
        }
        for (key, rate) in [
            (
                "simulator.update_error_rate",
                self.simulator.update_error_rate,
            ),
            ("simulator.exit_error_rate", self.simulator.exit_error_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                bail!("{key} must lie in [0, 1], got {rate}");
            }
        }
        if !(self.gen.evidence_position_cap > 0.0 && self.gen.evidence_position_cap <= 1.0) {
            bail!(
                "gen.evidence_position_cap must lie in (0, 1], got {}",
                self.gen.evidence_position_cap
            );
        }
        Ok(())
    }

    /// Writes the effective configuration, provenance included.
    pub fn write_effective(&self, out_dir: &Path) -> Result<()> {
        let mut with_defaults = self.clone();
        // Every key not set by file or flag is a default; record the
        // provenance of the sections wholesale for traceability.
        for key in Self::all_keys() {
            with_defaults
                .provenance
                .entry(key.to_string())
                .or_insert(Provenance::Default);
        }
        let path = out_dir.join("config_effective.json");
        let text = serde_json::to_string_pretty(&with_defaults)?;
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    fn all_keys() -> &'static [&'static str] {
        &[
            "engine.use_exit_gate",
            "engine.chunk_size_s",
            "engine.max_memory_tokens",
            "engine.max_response_tokens",
            "engine.group_size_g",
            "engine.record_wall_clock",
            "rewards.exit_early_penalty",
            "rewards.exit_late_penalty",
            "rewards.exit_exact",
            "rewards.update_correct",
            "rewards.update_incorrect",
            "rewards.format_ok",
            "rewards.format_bad",
            "advantage.alpha",
            "advantage.eps_low",
            "advantage.eps_high",
            "advantage.beta_kl",
            "endpoint.base_url",
            "endpoint.model",
            "endpoint.api_key_env",
            "endpoint.timeout_ms",
            "endpoint.max_retries",
            "endpoint.max_concurrency",
            "simulator.update_error_rate",
            "simulator.exit_error_rate",
            "simulator.memory_style",
            "simulator.seed",
            "gen.evidence_position_cap",
            "gen.filler_source",
            "gen.num_needles",
            "gen.num_queries",
            "gen.distractor_needles",
            "chunking.counter",
            "workers",
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_stated_hyperparameters() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.engine.chunk_size_s, 5000);
        assert_eq!(cfg.engine.max_response_tokens, 2048);
        assert_eq!(cfg.engine.max_memory_tokens, 1024);
        assert_eq!(cfg.engine.group_size_g, 16);
        assert_eq!(cfg.advantage.alpha, 0.9);
        assert_eq!(cfg.advantage.eps_low, 0.2);
        assert_eq!(cfg.advantage.eps_high, 0.2);
        assert_eq!(cfg.rewards.exit_early_penalty, -0.75);
        assert_eq!(cfg.rewards.exit_late_penalty, -0.5);
    }

    #[test]
    fn file_layer_overrides_and_records_provenance() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(
            &path,
            r#"{"engine": {"chunk_size_s": 1000}, "advantage": {"alpha": 0.5}, "workers": 3}"#,
        )
        .unwrap();
        let cfg = RunConfig::load(Some(&path)).unwrap();
        assert_eq!(cfg.engine.chunk_size_s, 1000);
        assert_eq!(
            cfg.engine.max_memory_tokens, 1024,
            "untouched key keeps default"
        );
        assert_eq!(cfg.advantage.alpha, 0.5);
        assert_eq!(cfg.workers, 3);
        assert_eq!(
            cfg.provenance.get("engine.chunk_size_s"),
            Some(&Provenance::File)
        );
        assert_eq!(
            cfg.provenance.get("advantage.alpha"),
            Some(&Provenance::File)
        );
        assert!(!cfg.provenance.contains_key("engine.max_memory_tokens"));
    }

    #[test]
    fn unknown_keys_are_named_in_the_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"engine": {"chunk_sz": 9}}"#).unwrap();
        let err = RunConfig::load(Some(&path)).unwrap_err();
        assert!(format!("{err:#}").contains("chunk_sz"));
    }

    #[test]
    fn missing_config_file_is_an_error() {
        let err = RunConfig::load(Some(Path::new("/nonexistent/cfg.json"))).unwrap_err();
        assert!(format!("{err:#}").contains("config file not found"));
    }

    #[test]
    fn effective_config_round_trips_through_load() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::default();
        cfg.engine.chunk_size_s = 750;
        cfg.mark_flag("engine.chunk_size_s");
        cfg.write_effective(dir.path()).unwrap();
        let reloaded = RunConfig::load(Some(&dir.path().join("config_effective.json"))).unwrap();
        assert_eq!(reloaded.engine.chunk_size_s, 750);
        assert_eq!(reloaded.engine, cfg.engine);
        assert_eq!(reloaded.rewards, cfg.rewards);
        assert_eq!(reloaded.advantage, cfg.advantage);
    }
}
