//! Persistence: configuration files, run manifests, metric streams,
//! checkpoints, pool exports and baseline comparison tables.
//!
//! Metric files are plain delimited text with a fixed, documented column
//! order; floats are written with Rust's shortest round-trip formatting so
//! identical runs produce byte-identical files.

use crate::env::CellState;
use crate::pool::{PowerPool, ThroughputStats};
use crate::training::{EvalSlot, ExperimentConfig, StepRecord, Trainer};
use crate::{Result, SgfNomaError};
use serde::{Deserialize, Serialize};
use std::io::Write as _;
use std::path::Path;

/// Flag-level overrides applied on top of a config file. `None` keeps the
/// file (or default) value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub episodes: Option<usize>,
    pub steps: Option<usize>,
    pub agents: Option<usize>,
    pub channels: Option<usize>,
    /// Number of evenly spaced power levels over the default 0.1–0.9 W span.
    pub levels: Option<usize>,
    pub algorithm: Option<crate::training::Algorithm>,
}

impl Overrides {
    pub fn apply(&self, config: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(e) = self.episodes {
            config.episodes = e;
        }
        if let Some(s) = self.steps {
            config.steps_per_episode = s;
        }
        if let Some(n) = self.agents {
            let gb = match config.network.topology {
                crate::env::TopologyMode::Fixed { num_gb, .. } => num_gb,
                crate::env::TopologyMode::Poisson => config.network.num_subchannels,
            };
            config.set_population(n, gb);
        }
        if let Some(m) = self.channels {
            config.network.num_subchannels = m;
            if let crate::env::TopologyMode::Fixed { num_gf, num_gb } = config.network.topology {
                config.network.topology = crate::env::TopologyMode::Fixed {
                    num_gf,
                    num_gb: num_gb.min(m),
                };
            }
        }
        if let Some(l) = self.levels {
            config.network.power_levels = crate::training::evenly_spaced_levels(l);
        }
        if let Some(a) = self.algorithm {
            config.algorithm = a;
        }
    }
}

/// Parse a TOML experiment configuration, apply flag overrides, validate.
/// An empty file yields the full default configuration.
pub fn parse_config(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    let mut config: ExperimentConfig = toml::from_str(&text)?;
    overrides.apply(&mut config);
    config.validate()?;
    Ok(config)
}

/// Default configuration plus overrides, for invocations without a file.
pub fn default_config(overrides: &Overrides) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::default();
    overrides.apply(&mut config);
    config.validate()?;
    Ok(config)
}

/// Everything needed to reproduce a run bit-for-bit (given the same build).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    pub outputs: Vec<String>,
    /// Informational only; excluded from reproducibility comparisons.
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str, config: &ExperimentConfig, seeds: &[u64]) -> Self {
        RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: config.clone(),
            seeds: seeds.to_vec(),
            outputs: Vec::new(),
            wall_clock_seconds: 0.0,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Fixed metric column order (before the per-agent loss columns).
pub const METRIC_COLUMNS: [&str; 13] = [
    "episode",
    "step",
    "reward",
    "capacity",
    "effective_capacity",
    "decode_order",
    "power_limits",
    "single_channel",
    "cluster_min",
    "gb_qos",
    "gf_qos",
    "gf_count",
    "epsilon",
];

/// Write the per-step metric stream as comma-delimited text: one header row,
/// one row per step, loss_0..loss_{N-1} trailing.
pub fn write_metrics_csv(path: &Path, records: &[StepRecord]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&METRIC_COLUMNS.join(","));
    let num_agents = records.first().map_or(0, |r| r.losses.len());
    for j in 0..num_agents {
        out.push_str(&format!(",loss_{j}"));
    }
    out.push('\n');
    for r in records {
        if !(r.reward.is_finite() && r.capacity.is_finite() && r.epsilon.is_finite()) {
            return Err(SgfNomaError::NonFinite(format!(
                "metrics row episode {} step {}",
                r.episode, r.step
            )));
        }
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.episode,
            r.step,
            r.reward,
            r.capacity,
            r.effective_capacity,
            r.constraints[0] as u8,
            r.constraints[1] as u8,
            r.constraints[2] as u8,
            r.constraints[3] as u8,
            r.constraints[4] as u8,
            r.constraints[5] as u8,
            r.constraints[6] as u8,
            r.epsilon
        ));
        for l in &r.losses {
            out.push_str(&format!(",{l}"));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Write greedy evaluation slots as delimited text.
pub fn write_eval_csv(path: &Path, slots: &[EvalSlot]) -> Result<()> {
    let mut out = String::from("episode,step,reward,capacity,effective_capacity,gate");
    let num_agents = slots.first().map_or(0, |s| s.actions.len());
    for j in 0..num_agents {
        out.push_str(&format!(",action_{j}"));
    }
    out.push('\n');
    for s in slots {
        out.push_str(&format!(
            "{},{},{},{},{},{}",
            s.episode,
            s.step,
            s.reward,
            s.outcome.capacity,
            s.outcome.effective_capacity,
            s.outcome.constraints.reward_gate() as u8
        ));
        for a in &s.actions {
            out.push_str(&format!(",{a}"));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// One row of a baseline comparison table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub protocol: String,
    pub seed: u64,
    pub stats: ThroughputStats,
}

pub fn write_comparison_csv(path: &Path, rows: &[ComparisonRow]) -> Result<()> {
    let mut out = String::from(
        "protocol,seed,slots,mean_capacity,mean_effective_capacity,gb_violation_rate,feasible_rate\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.protocol,
            r.seed,
            r.stats.slots,
            r.stats.mean_capacity,
            r.stats.mean_effective_capacity,
            r.stats.gb_violation_rate,
            r.stats.feasible_rate
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Machine-readable pool export plus a human-readable table.
pub fn write_pool(json_path: &Path, table_path: &Path, pool: &PowerPool) -> Result<()> {
    write_json(json_path, pool)?;
    std::fs::write(table_path, format_pool_table(pool))?;
    Ok(())
}

pub fn format_pool_table(pool: &PowerPool) -> String {
    let mut out = String::from("channel  phi_watts      pool_levels (power@frequency)\n");
    for ch in &pool.channels {
        let levels: Vec<String> = ch
            .entries
            .iter()
            .map(|e| format!("{:.1}W@{:.3}{}", e.power, e.frequency, if e.exceeds_phi { "!" } else { "" }))
            .collect();
        out.push_str(&format!(
            "{:>7}  {:<13.6e} {}{}\n",
            ch.channel,
            ch.phi,
            levels.join(" "),
            if ch.fallback { "  (fallback: channel never selected)" } else { "" }
        ));
    }
    out
}

/// Serialized training state. Restores training exactly at an episode
/// boundary: per-episode random streams re-derive from the master seed, so
/// no generator state needs to be stored.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: String,
    pub config: ExperimentConfig,
    pub episodes_done: usize,
    pub global_step: u64,
    pub agents: Vec<crate::agent::Agent>,
    /// Training topology snapshot (positions are seed-derived, but the
    /// snapshot lets evaluation tools avoid re-deriving).
    pub cell: CellState,
}

pub fn checkpoint_save(trainer: &Trainer, path: &Path) -> Result<()> {
    let ckpt = Checkpoint {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: trainer.config.clone(),
        episodes_done: trainer.episodes_done,
        global_step: trainer.global_step,
        agents: trainer.agents.clone(),
        cell: trainer.env.state.clone(),
    };
    write_json(path, &ckpt)
}

/// Load a checkpoint and rebuild a trainer around it, validating that the
/// stored agents match the stored configuration's architecture.
pub fn checkpoint_load(path: &Path) -> Result<Trainer> {
    let ckpt: Checkpoint = read_json(path)?;
    let expected_agents = ckpt.config.num_agents();
    if ckpt.agents.len() != expected_agents {
        return Err(SgfNomaError::Checkpoint(format!(
            "checkpoint holds {} agents but its configuration expects {}",
            ckpt.agents.len(),
            expected_agents
        )));
    }
    let num_actions = ckpt.config.network.num_actions();
    for agent in &ckpt.agents {
        if agent.primary.output_dim != num_actions
            || agent.primary.input_dim != expected_agents
            || agent.mask.len() != num_actions
        {
            return Err(SgfNomaError::Checkpoint(format!(
                "agent {} architecture ({}→{}) does not match configuration ({}→{})",
                agent.id,
                agent.primary.input_dim,
                agent.primary.output_dim,
                expected_agents,
                num_actions
            )));
        }
    }
    Trainer::resume(ckpt.config, ckpt.agents, ckpt.global_step, ckpt.episodes_done)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::training::run_training;

    fn tiny_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.episodes = 4;
        cfg.steps_per_episode = 10;
        cfg.hidden_layers = vec![12, 8];
        cfg.set_population(2, 1);
        cfg.network.num_subchannels = 1;
        cfg.network.power_levels = vec![0.1, 0.5, 0.9];
        cfg.network.max_gf_per_channel = 2;
        cfg.buffer_capacity = 200;
        cfg.batch_size = 8;
        cfg.seed = 3;
        cfg
    }

    #[test]
    fn empty_config_file_gives_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.toml");
        std::fs::write(&path, "").unwrap();
        let cfg = parse_config(&path, &Overrides::default()).unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
    }

    #[test]
    fn flags_override_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "episodes = 100\nseed = 9\n").unwrap();
        let ov = Overrides { episodes: Some(50), ..Default::default() };
        let cfg = parse_config(&path, &ov).unwrap();
        assert_eq!(cfg.episodes, 50);
        assert_eq!(cfg.seed, 9);
    }

    #[test]
    fn unknown_key_is_rejected_by_name() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        std::fs::write(&path, "episoodes = 5\n").unwrap();
        let err = parse_config(&path, &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("episoodes"), "{err}");
    }

    #[test]
    fn invalid_targets_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        std::fs::write(&path, "[network]\ngf_target_se = 20.0\n").unwrap();
        assert!(parse_config(&path, &Overrides::default()).is_err());
    }

    #[test]
    fn metrics_files_are_byte_identical_across_runs() {
        let cfg = tiny_config();
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        let (_, r1) = run_training(&cfg).unwrap();
        write_metrics_csv(&a, &r1).unwrap();
        let (_, r2) = run_training(&cfg).unwrap();
        write_metrics_csv(&b, &r2).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        let text = std::fs::read_to_string(&a).unwrap();
        assert_eq!(text.lines().count(), 1 + cfg.episodes * cfg.steps_per_episode);
        assert!(text.starts_with("episode,step,reward"));
    }

    #[test]
    fn checkpoint_round_trip_preserves_forward() {
        let cfg = tiny_config();
        let (trainer, _) = run_training(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt.json");
        checkpoint_save(&trainer, &path).unwrap();
        let restored = checkpoint_load(&path).unwrap();
        let mut rng = crate::seed::derive_rng(99, crate::seed::Purpose::MonteCarlo, &[]);
        use rand::Rng;
        for _ in 0..100 {
            let x: Vec<f64> = (0..2).map(|_| rng.gen_range(0.0..20.0)).collect();
            for (a, b) in trainer.agents.iter().zip(&restored.agents) {
                let qa = a.primary.forward(&x).unwrap();
                let qb = b.primary.forward(&x).unwrap();
                for (u, v) in qa.iter().zip(&qb) {
                    assert!((u - v).abs() < 1e-15);
                }
            }
        }
        assert_eq!(restored.episodes_done, cfg.episodes);
        assert_eq!(restored.global_step, trainer.global_step);
    }

    #[test]
    fn checkpoint_rejects_agent_count_mismatch() {
        let cfg = tiny_config();
        let (trainer, _) = run_training(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt.json");
        checkpoint_save(&trainer, &path).unwrap();
        let mut ckpt: Checkpoint = read_json(&path).unwrap();
        ckpt.agents.pop();
        write_json(&path, &ckpt).unwrap();
        assert!(checkpoint_load(&path).is_err());
    }

    #[test]
    fn resume_from_checkpoint_matches_uninterrupted() {
        let cfg = tiny_config();
        let (_, full) = run_training(&cfg).unwrap();

        let mut first = Trainer::new(cfg.clone()).unwrap();
        let mut records = Vec::new();
        while first.episodes_done < 2 {
            first.run_episode(&mut records).unwrap();
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt.json");
        checkpoint_save(&first, &path).unwrap();
        let mut resumed = checkpoint_load(&path).unwrap();
        records.extend(resumed.run().unwrap());
        assert_eq!(records, full);
    }

    #[test]
    fn pool_table_is_readable() {
        let pool = PowerPool {
            min_frequency: 0.05,
            channels: vec![crate::pool::ChannelPool {
                channel: 0,
                entries: vec![crate::pool::PoolEntry {
                    level_index: 2,
                    power: 0.3,
                    frequency: 0.75,
                    exceeds_phi: true,
                }],
                distribution: vec![0.0; 9],
                phi: 2.5e-9,
                fallback: false,
            }],
        };
        let table = format_pool_table(&pool);
        assert!(table.contains("0.3W@0.750!"));
        assert!(table.contains("2.5"));
    }
}
