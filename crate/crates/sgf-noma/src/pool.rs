//! Power-pool extraction from trained policies, the open-loop protocol for
//! fresh users, and the fixed-power / pure-grant-free baselines.

use crate::env::{
    compute_slot_rates, sample_distance, sample_fading, CellState, GbUser, GfUser, JointAction,
    NetworkConfig, FadingMode, UserAction,
};
use crate::seed::{derive_rng, Purpose};
use crate::training::EvalSlot;
use crate::{Result, SgfNomaError};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// One admitted power level of a channel's pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub level_index: usize,
    pub power: f64,
    /// Selection frequency of this level among all transmissions on the
    /// channel during greedy evaluation.
    pub frequency: f64,
    /// True when a lone median-distance user at this level would already
    /// exceed the channel's interference budget φ.
    pub exceeds_phi: bool,
}

/// The pool broadcast for one sub-channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelPool {
    pub channel: usize,
    pub entries: Vec<PoolEntry>,
    /// Full selection distribution over every configured level (sums to 1
    /// for channels that were ever used).
    pub distribution: Vec<f64>,
    /// Interference budget φ of the channel, at unit (mean) fading.
    pub phi: f64,
    /// Set when the channel was never selected and the pool fell back to the
    /// lowest power level.
    pub fallback: bool,
}

/// Per-sub-channel transmit power pools.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerPool {
    pub channels: Vec<ChannelPool>,
    pub min_frequency: f64,
}

/// Everything the base station broadcasts for open-loop operation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BroadcastMessage {
    pub pools: PowerPool,
    pub phi: Vec<f64>,
    pub gb_target_se: f64,
    pub gf_target_se: f64,
}

impl PowerPool {
    pub fn broadcast(&self, config: &NetworkConfig) -> BroadcastMessage {
        BroadcastMessage {
            phi: self.channels.iter().map(|c| c.phi).collect(),
            pools: self.clone(),
            gb_target_se: config.gb_target_se,
            gf_target_se: config.gf_target_se,
        }
    }
}

/// Interference budget of a channel at unit fading: what total GF received
/// power still leaves the GB user exactly at its rate target.
fn channel_phi(channel: usize, state: &CellState, config: &NetworkConfig) -> f64 {
    for (i, gb) in state.gb_users.iter().enumerate() {
        if gb.subchannel == channel {
            let _ = i;
            let rx = config.gb_fixed_power * gb.distance.powf(-config.path_loss_exp);
            return (rx / ((2f64).powf(config.gb_target_se) - 1.0) - config.noise_power).max(0.0);
        }
    }
    f64::INFINITY
}

/// Distill per-channel power pools from a greedy evaluation stream: a level
/// joins channel m's pool when its selection frequency there exceeds
/// `min_frequency`. A channel whose filtered pool would be empty keeps its
/// single most frequent level; a channel never selected falls back to the
/// lowest level and is flagged.
pub fn extract_pools(
    slots: &[EvalSlot],
    state: &CellState,
    config: &NetworkConfig,
    min_frequency: f64,
) -> Result<PowerPool> {
    if slots.is_empty() {
        return Err(SgfNomaError::Config("pool extraction: empty evaluation stream".into()));
    }
    let m = config.num_subchannels;
    let np = config.num_power_levels();
    let mut counts = vec![vec![0u64; np]; m];
    for slot in slots {
        for &a in &slot.actions {
            if config.allow_idle && a == m * np {
                continue;
            }
            counts[a / np][a % np] += 1;
        }
    }
    // expected gain of a median-distance user at mean fading
    let median_gain = (config.cell_radius / (2f64).sqrt()).powf(-config.path_loss_exp);
    let mut channels = Vec::with_capacity(m);
    for ch in 0..m {
        let total: u64 = counts[ch].iter().sum();
        let phi = channel_phi(ch, state, config);
        let (entries, distribution, fallback) = if total == 0 {
            (vec![0usize], vec![0.0; np], true)
        } else {
            let dist: Vec<f64> =
                counts[ch].iter().map(|&c| c as f64 / total as f64).collect();
            let mut kept: Vec<usize> =
                (0..np).filter(|&p| dist[p] > min_frequency).collect();
            if kept.is_empty() {
                let best = (0..np).max_by(|&a, &b| dist[a].total_cmp(&dist[b])).unwrap();
                kept = vec![best];
            }
            (kept, dist, false)
        };
        let dist_clone = distribution.clone();
        channels.push(ChannelPool {
            channel: ch,
            entries: entries
                .into_iter()
                .map(|p| PoolEntry {
                    level_index: p,
                    power: config.power_levels[p],
                    frequency: dist_clone.get(p).copied().unwrap_or(0.0),
                    exceeds_phi: config.power_levels[p] * median_gain > phi,
                })
                .collect(),
            distribution,
            phi,
            fallback,
        });
    }
    Ok(PowerPool { channels, min_frequency })
}

/// How a simulated user picks its transmit power each slot.
#[derive(Debug, Clone, Copy)]
pub enum GfPowerPolicy<'a> {
    /// Uniform draw from the selected channel's pool.
    Pool(&'a PowerPool),
    /// One fixed level for everyone (FPA).
    FixedLevel(usize),
    /// Uniform over all configured levels.
    UniformLevel,
}

/// Monte-Carlo summary of one protocol run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThroughputStats {
    pub slots: usize,
    /// Mean per-slot sum capacity in bits/s/Hz.
    pub mean_capacity: f64,
    /// Mean per-slot QoS-gated capacity (users below their own target carry
    /// no goodput).
    pub mean_effective_capacity: f64,
    /// Fraction of slots where some GB user fell below τ; 0 when no GB users
    /// exist.
    pub gb_violation_rate: f64,
    /// Fraction of slots passing the full reward gate.
    pub feasible_rate: f64,
}

/// Shared Monte-Carlo engine. The random streams are split by purpose so the
/// topology, the fading, and the per-slot channel choices are identical for
/// every protocol at the same seed — protocols differ only in the power
/// stream they consume (paired comparison).
fn monte_carlo(
    config: &NetworkConfig,
    include_gb: bool,
    num_users: usize,
    slots: usize,
    seed: u64,
    policy: GfPowerPolicy<'_>,
) -> Result<ThroughputStats> {
    config.validate()?;
    if slots == 0 {
        return Err(SgfNomaError::Config("monte carlo: slots must be ≥ 1".into()));
    }
    if let GfPowerPolicy::FixedLevel(p) = policy {
        if p >= config.num_power_levels() {
            return Err(SgfNomaError::Config(format!("fpa: level index {p} out of range")));
        }
    }
    let m = config.num_subchannels;
    let mut gf_pos = derive_rng(seed, Purpose::MonteCarlo, &[1]);
    let mut gb_pos = derive_rng(seed, Purpose::MonteCarlo, &[2]);
    let mut gf_fade = derive_rng(seed, Purpose::MonteCarlo, &[3]);
    let mut gb_fade = derive_rng(seed, Purpose::MonteCarlo, &[4]);
    let mut chan_rng = derive_rng(seed, Purpose::MonteCarlo, &[5]);
    let mut power_rng = derive_rng(seed, Purpose::MonteCarlo, &[6]);

    let num_gb = if include_gb { m } else { 0 };
    let gb_users: Vec<GbUser> = (0..num_gb)
        .map(|id| GbUser {
            id,
            distance: sample_distance(&mut gb_pos, config.cell_radius),
            subchannel: id,
        })
        .collect();
    let gf_users: Vec<GfUser> = (0..num_users)
        .map(|id| GfUser { id, distance: sample_distance(&mut gf_pos, config.cell_radius) })
        .collect();
    let mut state = CellState {
        gb_fading: vec![1.0; gb_users.len()],
        gf_fading: vec![1.0; gf_users.len()],
        gb_users,
        gf_users,
        slot_index: 0,
    };
    let static_fading = config.fading == FadingMode::Static;
    for h in state.gf_fading.iter_mut() {
        *h = sample_fading(&mut gf_fade);
    }
    for h in state.gb_fading.iter_mut() {
        *h = sample_fading(&mut gb_fade);
    }

    let mut cap = 0.0;
    let mut eff = 0.0;
    let mut violations = 0usize;
    let mut feasible = 0usize;
    for slot in 0..slots {
        if slot > 0 && !static_fading {
            for h in state.gf_fading.iter_mut() {
                *h = sample_fading(&mut gf_fade);
            }
            for h in state.gb_fading.iter_mut() {
                *h = sample_fading(&mut gb_fade);
            }
        }
        let choices = (0..num_users)
            .map(|_| {
                let subchannel = chan_rng.gen_range(0..m);
                let power_level = match policy {
                    GfPowerPolicy::FixedLevel(p) => p,
                    GfPowerPolicy::UniformLevel => {
                        power_rng.gen_range(0..config.num_power_levels())
                    }
                    GfPowerPolicy::Pool(pool) => {
                        let entries = &pool.channels[subchannel].entries;
                        entries[power_rng.gen_range(0..entries.len())].level_index
                    }
                };
                Some(UserAction { subchannel, power_level })
            })
            .collect();
        let outcome = compute_slot_rates(&state, &JointAction { choices }, config)?;
        cap += outcome.capacity;
        eff += outcome.effective_capacity;
        if outcome.gb_rates.iter().any(|&r| r < config.gb_target_se) {
            violations += 1;
        }
        if outcome.constraints.reward_gate() {
            feasible += 1;
        }
        state.slot_index += 1;
    }
    let n = slots as f64;
    Ok(ThroughputStats {
        slots,
        mean_capacity: cap / n,
        mean_effective_capacity: eff / n,
        gb_violation_rate: if include_gb { violations as f64 / n } else { 0.0 },
        feasible_rate: feasible as f64 / n,
    })
}

/// Summarize a greedy evaluation stream in the same shape as the Monte-Carlo
/// baselines so learned policies and baselines can share a comparison table.
pub fn stats_from_eval(slots: &[EvalSlot]) -> ThroughputStats {
    let n = slots.len();
    if n == 0 {
        return ThroughputStats {
            slots: 0,
            mean_capacity: 0.0,
            mean_effective_capacity: 0.0,
            gb_violation_rate: 0.0,
            feasible_rate: 0.0,
        };
    }
    let nf = n as f64;
    ThroughputStats {
        slots: n,
        mean_capacity: slots.iter().map(|s| s.outcome.capacity).sum::<f64>() / nf,
        mean_effective_capacity: slots.iter().map(|s| s.outcome.effective_capacity).sum::<f64>()
            / nf,
        gb_violation_rate: slots.iter().filter(|s| !s.outcome.constraints.gb_qos).count() as f64
            / nf,
        feasible_rate: slots.iter().filter(|s| s.outcome.constraints.reward_gate()).count() as f64
            / nf,
    }
}

/// Open-loop protocol: fresh users pick a channel uniformly, then a power
/// level uniformly from that channel's broadcast pool. No training, no
/// feedback.
pub fn open_loop_simulate(
    pool: &PowerPool,
    config: &NetworkConfig,
    num_fresh_users: usize,
    slots: usize,
    seed: u64,
) -> Result<ThroughputStats> {
    if pool.channels.len() != config.num_subchannels {
        return Err(SgfNomaError::Config(format!(
            "pool covers {} channels, config has {}",
            pool.channels.len(),
            config.num_subchannels
        )));
    }
    monte_carlo(config, true, num_fresh_users, slots, seed, GfPowerPolicy::Pool(pool))
}

/// Fixed power allocation: every GF user transmits at one configured level.
pub fn baseline_fpa(
    config: &NetworkConfig,
    level_index: usize,
    num_users: usize,
    slots: usize,
    seed: u64,
) -> Result<ThroughputStats> {
    monte_carlo(config, true, num_users, slots, seed, GfPowerPolicy::FixedLevel(level_index))
}

/// Conventional fixed-power semi-grant-free operation: structurally identical
/// to FPA with GB users present; kept as its own entry point because it is
/// compared in a different context.
pub fn baseline_fixed_sgf(
    config: &NetworkConfig,
    level_index: usize,
    num_users: usize,
    slots: usize,
    seed: u64,
) -> Result<ThroughputStats> {
    baseline_fpa(config, level_index, num_users, slots, seed)
}

/// Pure grant-free network: no GB users; all GF users transmit at a fixed
/// level, or uniformly over all levels when `level_index` is None.
pub fn baseline_pure_gf(
    config: &NetworkConfig,
    level_index: Option<usize>,
    num_users: usize,
    slots: usize,
    seed: u64,
) -> Result<ThroughputStats> {
    let policy = match level_index {
        Some(p) => GfPowerPolicy::FixedLevel(p),
        None => GfPowerPolicy::UniformLevel,
    };
    monte_carlo(config, false, num_users, slots, seed, policy)
}
