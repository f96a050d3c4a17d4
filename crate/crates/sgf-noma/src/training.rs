//! Training and evaluation orchestration: episode/step loops, joint-action
//! assembly, metric logging, greedy-policy evaluation and the parameter
//! sweeps.

use crate::agent::{masked_argmax, train_step, Agent, EpsilonSchedule, Transition};
use crate::env::{JointAction, NetworkConfig, SgfNomaEnv, SlotOutcome, TopologyMode};
use crate::nn::HeadKind;
use crate::seed::{derive_rng, Purpose};
use crate::{Result, SgfNomaError};
use serde::{Deserialize, Serialize};

/// Which learner variant to train. The two differ only in the network head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Ddqn,
    DuelingDdqn,
}

impl Algorithm {
    pub fn head_kind(&self) -> HeadKind {
        match self {
            Algorithm::Ddqn => HeadKind::Plain,
            Algorithm::DuelingDdqn => HeadKind::Dueling,
        }
    }
}

/// Full experiment configuration: training hyperparameters plus the cell
/// model. Defaults follow the reference setup (500 episodes × 100 steps,
/// discount 0.9, lr 0.001, replay 10000, batch 32, sync every 1000 steps,
/// ε from 1.0 to 0.01).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub episodes: usize,
    pub steps_per_episode: usize,
    /// Discount factor β.
    pub discount: f64,
    pub algorithm: Algorithm,
    /// Hidden layer widths of every Q-network.
    pub hidden_layers: Vec<usize>,
    pub learning_rate: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    /// Target-network sync period in environment steps.
    pub target_sync_period: u64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of total training steps over which ε decays linearly before
    /// going flat.
    pub epsilon_decay_fraction: f64,
    /// Optional global gradient-norm cap.
    pub grad_clip: Option<f64>,
    pub network: NetworkConfig,
    /// Master seed; every stochastic stream derives from it.
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            episodes: 500,
            steps_per_episode: 100,
            discount: 0.9,
            algorithm: Algorithm::DuelingDdqn,
            hidden_layers: vec![250, 120, 60],
            learning_rate: 0.001,
            buffer_capacity: 10_000,
            batch_size: 32,
            target_sync_period: 1000,
            epsilon_start: 1.0,
            epsilon_end: 0.01,
            epsilon_decay_fraction: 0.8,
            grad_clip: None,
            network: NetworkConfig::default(),
            seed: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 || self.steps_per_episode == 0 {
            return Err(SgfNomaError::Config("episodes/steps: must be ≥ 1".into()));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(SgfNomaError::Config(format!(
                "discount: need 0 < β ≤ 1, got {}",
                self.discount
            )));
        }
        if self.batch_size == 0 || self.buffer_capacity < self.batch_size {
            return Err(SgfNomaError::Config("batch_size/buffer_capacity: invalid".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon_decay_fraction) {
            return Err(SgfNomaError::Config("epsilon_decay_fraction: must be in [0,1]".into()));
        }
        self.network.validate()
    }

    /// Number of learning agents (grant-free users) in fixed-count mode.
    pub fn num_agents(&self) -> usize {
        match self.network.topology {
            TopologyMode::Fixed { num_gf, .. } => num_gf,
            TopologyMode::Poisson => 0,
        }
    }

    /// Convenience: set the fixed GF/GB counts.
    pub fn set_population(&mut self, num_gf: usize, num_gb: usize) {
        self.network.topology = TopologyMode::Fixed { num_gf, num_gb };
    }

    pub fn epsilon_schedule(&self) -> EpsilonSchedule {
        let total = (self.episodes * self.steps_per_episode) as f64;
        EpsilonSchedule {
            start: self.epsilon_start,
            end: self.epsilon_end,
            decay_horizon: (total * self.epsilon_decay_fraction).round() as u64,
        }
    }
}

/// One row of the per-step metric stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub episode: u32,
    pub step: u32,
    pub reward: f64,
    pub capacity: f64,
    pub effective_capacity: f64,
    pub constraints: [bool; 7],
    pub epsilon: f64,
    /// Per-agent training loss; NaN-free, 0 before the buffer fills.
    pub losses: Vec<f64>,
}

/// Trainer state; owning this (plus the config) is enough to resume a run
/// exactly, because all per-episode random streams derive from the master
/// seed and the episode index.
pub struct Trainer {
    pub config: ExperimentConfig,
    pub env: SgfNomaEnv,
    pub agents: Vec<Agent>,
    pub global_step: u64,
    pub episodes_done: usize,
}

impl Trainer {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let env = SgfNomaEnv::new(config.network.clone(), config.seed)?;
        let num_agents = env.num_gf_users();
        if num_agents == 0 {
            return Err(SgfNomaError::Config("topology: no GF users to train".into()));
        }
        let mut agents = Vec::with_capacity(num_agents);
        for id in 0..num_agents {
            let mut agent = Agent::new(
                id,
                num_agents,
                &config.hidden_layers,
                &config.network,
                config.algorithm.head_kind(),
                config.learning_rate,
                config.buffer_capacity,
                config.seed,
            )?;
            agent.optimizer.grad_clip = config.grad_clip;
            agents.push(agent);
        }
        Ok(Trainer { config, env, agents, global_step: 0, episodes_done: 0 })
    }

    /// Rebuild a trainer around restored agents (checkpoint resume).
    pub fn resume(
        config: ExperimentConfig,
        agents: Vec<Agent>,
        global_step: u64,
        episodes_done: usize,
    ) -> Result<Self> {
        config.validate()?;
        let env = SgfNomaEnv::new(config.network.clone(), config.seed)?;
        if agents.len() != env.num_gf_users() {
            return Err(SgfNomaError::Checkpoint(format!(
                "checkpoint has {} agents, configuration expects {}",
                agents.len(),
                env.num_gf_users()
            )));
        }
        Ok(Trainer { config, env, agents, global_step, episodes_done })
    }

    /// Run one training episode, appending one record per step.
    pub fn run_episode(&mut self, records: &mut Vec<StepRecord>) -> Result<()> {
        let ep = self.episodes_done as u64;
        let seed = self.config.seed;
        let schedule = self.config.epsilon_schedule();
        self.env.reset_episode(seed, ep);
        let mut state = self.env.initial_state();
        let mut explore_rngs: Vec<_> = (0..self.agents.len())
            .map(|j| derive_rng(seed, Purpose::Explore, &[j as u64, ep]))
            .collect();
        let mut replay_rngs: Vec<_> = (0..self.agents.len())
            .map(|j| derive_rng(seed, Purpose::Replay, &[j as u64, ep]))
            .collect();

        for step in 0..self.config.steps_per_episode {
            let epsilon = schedule.value(self.global_step);
            let mut indices = Vec::with_capacity(self.agents.len());
            for (agent, rng) in self.agents.iter().zip(explore_rngs.iter_mut()) {
                let a = agent.select_action(&state, epsilon, rng)?;
                // masking soundness: no executed action may be masked
                debug_assert!(agent.mask[a]);
                indices.push(a);
            }
            let joint = JointAction::from_indices(&indices, &self.config.network)?;
            let result = self.env.step(&joint)?;
            if !result.reward.is_finite() {
                return Err(SgfNomaError::NonFinite(format!(
                    "reward at episode {ep} step {step}"
                )));
            }
            // harness-level cross-check of the reward gate
            if result.reward > 0.0 && !result.outcome.constraints.reward_gate() {
                return Err(SgfNomaError::NonFinite(
                    "positive reward with violated constraints".into(),
                ));
            }

            let mut losses = vec![0.0; self.agents.len()];
            for (j, agent) in self.agents.iter_mut().enumerate() {
                agent.buffer.push(Transition {
                    state: state.clone(),
                    action: indices[j],
                    reward: result.reward,
                    next_state: result.next_state.clone(),
                });
                if agent.buffer.len() >= self.config.batch_size {
                    let batch: Vec<Transition> = agent
                        .buffer
                        .sample(self.config.batch_size, &mut replay_rngs[j])
                        .into_iter()
                        .cloned()
                        .collect();
                    let refs: Vec<&Transition> = batch.iter().collect();
                    let loss = train_step(agent, &refs, self.config.discount)?;
                    if !loss.is_finite() {
                        return Err(SgfNomaError::NonFinite(format!(
                            "loss diverged for agent {j} at episode {ep} step {step}"
                        )));
                    }
                    losses[j] = loss;
                }
            }
            self.global_step += 1;
            for agent in self.agents.iter_mut() {
                agent.sync_target(self.global_step, self.config.target_sync_period);
            }
            records.push(StepRecord {
                episode: ep as u32,
                step: step as u32,
                reward: result.reward,
                capacity: result.outcome.capacity,
                effective_capacity: result.outcome.effective_capacity,
                constraints: result.outcome.constraints.flags(),
                epsilon,
                losses,
            });
            state = result.next_state;
        }
        self.episodes_done += 1;
        Ok(())
    }

    /// Train to the configured episode count.
    pub fn run(&mut self) -> Result<Vec<StepRecord>> {
        let mut records = Vec::with_capacity(
            (self.config.episodes - self.episodes_done) * self.config.steps_per_episode,
        );
        while self.episodes_done < self.config.episodes {
            self.run_episode(&mut records)?;
        }
        Ok(records)
    }
}

/// Train from scratch; returns the trainer (for checkpointing or evaluation)
/// plus the full metric stream.
pub fn run_training(config: &ExperimentConfig) -> Result<(Trainer, Vec<StepRecord>)> {
    let mut trainer = Trainer::new(config.clone())?;
    let records = trainer.run()?;
    Ok((trainer, records))
}

/// One evaluated slot under the greedy policy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalSlot {
    pub episode: u32,
    pub step: u32,
    pub actions: Vec<usize>,
    pub reward: f64,
    pub outcome: SlotOutcome,
}

/// Fading streams for evaluation episodes are indexed past this offset so
/// they never overlap training episodes.
const EVAL_EPISODE_OFFSET: u64 = 1 << 32;

/// Greedy-policy evaluation: ε forced to 0, same topology, fresh fading.
pub fn run_greedy_evaluation(
    agents: &[Agent],
    config: &ExperimentConfig,
    episodes: usize,
) -> Result<Vec<EvalSlot>> {
    let mut env = SgfNomaEnv::new(config.network.clone(), config.seed)?;
    if agents.len() != env.num_gf_users() {
        return Err(SgfNomaError::Config(format!(
            "evaluation: {} agents for {} GF users",
            agents.len(),
            env.num_gf_users()
        )));
    }
    let mut slots = Vec::with_capacity(episodes * config.steps_per_episode);
    for ep in 0..episodes {
        env.reset_episode(config.seed, EVAL_EPISODE_OFFSET + ep as u64);
        let mut state = env.initial_state();
        for step in 0..config.steps_per_episode {
            let mut indices = Vec::with_capacity(agents.len());
            for agent in agents {
                let q = agent.primary.forward(&state)?;
                indices.push(masked_argmax(&q, &agent.mask));
            }
            let joint = JointAction::from_indices(&indices, &config.network)?;
            let result = env.step(&joint)?;
            state = result.next_state.clone();
            slots.push(EvalSlot {
                episode: ep as u32,
                step: step as u32,
                actions: indices,
                reward: result.reward,
                outcome: result.outcome,
            });
        }
    }
    Ok(slots)
}

/// Per-episode mean reward from a metric stream.
pub fn episode_rewards(records: &[StepRecord]) -> Vec<f64> {
    let mut sums: Vec<(f64, usize)> = Vec::new();
    for r in records {
        let ep = r.episode as usize;
        if sums.len() <= ep {
            sums.resize(ep + 1, (0.0, 0));
        }
        sums[ep].0 += r.reward;
        sums[ep].1 += 1;
    }
    sums.iter().map(|&(s, n)| if n > 0 { s / n as f64 } else { 0.0 }).collect()
}

/// Trailing moving average with the given window.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for (i, &v) in values.iter().enumerate() {
        sum += v;
        if i >= window {
            sum -= values[i - window];
        }
        out.push(sum / (i.min(window - 1) + 1) as f64);
    }
    out
}

/// Convergence summary of one training run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PlateauSummary {
    /// Final 50-episode moving-average reward.
    pub plateau_throughput: f64,
    /// First episode whose moving average reaches 90% of the final value.
    pub episodes_to_plateau: usize,
}

/// Plateau: first episode whose 50-episode moving-average reward reaches 90%
/// of the run's final moving average.
pub fn plateau_summary(records: &[StepRecord]) -> PlateauSummary {
    let rewards = episode_rewards(records);
    let ma = moving_average(&rewards, 50);
    let final_ma = ma.last().copied().unwrap_or(0.0);
    let threshold = 0.9 * final_ma;
    let episodes_to_plateau =
        ma.iter().position(|&v| v >= threshold).unwrap_or(ma.len().saturating_sub(1));
    PlateauSummary { plateau_throughput: final_ma, episodes_to_plateau }
}

/// Evenly spaced power levels over the default [0.1, 0.9] W span.
pub fn evenly_spaced_levels(count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5],
        n => (0..n).map(|i| 0.1 + 0.8 * i as f64 / (n - 1) as f64).collect(),
    }
}

/// One row of the power-level sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelSweepRow {
    pub num_levels: usize,
    pub seed: u64,
    pub plateau_throughput: f64,
    pub episodes_to_plateau: usize,
}

/// Independent trainings per power-level count; reports plateau throughput
/// and episodes-to-plateau per (count, seed).
pub fn sweep_power_levels(
    base: &ExperimentConfig,
    counts: &[usize],
    seeds: &[u64],
) -> Result<Vec<LevelSweepRow>> {
    let mut rows = Vec::new();
    for &count in counts {
        for &seed in seeds {
            let mut cfg = base.clone();
            cfg.seed = seed;
            cfg.network.power_levels = evenly_spaced_levels(count);
            let (_, records) = run_training(&cfg)?;
            let summary = plateau_summary(&records);
            rows.push(LevelSweepRow {
                num_levels: count,
                seed,
                plateau_throughput: summary.plateau_throughput,
                episodes_to_plateau: summary.episodes_to_plateau,
            });
        }
    }
    Ok(rows)
}

/// One row of the cluster-size sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterSweepRow {
    pub gf_per_channel: usize,
    pub seed: u64,
    /// Mean per-cluster QoS-gated throughput over greedy evaluation slots.
    pub mean_cluster_throughput: f64,
    /// Mean team reward over the evaluation slots.
    pub mean_reward: f64,
}

/// Trains and greedily evaluates one setting per GF-per-channel count. Only
/// the population is swept; the per-channel admission cap L_s keeps its
/// configured value, so populations above `L_s × channels` cannot satisfy the
/// cluster-size constraint and score zero — the cap is what bounds useful
/// cluster growth.
pub fn sweep_cluster_size(
    base: &ExperimentConfig,
    gf_per_channel: &[usize],
    seeds: &[u64],
    eval_episodes: usize,
) -> Result<Vec<ClusterSweepRow>> {
    let mut rows = Vec::new();
    for &k in gf_per_channel {
        for &seed in seeds {
            let mut cfg = base.clone();
            cfg.seed = seed;
            let channels = cfg.network.num_subchannels;
            cfg.set_population(k * channels, channels);
            if k == 0 {
                // no GF users: nothing to train; reward is identically zero
                rows.push(ClusterSweepRow {
                    gf_per_channel: 0,
                    seed,
                    mean_cluster_throughput: 0.0,
                    mean_reward: 0.0,
                });
                continue;
            }
            let (trainer, _) = run_training(&cfg)?;
            let slots = run_greedy_evaluation(&trainer.agents, &cfg, eval_episodes)?;
            let mut cluster_sum = 0.0;
            let mut reward_sum = 0.0;
            for s in &slots {
                for ch in 0..channels {
                    cluster_sum += s.outcome.cluster_effective_capacity(ch, &cfg.network);
                }
                reward_sum += s.reward;
            }
            let n = slots.len().max(1) as f64;
            rows.push(ClusterSweepRow {
                gf_per_channel: k,
                seed,
                mean_cluster_throughput: cluster_sum / (n * channels as f64),
                mean_reward: reward_sum / n,
            });
        }
    }
    Ok(rows)
}

/// One row of the agent-count sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentSweepRow {
    pub num_agents: usize,
    pub seed: u64,
    pub episodes_to_plateau: usize,
    pub plateau_throughput: f64,
}

/// Scalability sweep over the number of agents. `relax_gf_cap` lifts L_s to
/// ceil(N/M) so the larger populations can actually fit on the channels.
pub fn sweep_agent_count(
    base: &ExperimentConfig,
    agent_counts: &[usize],
    seeds: &[u64],
    relax_gf_cap: bool,
) -> Result<Vec<AgentSweepRow>> {
    let mut rows = Vec::new();
    for &n in agent_counts {
        for &seed in seeds {
            let mut cfg = base.clone();
            cfg.seed = seed;
            let channels = cfg.network.num_subchannels;
            cfg.set_population(n, channels);
            if relax_gf_cap {
                cfg.network.max_gf_per_channel =
                    cfg.network.max_gf_per_channel.max(n.div_ceil(channels));
            }
            let (_, records) = run_training(&cfg)?;
            let summary = plateau_summary(&records);
            rows.push(AgentSweepRow {
                num_agents: n,
                seed,
                episodes_to_plateau: summary.episodes_to_plateau,
                plateau_throughput: summary.plateau_throughput,
            });
        }
    }
    Ok(rows)
}
