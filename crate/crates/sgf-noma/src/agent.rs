//! Per-agent DDQN / dueling-DDQN machinery.
//!
//! Each grant-free user owns a primary network, a target network, an Adam
//! state, a replay ring and an action mask. Agents never read each other's
//! networks or buffers; the only shared signals are the broadcast state and
//! the identical team reward.

use crate::env::NetworkConfig;
use crate::nn::{adam_step, AdamState, HeadKind, QNetwork};
use crate::seed::{derive_rng, Purpose};
use crate::{Result, SgfNomaError};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// One stored experience.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
}

/// Fixed-capacity ring of transitions; after more than `capacity` insertions
/// it holds exactly the most recent `capacity`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayBuffer {
    capacity: usize,
    storage: Vec<Transition>,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer { capacity, storage: Vec::with_capacity(capacity.min(4096)), cursor: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.storage.len() < self.capacity {
            self.storage.push(t);
        } else {
            self.storage[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.storage.iter()
    }

    /// Uniform minibatch without replacement (partial Fisher–Yates over
    /// indices).
    pub fn sample<'a>(&'a self, batch: usize, rng: &mut ChaCha8Rng) -> Vec<&'a Transition> {
        debug_assert!(batch <= self.storage.len());
        let n = self.storage.len();
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..batch.min(n) {
            let j = rng.gen_range(i..n);
            idx.swap(i, j);
        }
        idx[..batch.min(n)].iter().map(|&i| &self.storage[i]).collect()
    }
}

/// Linear epsilon decay from `start` to `end` over `decay_horizon` steps,
/// then flat.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_horizon: u64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        EpsilonSchedule { start: 1.0, end: 0.01, decay_horizon: 1 }
    }
}

impl EpsilonSchedule {
    pub fn value(&self, step: u64) -> f64 {
        if self.decay_horizon == 0 || step >= self.decay_horizon {
            return self.end;
        }
        let frac = step as f64 / self.decay_horizon as f64;
        self.start + (self.end - self.start) * frac
    }
}

/// Actions whose power level exceeds the per-user cap are invalid and never
/// selected, on either the explore or the exploit path.
pub fn build_action_mask(config: &NetworkConfig) -> Result<Vec<bool>> {
    let np = config.num_power_levels();
    let mut mask = Vec::with_capacity(config.num_actions());
    for _m in 0..config.num_subchannels {
        for p in 0..np {
            mask.push(config.power_levels[p] <= config.max_user_power);
        }
    }
    if config.allow_idle {
        mask.push(true);
    }
    if !mask.iter().any(|&v| v) {
        return Err(SgfNomaError::Config(
            "max_user_power: masks every action; no valid transmit power".into(),
        ));
    }
    Ok(mask)
}

/// Argmax over valid actions, ties broken by lowest index.
pub fn masked_argmax(q: &[f64], mask: &[bool]) -> usize {
    let mut best = usize::MAX;
    let mut best_q = f64::NEG_INFINITY;
    for (i, (&qi, &ok)) in q.iter().zip(mask).enumerate() {
        if ok && qi > best_q {
            best_q = qi;
            best = i;
        }
    }
    debug_assert_ne!(best, usize::MAX, "mask admits at least one action");
    best
}

/// One grant-free user's learner.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Agent {
    pub id: usize,
    pub primary: QNetwork,
    pub target: QNetwork,
    pub optimizer: AdamState,
    pub buffer: ReplayBuffer,
    pub mask: Vec<bool>,
}

impl Agent {
    pub fn new(
        id: usize,
        input_dim: usize,
        hidden: &[usize],
        config: &NetworkConfig,
        head: HeadKind,
        learning_rate: f64,
        buffer_capacity: usize,
        master_seed: u64,
    ) -> Result<Self> {
        let mut init = derive_rng(master_seed, Purpose::Init, &[id as u64]);
        let primary = QNetwork::new(input_dim, hidden, config.num_actions(), head, &mut init)?;
        let target = primary.clone();
        let optimizer = AdamState::new(&primary, learning_rate);
        Ok(Agent {
            id,
            primary,
            target,
            optimizer,
            buffer: ReplayBuffer::new(buffer_capacity),
            mask: build_action_mask(config)?,
        })
    }

    /// Epsilon-greedy over valid actions.
    pub fn select_action(&self, state: &[f64], epsilon: f64, rng: &mut ChaCha8Rng) -> Result<usize> {
        if rng.gen::<f64>() < epsilon {
            let valid: Vec<usize> =
                self.mask.iter().enumerate().filter(|(_, &v)| v).map(|(i, _)| i).collect();
            Ok(valid[rng.gen_range(0..valid.len())])
        } else {
            let q = self.primary.forward(state)?;
            Ok(masked_argmax(&q, &self.mask))
        }
    }

    /// Copy primary weights into the target network when the step counter
    /// hits the sync period.
    pub fn sync_target(&mut self, step_counter: u64, update_period: u64) {
        if update_period > 0 && step_counter % update_period == 0 {
            self.target = self.primary.clone();
        }
    }
}

/// Double-Q targets for a batch: the primary network picks the next action,
/// the target network evaluates it. No terminal cutoff — this is a
/// continuing task and targets always bootstrap.
pub fn ddqn_target(
    batch: &[&Transition],
    primary: &QNetwork,
    target: &QNetwork,
    mask: &[bool],
    beta: f64,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(batch.len());
    for t in batch {
        let q_primary = primary.forward(&t.next_state)?;
        let a_star = masked_argmax(&q_primary, mask);
        let q_target = target.forward(&t.next_state)?;
        out.push(t.reward + beta * q_target[a_star]);
    }
    Ok(out)
}

/// One training iteration: double-Q targets, minibatch-mean squared-error
/// backprop through the primary network, one Adam step. The target network
/// is untouched.
pub fn train_step(agent: &mut Agent, batch: &[&Transition], beta: f64) -> Result<f64> {
    let targets = ddqn_target(batch, &agent.primary, &agent.target, &agent.mask, beta)?;
    let mut grads = agent.primary.zeros_like();
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    for (t, &y) in batch.iter().zip(&targets) {
        loss += agent.primary.backward_accumulate(&t.state, y, t.action, scale, &mut grads)?;
    }
    loss *= scale;
    adam_step(&mut agent.primary, &grads, &mut agent.optimizer)?;
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::NetworkConfig;

    fn small_config(levels: usize, channels: usize) -> NetworkConfig {
        let mut cfg = NetworkConfig::default();
        cfg.num_subchannels = channels;
        cfg.power_levels = (1..=levels).map(|i| i as f64 * 0.1).collect();
        cfg.topology = crate::env::TopologyMode::Fixed { num_gf: 2, num_gb: channels.min(1) };
        cfg
    }

    fn tiny_agent(cfg: &NetworkConfig, seed: u64) -> Agent {
        Agent::new(0, 2, &[8], cfg, HeadKind::Plain, 0.01, 64, seed).unwrap()
    }

    #[test]
    fn mask_counts() {
        // all 9 levels under a 0.9 cap → everything valid
        let cfg = small_config(9, 3);
        let mask = build_action_mask(&cfg).unwrap();
        assert_eq!(mask.len(), 27);
        assert!(mask.iter().all(|&v| v));

        // cap 0.5 over levels 0.1..0.9 on 3 channels → 15 valid, 12 masked
        let mut capped = cfg.clone();
        capped.max_user_power = 0.5;
        let mask = build_action_mask(&capped).unwrap();
        assert_eq!(mask.iter().filter(|&&v| v).count(), 15);
        assert_eq!(mask.iter().filter(|&&v| !v).count(), 12);

        // cap below every level → configuration error
        capped.max_user_power = 0.05;
        assert!(build_action_mask(&capped).is_err());
    }

    #[test]
    fn epsilon_schedule_shape() {
        let s = EpsilonSchedule { start: 1.0, end: 0.01, decay_horizon: 100 };
        assert_eq!(s.value(0), 1.0);
        let mut last = f64::INFINITY;
        for t in 0..200 {
            let e = s.value(t);
            assert!(e <= last && (0.01..=1.0).contains(&e));
            last = e;
        }
        assert_eq!(s.value(100), 0.01);
        assert_eq!(s.value(1_000_000), 0.01);
    }

    #[test]
    fn exploration_is_uniform_over_valid_actions() {
        let mut cfg = small_config(9, 1);
        cfg.max_user_power = 0.5; // 5 valid of 9
        let agent = tiny_agent(&cfg, 1);
        let mut rng = derive_rng(2, Purpose::Explore, &[0, 0]);
        let n = 100_000;
        let mut counts = vec![0usize; 9];
        for _ in 0..n {
            counts[agent.select_action(&[0.0, 0.0], 1.0, &mut rng).unwrap()] += 1;
        }
        for (i, &c) in counts.iter().enumerate() {
            if agent.mask[i] {
                let freq = c as f64 / n as f64;
                assert!((freq - 0.2).abs() < 0.004, "action {i}: {freq}");
            } else {
                assert_eq!(c, 0, "masked action {i} selected");
            }
        }
    }

    #[test]
    fn greedy_argmax_and_masked_argmax() {
        assert_eq!(masked_argmax(&[1.0, 5.0, 3.0], &[true, true, true]), 1);
        assert_eq!(masked_argmax(&[9.0, 2.0], &[false, true]), 1);
        // ties by lowest index
        assert_eq!(masked_argmax(&[4.0, 4.0, 4.0], &[true, true, true]), 0);
    }

    #[test]
    fn ddqn_target_arithmetic() {
        // r=5, β=0.9, a*=2, target(next)[2]=10 → y=14
        let cfg = small_config(9, 1);
        let mut agent = tiny_agent(&cfg, 3);
        // rig the networks: primary outputs argmax at 2, target outputs 10 there
        agent.primary = agent.primary.zeros_like();
        agent.target = agent.target.zeros_like();
        if let crate::nn::Head::Plain(d) = &mut agent.primary.head {
            d.b[2] = 1.0;
        }
        if let crate::nn::Head::Plain(d) = &mut agent.target.head {
            d.b[2] = 10.0;
            d.b[0] = 99.0; // would win a single-net max; must be ignored
        }
        let t = Transition { state: vec![0.0; 2], action: 0, reward: 5.0, next_state: vec![0.0; 2] };
        let y = ddqn_target(&[&t], &agent.primary, &agent.target, &agent.mask, 0.9).unwrap();
        assert!((y[0] - (5.0 + 0.9 * 10.0)).abs() < 1e-12);

        // β=1, r=0 → y equals the target value exactly
        let t0 = Transition { state: vec![0.0; 2], action: 0, reward: 0.0, next_state: vec![0.0; 2] };
        let y = ddqn_target(&[&t0], &agent.primary, &agent.target, &agent.mask, 1.0).unwrap();
        assert!((y[0] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn ddqn_decouples_from_single_net_max() {
        // primary q=[1,9], target q=[10,2]: DDQN uses target[argmax primary]=2,
        // a single-net DQN target would use max(target)=10
        let mut cfg = small_config(2, 1);
        cfg.max_user_power = 1.0;
        let mut agent = tiny_agent(&cfg, 4);
        agent.primary = agent.primary.zeros_like();
        agent.target = agent.target.zeros_like();
        if let crate::nn::Head::Plain(d) = &mut agent.primary.head {
            d.b.copy_from_slice(&[1.0, 9.0]);
        }
        if let crate::nn::Head::Plain(d) = &mut agent.target.head {
            d.b.copy_from_slice(&[10.0, 2.0]);
        }
        let t = Transition { state: vec![0.0; 2], action: 0, reward: 0.0, next_state: vec![0.0; 2] };
        let y = ddqn_target(&[&t], &agent.primary, &agent.target, &agent.mask, 1.0).unwrap();
        assert!((y[0] - 2.0).abs() < 1e-12);
        // single-net oracle (the plain DQN form)
        let q = agent.target.forward(&t.next_state).unwrap();
        let dqn_y = t.reward + 1.0 * q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!((dqn_y - 10.0).abs() < 1e-12);
        assert_ne!(y[0], dqn_y);
    }

    #[test]
    fn target_equal_primary_degenerates_to_dqn() {
        let cfg = small_config(5, 2);
        let mut agent = tiny_agent(&cfg, 5);
        agent.target = agent.primary.clone();
        let t = Transition {
            state: vec![0.3, -0.1],
            action: 1,
            reward: 0.5,
            next_state: vec![0.7, 0.2],
        };
        let y = ddqn_target(&[&t], &agent.primary, &agent.target, &agent.mask, 0.9).unwrap();
        let q = agent.target.forward(&t.next_state).unwrap();
        let dqn_y = t.reward
            + 0.9
                * q.iter()
                    .zip(&agent.mask)
                    .filter(|(_, &m)| m)
                    .map(|(&v, _)| v)
                    .fold(f64::NEG_INFINITY, f64::max);
        assert!((y[0] - dqn_y).abs() < 1e-12);
    }

    #[test]
    fn zero_residual_batch_leaves_parameters_unchanged() {
        // Adam moves nothing when every gradient is exactly zero
        let cfg = small_config(3, 1);
        let mut agent = tiny_agent(&cfg, 6);
        agent.target = agent.primary.clone();
        // construct a transition whose target already equals Q(s,a):
        // reward = Q(s,a) − β·Q_target(s', a*)
        let s = vec![0.2, 0.4];
        let s2 = vec![0.1, -0.3];
        let beta = 0.9;
        let qs = agent.primary.forward(&s).unwrap();
        let qn = agent.primary.forward(&s2).unwrap();
        let a_star = masked_argmax(&qn, &agent.mask);
        let t = Transition {
            state: s,
            action: 0,
            reward: qs[0] - beta * qn[a_star],
            next_state: s2,
        };
        let before = agent.primary.clone();
        let loss = train_step(&mut agent, &[&t], beta).unwrap();
        assert!(loss < 1e-24);
        for (a, b) in agent.primary.tensors().iter().zip(before.tensors()) {
            assert_eq!(*a, b);
        }
    }

    #[test]
    fn singleton_buffer_convergence() {
        let cfg = small_config(3, 1);
        let mut agent = tiny_agent(&cfg, 7);
        let t = Transition {
            state: vec![0.5, -0.5],
            action: 2,
            reward: 1.0,
            next_state: vec![0.5, -0.5],
        };
        let beta = 0.5;
        let mut final_err = f64::INFINITY;
        for step in 1..=500 {
            train_step(&mut agent, &[&t], beta).unwrap();
            agent.sync_target(step, 50);
            let y = ddqn_target(&[&t], &agent.primary, &agent.target, &agent.mask, beta).unwrap();
            let q = agent.primary.forward(&t.state).unwrap()[t.action];
            final_err = (y[0] - q) * (y[0] - q);
            if final_err < 1e-4 {
                break;
            }
        }
        assert!(final_err < 1e-4, "squared error {final_err}");
    }

    #[test]
    fn loss_matches_independent_recomputation() {
        let cfg = small_config(4, 2);
        let mut agent = tiny_agent(&cfg, 8);
        let mut rng = derive_rng(9, Purpose::Explore, &[0, 0]);
        let batch: Vec<Transition> = (0..8)
            .map(|_| Transition {
                state: vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                action: rng.gen_range(0..8),
                reward: rng.gen_range(0.0..2.0),
                next_state: vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
            })
            .collect();
        let refs: Vec<&Transition> = batch.iter().collect();
        let beta = 0.9;
        // independent pass computed before the parameters move
        let ys = ddqn_target(&refs, &agent.primary, &agent.target, &agent.mask, beta).unwrap();
        let expected: f64 = refs
            .iter()
            .zip(&ys)
            .map(|(t, &y)| {
                let q = agent.primary.forward(&t.state).unwrap()[t.action];
                (y - q) * (y - q)
            })
            .sum::<f64>()
            / refs.len() as f64;
        let loss = train_step(&mut agent, &refs, beta).unwrap();
        assert!((loss - expected).abs() < 1e-12);
    }

    #[test]
    fn sync_copies_exactly_on_period() {
        let cfg = small_config(3, 1);
        let mut agent = tiny_agent(&cfg, 10);
        let t = Transition {
            state: vec![0.1, 0.1],
            action: 0,
            reward: 1.0,
            next_state: vec![0.1, 0.1],
        };
        train_step(&mut agent, &[&t], 0.9).unwrap();
        // counter = 999: no change
        let target_before = agent.target.clone();
        agent.sync_target(999, 1000);
        for (a, b) in agent.target.tensors().iter().zip(target_before.tensors()) {
            assert_eq!(*a, b);
        }
        // counter = 1000: bit-identical copy
        agent.sync_target(1000, 1000);
        for (a, b) in agent.target.tensors().iter().zip(agent.primary.tensors()) {
            assert_eq!(*a, b);
        }
    }

    #[test]
    fn replay_ring_keeps_most_recent() {
        let mut buf = ReplayBuffer::new(5);
        for i in 0..12 {
            buf.push(Transition {
                state: vec![i as f64],
                action: 0,
                reward: 0.0,
                next_state: vec![],
            });
        }
        assert_eq!(buf.len(), 5);
        let mut seen: Vec<f64> = buf.iter().map(|t| t.state[0]).collect();
        seen.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(seen, vec![7.0, 8.0, 9.0, 10.0, 11.0]);
    }

    #[test]
    fn sample_without_replacement() {
        let mut buf = ReplayBuffer::new(64);
        for i in 0..40 {
            buf.push(Transition {
                state: vec![i as f64],
                action: 0,
                reward: 0.0,
                next_state: vec![],
            });
        }
        let mut rng = derive_rng(11, Purpose::Replay, &[0, 0]);
        let batch = buf.sample(32, &mut rng);
        assert_eq!(batch.len(), 32);
        let mut ids: Vec<f64> = batch.iter().map(|t| t.state[0]).collect();
        ids.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ids.dedup();
        assert_eq!(ids.len(), 32, "duplicates within one minibatch");
    }
}
