//! Distill broadcastable power pools from a trained policy.
//!
//! After training, the base station watches which power levels the greedy
//! policy actually uses on each sub-channel and keeps the frequent ones as
//! that channel's sanctioned pool. Broadcasting the pools (plus the
//! interference tolerance φ per channel) lets future users power-control in
//! open loop — no training, no feedback. Run with:
//!
//! ```text
//! cargo run --example extract_pool
//! ```

use sgf_noma::io::format_pool_table;
use sgf_noma::pool::extract_pools;
use sgf_noma::training::{run_greedy_evaluation, run_training, ExperimentConfig};

fn main() -> sgf_noma::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.set_population(4, 2);
    cfg.network.num_subchannels = 2;
    cfg.network.max_gf_per_channel = 2;
    cfg.hidden_layers = vec![32, 16];
    cfg.episodes = 60;
    cfg.steps_per_episode = 20;
    cfg.buffer_capacity = 2000;
    cfg.seed = 7;

    let (trainer, _) = run_training(&cfg)?;
    let slots = run_greedy_evaluation(&trainer.agents, &cfg, 10)?;

    // keep levels an agent picked in more than 5% of its selections
    let pool = extract_pools(&slots, &trainer.env.state, &cfg.network, 0.05)?;
    print!("{}", format_pool_table(&pool));

    let msg = pool.broadcast(&cfg.network);
    println!("broadcast message: φ = {:?} W, targets τ = {} / τ̄ = {} bits/s/Hz",
        msg.phi, msg.gb_target_se, msg.gf_target_se);
    Ok(())
}
