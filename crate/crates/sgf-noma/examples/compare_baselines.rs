//! Compare the learned policy and its distilled pool against baselines.
//!
//! Four protocols run on paired random streams (same topology, fading, and
//! channel choices per seed; only the power choices differ):
//!
//! * `learned-sgf`    — the trained greedy policy
//! * `pool-open-loop` — fresh users drawing uniformly from the distilled pool
//! * `fixed-sgf`      — every grant-free user at one fixed level
//! * `pure-gf`        — no grant-based anchors at all, uniform power
//!
//! Run with:
//!
//! ```text
//! cargo run --example compare_baselines
//! ```

use sgf_noma::pool::{
    baseline_fixed_sgf, baseline_pure_gf, extract_pools, open_loop_simulate, stats_from_eval,
    ThroughputStats,
};
use sgf_noma::training::{run_greedy_evaluation, run_training, ExperimentConfig};

fn main() -> sgf_noma::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.set_population(2, 1);
    cfg.network.num_subchannels = 1;
    cfg.network.power_levels = vec![0.1, 0.5, 0.9];
    cfg.network.max_gf_per_channel = 2;
    cfg.hidden_layers = vec![32, 16];
    cfg.episodes = 60;
    cfg.steps_per_episode = 20;
    cfg.buffer_capacity = 2000;
    cfg.seed = 7;

    let (trainer, _) = run_training(&cfg)?;
    let slots = run_greedy_evaluation(&trainer.agents, &cfg, 10)?;
    let pool = extract_pools(&slots, &trainer.env.state, &cfg.network, 0.05)?;

    let users = cfg.num_agents();
    let mc_slots = 200;
    let mid = cfg.network.power_levels.len() / 2;
    let rows: Vec<(&str, ThroughputStats)> = vec![
        ("learned-sgf", stats_from_eval(&slots)),
        ("pool-open-loop", open_loop_simulate(&pool, &cfg.network, users, mc_slots, cfg.seed)?),
        ("fixed-sgf", baseline_fixed_sgf(&cfg.network, mid, users, mc_slots, cfg.seed)?),
        ("pure-gf", baseline_pure_gf(&cfg.network, None, users, mc_slots, cfg.seed)?),
    ];

    println!("{:<15} {:>10} {:>10} {:>12} {:>10}", "protocol", "capacity", "effective", "gb-miss-rate", "feasible");
    for (name, s) in &rows {
        println!(
            "{:<15} {:>10.3} {:>10.3} {:>11.1}% {:>9.1}%",
            name,
            s.mean_capacity,
            s.mean_effective_capacity,
            100.0 * s.gb_violation_rate,
            100.0 * s.feasible_rate
        );
    }
    Ok(())
}
