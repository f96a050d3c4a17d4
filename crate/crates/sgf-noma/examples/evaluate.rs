//! Train, checkpoint, reload, and evaluate the greedy policy.
//!
//! Evaluation disables exploration (ε = 0) and runs the learned policy on
//! fresh fading realizations drawn from a stream that never overlaps the
//! training episodes. Run with:
//!
//! ```text
//! cargo run --example evaluate
//! ```

use sgf_noma::io::{checkpoint_load, checkpoint_save, write_eval_csv};
use sgf_noma::pool::stats_from_eval;
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

    // Round-trip through a checkpoint, as a separate evaluation process would.
    std::fs::create_dir_all("runs")?;
    let ckpt = std::path::Path::new("runs/example-checkpoint.json");
    checkpoint_save(&trainer, ckpt)?;
    let restored = checkpoint_load(ckpt)?;

    let slots = run_greedy_evaluation(&restored.agents, &cfg, 10)?;
    let stats = stats_from_eval(&slots);
    println!("greedy evaluation over {} slots:", stats.slots);
    println!("  mean sum capacity        {:.3} bits/s/Hz", stats.mean_capacity);
    println!("  mean QoS-gated capacity  {:.3} bits/s/Hz", stats.mean_effective_capacity);
    println!("  grant-based QoS misses   {:.1}%", 100.0 * stats.gb_violation_rate);
    println!("  reward-gate pass rate    {:.1}%", 100.0 * stats.feasible_rate);

    let out = std::path::Path::new("runs/example-eval.csv");
    write_eval_csv(out, &slots)?;
    println!("wrote {}", out.display());
    Ok(())
}
