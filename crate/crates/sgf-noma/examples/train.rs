//! Train a small team of agents and inspect the learning curve.
//!
//! Two grant-free users share one sub-channel with one grant-based user and
//! learn, from the broadcast reward alone, which transmit powers let the
//! successive-interference-cancellation receiver decode everyone. Run with:
//!
//! ```text
//! cargo run --example train
//! ```

use sgf_noma::io::write_metrics_csv;
use sgf_noma::training::{episode_rewards, moving_average, run_training, ExperimentConfig};

fn main() -> sgf_noma::Result<()> {
    let mut cfg = ExperimentConfig::default();
    // Shrink the default 12-user network so the example finishes in seconds.
    cfg.set_population(2, 1); // 2 grant-free agents, 1 grant-based user
    cfg.network.num_subchannels = 1;
    cfg.network.power_levels = vec![0.1, 0.5, 0.9];
    cfg.network.max_gf_per_channel = 2;
    cfg.hidden_layers = vec![32, 16];
    cfg.episodes = 60;
    cfg.steps_per_episode = 20;
    cfg.buffer_capacity = 2000;
    cfg.seed = 7;

    let (trainer, records) = run_training(&cfg)?;

    let rewards = episode_rewards(&records);
    let ma = moving_average(&rewards, 10);
    println!("episode  mean-reward  10-episode-MA");
    for ep in (0..rewards.len()).step_by(10) {
        println!("{ep:>7}  {:>11.3}  {:>13.3}", rewards[ep], ma[ep]);
    }
    println!(
        "final 10-episode moving average: {:.3} bits/s/Hz (started at {:.3})",
        ma.last().unwrap(),
        ma[0]
    );

    let out = std::path::Path::new("runs/example-train-metrics.csv");
    std::fs::create_dir_all(out.parent().unwrap())?;
    write_metrics_csv(out, &records)?;
    println!("wrote {} ({} agents, {} steps)", out.display(), trainer.agents.len(), records.len());
    Ok(())
}
