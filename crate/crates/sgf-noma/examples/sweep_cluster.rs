//! Sweep the cluster size: how many grant-free users share each sub-channel.
//!
//! More users per channel raises the sum rate until interference makes the
//! per-user rate targets unreachable, so the QoS-gated throughput peaks at an
//! interior cluster size. Run with:
//!
//! ```text
//! cargo run --example sweep_cluster
//! ```

use sgf_noma::training::{sweep_cluster_size, ExperimentConfig};

fn main() -> sgf_noma::Result<()> {
    let mut base = ExperimentConfig::default();
    base.network.num_subchannels = 1;
    base.set_population(2, 1); // population is overridden per sweep point
    base.hidden_layers = vec![32, 16];
    base.episodes = 40;
    base.steps_per_episode = 20;
    base.buffer_capacity = 2000;

    let rows = sweep_cluster_size(&base, &[1, 2, 3, 4], &[7], 10)?;
    println!("gf-per-channel  per-cluster-throughput  mean-reward");
    for r in &rows {
        println!("{:>14}  {:>22.3}  {:>11.3}", r.gf_per_channel, r.mean_cluster_throughput, r.mean_reward);
    }
    Ok(())
}
