//! Sweep the agent population at a fixed channel count.
//!
//! Each grant-free user is an independent learner; this sweep shows how
//! convergence speed and plateau reward scale as the team grows. Run with:
//!
//! ```text
//! cargo run --example sweep_agents
//! ```

use sgf_noma::training::{sweep_agent_count, ExperimentConfig};

fn main() -> sgf_noma::Result<()> {
    let mut base = ExperimentConfig::default();
    base.network.num_subchannels = 2;
    base.set_population(4, 2);
    base.hidden_layers = vec![32, 16];
    base.episodes = 40;
    base.steps_per_episode = 20;
    base.buffer_capacity = 2000;

    // relax_gf_cap lifts the per-channel cap so larger teams still fit
    let rows = sweep_agent_count(&base, &[2, 4, 8], &[7], true)?;
    println!("agents  plateau-reward  episodes-to-plateau");
    for r in &rows {
        println!("{:>6}  {:>14.3}  {:>19}", r.num_agents, r.plateau_throughput, r.episodes_to_plateau);
    }
    Ok(())
}
