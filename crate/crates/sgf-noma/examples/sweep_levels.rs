//! Sweep the number of transmit power levels available to the agents.
//!
//! A finer power grid enlarges the action space: it can help until the extra
//! resolution stops paying for the harder exploration problem. The sweep
//! trains one policy per level count and reports the plateau reward. Run
//! with:
//!
//! ```text
//! cargo run --example sweep_levels
//! ```

use sgf_noma::training::{sweep_power_levels, ExperimentConfig};

fn main() -> sgf_noma::Result<()> {
    let mut base = ExperimentConfig::default();
    base.set_population(2, 1);
    base.network.num_subchannels = 1;
    base.network.max_gf_per_channel = 2;
    base.hidden_layers = vec![32, 16];
    base.episodes = 60;
    base.steps_per_episode = 20;
    base.buffer_capacity = 2000;

    let rows = sweep_power_levels(&base, &[1, 3, 5, 9], &[7])?;
    println!("levels  plateau-reward  episodes-to-plateau");
    for r in &rows {
        println!("{:>6}  {:>14.3}  {:>19}", r.num_levels, r.plateau_throughput, r.episodes_to_plateau);
    }
    Ok(())
}
