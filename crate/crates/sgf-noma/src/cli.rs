//! Command-line interface: subcommand dispatch over the library operations.
//!
//! Every invocation resolves a configuration (file + flag overrides), runs
//! one operation, and writes its outputs plus a manifest under the output
//! root (`--out`, else the `SGF_NOMA_OUT` environment variable, else
//! `./runs`). File names embed the seed list so parallel invocations write
//! disjoint paths.

use crate::io::{self, ComparisonRow, Overrides, RunManifest};
use crate::pool::{
    baseline_fixed_sgf, baseline_pure_gf, extract_pools, open_loop_simulate, stats_from_eval,
};
use crate::training::{
    run_greedy_evaluation, run_training, sweep_agent_count, sweep_cluster_size,
    sweep_power_levels, Algorithm, ExperimentConfig,
};
use crate::{Result, SgfNomaError};
use clap::{Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "SGF_NOMA_OUT";

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AlgorithmArg {
    /// Double deep Q-network.
    Ddqn,
    /// Dueling double deep Q-network.
    Dueling,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Ddqn => Algorithm::Ddqn,
            AlgorithmArg::Dueling => Algorithm::DuelingDdqn,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sgf-noma", version, about = "Semi-grant-free NOMA power-control simulator")]
pub struct Cli {
    /// TOML configuration file; all values default when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Training episodes; overrides the config file.
    #[arg(long, global = true)]
    pub episodes: Option<usize>,
    /// Steps per episode; overrides the config file.
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// Number of grant-free users (= learning agents).
    #[arg(long, global = true)]
    pub agents: Option<usize>,
    /// Number of sub-channels (= grant-based users).
    #[arg(long, global = true)]
    pub channels: Option<usize>,
    /// Number of evenly spaced power levels over 0.1–0.9 W.
    #[arg(long, global = true)]
    pub levels: Option<usize>,
    /// Learning algorithm.
    #[arg(long, global = true, value_enum)]
    pub algorithm: Option<AlgorithmArg>,
    /// Output root directory [default: $SGF_NOMA_OUT or ./runs].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train agents and write metrics, a checkpoint, and a manifest.
    Train,
    /// Greedy-policy evaluation of a trained checkpoint.
    Evaluate {
        /// Checkpoint written by `train`.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Evaluation episodes (steps per episode follow the config).
        #[arg(long, default_value_t = 20)]
        eval_episodes: usize,
    },
    /// Train once per power-level count and report plateau statistics.
    SweepLevels {
        /// Power-level counts to sweep.
        #[arg(long, value_delimiter = ',', default_value = "1,3,5,9")]
        counts: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        seeds: Vec<u64>,
    },
    /// Train once per cluster size (GF users per channel) and report
    /// evaluated per-cluster throughput.
    SweepCluster {
        /// GF-per-channel counts to sweep.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8")]
        sizes: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        seeds: Vec<u64>,
        #[arg(long, default_value_t = 20)]
        eval_episodes: usize,
    },
    /// Train once per agent-population size and report plateau statistics.
    SweepAgents {
        /// Agent counts to sweep.
        #[arg(long, value_delimiter = ',', default_value = "6,12,18")]
        counts: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        seeds: Vec<u64>,
        /// Lift the per-channel GF cap to ceil(agents/channels).
        #[arg(long)]
        relax_cap: bool,
    },
    /// Distill per-channel power pools from a trained checkpoint.
    ExtractPool {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 20)]
        eval_episodes: usize,
        /// Minimum selection frequency for a level to join a pool.
        #[arg(long, default_value_t = 0.05)]
        min_frequency: f64,
    },
    /// Compare the learned policy against pure grant-free and fixed-power
    /// baselines on paired random streams, one row per (protocol, seed).
    CompareBaselines {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        seeds: Vec<u64>,
        #[arg(long, default_value_t = 20)]
        eval_episodes: usize,
        /// Fixed power-level index for the fixed-power baseline
        /// [default: middle level].
        #[arg(long)]
        level: Option<usize>,
        /// Also evaluate the extracted pool in open loop.
        #[arg(long)]
        with_pool: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Train => "train",
            Command::Evaluate { .. } => "evaluate",
            Command::SweepLevels { .. } => "sweep-levels",
            Command::SweepCluster { .. } => "sweep-cluster",
            Command::SweepAgents { .. } => "sweep-agents",
            Command::ExtractPool { .. } => "extract-pool",
            Command::CompareBaselines { .. } => "compare-baselines",
        }
    }
}

/// Resolve the output root: flag, then environment variable, then `./runs`.
fn output_root(cli: &Cli) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

fn resolve_config(cli: &Cli) -> Result<ExperimentConfig> {
    let overrides = Overrides {
        seed: cli.seed,
        episodes: cli.episodes,
        steps: cli.steps,
        agents: cli.agents,
        channels: cli.channels,
        levels: cli.levels,
        algorithm: cli.algorithm.map(Algorithm::from),
    };
    match &cli.config {
        Some(path) => io::parse_config(path, &overrides),
        None => io::default_config(&overrides),
    }
}

fn seed_tag(seeds: &[u64]) -> String {
    seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("-")
}

fn load_checkpoint(path: &Path) -> Result<crate::training::Trainer> {
    if !path.exists() {
        return Err(SgfNomaError::Checkpoint(format!(
            "checkpoint not found: {}",
            path.display()
        )));
    }
    io::checkpoint_load(path)
}

/// Parse `argv` and execute; returns the paths written.
pub fn run<I, T>(argv: I) -> Result<Vec<PathBuf>>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| {
        // clap errors for --help/--version carry their own exit handling
        SgfNomaError::Config(e.to_string())
    })?;
    execute(&cli)
}

/// Execute an already-parsed invocation.
pub fn execute(cli: &Cli) -> Result<Vec<PathBuf>> {
    let t0 = std::time::Instant::now();
    let config = resolve_config(cli)?;
    let dir = output_root(cli).join(cli.command.name());
    std::fs::create_dir_all(&dir)?;
    let mut outputs: Vec<PathBuf> = Vec::new();
    let mut seeds = vec![config.seed];

    match &cli.command {
        Command::Train => {
            let (trainer, records) = run_training(&config)?;
            let metrics = dir.join(format!("metrics-s{}.csv", config.seed));
            io::write_metrics_csv(&metrics, &records)?;
            let ckpt = dir.join(format!("checkpoint-s{}.json", config.seed));
            io::checkpoint_save(&trainer, &ckpt)?;
            outputs.extend([metrics, ckpt]);
            let summary = crate::training::plateau_summary(&records);
            println!(
                "trained {} episodes × {} steps; plateau reward {:.3} at episode {}",
                config.episodes,
                config.steps_per_episode,
                summary.plateau_throughput,
                summary.episodes_to_plateau
            );
        }
        Command::Evaluate { checkpoint, eval_episodes } => {
            let trainer = load_checkpoint(checkpoint)?;
            let mut cfg = trainer.config.clone();
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            seeds = vec![cfg.seed];
            let slots = run_greedy_evaluation(&trainer.agents, &cfg, *eval_episodes)?;
            let path = dir.join(format!("eval-s{}.csv", cfg.seed));
            io::write_eval_csv(&path, &slots)?;
            let stats = stats_from_eval(&slots);
            println!(
                "evaluated {} slots (header + {} rows): mean capacity {:.3}, \
                 effective {:.3}, feasible {:.1}%",
                slots.len(),
                slots.len(),
                stats.mean_capacity,
                stats.mean_effective_capacity,
                100.0 * stats.feasible_rate
            );
            outputs.push(path);
        }
        Command::SweepLevels { counts, seeds: sweep_seeds } => {
            seeds = sweep_seeds.clone();
            let rows = sweep_power_levels(&config, counts, sweep_seeds)?;
            let path = dir.join(format!("levels-s{}.json", seed_tag(sweep_seeds)));
            io::write_json(&path, &rows)?;
            for r in &rows {
                println!(
                    "levels {:>2} seed {}: plateau reward {:.3} at episode {}",
                    r.num_levels, r.seed, r.plateau_throughput, r.episodes_to_plateau
                );
            }
            outputs.push(path);
        }
        Command::SweepCluster { sizes, seeds: sweep_seeds, eval_episodes } => {
            seeds = sweep_seeds.clone();
            let rows = sweep_cluster_size(&config, sizes, sweep_seeds, *eval_episodes)?;
            let path = dir.join(format!("cluster-s{}.json", seed_tag(sweep_seeds)));
            io::write_json(&path, &rows)?;
            for r in &rows {
                println!(
                    "cluster size {} seed {}: per-cluster throughput {:.3}, mean reward {:.3}",
                    r.gf_per_channel, r.seed, r.mean_cluster_throughput, r.mean_reward
                );
            }
            outputs.push(path);
        }
        Command::SweepAgents { counts, seeds: sweep_seeds, relax_cap } => {
            seeds = sweep_seeds.clone();
            let rows = sweep_agent_count(&config, counts, sweep_seeds, *relax_cap)?;
            let path = dir.join(format!("agents-s{}.json", seed_tag(sweep_seeds)));
            io::write_json(&path, &rows)?;
            for r in &rows {
                println!(
                    "{:>3} agents seed {}: plateau reward {:.3} at episode {}",
                    r.num_agents, r.seed, r.plateau_throughput, r.episodes_to_plateau
                );
            }
            outputs.push(path);
        }
        Command::ExtractPool { checkpoint, eval_episodes, min_frequency } => {
            let trainer = load_checkpoint(checkpoint)?;
            let cfg = trainer.config.clone();
            seeds = vec![cfg.seed];
            let slots = run_greedy_evaluation(&trainer.agents, &cfg, *eval_episodes)?;
            let pool = extract_pools(&slots, &trainer.env.state, &cfg.network, *min_frequency)?;
            let json = dir.join(format!("pool-s{}.json", cfg.seed));
            let table = dir.join(format!("pool-s{}.txt", cfg.seed));
            io::write_pool(&json, &table, &pool)?;
            print!("{}", io::format_pool_table(&pool));
            outputs.extend([json, table]);
        }
        Command::CompareBaselines { checkpoint, seeds: cmp_seeds, eval_episodes, level, with_pool } => {
            let trainer = load_checkpoint(checkpoint)?;
            let base_cfg = trainer.config.clone();
            seeds = cmp_seeds.clone();
            let num_users = base_cfg.num_agents();
            let slots_per_seed = eval_episodes * base_cfg.steps_per_episode;
            let fpa_level = level.unwrap_or(base_cfg.network.power_levels.len() / 2);
            let pool = if *with_pool {
                let slots = run_greedy_evaluation(&trainer.agents, &base_cfg, *eval_episodes)?;
                Some(extract_pools(&slots, &trainer.env.state, &base_cfg.network, 0.05)?)
            } else {
                None
            };
            let mut rows = Vec::new();
            for &s in cmp_seeds {
                let mut cfg = base_cfg.clone();
                cfg.seed = s;
                let slots = run_greedy_evaluation(&trainer.agents, &cfg, *eval_episodes)?;
                rows.push(ComparisonRow {
                    protocol: "learned-sgf".into(),
                    seed: s,
                    stats: stats_from_eval(&slots),
                });
                rows.push(ComparisonRow {
                    protocol: "fixed-sgf".into(),
                    seed: s,
                    stats: baseline_fixed_sgf(
                        &cfg.network,
                        fpa_level,
                        num_users,
                        slots_per_seed,
                        s,
                    )?,
                });
                rows.push(ComparisonRow {
                    protocol: "pure-gf".into(),
                    seed: s,
                    stats: baseline_pure_gf(&cfg.network, None, num_users, slots_per_seed, s)?,
                });
                if let Some(pool) = &pool {
                    rows.push(ComparisonRow {
                        protocol: "pool-open-loop".into(),
                        seed: s,
                        stats: open_loop_simulate(
                            pool,
                            &cfg.network,
                            num_users,
                            slots_per_seed,
                            s,
                        )?,
                    });
                }
            }
            let path = dir.join(format!("comparison-s{}.csv", seed_tag(cmp_seeds)));
            io::write_comparison_csv(&path, &rows)?;
            for r in &rows {
                println!(
                    "{:<14} seed {}: effective {:.3}, GB violations {:.1}%",
                    r.protocol,
                    r.seed,
                    r.stats.mean_effective_capacity,
                    100.0 * r.stats.gb_violation_rate
                );
            }
            outputs.push(path);
        }
    }

    let mut manifest = RunManifest::new(cli.command.name(), &config, &seeds);
    manifest.outputs = outputs.iter().map(|p| p.display().to_string()).collect();
    manifest.wall_clock_seconds = t0.elapsed().as_secs_f64();
    let manifest_path = dir.join(format!("manifest-s{}.json", seed_tag(&seeds)));
    manifest.save(&manifest_path)?;
    outputs.push(manifest_path);
    Ok(outputs)
}
