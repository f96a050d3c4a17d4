//! Semi-grant-free NOMA uplink simulator with multi-agent deep-Q power control.
//!
//! A single base station serves grant-based (GB) users on reserved sub-channels
//! while grant-free (GF) users opportunistically share those sub-channels.
//! Each GF user is an independent DDQN (or dueling DDQN) agent that learns
//! which sub-channel and transmit power level to use. From the trained greedy
//! policies a per-sub-channel *power pool* is extracted: a small set of
//! sanctioned transmit power levels that fresh, untrained users can draw from
//! for open-loop power control.
//!
//! Module map:
//! - [`env`]: physical-layer math and the cell environment (topology, Rayleigh
//!   fading, SIC decoding order, SINRs and rates, QoS constraints,
//!   interference thresholds, MDP step function).
//! - [`nn`]: minimal dense feedforward Q-network with ReLU, a dueling head,
//!   backpropagation and Adam.
//! - [`agent`]: per-agent replay memory, epsilon-greedy selection with action
//!   masking, double-Q targets, train step, target-network sync.
//! - [`training`]: episode/step loops, metric logging, greedy evaluation and
//!   the parameter sweeps.
//! - [`pool`]: power-pool extraction, the open-loop protocol simulation and
//!   the fixed-power / pure grant-free baselines.
//! - [`io`]: config parsing, deterministic seeding helpers, metric/pool/
//!   checkpoint persistence.
//! - [`cli`]: subcommand definitions used by the `sgf-noma` binary.

pub mod agent;
pub mod cli;
pub mod env;
pub mod error;
pub mod io;
pub mod nn;
pub mod pool;
pub mod seed;
pub mod training;

pub use error::SgfNomaError;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, SgfNomaError>;
