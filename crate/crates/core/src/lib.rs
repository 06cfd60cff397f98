//! Decentralized drone-swarm recharge coordination.
//!
//! Drones decide each tick whether to visit a capacity-limited charging
//! station, using El Farol style attendance predictors bounded by two battery
//! thresholds. The crate contains the simulator, a two-level full-factorial
//! sweep runner, and the analysis pipeline (descriptive statistics of runs
//! that lost drones, random-forest Gini importance, SVG chart).

pub mod analysis;
pub mod battery;
pub mod cli;
pub mod config;
pub mod engine;
pub mod experiments;
pub mod params;
pub mod policy;
pub mod report;
pub mod rng;

pub use battery::SocValue;
pub use engine::{simulate, simulate_with, SimOptions, SimResult, SimState};
pub use params::{Factor, ParamError, SimParams};
pub use rng::RngStream;
