//! Scenario construction, the simulation loop, metrics, output writers and
//! the batch driver.

pub mod batch;
pub mod config;
pub mod export;
pub mod metrics;
pub mod scenario;
pub mod sim;

pub use config::{Config, ConfigError, ScenarioConfig, ScenarioKind, Turn};
pub use metrics::{compute_metrics, MetricsReport};
pub use scenario::{build_scenario, Scenario, ScenarioError};
pub use sim::{run, simulate, Termination, TickRecord, TrajectoryLog};
