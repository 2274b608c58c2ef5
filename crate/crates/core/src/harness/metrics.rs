use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::sim::{Termination, TrajectoryLog};
use crate::behavior::BehaviorMode;

/// Lane change counts as complete within this distance of the lane line (m).
pub const LANE_REACHED_TOLERANCE: f64 = 0.05;

/// Per-run summary. Field order is the JSON key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: String,
    pub turn: Option<String>,
    pub behavior: String,
    pub seed: u64,
    pub termination: String,
    pub timed_out: bool,
    pub duration: f64,
    pub human_time: Option<f64>,
    pub free_time: f64,
    pub human_efficiency: Option<f64>,
    pub robot_time: Option<f64>,
    pub min_separation: Option<f64>,
    pub collisions: u32,
    pub activation_separation: Option<f64>,
    pub lane_change_complete_separation: Option<f64>,
    pub robot_path_length: f64,
    pub sensor_ticks: u64,
    pub replans: u64,
    pub event_replans: u64,
}

pub fn compute_metrics(log: &TrajectoryLog, cfg: &ScenarioConfig) -> MetricsReport {
    let c = &cfg.config;
    let free_time = log.route_length / c.human.preferred_speed;
    let timed_out = log.termination == Termination::Timeout;
    let human_time = log.human_finish_time;
    let human_efficiency = match (timed_out, human_time) {
        (false, Some(t)) if t > 0.0 => Some(free_time / t),
        _ => None,
    };
    let min_separation = log
        .records
        .iter()
        .filter_map(|r| r.separation)
        .min_by(f64::total_cmp);
    let activation = log.records.iter().position(|r| r.gate);
    let activation_separation = activation.and_then(|i| log.records[i].separation);
    let lane_change_complete_separation = match (cfg.behavior, activation) {
        (BehaviorMode::Plc, Some(i)) => log.records[i..]
            .iter()
            .find(|r| (r.left_offset - c.behavior.d2).abs() <= LANE_REACHED_TOLERANCE)
            .and_then(|r| r.separation),
        _ => None,
    };
    let robot_path_length = log
        .records
        .windows(2)
        .map(|w| w[0].robot.position().distance(w[1].robot.position()))
        .sum();
    MetricsReport {
        scenario: cfg.scenario.name().to_string(),
        turn: cfg.effective_turn().map(|t| t.name().to_string()),
        behavior: cfg.behavior.name().to_string(),
        seed: cfg.seed,
        termination: match log.termination {
            Termination::Completed => "completed",
            Termination::Timeout => "timeout",
            Termination::Collision => "collision",
        }
        .to_string(),
        timed_out,
        duration: log.duration(),
        human_time,
        free_time,
        human_efficiency,
        robot_time: log.robot_finish_time,
        min_separation,
        collisions: u32::from(log.collision.is_some()),
        activation_separation,
        lane_change_complete_separation,
        robot_path_length,
        sensor_ticks: log.sensor_ticks,
        replans: log.replans,
        event_replans: log.event_replans,
    }
}
