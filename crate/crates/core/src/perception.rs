//! Simulated person detector and the binary Bayes presence filter.

use std::f64::consts::PI;

use glam::DVec2;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{raycast_clear, OccupancyGrid, Pose2};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PerceptionError {
    #[error("{name} must be a probability in [0, 1], got {value}")]
    Probability { name: &'static str, value: f64 },
    #[error("{name} must be a probability strictly inside (0, 1), got {value}")]
    OpenProbability { name: &'static str, value: f64 },
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("eps_off ({eps_off}) must be below eps_on ({eps_on})")]
    Thresholds { eps_on: f64, eps_off: f64 },
    #[error("sensor max_range ({max_range}) must exceed d_activation ({d_activation})")]
    RangeBelowActivation { max_range: f64, d_activation: f64 },
}

fn check_prob(name: &'static str, value: f64) -> Result<(), PerceptionError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(PerceptionError::Probability { name, value })
    }
}

fn check_open_prob(name: &'static str, value: f64) -> Result<(), PerceptionError> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(PerceptionError::OpenProbability { name, value })
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<(), PerceptionError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(PerceptionError::NonPositive { name, value })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorModel {
    pub max_range: f64,
    /// Half-angle of the field of view around the heading; pi is omnidirectional.
    pub fov_half_angle: f64,
    pub p_detect: f64,
    pub p_false_positive_per_tick: f64,
    pub position_noise_sigma: f64,
    pub tick_rate: f64,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self {
            max_range: 12.0,
            fov_half_angle: PI,
            p_detect: 0.90,
            p_false_positive_per_tick: 0.005,
            position_noise_sigma: 0.10,
            tick_rate: 10.0,
        }
    }
}

impl SensorModel {
    pub fn validate(&self) -> Result<(), PerceptionError> {
        check_positive("max_range", self.max_range)?;
        check_positive("fov_half_angle", self.fov_half_angle)?;
        check_prob("p_detect", self.p_detect)?;
        check_prob("p_false_positive_per_tick", self.p_false_positive_per_tick)?;
        check_positive("tick_rate", self.tick_rate)?;
        if !(self.position_noise_sigma >= 0.0) {
            return Err(PerceptionError::NonPositive {
                name: "position_noise_sigma",
                value: self.position_noise_sigma,
            });
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        1.0 / self.tick_rate
    }

    fn in_fov(&self, pose: &Pose2, p: DVec2) -> bool {
        if self.fov_half_angle >= PI {
            return true;
        }
        let l = pose.to_local(p);
        l.y.atan2(l.x).abs() <= self.fov_half_angle
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub position: DVec2,
    pub tick: u64,
}

/// Whether a person at `p` can be seen at all: range, field of view and line
/// of sight. Detection probability and noise are applied by [`sense`].
pub fn visible(robot: &Pose2, p: DVec2, grid: &OccupancyGrid, model: &SensorModel) -> bool {
    let from = robot.position();
    if from.distance(p) > model.max_range || !model.in_fov(robot, p) {
        return false;
    }
    grid.contains_point(p) && grid.contains_point(from) && raycast_clear(grid, from, p).unwrap_or(false)
}

fn clamp_into(grid: &OccupancyGrid, p: DVec2) -> DVec2 {
    let lo = grid.origin();
    let hi = grid.extent() - DVec2::splat(1e-9);
    p.clamp(lo, hi)
}

/// Attempts made to place a false positive on a free cell in range.
const FALSE_POSITIVE_TRIES: usize = 32;

/// One sensor tick. The random draws per person and per tick are made in a
/// fixed order so a seeded generator reproduces the detection sequence.
pub fn sense<R: Rng + ?Sized>(
    robot: &Pose2,
    persons: &[DVec2],
    grid: &OccupancyGrid,
    model: &SensorModel,
    tick: u64,
    rng: &mut R,
) -> Vec<Detection> {
    let mut out = Vec::new();
    let noise = Normal::new(0.0, model.position_noise_sigma.max(0.0)).expect("sigma is finite and non-negative");
    for &p in persons {
        // draw unconditionally so visibility changes do not shift the stream
        let u: f64 = rng.gen();
        let nx = noise.sample(rng);
        let ny = noise.sample(rng);
        if visible(robot, p, grid, model) && u < model.p_detect {
            out.push(Detection {
                position: clamp_into(grid, p + DVec2::new(nx, ny)),
                tick,
            });
        }
    }
    let u: f64 = rng.gen();
    if u < model.p_false_positive_per_tick {
        for _ in 0..FALSE_POSITIVE_TRIES {
            let r = model.max_range * rng.gen::<f64>().sqrt();
            let a = rng.gen_range(-PI..PI);
            let q = robot.position() + DVec2::from_angle(a) * r;
            if grid.world_to_cell(q).is_some_and(|c| grid.is_free(c)) {
                out.push(Detection { position: q, tick });
                break;
            }
        }
    }
    out
}

/// Half-angle of the sector that counts as "ahead of the robot".
pub const AHEAD_HALF_ANGLE: f64 = PI / 3.0;

pub fn is_ahead(robot: &Pose2, p: DVec2, d_activation: f64) -> bool {
    let l = robot.to_local(p);
    let d = l.length();
    d <= d_activation && (d == 0.0 || l.y.atan2(l.x).abs() <= AHEAD_HALF_ANGLE)
}

/// The filter's measurement: some detection lies ahead within `d_activation`.
pub fn presence_observed(robot: &Pose2, detections: &[Detection], d_activation: f64) -> bool {
    detections.iter().any(|d| is_ahead(robot, d.position, d_activation))
}

/// Distance from the robot to the nearest detection this tick.
pub fn nearest_detection(robot: &Pose2, detections: &[Detection]) -> Option<f64> {
    detections
        .iter()
        .map(|d| d.position.distance(robot.position()))
        .min_by(f64::total_cmp)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BayesParams {
    pub d_activation: f64,
    pub eps_on: f64,
    pub eps_off: f64,
    pub p_hit: f64,
    pub p_miss_false: f64,
    pub persistence: f64,
    /// Belief before the first observation.
    pub prior: f64,
}

impl Default for BayesParams {
    fn default() -> Self {
        Self {
            d_activation: 8.0,
            eps_on: 0.80,
            eps_off: 0.20,
            p_hit: 0.60,
            p_miss_false: 0.02,
            persistence: 0.98,
            prior: 0.5,
        }
    }
}

impl BayesParams {
    pub fn validate(&self) -> Result<(), PerceptionError> {
        check_positive("d_activation", self.d_activation)?;
        check_open_prob("eps_on", self.eps_on)?;
        check_open_prob("eps_off", self.eps_off)?;
        check_open_prob("p_hit", self.p_hit)?;
        check_open_prob("p_miss_false", self.p_miss_false)?;
        check_prob("persistence", self.persistence)?;
        check_open_prob("prior", self.prior)?;
        if self.eps_off >= self.eps_on {
            return Err(PerceptionError::Thresholds {
                eps_on: self.eps_on,
                eps_off: self.eps_off,
            });
        }
        Ok(())
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn sigmoid(l: f64) -> f64 {
    1.0 / (1.0 + (-l).exp())
}

/// Presence belief in log-odds plus the hysteresis gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    pub log_odds: f64,
    pub gate_on: bool,
}

impl Belief {
    pub fn new(prior: f64) -> Self {
        Self {
            log_odds: logit(prior),
            gate_on: false,
        }
    }

    pub fn from_probability(p: f64, gate_on: bool) -> Self {
        Self {
            log_odds: logit(p),
            gate_on,
        }
    }

    pub fn probability(&self) -> f64 {
        sigmoid(self.log_odds)
    }
}

/// Persistence prediction followed by the measurement update and the gate.
pub fn bayes_step(belief: Belief, observed: bool, params: &BayesParams) -> Belief {
    let b = belief.probability();
    let pred = params.persistence * b + (1.0 - params.persistence) * (1.0 - b);
    // clamp keeps log-odds finite when persistence is exactly 1
    let pred = pred.clamp(1e-12, 1.0 - 1e-12);
    let (l1, l0) = if observed {
        (params.p_hit, params.p_miss_false)
    } else {
        (1.0 - params.p_hit, 1.0 - params.p_miss_false)
    };
    let log_odds = logit(pred) + (l1 / l0).ln();
    let post = sigmoid(log_odds);
    let gate_on = if post >= params.eps_on {
        true
    } else if post <= params.eps_off {
        false
    } else {
        belief.gate_on
    };
    Belief { log_odds, gate_on }
}
