//! TOML run configuration. Every section and key is optional; missing keys
//! take the defaults below, unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::{BehaviorMode, BehaviorParams};
use crate::lane::{Handedness, LaneProfile};
use crate::local::{LocalParams, VelocityLimits};
use crate::pedestrian::HumanParams;
use crate::perception::{BayesParams, PerceptionError, SensorModel};
use crate::planner::{CostWeights, PlannerParams};
use super::scenario::BLIND_ROBOT_START_X;
use crate::world::Footprint;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid {section} parameters: {source}")]
    Perception {
        section: &'static str,
        #[source]
        source: PerceptionError,
    },
    #[error("invalid parameter: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Frontal,
    Blind,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Frontal => "frontal",
            ScenarioKind::Blind => "blind",
        }
    }
}

/// Direction of the robot's turn at the blind corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Turn {
    /// Robot turns left around the inside corner.
    Ab,
    /// Mirrored layout; robot turns right.
    Aprime,
}

impl Turn {
    pub fn name(self) -> &'static str {
        match self {
            Turn::Ab => "ab",
            Turn::Aprime => "aprime",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub resolution: f64,
    pub corridor_width: f64,
    pub corridor_length: f64,
    pub robot_length: f64,
    pub robot_width: f64,
    pub handedness: Handedness,
    pub lane_d_min: f64,
    pub lane_band_half_width: f64,
    pub lane_taper: f64,
    pub lane_axis_floor: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        let lane = LaneProfile::default();
        let fp = Footprint::default();
        Self {
            resolution: 0.05,
            corridor_width: 2.0,
            corridor_length: 20.0,
            robot_length: fp.length,
            robot_width: fp.width,
            handedness: Handedness::KeepLeft,
            lane_d_min: lane.d_min,
            lane_band_half_width: lane.band_half_width,
            lane_taper: lane.taper,
            lane_axis_floor: lane.axis_floor,
        }
    }
}

impl WorldConfig {
    pub fn footprint(&self) -> Option<Footprint> {
        Footprint::new(self.robot_length, self.robot_width)
    }

    pub fn lane_profile(&self, d_wall: f64) -> LaneProfile {
        LaneProfile {
            d_wall,
            d_min: self.lane_d_min,
            band_half_width: self.lane_band_half_width,
            taper: self.lane_taper,
            axis_floor: self.lane_axis_floor,
        }
    }
}

/// Global planner section; `w_lanes` is the weight used while no behavior
/// directive overrides it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    pub w_lanes: f64,
    pub w_person: f64,
    pub w_turn: f64,
    pub w_inflation: f64,
    pub step_cost: f64,
    pub r_buffer: f64,
    pub min_clearance: f64,
    pub inflation_radius: f64,
    pub snap_radius: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self::from(PlannerParams::default())
    }
}

impl From<PlannerParams> for PlannerConfig {
    fn from(p: PlannerParams) -> Self {
        Self {
            w_lanes: p.weights.w_lanes,
            w_person: p.weights.w_person,
            w_turn: p.weights.w_turn,
            w_inflation: p.weights.w_inflation,
            step_cost: p.weights.step_cost,
            r_buffer: p.r_buffer,
            min_clearance: p.min_clearance,
            inflation_radius: p.inflation_radius,
            snap_radius: p.snap_radius,
        }
    }
}

impl PlannerConfig {
    pub fn params(&self) -> PlannerParams {
        PlannerParams {
            weights: CostWeights {
                w_lanes: self.w_lanes,
                w_person: self.w_person,
                w_turn: self.w_turn,
                w_inflation: self.w_inflation,
                step_cost: self.step_cost,
            },
            r_buffer: self.r_buffer,
            min_clearance: self.min_clearance,
            inflation_radius: self.inflation_radius,
            snap_radius: self.snap_radius,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalPlannerConfig {
    pub v_forward_max: f64,
    pub v_lateral_max: f64,
    pub omega_max: f64,
    pub a_linear_max: f64,
    pub a_angular_max: f64,
    pub control_dt: f64,
    pub horizon: f64,
    pub sim_dt: f64,
    pub w_path: f64,
    pub w_heading: f64,
    pub w_clearance: f64,
    pub w_velocity: f64,
    pub clearance_saturation: f64,
    pub proximity_scale: f64,
    pub tangent_window: f64,
    pub person_clearance: f64,
    pub samples_vx: usize,
    pub samples_vy: usize,
    pub samples_omega: usize,
}

impl Default for LocalPlannerConfig {
    fn default() -> Self {
        let l = VelocityLimits::default();
        let p = LocalParams::default();
        Self {
            v_forward_max: l.v_forward_max,
            v_lateral_max: l.v_lateral_max,
            omega_max: l.omega_max,
            a_linear_max: l.a_linear_max,
            a_angular_max: l.a_angular_max,
            control_dt: l.control_dt,
            horizon: p.horizon,
            sim_dt: p.sim_dt,
            w_path: p.w_path,
            w_heading: p.w_heading,
            w_clearance: p.w_clearance,
            w_velocity: p.w_velocity,
            clearance_saturation: p.clearance_saturation,
            proximity_scale: p.proximity_scale,
            tangent_window: p.tangent_window,
            person_clearance: p.person_clearance,
            samples_vx: p.samples_vx,
            samples_vy: p.samples_vy,
            samples_omega: p.samples_omega,
        }
    }
}

impl LocalPlannerConfig {
    pub fn limits(&self) -> VelocityLimits {
        VelocityLimits {
            v_forward_max: self.v_forward_max,
            v_lateral_max: self.v_lateral_max,
            omega_max: self.omega_max,
            a_linear_max: self.a_linear_max,
            a_angular_max: self.a_angular_max,
            control_dt: self.control_dt,
        }
    }

    pub fn params(&self) -> LocalParams {
        LocalParams {
            horizon: self.horizon,
            sim_dt: self.sim_dt,
            w_path: self.w_path,
            w_heading: self.w_heading,
            w_clearance: self.w_clearance,
            w_velocity: self.w_velocity,
            clearance_saturation: self.clearance_saturation,
            proximity_scale: self.proximity_scale,
            tangent_window: self.tangent_window,
            person_clearance: self.person_clearance,
            samples_vx: self.samples_vx,
            samples_vy: self.samples_vy,
            samples_omega: self.samples_omega,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    pub sim_dt: f64,
    pub replan_period: f64,
    pub max_sim_time: f64,
    /// Frontal approach: robot start distance from the walker's start (m).
    pub initial_separation: f64,
    /// Length of the walker's route (m).
    pub route_length: f64,
    /// Blind corner: robot start distance from the corner apex (m).
    pub robot_corner_distance: f64,
    /// Blind corner: length of the second leg (m).
    pub leg2_length: f64,
    /// Blind corner: the walker starts this far up the second leg from the
    /// first leg's center line and spends the rest of its route in the first leg (m).
    pub human_corner_distance: f64,
    /// Robot goal distance from the corridor end wall (m).
    pub goal_margin: f64,
    pub goal_tolerance: f64,
    pub human_enabled: bool,
    pub robot_enabled: bool,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            sim_dt: 0.05,
            replan_period: 0.5,
            max_sim_time: 120.0,
            initial_separation: 15.0,
            route_length: 15.0,
            robot_corner_distance: 8.0,
            leg2_length: 10.0,
            human_corner_distance: 8.0,
            goal_margin: 0.7,
            goal_tolerance: 0.2,
            human_enabled: true,
            robot_enabled: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub world: WorldConfig,
    pub sensor: SensorModel,
    pub bayes: BayesParams,
    pub planner: PlannerConfig,
    pub local_planner: LocalPlannerConfig,
    pub behavior: BehaviorParams,
    pub human: HumanParams,
    pub harness: HarnessConfig,
}

/// True when `period` is an integral multiple of `dt`.
pub fn divides(dt: f64, period: f64) -> bool {
    let r = period / dt;
    r >= 1.0 - 1e-9 && (r - r.round()).abs() < 1e-6
}

pub fn ticks_per(dt: f64, period: f64) -> u64 {
    (period / dt).round() as u64
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let c: Config = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        self.sensor.validate().map_err(|source| ConfigError::Perception {
            section: "sensor",
            source,
        })?;
        self.bayes.validate().map_err(|source| ConfigError::Perception {
            section: "bayes",
            source,
        })?;
        if self.sensor.max_range <= self.bayes.d_activation {
            return Err(ConfigError::Perception {
                section: "sensor",
                source: PerceptionError::RangeBelowActivation {
                    max_range: self.sensor.max_range,
                    d_activation: self.bayes.d_activation,
                },
            });
        }
        let w = &self.world;
        if !(w.resolution > 0.0) {
            return bad(format!("world.resolution must be positive, got {}", w.resolution));
        }
        if w.footprint().is_none() {
            return bad("world.robot_length and robot_width must be positive".into());
        }
        if !(w.corridor_width > w.robot_width) || !(w.corridor_length > 0.0) {
            return bad("corridor must be wider than the robot and have positive length".into());
        }
        if !self.planner.params().weights.is_valid() {
            return bad("planner weights must be finite and non-negative".into());
        }
        if !self.local_planner.limits().is_valid() {
            return bad("local_planner velocity limits must be positive".into());
        }
        let h = &self.harness;
        if !(h.sim_dt > 0.0) {
            return bad(format!("harness.sim_dt must be positive, got {}", h.sim_dt));
        }
        for (name, period) in [
            ("harness.replan_period", h.replan_period),
            ("sensor period", self.sensor.period()),
            ("local_planner.control_dt", self.local_planner.control_dt),
        ] {
            if !divides(h.sim_dt, period) {
                return bad(format!("{name} ({period}) is not a multiple of sim_dt ({})", h.sim_dt));
            }
        }
        if h.initial_separation <= self.bayes.d_activation {
            return bad("harness.initial_separation must exceed bayes.d_activation".into());
        }
        let leg1 = h.robot_corner_distance + BLIND_ROBOT_START_X + 0.5 * w.corridor_width;
        let north = h.human_corner_distance.min(h.route_length);
        if !(h.human_corner_distance >= 0.0)
            || h.route_length - north > leg1 - 0.5
            || north > h.leg2_length - 0.5 * w.corridor_width - 0.5
        {
            return bad("blind-corner walker route does not fit the legs".into());
        }
        if !(self.human.preferred_speed > 0.0) {
            return bad("human.preferred_speed must be positive".into());
        }
        let b = &self.behavior;
        if !(0.0..=self.local_planner.v_forward_max).contains(&b.nominal_speed)
            || !(0.0..=b.nominal_speed).contains(&b.slow_speed)
        {
            return bad("behavior speeds must lie in [0, v_forward_max]".into());
        }
        if !(b.d2 > 0.0 && b.d1 > 0.0) {
            return bad("behavior.d1 and d2 must be positive".into());
        }
        if !(b.association_gate >= 0.0) {
            return bad("behavior.association_gate must be non-negative".into());
        }
        Ok(())
    }
}

/// One fully specified run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub turn: Option<Turn>,
    pub behavior: BehaviorMode,
    pub seed: u64,
    pub config: Config,
}

impl ScenarioConfig {
    pub fn new(scenario: ScenarioKind, turn: Option<Turn>, behavior: BehaviorMode, seed: u64) -> Self {
        Self {
            scenario,
            turn,
            behavior,
            seed,
            config: Config::default(),
        }
    }

    pub fn with_config(mut self, config: Config) -> Self {
        self.config = config;
        self
    }

    /// The effective turn; blind-corner runs default to `Ab`.
    pub fn effective_turn(&self) -> Option<Turn> {
        match self.scenario {
            ScenarioKind::Frontal => None,
            ScenarioKind::Blind => Some(self.turn.unwrap_or(Turn::Ab)),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.config.validate()?;
        match (self.scenario, self.turn) {
            (ScenarioKind::Frontal, Some(_)) => Err(ConfigError::Invalid("--turn only applies to the blind corner".into())),
            (ScenarioKind::Blind, Some(Turn::Aprime)) if self.behavior != BehaviorMode::Plc => Err(ConfigError::Invalid(
                "the mirrored blind-corner turn is only defined for the plc behavior".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Short identifier such as `blind-aprime-plc-s3`.
    pub fn label(&self) -> String {
        match self.effective_turn() {
            Some(t) => format!("{}-{}-{}-s{}", self.scenario.name(), t.name(), self.behavior.name(), self.seed),
            None => format!("{}-{}-s{}", self.scenario.name(), self.behavior.name(), self.seed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(Config::from_toml("").unwrap(), Config::default());
    }

    #[test]
    fn serialized_defaults_round_trip() {
        let c = Config::default();
        assert_eq!(Config::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(matches!(Config::from_toml("[world]\nbogus = 1\n"), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn period_must_divide() {
        let err = Config::from_toml("[harness]\nreplan_period = 0.47\n").unwrap_err();
        assert!(err.to_string().contains("replan_period"));
    }

    #[test]
    fn turn_combinations() {
        let frontal = ScenarioConfig::new(ScenarioKind::Frontal, Some(Turn::Ab), BehaviorMode::Plc, 0);
        assert!(frontal.validate().is_err());
        let mirrored = ScenarioConfig::new(ScenarioKind::Blind, Some(Turn::Aprime), BehaviorMode::Stop, 0);
        assert!(mirrored.validate().is_err());
        let ok = ScenarioConfig::new(ScenarioKind::Blind, Some(Turn::Aprime), BehaviorMode::Plc, 0);
        assert!(ok.validate().is_ok());
        assert_eq!(ok.label(), "blind-aprime-plc-s0");
    }
}
