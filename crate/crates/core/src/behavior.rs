//! Per-tick directive for the four encounter behaviors.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BehaviorMode {
    Constant,
    Stop,
    #[serde(alias = "slow")]
    SlowDown,
    Plc,
}

impl BehaviorMode {
    pub const ALL: [BehaviorMode; 4] = [
        BehaviorMode::Constant,
        BehaviorMode::Stop,
        BehaviorMode::SlowDown,
        BehaviorMode::Plc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BehaviorMode::Constant => "constant",
            BehaviorMode::Stop => "stop",
            BehaviorMode::SlowDown => "slow",
            BehaviorMode::Plc => "plc",
        }
    }

    /// Default running line for the mode when it is not overridden.
    pub fn placement(self) -> Placement {
        match self {
            BehaviorMode::Plc => Placement::Center,
            _ => Placement::LeftSide,
        }
    }
}

impl std::str::FromStr for BehaviorMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "constant" => Ok(BehaviorMode::Constant),
            "stop" => Ok(BehaviorMode::Stop),
            "slow" | "slow_down" => Ok(BehaviorMode::SlowDown),
            "plc" => Ok(BehaviorMode::Plc),
            other => Err(format!("unknown behavior '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    LeftSide,
    Center,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BehaviorParams {
    pub nominal_speed: f64,
    pub slow_speed: f64,
    /// Stop / slow trigger distance (m).
    pub trigger_distance: f64,
    /// Extra distance past the trigger before the cap is released (m).
    pub release_hysteresis: f64,
    /// Left-side running offset from the left wall (m).
    pub d1: f64,
    /// Lane offset adopted while lane changing (m).
    pub d2: f64,
    pub w_lanes_active: f64,
    /// Sensing-to-actuation delay the separation estimate is advanced by (s).
    pub reaction_time: f64,
    /// Walking speed assumed when advancing the separation estimate (m/s).
    pub assumed_person_speed: f64,
    /// Consecutive sensor ticks without any detection that release a
    /// stop/slow latch.
    pub release_after_missing: u32,
    /// Distance beyond the tracked separation within which a detection is
    /// taken to be the same person (m).
    pub association_gate: f64,
}

impl Default for BehaviorParams {
    fn default() -> Self {
        Self {
            nominal_speed: 0.4,
            slow_speed: 0.15,
            trigger_distance: 1.2,
            release_hysteresis: 0.2,
            d1: 0.65,
            d2: 0.45,
            w_lanes_active: 3.0,
            reaction_time: 0.2,
            assumed_person_speed: 1.25,
            release_after_missing: 5,
            association_gate: 0.75,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehaviorDirective {
    pub speed_cap: f64,
    pub w_lanes: f64,
    /// Running line, measured from the left wall (m).
    pub nominal_offset: f64,
}

/// Hysteresis state for the stop / slow trigger.
///
/// Keeps a one-dimensional track of the separation so that a dropped
/// detection near the trigger still engages, and a far detection that cannot
/// be the tracked person does not release an engaged cap.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TriggerLatch {
    pub engaged: bool,
    missing: u32,
    last: Option<f64>,
    /// Largest change of separation between two sensor ticks (m).
    step: f64,
}

impl TriggerLatch {
    /// Latch whose track may close by `step` metres per sensor tick.
    pub fn with_step(step: f64) -> Self {
        Self { step: step.max(0.0), ..Self::default() }
    }

    /// Feeds one separation sample; returns whether the cap is engaged.
    pub fn update(&mut self, separation: Option<f64>, params: &BehaviorParams) -> bool {
        let reach = self.step * f64::from(self.missing + 1);
        let associated = |d: f64, last: Option<f64>| match last {
            Some(l) => d <= l + reach + params.association_gate,
            None => true,
        };
        match separation {
            Some(d) if !self.engaged || associated(d, self.last) => {
                self.missing = 0;
                self.last = Some(d);
                if d <= params.trigger_distance {
                    self.engaged = true;
                } else if d > params.trigger_distance + params.release_hysteresis {
                    self.engaged = false;
                }
            }
            _ => {
                self.missing = self.missing.saturating_add(1);
                if self.missing >= params.release_after_missing {
                    self.engaged = false;
                    self.last = None;
                } else if let Some(l) = self.last {
                    // coast the track through the gap
                    if l - reach <= params.trigger_distance {
                        self.engaged = true;
                    }
                }
            }
        }
        self.engaged
    }
}

/// Separation advanced by the distance the pair can close during the
/// reaction delay.
pub fn compensated_separation(raw: f64, robot_speed: f64, params: &BehaviorParams) -> f64 {
    raw - (robot_speed + params.assumed_person_speed) * params.reaction_time
}

fn placement_offset(placement: Placement, corridor_width: f64, params: &BehaviorParams) -> f64 {
    match placement {
        Placement::LeftSide => params.d1,
        Placement::Center => 0.5 * corridor_width,
    }
}

/// Maps the behavior inputs of one tick to a directive, updating the latch.
pub fn directive(
    mode: BehaviorMode,
    separation: Option<f64>,
    gate_on: bool,
    placement: Placement,
    corridor_width: f64,
    latch: &mut TriggerLatch,
    params: &BehaviorParams,
) -> BehaviorDirective {
    let base = BehaviorDirective {
        speed_cap: params.nominal_speed,
        w_lanes: 0.0,
        nominal_offset: placement_offset(placement, corridor_width, params),
    };
    match mode {
        BehaviorMode::Constant => base,
        BehaviorMode::Stop | BehaviorMode::SlowDown => {
            if latch.update(separation, params) {
                let cap = if mode == BehaviorMode::Stop { 0.0 } else { params.slow_speed };
                BehaviorDirective { speed_cap: cap, ..base }
            } else {
                base
            }
        }
        BehaviorMode::Plc => {
            if gate_on {
                BehaviorDirective {
                    speed_cap: params.nominal_speed,
                    w_lanes: params.w_lanes_active,
                    nominal_offset: params.d2,
                }
            } else {
                BehaviorDirective {
                    nominal_offset: 0.5 * corridor_width,
                    ..base
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(mode: BehaviorMode, sep: Option<f64>, gate: bool, placement: Placement) -> BehaviorDirective {
        directive(
            mode,
            sep,
            gate,
            placement,
            2.0,
            &mut TriggerLatch::default(),
            &BehaviorParams::default(),
        )
    }

    #[test]
    fn stop_close_and_far() {
        assert_eq!(run(BehaviorMode::Stop, Some(1.0), false, Placement::LeftSide).speed_cap, 0.0);
        let far = run(BehaviorMode::Stop, Some(2.0), false, Placement::LeftSide);
        assert_eq!(far.speed_cap, 0.4);
        assert_eq!(far.nominal_offset, 0.65);
    }

    #[test]
    fn slow_down_cap() {
        assert_eq!(run(BehaviorMode::SlowDown, Some(1.0), false, Placement::LeftSide).speed_cap, 0.15);
    }

    #[test]
    fn plc_gate() {
        let off = run(BehaviorMode::Plc, Some(3.0), false, Placement::Center);
        assert_eq!((off.w_lanes, off.nominal_offset, off.speed_cap), (0.0, 1.0, 0.4));
        let on = run(BehaviorMode::Plc, None, true, Placement::Center);
        assert_eq!((on.w_lanes, on.nominal_offset, on.speed_cap), (3.0, 0.45, 0.4));
    }

    #[test]
    fn constant_ignores_inputs() {
        let a = run(BehaviorMode::Constant, Some(0.5), true, Placement::LeftSide);
        let b = run(BehaviorMode::Constant, None, false, Placement::LeftSide);
        assert_eq!(a, b);
        assert_eq!(run(BehaviorMode::Constant, None, false, Placement::Center).nominal_offset, 1.0);
    }

    #[test]
    fn hysteresis_band() {
        let p = BehaviorParams::default();
        let mut latch = TriggerLatch::default();
        let seq = [2.0, 1.3, 1.2, 1.25, 1.35, 1.4, 1.3, 1.41, 1.3];
        let caps: Vec<bool> = seq.iter().map(|d| latch.update(Some(*d), &p)).collect();
        assert_eq!(caps, [false, false, true, true, true, true, true, false, false]);
    }

    #[test]
    fn missing_detections_release_after_a_while() {
        let p = BehaviorParams::default();
        let mut latch = TriggerLatch::default();
        latch.update(Some(1.0), &p);
        for _ in 0..4 {
            assert!(latch.update(None, &p));
        }
        assert!(!latch.update(None, &p));
    }

    #[test]
    fn far_stray_detection_does_not_release() {
        let p = BehaviorParams::default();
        let mut latch = TriggerLatch::with_step(0.165);
        assert!(latch.update(Some(0.9), &p));
        assert!(latch.update(Some(6.0), &p));
        assert!(latch.update(Some(1.0), &p));
        // the tracked person walking away does release
        assert!(latch.update(Some(1.3), &p));
        assert!(!latch.update(Some(1.5), &p));
    }

    #[test]
    fn dropout_near_trigger_engages_by_coasting() {
        let p = BehaviorParams::default();
        let mut latch = TriggerLatch::with_step(0.165);
        assert!(!latch.update(Some(1.5), &p));
        assert!(!latch.update(None, &p));
        assert!(latch.update(None, &p));
        let mut plain = TriggerLatch::default();
        plain.update(Some(1.5), &p);
        assert!(!plain.update(None, &p));
    }

    #[test]
    fn mode_parsing() {
        for m in BehaviorMode::ALL {
            assert_eq!(m.name().parse::<BehaviorMode>().unwrap(), m);
        }
        assert!("fast".parse::<BehaviorMode>().is_err());
    }
}
