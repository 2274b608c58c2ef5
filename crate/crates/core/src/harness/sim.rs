//! Fixed-step simulation of one robot and one walker.
//!
//! Per tick: sense (sensor ticks), filter, behavior directive, replan
//! (replan ticks, or at once when the directive changes), local command
//! (control ticks), log, integrate, then collision and termination checks.

use glam::DVec2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{ticks_per, ScenarioConfig};
use super::scenario::{build_scenario, Scenario, ScenarioError};
use crate::behavior::{compensated_separation, directive, BehaviorDirective, TriggerLatch};
use crate::local::{select_command, step_pose, LocalContext, VelocityCommand};
use crate::pedestrian::{step_human, HumanState};
use crate::perception::{bayes_step, nearest_detection, presence_observed, sense, Belief, Detection};
use crate::planner::{plan, PlanContext, PlannedPath};
use crate::world::{FootprintChecker, OccupancyGrid, Pose2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HumanSample {
    pub position: DVec2,
    pub speed: f64,
}

/// World state at one tick, with the command applied from that tick on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TickRecord {
    pub t: f64,
    pub robot: Pose2,
    pub cmd: VelocityCommand,
    pub speed_cap: f64,
    pub w_lanes: f64,
    pub belief: f64,
    pub gate: bool,
    pub human: Option<HumanSample>,
    /// True center-to-center distance.
    pub separation: Option<f64>,
    pub n_detections: usize,
    /// Robot center distance from the left wall of its current leg.
    pub left_offset: f64,
    pub robot_done: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanRecord {
    pub t: f64,
    pub path: PlannedPath,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    Timeout,
    Collision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionKind {
    RobotWall,
    RobotHuman,
}

#[derive(Debug, Clone)]
pub struct TrajectoryLog {
    pub records: Vec<TickRecord>,
    pub plans: Vec<PlanRecord>,
    pub termination: Termination,
    pub collision: Option<CollisionKind>,
    pub human_finish_time: Option<f64>,
    pub robot_finish_time: Option<f64>,
    pub sensor_ticks: u64,
    /// Replans on the fixed replan schedule.
    pub replans: u64,
    /// Extra replans triggered by a directive change between scheduled ones.
    pub event_replans: u64,
    pub failed_plans: u64,
    pub route_length: f64,
    pub sim_dt: f64,
}

impl TrajectoryLog {
    pub fn duration(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.t)
    }
}

/// Collision-free check of the walker disc against the robot body.
fn touches(pose: &Pose2, human: DVec2, footprint: &crate::world::Footprint, radius: f64) -> bool {
    footprint.distance_to(pose, human) < radius
}

pub fn run(cfg: &ScenarioConfig) -> Result<(Scenario, TrajectoryLog), ScenarioError> {
    let scenario = build_scenario(cfg, None)?;
    let log = simulate(cfg, &scenario);
    Ok((scenario, log))
}

pub fn run_with_map(cfg: &ScenarioConfig, grid: Option<OccupancyGrid>) -> Result<(Scenario, TrajectoryLog), ScenarioError> {
    let scenario = build_scenario(cfg, grid)?;
    let log = simulate(cfg, &scenario);
    Ok((scenario, log))
}

/// Runs the loop on a prepared scenario. Deterministic in `cfg.seed`.
pub fn simulate(cfg: &ScenarioConfig, sc: &Scenario) -> TrajectoryLog {
    let c = &cfg.config;
    let h = &c.harness;
    let dt = h.sim_dt;
    let sensor_every = ticks_per(dt, c.sensor.period());
    let replan_every = ticks_per(dt, h.replan_period);
    let control_every = ticks_per(dt, c.local_planner.control_dt);
    let max_ticks = (h.max_sim_time / dt).round() as u64;
    let footprint = c.world.footprint().expect("validated footprint");
    let limits = c.local_planner.limits();
    let local_params = c.local_planner.params();
    let base_planner = c.planner.params();
    let checker = FootprintChecker::new(&sc.grid, &sc.dfield, footprint);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut pose = sc.robot_start;
    let mut cmd = VelocityCommand::ZERO;
    let mut belief = Belief::new(c.bayes.prior);
    let mut latch = TriggerLatch::with_step(
        (c.behavior.nominal_speed + c.behavior.assumed_person_speed) * sensor_every as f64 * dt,
    );
    let mut dir: BehaviorDirective = directive(
        cfg.behavior,
        None,
        false,
        sc.placement,
        sc.corridor_width,
        &mut TriggerLatch::default(),
        &c.behavior,
    );
    let mut human = (!sc.human_route.is_empty()).then(|| HumanState::new(sc.human_route.clone(), c.human.preferred_speed));
    let mut detections: Vec<Detection> = Vec::new();
    let mut path: Option<PlannedPath> = None;
    let mut planned_for: Option<(f64, f64)> = None;
    let robot_on = h.robot_enabled;
    let mut robot_done = !robot_on;

    let mut log = TrajectoryLog {
        records: Vec::with_capacity(max_ticks as usize + 1),
        plans: Vec::new(),
        termination: Termination::Timeout,
        collision: None,
        human_finish_time: None,
        robot_finish_time: None,
        sensor_ticks: 0,
        replans: 0,
        event_replans: 0,
        failed_plans: 0,
        route_length: sc.route_length(),
        sim_dt: dt,
    };
    let mut ending: Option<Termination> = None;

    for k in 0..=max_ticks {
        let t = k as f64 * dt;
        if k % sensor_every == 0 {
            let persons: Vec<DVec2> = human.iter().map(|p| p.position).collect();
            detections = sense(&pose, &persons, &sc.grid, &c.sensor, k / sensor_every, &mut rng);
            log.sensor_ticks += 1;
            let observed = robot_on && presence_observed(&pose, &detections, c.bayes.d_activation);
            belief = bayes_step(belief, observed, &c.bayes);
            let sep = nearest_detection(&pose, &detections).map(|d| compensated_separation(d, cmd.speed(), &c.behavior));
            dir = directive(
                cfg.behavior,
                sep,
                belief.gate_on,
                sc.placement,
                sc.corridor_width,
                &mut latch,
                &c.behavior,
            );
        }
        let person_pts: Vec<DVec2> = detections.iter().map(|d| d.position).collect();
        // a changed lane weight or goal offset invalidates the current path at once
        let directive_changed = planned_for.map_or(false, |(w, o)| w != dir.w_lanes || o != dir.nominal_offset);
        let scheduled = k % replan_every == 0;
        if robot_on && (scheduled || directive_changed) {
            planned_for = Some((dir.w_lanes, dir.nominal_offset));
            let mut params = base_planner;
            params.weights.w_lanes = dir.w_lanes;
            let ctx = PlanContext {
                grid: &sc.grid,
                dfield: &sc.dfield,
                lane: &sc.lane,
                persons: &person_pts,
                params: &params,
            };
            if scheduled {
                log.replans += 1;
            } else {
                log.event_replans += 1;
            }
            match plan(&pose, &sc.goal(dir.nominal_offset), &ctx) {
                Ok(p) => {
                    log.plans.push(PlanRecord { t, path: p.clone() });
                    path = Some(p);
                }
                Err(_) => log.failed_plans += 1,
            }
        }
        if ending.is_some() || robot_done {
            cmd = VelocityCommand::ZERO;
        } else if k % control_every == 0 {
            let ctx = LocalContext {
                grid: &sc.grid,
                dfield: &sc.dfield,
                footprint,
                persons: &person_pts,
            };
            cmd = match &path {
                Some(p) => select_command(&pose, &cmd, p, &ctx, &limits, &local_params, dir.speed_cap)
                    .unwrap_or(VelocityCommand::ZERO),
                None => VelocityCommand::ZERO,
            };
        }
        let human_sample = human.as_ref().map(|p| HumanSample {
            position: p.position,
            speed: p.speed(),
        });
        log.records.push(TickRecord {
            t,
            robot: pose,
            cmd,
            speed_cap: dir.speed_cap,
            w_lanes: dir.w_lanes,
            belief: belief.probability(),
            gate: belief.gate_on,
            human: human_sample,
            separation: match (robot_on, &human) {
                (true, Some(p)) => Some(p.position.distance(pose.position())),
                _ => None,
            },
            n_detections: detections.len(),
            left_offset: sc.left_offset(pose.position()),
            robot_done,
        });
        if let Some(e) = ending {
            log.termination = e;
            return log;
        }
        if k == max_ticks {
            log.termination = Termination::Timeout;
            return log;
        }

        let before = pose;
        if robot_on {
            pose = step_pose(&pose, &cmd, dt);
        }
        if let Some(p) = human.as_mut() {
            *p = step_human(p, robot_on.then_some(&before), &footprint, &sc.grid, dt, &c.human);
            if p.finished && log.human_finish_time.is_none() {
                log.human_finish_time = Some(t + dt);
            }
        }
        if robot_on && checker.collides(&pose) {
            log.collision = Some(CollisionKind::RobotWall);
        } else if let (true, Some(p)) = (robot_on, &human) {
            if touches(&pose, p.position, &footprint, c.human.body_radius) {
                log.collision = Some(CollisionKind::RobotHuman);
            }
        }
        if log.collision.is_some() {
            ending = Some(Termination::Collision);
            continue;
        }
        if !robot_done && pose.position().distance(sc.goal(dir.nominal_offset).position()) <= h.goal_tolerance {
            robot_done = true;
            log.robot_finish_time = Some(t + dt);
        }
        let human_done = human.as_ref().map_or(true, |p| p.finished);
        if human_done && robot_done {
            ending = Some(Termination::Completed);
        }
    }
    log
}
