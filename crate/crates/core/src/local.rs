//! Dynamic-window local planner for the omnidirectional base.

use glam::DVec2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::planner::PlannedPath;
use crate::world::{normalize_angle, DistanceField, Footprint, FootprintChecker, OccupancyGrid, Pose2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VelocityLimits {
    pub v_forward_max: f64,
    pub v_lateral_max: f64,
    pub omega_max: f64,
    pub a_linear_max: f64,
    pub a_angular_max: f64,
    pub control_dt: f64,
}

impl Default for VelocityLimits {
    fn default() -> Self {
        Self {
            v_forward_max: 0.4,
            v_lateral_max: 0.2,
            omega_max: 1.0,
            a_linear_max: 0.5,
            a_angular_max: 2.0,
            control_dt: 0.1,
        }
    }
}

impl VelocityLimits {
    pub fn is_valid(&self) -> bool {
        [
            self.v_forward_max,
            self.v_lateral_max,
            self.omega_max,
            self.a_linear_max,
            self.a_angular_max,
            self.control_dt,
        ]
        .iter()
        .all(|v| *v > 0.0 && v.is_finite())
    }
}

/// Robot-frame velocity: `vx` forward, `vy` to the left, `omega` counter-clockwise.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VelocityCommand {
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
}

impl VelocityCommand {
    pub const ZERO: VelocityCommand = VelocityCommand {
        vx: 0.0,
        vy: 0.0,
        omega: 0.0,
    };

    pub fn new(vx: f64, vy: f64, omega: f64) -> Self {
        Self { vx, vy, omega }
    }

    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }

    pub fn is_translating(&self) -> bool {
        self.vx != 0.0 || self.vy != 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalParams {
    pub horizon: f64,
    pub sim_dt: f64,
    pub w_path: f64,
    pub w_heading: f64,
    pub w_clearance: f64,
    pub w_velocity: f64,
    /// Clearance term saturates at this center-to-wall distance (m).
    pub clearance_saturation: f64,
    /// Lateral error from the path that costs one unit of the proximity term (m).
    pub proximity_scale: f64,
    /// Path length over which the heading reference is averaged (m).
    pub tangent_window: f64,
    /// Keep-out radius around each detected person, measured from the
    /// robot footprint (m).
    pub person_clearance: f64,
    pub samples_vx: usize,
    pub samples_vy: usize,
    pub samples_omega: usize,
}

impl Default for LocalParams {
    fn default() -> Self {
        Self {
            horizon: 1.5,
            sim_dt: 0.05,
            w_path: 1.0,
            w_heading: 0.3,
            w_clearance: 0.5,
            w_velocity: 0.2,
            clearance_saturation: 0.5,
            proximity_scale: 0.25,
            tangent_window: 1.0,
            person_clearance: 0.35,
            samples_vx: 7,
            samples_vy: 5,
            samples_omega: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LocalError {
    #[error("the global path is empty")]
    EmptyPath,
    #[error("horizon {horizon} is not an integral multiple of sim_dt {sim_dt}")]
    Horizon { horizon: f64, sim_dt: f64 },
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 || hi - lo <= 0.0 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Candidate commands reachable within one control period, capped to the
/// absolute limits and to `speed_cap`. The zero command is always included.
pub fn sample_window(current: &VelocityCommand, limits: &VelocityLimits, speed_cap: f64) -> Vec<VelocityCommand> {
    sample_window_n(current, limits, speed_cap, (7, 5, 7))
}

pub fn sample_window_n(
    current: &VelocityCommand,
    limits: &VelocityLimits,
    speed_cap: f64,
    (nx, ny, nw): (usize, usize, usize),
) -> Vec<VelocityCommand> {
    let dv = limits.a_linear_max * limits.control_dt;
    let dw = limits.a_angular_max * limits.control_dt;
    let window = |c: f64, d: f64, lo: f64, hi: f64| {
        let a = (c - d).clamp(lo, hi);
        let b = (c + d).clamp(lo, hi);
        (a, b)
    };
    let (vx0, vx1) = window(current.vx, dv, 0.0, limits.v_forward_max);
    let (vy0, vy1) = window(current.vy, dv, -limits.v_lateral_max, limits.v_lateral_max);
    let (w0, w1) = window(current.omega, dw, -limits.omega_max, limits.omega_max);
    let cap = speed_cap.clamp(0.0, limits.v_forward_max);
    let mut out: Vec<VelocityCommand> = Vec::with_capacity(nx * ny * nw + 1);
    out.push(VelocityCommand::ZERO);
    for &vx in &linspace(vx0, vx1, nx) {
        for &vy in &linspace(vy0, vy1, ny) {
            for &w in &linspace(w0, w1, nw) {
                let s = vx.hypot(vy);
                let (vx, vy) = if s > cap {
                    if s > 0.0 && cap > 0.0 {
                        (vx * cap / s, vy * cap / s)
                    } else {
                        (0.0, 0.0)
                    }
                } else {
                    (vx, vy)
                };
                let c = VelocityCommand::new(vx, vy, w);
                if !out.contains(&c) {
                    out.push(c);
                }
            }
        }
    }
    out
}

/// Forward-integrates a constant command. Returns the start pose followed by
/// one pose per `sim_dt` step.
pub fn rollout(pose: &Pose2, cmd: &VelocityCommand, horizon: f64, sim_dt: f64) -> Result<Vec<Pose2>, LocalError> {
    let steps = horizon / sim_dt;
    if !(sim_dt > 0.0) || (steps - steps.round()).abs() > 1e-9 {
        return Err(LocalError::Horizon { horizon, sim_dt });
    }
    let n = steps.round() as usize;
    let mut out = Vec::with_capacity(n + 1);
    let mut p = *pose;
    out.push(p);
    for _ in 0..n {
        p = step_pose(&p, cmd, sim_dt);
        out.push(p);
    }
    Ok(out)
}

/// One first-order integration step.
pub fn step_pose(p: &Pose2, cmd: &VelocityCommand, dt: f64) -> Pose2 {
    let d = p.rotate(DVec2::new(cmd.vx, cmd.vy)) * dt;
    Pose2::new(p.x + d.x, p.y + d.y, p.theta + cmd.omega * dt)
}

/// Arc-length parameterized view of the global path.
struct PathView {
    points: Vec<DVec2>,
    s: Vec<f64>,
}

impl PathView {
    fn new(path: &PlannedPath) -> Self {
        let points = path.points();
        let mut s = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        for (i, p) in points.iter().enumerate() {
            if i > 0 {
                acc += p.distance(points[i - 1]);
            }
            s.push(acc);
        }
        Self { points, s }
    }

    /// Point at arc length `s`, clamped to the path ends.
    fn point_at(&self, s: f64) -> DVec2 {
        let i = self.s.partition_point(|&x| x <= s);
        if i == 0 {
            return self.points[0];
        }
        if i >= self.points.len() {
            return *self.points.last().expect("non-empty path");
        }
        let (a, b) = (self.points[i - 1], self.points[i]);
        let span = self.s[i] - self.s[i - 1];
        if span > 0.0 {
            a + (b - a) * ((s - self.s[i - 1]) / span)
        } else {
            a
        }
    }

    /// Direction of the chord spanning `window` of path from `s`, falling
    /// back to `fallback` near the path end.
    fn smoothed_tangent(&self, s: f64, window: f64, fallback: DVec2) -> DVec2 {
        let chord = self.point_at(s + window) - self.point_at(s);
        if chord.length() > 1e-9 {
            chord.normalize()
        } else {
            fallback
        }
    }

    /// Closest point on the polyline restricted to segments ending at or
    /// after `s_min`: returns (arc length, distance, unit tangent).
    fn project(&self, q: DVec2, s_min: f64) -> (f64, f64, DVec2) {
        if self.points.len() == 1 {
            return (0.0, q.distance(self.points[0]), DVec2::ZERO);
        }
        let mut best = (0.0, f64::INFINITY, DVec2::ZERO);
        for i in 0..self.points.len() - 1 {
            if self.s[i + 1] < s_min {
                continue;
            }
            let (a, b) = (self.points[i], self.points[i + 1]);
            let ab = b - a;
            let len2 = ab.length_squared();
            let t = if len2 > 0.0 { ((q - a).dot(ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
            let d = q.distance(a + ab * t);
            if d < best.1 {
                best = (self.s[i] + t * len2.sqrt(), d, ab.normalize_or_zero());
            }
        }
        best
    }
}

/// Obstacles and map data the local planner scores against.
#[derive(Clone, Copy)]
pub struct LocalContext<'a> {
    pub grid: &'a OccupancyGrid,
    pub dfield: &'a DistanceField,
    pub footprint: Footprint,
    /// Detected person positions, treated as static discs over the horizon.
    pub persons: &'a [DVec2],
}

/// Score breakdown for one candidate; `None` score means its rollout collides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scored {
    pub cmd: VelocityCommand,
    pub score: Option<f64>,
}

/// Per-call scoring state shared by [`score_candidates`] and [`select_command`].
struct Scorer<'a> {
    pose: Pose2,
    view: PathView,
    checker: FootprintChecker<'a>,
    ctx: &'a LocalContext<'a>,
    limits: &'a VelocityLimits,
    params: &'a LocalParams,
    s0: f64,
    reach: f64,
}

impl<'a> Scorer<'a> {
    fn new(
        pose: &Pose2,
        path: &PlannedPath,
        ctx: &'a LocalContext<'a>,
        limits: &'a VelocityLimits,
        params: &'a LocalParams,
    ) -> Result<Self, LocalError> {
        if path.nodes.is_empty() {
            return Err(LocalError::EmptyPath);
        }
        let view = PathView::new(path);
        let (s0, _, _) = view.project(pose.position(), f64::NEG_INFINITY);
        Ok(Self {
            pose: *pose,
            view,
            checker: FootprintChecker::new(ctx.grid, ctx.dfield, ctx.footprint),
            ctx,
            limits,
            params,
            s0,
            reach: limits.v_forward_max * params.horizon,
        })
    }

    /// Rollout and its score, ignoring collisions.
    fn score(&self, cmd: &VelocityCommand) -> Result<(Vec<Pose2>, f64), LocalError> {
        let params = self.params;
        let poses = rollout(&self.pose, cmd, params.horizon, params.sim_dt)?;
        let clear = poses
            .iter()
            .map(|p| self.ctx.dfield.clearance_at(p.position()))
            .fold(f64::INFINITY, f64::min);
        let end = poses.last().expect("rollout has at least one pose");
        let (s1, err, tangent) = self.view.project(end.position(), self.s0 - 0.5);
        let tangent = if params.tangent_window > 0.0 {
            self.view.smoothed_tangent(s1, params.tangent_window, tangent)
        } else {
            tangent
        };
        let progress = ((s1 - self.s0) / self.reach).clamp(-1.0, 1.0);
        let path_term = 0.5 * progress + 0.5 * (1.0 - err / params.proximity_scale);
        let heading_term = if tangent == DVec2::ZERO {
            1.0
        } else {
            0.5 * (1.0 + end.heading().dot(tangent))
        };
        let clear_term = clear.clamp(0.0, params.clearance_saturation) / params.clearance_saturation;
        let vel_term = cmd.speed() / self.limits.v_forward_max;
        let score = params.w_path * path_term
            + params.w_heading * heading_term
            + params.w_clearance * clear_term
            + params.w_velocity * vel_term;
        Ok((poses, score))
    }

    /// True when any pose touches a wall or comes too close to a person.
    fn hits(&self, poses: &[Pose2]) -> bool {
        let fp = &self.ctx.footprint;
        // proven wall margin of the last checked pose and how far samples moved since
        let (mut safe, mut moved) = (0.0, f64::INFINITY);
        let mut prev = poses[0];
        for p in poses {
            moved += p.position().distance(prev.position())
                + normalize_angle(p.theta - prev.theta).abs() * fp.circumradius();
            prev = *p;
            let wall_hit = if moved < safe {
                false
            } else if let Some(m) = self.checker.margin(p) {
                (safe, moved) = (m, 0.0);
                false
            } else {
                (safe, moved) = (0.0, f64::INFINITY);
                self.checker.collides(p)
            };
            if wall_hit
                || self
                    .ctx
                    .persons
                    .iter()
                    .any(|q| fp.distance_to(p, *q) < self.params.person_clearance)
            {
                return true;
            }
        }
        false
    }
}

fn candidates(current: &VelocityCommand, limits: &VelocityLimits, params: &LocalParams, cap: f64) -> Vec<VelocityCommand> {
    sample_window_n(
        current,
        limits,
        cap,
        (params.samples_vx, params.samples_vy, params.samples_omega),
    )
}

/// Scores every candidate in enumeration order.
pub fn score_candidates(
    pose: &Pose2,
    current: &VelocityCommand,
    path: &PlannedPath,
    ctx: &LocalContext,
    limits: &VelocityLimits,
    params: &LocalParams,
    speed_cap: f64,
) -> Result<Vec<Scored>, LocalError> {
    let scorer = Scorer::new(pose, path, ctx, limits, params)?;
    candidates(current, limits, params, speed_cap)
        .into_iter()
        .map(|cmd| {
            let (poses, score) = scorer.score(&cmd)?;
            Ok(Scored {
                cmd,
                score: (!scorer.hits(&poses)).then_some(score),
            })
        })
        .collect()
}

/// Best-scoring collision-free candidate, first in enumeration order on
/// ties; the zero command when every rollout collides.
///
/// Candidates are collision-checked best first, so usually only a few
/// rollouts are checked.
pub fn select_command(
    pose: &Pose2,
    current: &VelocityCommand,
    path: &PlannedPath,
    ctx: &LocalContext,
    limits: &VelocityLimits,
    params: &LocalParams,
    speed_cap: f64,
) -> Result<VelocityCommand, LocalError> {
    let scorer = Scorer::new(pose, path, ctx, limits, params)?;
    let mut ranked = candidates(current, limits, params, speed_cap)
        .into_iter()
        .map(|cmd| scorer.score(&cmd).map(|(poses, score)| (cmd, poses, score)))
        .collect::<Result<Vec<_>, _>>()?;
    // stable sort keeps enumeration order among equal scores
    ranked.sort_by(|a, b| b.2.total_cmp(&a.2));
    Ok(ranked
        .into_iter()
        .find(|(_, poses, _)| !scorer.hits(poses))
        .map_or(VelocityCommand::ZERO, |(cmd, _, _)| cmd))
}
