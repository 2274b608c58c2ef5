//! Rule-based walker: follows its route, steps aside to its left for the
//! robot and waits when there is no room to pass.

use glam::DVec2;
use serde::{Deserialize, Serialize};

use crate::world::{Footprint, OccupancyGrid, Pose2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HumanParams {
    pub preferred_speed: f64,
    /// Clearance kept between the body center and the robot footprint (m).
    pub lateral_clearance_min: f64,
    /// Narrowest gap between robot and wall the walker will pass through (m).
    pub stop_gap_min: f64,
    /// Linear acceleration and braking (m/s^2).
    pub accel: f64,
    pub max_lateral_speed: f64,
    /// Time constant of the sideways correction (s).
    pub lateral_gain_time: f64,
    pub lookahead_length: f64,
    pub lookahead_width: f64,
    /// Side steps stop this far (body center) from a wall (m).
    pub wall_clearance: f64,
    /// Intermediate waypoints count as reached within this along-track distance (m).
    pub waypoint_tolerance: f64,
    /// Below this distance to the robot the walker waits until it has its clearance (m).
    pub close_distance: f64,
    pub body_radius: f64,
    /// After standing this long the walker accepts `squeeze_gap_min` (s).
    pub patience: f64,
    /// Narrowest gap a walker squeezes through once out of patience (m).
    pub squeeze_gap_min: f64,
}

impl Default for HumanParams {
    fn default() -> Self {
        Self {
            preferred_speed: 1.25,
            lateral_clearance_min: 0.40,
            stop_gap_min: 0.70,
            accel: 1.0,
            max_lateral_speed: 0.6,
            lateral_gain_time: 0.3,
            lookahead_length: 3.0,
            lookahead_width: 1.2,
            wall_clearance: 0.3,
            waypoint_tolerance: 0.3,
            close_distance: 1.0,
            body_radius: 0.25,
            patience: 1.5,
            squeeze_gap_min: 0.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanState {
    pub position: DVec2,
    pub velocity: DVec2,
    pub route: Vec<DVec2>,
    /// Index of the waypoint currently walked toward.
    pub target: usize,
    /// Speed along the walking direction, ramped by `accel`.
    pub forward_speed: f64,
    pub finished: bool,
    /// Time spent standing for the robot (s).
    #[serde(default)]
    pub waited: f64,
}

impl HumanState {
    /// Starts at the first waypoint, already walking at `speed`.
    pub fn new(route: Vec<DVec2>, speed: f64) -> Self {
        let position = route.first().copied().unwrap_or(DVec2::ZERO);
        let finished = route.len() < 2;
        Self {
            position,
            velocity: DVec2::ZERO,
            route,
            target: 1,
            forward_speed: if finished { 0.0 } else { speed },
            finished,
            waited: 0.0,
        }
    }

    pub fn speed(&self) -> f64 {
        self.velocity.length()
    }

    pub fn route_length(&self) -> f64 {
        self.route.windows(2).map(|w| w[0].distance(w[1])).sum()
    }
}

/// Oriented rectangle given by center, unit axis and half extents.
#[derive(Debug, Clone, Copy)]
struct Obb {
    center: DVec2,
    axis: DVec2,
    half: DVec2,
}

impl Obb {
    fn radius_on(&self, n: DVec2) -> f64 {
        self.half.x * self.axis.dot(n).abs() + self.half.y * self.axis.perp().dot(n).abs()
    }

    fn overlaps(&self, o: &Obb) -> bool {
        let d = o.center - self.center;
        [self.axis, self.axis.perp(), o.axis, o.axis.perp()]
            .iter()
            .all(|&n| d.dot(n).abs() <= self.radius_on(n) + o.radius_on(n))
    }
}

/// Free distance from `p` along `dir` before hitting an occupied cell.
fn free_run(grid: &OccupancyGrid, p: DVec2, dir: DVec2, max: f64) -> f64 {
    let step = 0.5 * grid.resolution();
    let mut t = 0.0;
    while t <= max {
        if grid.occupied_at(p + dir * t) {
            return t;
        }
        t += step;
    }
    max
}

/// Outcome of the avoidance rule for one step, exposed for inspection.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Avoidance {
    pub robot_ahead: bool,
    /// Desired sideways shift, positive to the walker's left (m).
    pub shift: f64,
    pub wait: bool,
}

/// With `squeeze` set the walker accepts the narrower squeeze gap and takes
/// whatever side step the walls allow.
pub fn avoidance(
    pos: DVec2,
    dir: DVec2,
    robot: &Pose2,
    footprint: &Footprint,
    grid: &OccupancyGrid,
    p: &HumanParams,
    squeeze: bool,
) -> Avoidance {
    let look = Obb {
        center: pos + dir * (0.5 * p.lookahead_length),
        axis: dir,
        half: DVec2::new(0.5 * p.lookahead_length, 0.5 * p.lookahead_width),
    };
    let body = Obb {
        center: robot.position(),
        axis: robot.heading(),
        half: DVec2::new(footprint.half_length(), footprint.half_width()),
    };
    if !look.overlaps(&body) {
        return Avoidance::default();
    }
    let left = dir.perp();
    let corners = footprint.corners(robot);
    let lat = |c: &DVec2| (*c - pos).dot(left);
    let l_min = corners.iter().map(lat).fold(f64::INFINITY, f64::min);
    let l_max = corners.iter().map(lat).fold(f64::NEG_INFINITY, f64::max);
    let l_center = (robot.position() - pos).dot(left);
    // pass on the side away from the robot, keeping left on a tie
    let side = if l_center <= 0.0 { 1.0 } else { -1.0 };
    let (edge, edge_pt) = if side > 0.0 {
        let i = (0..4).max_by(|&a, &b| lat(&corners[a]).total_cmp(&lat(&corners[b]))).unwrap();
        (l_max, corners[i])
    } else {
        let i = (0..4).min_by(|&a, &b| lat(&corners[a]).total_cmp(&lat(&corners[b]))).unwrap();
        (l_min, corners[i])
    };
    let needed = (side * edge + p.lateral_clearance_min).max(0.0);
    let room = (free_run(grid, pos, left * side, 5.0) - p.wall_clearance).max(0.0);
    let shift = needed.min(room);
    let gap = free_run(grid, edge_pt, left * side, 5.0);
    let clearance = footprint.distance_to(robot, pos);
    let near = clearance < p.close_distance;
    let wait = if squeeze {
        gap < p.squeeze_gap_min || (near && shift > 0.05)
    } else {
        gap < p.stop_gap_min || (near && needed > room + 1e-9) || (near && needed > 0.05)
    };
    Avoidance {
        robot_ahead: true,
        shift: side * shift,
        wait,
    }
}

/// Advances the walker by `dt`. Deterministic.
pub fn step_human(
    state: &HumanState,
    robot: Option<&Pose2>,
    footprint: &Footprint,
    grid: &OccupancyGrid,
    dt: f64,
    p: &HumanParams,
) -> HumanState {
    let mut s = state.clone();
    if s.finished {
        s.velocity = DVec2::ZERO;
        s.forward_speed = 0.0;
        return s;
    }
    let last = s.route.len() - 1;
    // skip intermediate waypoints that are already close along the track
    while s.target < last {
        let seg = s.route[s.target] - s.route[s.target - 1];
        let along = (s.route[s.target] - s.position).dot(seg.normalize_or_zero());
        if along <= p.waypoint_tolerance {
            s.target += 1;
        } else {
            break;
        }
    }
    let goal = s.route[s.target];
    let to_goal = goal - s.position;
    let dir = to_goal.normalize_or_zero();
    if dir == DVec2::ZERO {
        s.finished = true;
        s.velocity = DVec2::ZERO;
        return s;
    }

    let squeeze = s.waited >= p.patience;
    let av = robot.map_or(Avoidance::default(), |r| avoidance(s.position, dir, r, footprint, grid, p, squeeze));
    if !av.robot_ahead {
        s.waited = 0.0;
    } else if av.wait && s.forward_speed == 0.0 {
        s.waited += dt;
    }
    let target_speed = if av.wait { 0.0 } else { p.preferred_speed };
    let dv = p.accel * dt;
    s.forward_speed = if s.forward_speed < target_speed {
        (s.forward_speed + dv).min(target_speed)
    } else {
        (s.forward_speed - dv).max(target_speed)
    };
    let v_lat = (av.shift / p.lateral_gain_time).clamp(-p.max_lateral_speed, p.max_lateral_speed);
    let v_fwd = (s.forward_speed * s.forward_speed - v_lat * v_lat).max(0.0).sqrt();

    let left = dir.perp();
    let remaining = to_goal.length();
    if s.target == last && v_fwd * dt >= remaining && av.shift == 0.0 {
        // land on the final waypoint exactly
        s.velocity = to_goal / dt;
        s.position = goal;
        s.finished = true;
        return s;
    }
    s.velocity = dir * v_fwd + left * v_lat;
    s.position += s.velocity * dt;
    s
}
