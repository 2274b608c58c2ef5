//! Hallway layouts for the frontal approach and the blind corner.
//!
//! The free interior of every layout starts at world (0, 0) and is wrapped
//! in a one-cell wall ring, so the grid origin sits at (-res, -res) and
//! wall faces coincide with the interior's boundary coordinates.

use std::f64::consts::{FRAC_PI_2, PI};

use glam::DVec2;
use thiserror::Error;

use super::config::{ConfigError, ScenarioConfig, ScenarioKind, Turn};
use crate::behavior::{BehaviorMode, Placement};
use crate::lane::{generate_lane_field_with, LaneError, LaneField};
use crate::world::{distance_transform, CellState, DistanceField, MapError, OccupancyGrid, Pose2};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Lane(#[from] LaneError),
    #[error("custom map is {found:?} cells but the scenario needs {expected:?}")]
    MapShape { expected: (usize, usize), found: (usize, usize) },
}

/// Robot start x in the blind corner's first leg (m).
pub const BLIND_ROBOT_START_X: f64 = 1.5;

/// A straight hallway section and the wall on the robot's left while it
/// travels through it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leg {
    pub min: DVec2,
    pub max: DVec2,
    /// Any point on the left wall face.
    pub wall_point: DVec2,
    /// Unit normal from the left wall into the hallway.
    pub inward: DVec2,
}

impl Leg {
    pub fn contains(&self, p: DVec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn left_offset(&self, p: DVec2) -> f64 {
        (p - self.wall_point).dot(self.inward)
    }

    fn point_at(&self, along: DVec2, offset: f64) -> DVec2 {
        // `along` fixes the coordinate parallel to the wall
        let tangent = self.inward.perp();
        self.wall_point + self.inward * offset + tangent * (along - self.wall_point).dot(tangent)
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub grid: OccupancyGrid,
    pub dfield: DistanceField,
    pub lane: LaneField,
    /// Robot legs in travel order.
    pub legs: Vec<Leg>,
    pub robot_start: Pose2,
    /// Goal heading; the goal position depends on the running line.
    pub goal_heading: f64,
    goal_along: DVec2,
    pub human_route: Vec<DVec2>,
    pub placement: Placement,
    pub corridor_width: f64,
}

impl Scenario {
    /// Robot goal on the running line `offset` meters from the left wall.
    pub fn goal(&self, offset: f64) -> Pose2 {
        let leg = self.legs.last().expect("scenarios have at least one leg");
        Pose2::from_point(leg.point_at(self.goal_along, offset), self.goal_heading)
    }

    /// Distance from the left wall of the leg containing `p`; later legs
    /// win where legs overlap.
    pub fn left_offset(&self, p: DVec2) -> f64 {
        let leg = self
            .legs
            .iter()
            .rev()
            .find(|l| l.contains(p))
            .unwrap_or(&self.legs[0]);
        leg.left_offset(p)
    }

    pub fn route_length(&self) -> f64 {
        self.human_route.windows(2).map(|w| w[0].distance(w[1])).sum()
    }
}

/// Grid with the free interior given by `rects` (min, max) and a wall ring.
fn carve(size: DVec2, res: f64, rects: &[(DVec2, DVec2)]) -> Result<OccupancyGrid, MapError> {
    let nx = (size.x / res).round() as usize + 2;
    let ny = (size.y / res).round() as usize + 2;
    let mut g = OccupancyGrid::new(nx, ny, res, DVec2::splat(-res))?;
    g.fill_rect(DVec2::splat(-1.0), DVec2::new(size.x + 1.0, size.y + 1.0), CellState::Occupied);
    for (lo, hi) in rects {
        g.fill_rect(*lo, *hi, CellState::Free);
    }
    Ok(g)
}

pub fn placement_for(scenario: ScenarioKind, behavior: BehaviorMode) -> Placement {
    match (scenario, behavior) {
        (ScenarioKind::Frontal, m) if m != BehaviorMode::Plc => Placement::LeftSide,
        _ => Placement::Center,
    }
}

fn initial_offset(placement: Placement, width: f64, d1: f64) -> f64 {
    match placement {
        Placement::LeftSide => d1,
        Placement::Center => 0.5 * width,
    }
}

/// Layout, robot start and walker route for a run. `custom_grid` replaces
/// the generated map; it must have the same shape.
pub fn build_scenario(cfg: &ScenarioConfig, custom_grid: Option<OccupancyGrid>) -> Result<Scenario, ScenarioError> {
    cfg.validate()?;
    let c = &cfg.config;
    let (res, w, len) = (c.world.resolution, c.world.corridor_width, c.world.corridor_length);
    let h = &c.harness;
    let placement = placement_for(cfg.scenario, cfg.behavior);
    let start_offset = initial_offset(placement, w, c.behavior.d1);

    let (grid, legs, start, goal_along, goal_heading, route) = match cfg.effective_turn() {
        None => {
            let grid = carve(DVec2::new(len, w), res, &[(DVec2::ZERO, DVec2::new(len, w))])?;
            let leg = Leg {
                min: DVec2::ZERO,
                max: DVec2::new(len, w),
                wall_point: DVec2::ZERO,
                inward: DVec2::Y,
            };
            let a = DVec2::new(0.5 * (len - h.route_length), 0.5 * w);
            let b = a + DVec2::new(h.route_length, 0.0);
            let x0 = (a.x + h.initial_separation).min(len - h.goal_margin);
            let start = Pose2::new(x0, start_offset, PI);
            (grid, vec![leg], start, DVec2::new(h.goal_margin, 0.0), PI, vec![a, b])
        }
        Some(turn) => {
            let cx = BLIND_ROBOT_START_X + h.robot_corner_distance;
            let top = h.leg2_length;
            let leg1 = (DVec2::ZERO, DVec2::new(cx + w, w));
            let leg2 = (DVec2::new(cx, 0.0), DVec2::new(cx + w, top));
            let grid = carve(DVec2::new(cx + w, top), res, &[leg1, leg2])?;
            let hx = cx + 0.5 * w;
            let north = h.human_corner_distance.min(h.route_length);
            let west = h.route_length - north;
            let mut route = vec![
                DVec2::new(hx, 0.5 * w + north),
                DVec2::new(hx, 0.5 * w),
                DVec2::new(hx - west, 0.5 * w),
            ];
            route.dedup();
            match turn {
                Turn::Ab => {
                    let legs = vec![
                        Leg {
                            min: leg1.0,
                            max: leg1.1,
                            wall_point: DVec2::new(0.0, w),
                            inward: -DVec2::Y,
                        },
                        Leg {
                            min: DVec2::new(cx, w),
                            max: leg2.1,
                            wall_point: DVec2::new(cx, 0.0),
                            inward: DVec2::X,
                        },
                    ];
                    let start = Pose2::new(BLIND_ROBOT_START_X, w - start_offset, 0.0);
                    (grid, legs, start, DVec2::new(0.0, top - h.goal_margin), FRAC_PI_2, route)
                }
                Turn::Aprime => {
                    let mirror = |p: DVec2| DVec2::new(p.x, top - p.y);
                    let grid = grid.flipped_vertically();
                    let legs = vec![
                        Leg {
                            min: DVec2::new(0.0, top - w),
                            max: DVec2::new(cx + w, top),
                            wall_point: DVec2::new(0.0, top),
                            inward: -DVec2::Y,
                        },
                        Leg {
                            min: DVec2::new(cx, 0.0),
                            max: DVec2::new(cx + w, top - w),
                            wall_point: DVec2::new(cx + w, 0.0),
                            inward: -DVec2::X,
                        },
                    ];
                    let start = Pose2::new(BLIND_ROBOT_START_X, top - start_offset, 0.0);
                    let route = route.into_iter().map(mirror).collect();
                    (grid, legs, start, DVec2::new(0.0, h.goal_margin), -FRAC_PI_2, route)
                }
            }
        }
    };

    let grid = match custom_grid {
        Some(g) => {
            if (g.width(), g.height()) != (grid.width(), grid.height()) {
                return Err(ScenarioError::MapShape {
                    expected: (grid.width(), grid.height()),
                    found: (g.width(), g.height()),
                });
            }
            g.with_origin(grid.origin())
        }
        None => grid,
    };
    let dfield = distance_transform(&grid)?;
    let lane = generate_lane_field_with(
        &grid,
        &dfield,
        c.world.lane_profile(c.behavior.d2),
        c.world.handedness,
    )?;
    Ok(Scenario {
        grid,
        dfield,
        lane,
        legs,
        robot_start: start,
        goal_heading,
        goal_along,
        human_route: if h.human_enabled { route } else { Vec::new() },
        placement,
        corridor_width: w,
    })
}
