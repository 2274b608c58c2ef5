//! 8-connected grid A* over (cell, heading) with a composite edge cost.
//!
//! The heading of a search node is the direction of the edge that reached
//! it, quantized to eight 45 degree steps. Every cost term is non-negative
//! and the base term is `step_cost * edge_length`, so the Euclidean
//! heuristic scaled by `step_cost` is admissible and consistent.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::{FRAC_PI_4, SQRT_2};

use glam::DVec2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lane::{lane_cost, LaneField};
use crate::world::{CellIndex, DistanceField, OccupancyGrid, Pose2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostWeights {
    pub w_lanes: f64,
    pub w_person: f64,
    pub w_turn: f64,
    pub w_inflation: f64,
    /// Base cost per meter.
    pub step_cost: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            w_lanes: 0.0,
            w_person: 2.0,
            w_turn: 0.3,
            w_inflation: 5.0,
            step_cost: 1.0,
        }
    }
}

impl CostWeights {
    pub fn is_valid(&self) -> bool {
        [self.w_lanes, self.w_person, self.w_turn, self.w_inflation, self.step_cost]
            .iter()
            .all(|w| *w >= 0.0 && w.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerParams {
    pub weights: CostWeights,
    /// Person buffer radius (m).
    pub r_buffer: f64,
    /// Cells with less wall clearance than this are not admissible (m).
    pub min_clearance: f64,
    /// Width of the inflation ramp above `min_clearance` (m).
    pub inflation_radius: f64,
    /// Blocked start or goal poses snap to the nearest admissible cell
    /// within this radius (m).
    pub snap_radius: f64,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            weights: CostWeights::default(),
            r_buffer: 1.5,
            min_clearance: 0.325,
            inflation_radius: 0.1,
            snap_radius: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("invalid planner parameters: {0}")]
    InvalidParams(&'static str),
    #[error("{which} pose ({x:.3}, {y:.3}) has no admissible cell nearby")]
    Blocked { which: &'static str, x: f64, y: f64 },
    #[error("goal unreachable after expanding {explored} states")]
    Unreachable { explored: usize },
}

/// Everything the edge cost depends on. Borrowed, so plans can run
/// concurrently over shared maps.
#[derive(Clone, Copy)]
pub struct PlanContext<'a> {
    pub grid: &'a OccupancyGrid,
    pub dfield: &'a DistanceField,
    pub lane: &'a LaneField,
    pub persons: &'a [DVec2],
    pub params: &'a PlannerParams,
}

/// Offsets of the eight headings, counter-clockwise from +x.
pub const HEADING_STEPS: [(i64, i64); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

pub fn heading_angle(h: u8) -> f64 {
    crate::world::normalize_angle(h as f64 * FRAC_PI_4)
}

/// Nearest of the eight discrete headings.
pub fn quantize_heading(theta: f64) -> u8 {
    ((theta / FRAC_PI_4).round() as i64).rem_euclid(8) as u8
}

/// Number of 45 degree steps between two headings (0..=4).
pub fn heading_steps(a: u8, b: u8) -> u8 {
    let d = (a as i8 - b as i8).rem_euclid(8) as u8;
    d.min(8 - d)
}

fn step_of(parent: CellIndex, child: CellIndex) -> Option<u8> {
    let d = (child.ix as i64 - parent.ix as i64, child.iy as i64 - parent.iy as i64);
    HEADING_STEPS.iter().position(|&s| s == d).map(|k| k as u8)
}

impl PlanContext<'_> {
    pub fn admissible(&self, c: CellIndex) -> bool {
        self.grid.contains_cell(c) && self.grid.is_free(c) && self.dfield.clearance(c) >= self.params.min_clearance
    }

    pub fn inflation(&self, c: CellIndex) -> f64 {
        let p = self.params;
        (1.0 - (self.dfield.clearance(c) - p.min_clearance) / p.inflation_radius).max(0.0)
    }

    pub fn buffer(&self, c: CellIndex) -> f64 {
        let p = self.grid.cell_center(c);
        self.persons
            .iter()
            .map(|q| (1.0 - p.distance(*q) / self.params.r_buffer).max(0.0))
            .fold(0.0, f64::max)
    }
}

/// Cost of moving from `parent` (reached with `parent_heading`) to the
/// neighboring `child`; infinite when the edge is blocked.
pub fn edge_cost(ctx: &PlanContext, parent: CellIndex, parent_heading: u8, child: CellIndex) -> f64 {
    let Some(h) = step_of(parent, child) else {
        return f64::INFINITY;
    };
    if !ctx.admissible(child) {
        return f64::INFINITY;
    }
    let w = &ctx.params.weights;
    let (dx, dy) = HEADING_STEPS[h as usize];
    let unit = DVec2::new(dx as f64, dy as f64).normalize();
    let len = if dx != 0 && dy != 0 { SQRT_2 } else { 1.0 } * ctx.grid.resolution();
    let mut cost = w.step_cost * len;
    if w.w_lanes > 0.0 {
        let c = lane_cost(ctx.lane.vector(parent), unit).expect("heading unit vectors are normalized");
        cost += w.w_lanes * c * len;
    }
    if w.w_person > 0.0 {
        cost += w.w_person * ctx.buffer(child);
    }
    cost += w.w_turn * heading_steps(parent_heading, h) as f64;
    cost += w.w_inflation * ctx.inflation(child);
    cost
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathNode {
    pub cell: CellIndex,
    pub point: DVec2,
    /// Heading of the edge that entered this node, radians.
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedPath {
    pub nodes: Vec<PathNode>,
    pub total_cost: f64,
}

impl PlannedPath {
    pub fn points(&self) -> Vec<DVec2> {
        self.nodes.iter().map(|n| n.point).collect()
    }

    pub fn length(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[0].point.distance(w[1].point)).sum()
    }
}

/// Nearest admissible cell to `p` within `radius`; the containing cell wins
/// when it is admissible.
pub fn snap_to_admissible(ctx: &PlanContext, p: DVec2, radius: f64) -> Option<CellIndex> {
    let grid = ctx.grid;
    if let Some(c) = grid.world_to_cell(p).filter(|c| ctx.admissible(*c)) {
        return Some(c);
    }
    let res = grid.resolution();
    let r = (radius / res).ceil() as i64 + 1;
    let center = grid.world_to_cell(p.clamp(grid.origin(), grid.extent() - DVec2::splat(1e-9)))?;
    let mut best: Option<(f64, CellIndex)> = None;
    for dy in -r..=r {
        for dx in -r..=r {
            let Some(c) = center.offset(dx, dy).filter(|c| grid.contains_cell(*c)) else {
                continue;
            };
            let d = grid.cell_center(c).distance(p);
            if d <= radius && ctx.admissible(c) && best.map_or(true, |(bd, _)| d < bd) {
                best = Some((d, c));
            }
        }
    }
    best.map(|(_, c)| c)
}

#[derive(Clone, Copy, PartialEq)]
struct Open {
    f: f64,
    h: f64,
    cell: usize,
    heading: u8,
}

impl Eq for Open {}

impl Ord for Open {
    // BinaryHeap is a max-heap, so every comparison is reversed
    fn cmp(&self, o: &Self) -> Ordering {
        o.f.total_cmp(&self.f)
            .then_with(|| o.h.total_cmp(&self.h))
            .then_with(|| o.cell.cmp(&self.cell))
            .then_with(|| o.heading.cmp(&self.heading))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

pub fn plan(start: &Pose2, goal: &Pose2, ctx: &PlanContext) -> Result<PlannedPath, PlanError> {
    let p = ctx.params;
    if !p.weights.is_valid() {
        return Err(PlanError::InvalidParams("weights must be finite and non-negative"));
    }
    if !(p.r_buffer > 0.0 && p.inflation_radius > 0.0) {
        return Err(PlanError::InvalidParams("r_buffer and inflation_radius must be positive"));
    }
    let grid = ctx.grid;
    let s = snap_to_admissible(ctx, start.position(), p.snap_radius).ok_or(PlanError::Blocked {
        which: "start",
        x: start.x,
        y: start.y,
    })?;
    let g = snap_to_admissible(ctx, goal.position(), p.snap_radius).ok_or(PlanError::Blocked {
        which: "goal",
        x: goal.x,
        y: goal.y,
    })?;
    let s_head = quantize_heading(start.theta);
    let goal_pt = grid.cell_center(g);
    let step_cost = p.weights.step_cost;
    let heur = |c: CellIndex| step_cost * grid.cell_center(c).distance(goal_pt);

    let n = grid.len() * 8;
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![u32::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    let si = grid.flat(s) * 8 + s_head as usize;
    best[si] = 0.0;
    open.push(Open {
        f: heur(s),
        h: heur(s),
        cell: grid.flat(s),
        heading: s_head,
    });
    let mut explored = 0;
    while let Some(top) = open.pop() {
        let si = top.cell * 8 + top.heading as usize;
        if closed[si] {
            continue;
        }
        closed[si] = true;
        explored += 1;
        let cell = grid.unflat(top.cell);
        if cell == g {
            return Ok(reconstruct(grid, &parent, &best, si));
        }
        let gcost = best[si];
        for (k, &(dx, dy)) in HEADING_STEPS.iter().enumerate() {
            let Some(child) = cell.offset(dx, dy).filter(|c| grid.contains_cell(*c)) else {
                continue;
            };
            let c = edge_cost(ctx, cell, top.heading, child);
            if !c.is_finite() {
                continue;
            }
            let ci = grid.flat(child) * 8 + k;
            let ng = gcost + c;
            if ng < best[ci] && !closed[ci] {
                best[ci] = ng;
                parent[ci] = si as u32;
                let h = heur(child);
                open.push(Open {
                    f: ng + h,
                    h,
                    cell: grid.flat(child),
                    heading: k as u8,
                });
            }
        }
    }
    Err(PlanError::Unreachable { explored })
}

fn reconstruct(grid: &OccupancyGrid, parent: &[u32], best: &[f64], end: usize) -> PlannedPath {
    let mut states = vec![end];
    let mut cur = end;
    while parent[cur] != u32::MAX {
        cur = parent[cur] as usize;
        states.push(cur);
    }
    states.reverse();
    let nodes = states
        .iter()
        .map(|&si| {
            let cell = grid.unflat(si / 8);
            PathNode {
                cell,
                point: grid.cell_center(cell),
                heading: heading_angle((si % 8) as u8),
            }
        })
        .collect();
    PlannedPath {
        nodes,
        total_cost: best[end],
    }
}
