//! Shared oracles and fixtures for the integration tests.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use glam::DVec2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use plc_nav::lane::{generate_lane_field, Handedness, LaneField};
use plc_nav::planner::{CostWeights, PlannerParams, HEADING_STEPS};
use plc_nav::world::{distance_transform, parse_map, CellIndex, DistanceField, OccupancyGrid};

/// A planning problem with everything the cost depends on.
pub struct PlanCase {
    pub grid: OccupancyGrid,
    pub dfield: DistanceField,
    pub lane: LaneField,
    pub persons: Vec<DVec2>,
    pub params: PlannerParams,
    pub start: CellIndex,
    pub start_heading: u8,
    pub goal: CellIndex,
}

impl PlanCase {
    pub fn admissible(&self, c: CellIndex) -> bool {
        c.ix < self.grid.width()
            && c.iy < self.grid.height()
            && self.grid.is_free(c)
            && self.dfield.clearance(c) >= self.params.min_clearance
    }
}

/// Walled ASCII map with random blocks; the text is built by hand so the
/// grid comes from `parse_map` like any user map.
pub fn random_map(rng: &mut ChaCha8Rng, w: usize, h: usize) -> OccupancyGrid {
    let mut occ = vec![false; w * h];
    for ix in 0..w {
        occ[ix] = true;
        occ[(h - 1) * w + ix] = true;
    }
    for iy in 0..h {
        occ[iy * w] = true;
        occ[iy * w + w - 1] = true;
    }
    for _ in 0..rng.gen_range(0..6) {
        let (bw, bh) = (rng.gen_range(1..w / 3), rng.gen_range(1..h / 3));
        let (x0, y0) = (rng.gen_range(0..w - bw), rng.gen_range(0..h - bh));
        for iy in y0..y0 + bh {
            for ix in x0..x0 + bw {
                occ[iy * w + ix] = true;
            }
        }
    }
    for v in occ.iter_mut() {
        if rng.gen_bool(0.02) {
            *v = true;
        }
    }
    let mut text = String::with_capacity((w + 1) * h);
    for row in 0..h {
        let iy = h - 1 - row;
        for ix in 0..w {
            text.push(if occ[iy * w + ix] { '#' } else { '.' });
        }
        text.push('\n');
    }
    parse_map(&text, 0.05).unwrap()
}

/// Random grid no larger than 60 x 60 with random weights, persons and
/// admissible endpoints. `w_lanes` is drawn from `lanes_choices`.
pub fn random_case(seed: u64, lanes_choices: &[f64]) -> PlanCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let w = rng.gen_range(12..=60);
        let h = rng.gen_range(12..=60);
        let grid = random_map(&mut rng, w, h);
        let dfield = distance_transform(&grid).unwrap();
        let handed = if rng.gen_bool(0.5) { Handedness::KeepLeft } else { Handedness::KeepRight };
        let lane = generate_lane_field(&grid, &dfield, rng.gen_range(0.1..0.5), handed).unwrap();
        let params = PlannerParams {
            weights: CostWeights {
                w_lanes: lanes_choices[rng.gen_range(0..lanes_choices.len())],
                w_person: rng.gen_range(0.0..4.0),
                w_turn: rng.gen_range(0.0..1.0),
                w_inflation: rng.gen_range(0.0..8.0),
                step_cost: rng.gen_range(0.5..2.0),
            },
            r_buffer: rng.gen_range(0.2..1.5),
            min_clearance: rng.gen_range(0.0..0.12),
            inflation_radius: rng.gen_range(0.05..0.4),
            snap_radius: 0.01,
        };
        let ext = grid.extent();
        let persons = (0..rng.gen_range(0..4))
            .map(|_| DVec2::new(rng.gen_range(0.0..ext.x), rng.gen_range(0.0..ext.y)))
            .collect();
        let mut case = PlanCase {
            grid,
            dfield,
            lane,
            persons,
            params,
            start: CellIndex::new(0, 0),
            start_heading: rng.gen_range(0..8),
            goal: CellIndex::new(0, 0),
        };
        let free: Vec<CellIndex> = case.grid.cells().filter(|c| case.admissible(*c)).collect();
        if free.len() < 2 {
            continue;
        }
        case.start = free[rng.gen_range(0..free.len())];
        case.goal = free[rng.gen_range(0..free.len())];
        return case;
    }
}

/// Edge cost written out term by term from the cost definition.
pub fn oracle_edge_cost(case: &PlanCase, parent: CellIndex, parent_heading: u8, k: usize) -> Option<(CellIndex, f64)> {
    let (dx, dy) = HEADING_STEPS[k];
    let child = parent.offset(dx, dy)?;
    if !case.admissible(child) {
        return None;
    }
    let p = &case.params;
    let wts = &p.weights;
    let res = case.grid.resolution();
    let diagonal = dx != 0 && dy != 0;
    let len = if diagonal { std::f64::consts::SQRT_2 } else { 1.0 } * res;
    let dir = DVec2::new(dx as f64, dy as f64).normalize();
    let v = case.lane.vector(parent);
    let c_lanes = 0.5 - 0.5 * v.dot(dir);
    let q = case.grid.cell_center(child);
    let buffer = case
        .persons
        .iter()
        .map(|m| (1.0 - q.distance(*m) / p.r_buffer).max(0.0))
        .fold(0.0, f64::max);
    let turn = {
        let d = (parent_heading as i32 - k as i32).rem_euclid(8);
        d.min(8 - d) as f64
    };
    let inflation = (1.0 - (case.dfield.clearance(child) - p.min_clearance) / p.inflation_radius).max(0.0);
    let mut cost = wts.step_cost * len;
    if wts.w_lanes > 0.0 {
        cost += wts.w_lanes * c_lanes * len;
    }
    if wts.w_person > 0.0 {
        cost += wts.w_person * buffer;
    }
    cost += wts.w_turn * turn;
    cost += wts.w_inflation * inflation;
    Some((child, cost))
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exhaustive Dijkstra over (cell x 8 headings); cheapest arrival at the goal
/// cell in any heading.
pub fn dijkstra_cost(case: &PlanCase) -> Option<f64> {
    let w = case.grid.width();
    let n = case.grid.len() * 8;
    let key = |c: CellIndex, h: usize| (c.iy * w + c.ix) * 8 + h;
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    let s = key(case.start, case.start_heading as usize);
    dist[s] = 0.0;
    heap.push(Entry(0.0, s));
    while let Some(Entry(d, i)) = heap.pop() {
        if d > dist[i] {
            continue;
        }
        let cell = CellIndex::new((i / 8) % w, (i / 8) / w);
        let h = (i % 8) as u8;
        for k in 0..8 {
            if let Some((child, c)) = oracle_edge_cost(case, cell, h, k) {
                let j = key(child, k);
                if d + c < dist[j] {
                    dist[j] = d + c;
                    heap.push(Entry(d + c, j));
                }
            }
        }
    }
    let g = key(case.goal, 0);
    let best = dist[g..g + 8].iter().copied().fold(f64::INFINITY, f64::min);
    best.is_finite().then_some(best)
}
