//! Keep-left lane vector field and the lane-following edge cost.
//!
//! Every free cell gets a vector tangent to its nearest wall, oriented so
//! that the wall lies on the traveller's left (`KeepLeft`) or right
//! (`KeepRight`). The magnitude peaks at 1.0 on the lane line `d_wall` meters
//! from the wall and tapers off on both sides, so the A* lane term rewards
//! both travelling in the right direction and holding the lane offset.

use glam::DVec2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{CellIndex, DistanceField, OccupancyGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Handedness {
    #[default]
    KeepLeft,
    KeepRight,
}

impl Handedness {
    /// Travel direction for a unit vector pointing at the nearest wall.
    pub fn tangent(self, toward_wall: DVec2) -> DVec2 {
        let keep_left = DVec2::new(toward_wall.y, -toward_wall.x);
        match self {
            Handedness::KeepLeft => keep_left,
            Handedness::KeepRight => -keep_left,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Handedness::KeepLeft => Handedness::KeepRight,
            Handedness::KeepRight => Handedness::KeepLeft,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LaneError {
    #[error("lane offset d_wall must be positive, got {0}")]
    InvalidOffset(f64),
    #[error("distance field shape {field:?} does not match grid shape {grid:?}")]
    ShapeMismatch { grid: (usize, usize), field: (usize, usize) },
}

/// Magnitude profile over wall clearance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaneProfile {
    /// Lane line offset from the wall face (m).
    pub d_wall: f64,
    /// Below this clearance the robot cannot be; magnitude is 0 (m).
    pub d_min: f64,
    /// Half-width of the full-magnitude band around `d_wall` (m).
    pub band_half_width: f64,
    /// Distance over which magnitude falls from 1.0 to `axis_floor` (m).
    pub taper: f64,
    /// Magnitude reached toward the corridor medial axis.
    pub axis_floor: f64,
}

impl Default for LaneProfile {
    fn default() -> Self {
        Self {
            d_wall: 0.45,
            d_min: 0.325,
            band_half_width: 0.025,
            taper: 0.5,
            axis_floor: 0.2,
        }
    }
}

impl LaneProfile {
    pub fn with_d_wall(self, d_wall: f64) -> Self {
        Self { d_wall, ..self }
    }

    pub fn magnitude(&self, clearance: f64) -> f64 {
        if clearance < self.d_min {
            return 0.0;
        }
        let off = (clearance - self.d_wall).abs() - self.band_half_width;
        if off <= 1e-9 {
            return 1.0;
        }
        (1.0 - (1.0 - self.axis_floor) * off / self.taper).max(self.axis_floor)
    }

    pub fn in_band(&self, clearance: f64) -> bool {
        clearance >= self.d_min && (clearance - self.d_wall).abs() - self.band_half_width <= 1e-9
    }
}

/// Per-cell lane vectors, `|v| <= 1`, zero on occupied cells.
#[derive(Debug, Clone)]
pub struct LaneField {
    width: usize,
    height: usize,
    vectors: Vec<DVec2>,
    profile: LaneProfile,
    handedness: Handedness,
}

impl LaneField {
    /// A field of zero vectors; useful when the lane term is disabled.
    pub fn zeros(grid: &OccupancyGrid) -> Self {
        Self {
            width: grid.width(),
            height: grid.height(),
            vectors: vec![DVec2::ZERO; grid.len()],
            profile: LaneProfile::default(),
            handedness: Handedness::KeepLeft,
        }
    }

    pub fn vector(&self, c: CellIndex) -> DVec2 {
        self.vectors[c.iy * self.width + c.ix]
    }

    pub fn vectors(&self) -> &[DVec2] {
        &self.vectors
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn profile(&self) -> &LaneProfile {
        &self.profile
    }

    pub fn handedness(&self) -> Handedness {
        self.handedness
    }

    /// Writes `cell_x,cell_y,vx,vy` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("cell_x,cell_y,vx,vy\n");
        for iy in 0..self.height {
            for ix in 0..self.width {
                let v = self.vector(CellIndex::new(ix, iy));
                s.push_str(&format!("{ix},{iy},{:.6},{:.6}\n", v.x, v.y));
            }
        }
        s
    }
}

const NEIGHBORS_8: [(i64, i64); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];
const NEIGHBORS_4: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

/// Two candidate walls are "different" when their directions differ by more
/// than 60 degrees; straight walls seen from nearby cells stay well inside this.
const DISTINCT_WALL_COS: f64 = 0.5;

/// Builds the lane field with the default magnitude profile.
pub fn generate_lane_field(
    grid: &OccupancyGrid,
    dfield: &DistanceField,
    d_wall: f64,
    handedness: Handedness,
) -> Result<LaneField, LaneError> {
    generate_lane_field_with(grid, dfield, LaneProfile::default().with_d_wall(d_wall), handedness)
}

pub fn generate_lane_field_with(
    grid: &OccupancyGrid,
    dfield: &DistanceField,
    profile: LaneProfile,
    handedness: Handedness,
) -> Result<LaneField, LaneError> {
    if !(profile.d_wall > 0.0) || !profile.d_wall.is_finite() {
        return Err(LaneError::InvalidOffset(profile.d_wall));
    }
    if (grid.width(), grid.height()) != (dfield.width(), dfield.height()) {
        return Err(LaneError::ShapeMismatch {
            grid: (grid.width(), grid.height()),
            field: (dfield.width(), dfield.height()),
        });
    }
    let (w, h) = (grid.width(), grid.height());
    let res = grid.resolution();

    // Walls within half a cell of the nearest one, seen from each free cell.
    let mut tangents: Vec<DVec2> = vec![DVec2::ZERO; w * h];
    let mut ambiguous: Vec<Option<Vec<DVec2>>> = vec![None; w * h];
    for c in grid.cells() {
        if grid.is_occupied(c) {
            continue;
        }
        let i = grid.flat(c);
        let own_dir = dfield.direction(c);
        let own_dist = dfield.distance(c);
        let here = grid.cell_center(c);
        let mut candidates = vec![own_dir];
        for (dx, dy) in NEIGHBORS_8 {
            let Some(n) = c.offset(dx, dy).filter(|n| grid.contains_cell(*n)) else {
                continue;
            };
            let src = dfield.nearest(n);
            let delta = grid.cell_center(src) - here;
            let dist = delta.length();
            if dist <= own_dist + 0.5 * res + 1e-9 && dist > 0.0 {
                let dir = delta / dist;
                if candidates.iter().all(|d| d.dot(dir) < 1.0 - 1e-12) {
                    candidates.push(dir);
                }
            }
        }
        let split = candidates.iter().any(|d| d.dot(own_dir) < DISTINCT_WALL_COS);
        if split {
            ambiguous[i] = Some(candidates.iter().map(|&d| handedness.tangent(d)).collect());
        } else {
            tangents[i] = handedness.tangent(own_dir);
        }
    }

    // Resolve ambiguous cells by 4-neighbor majority over settled neighbors.
    let mut resolved = tangents.clone();
    for c in grid.cells() {
        let i = grid.flat(c);
        let Some(options) = &ambiguous[i] else {
            continue;
        };
        let mut vote = DVec2::ZERO;
        let mut voters = 0;
        for (dx, dy) in NEIGHBORS_4 {
            let Some(n) = c.offset(dx, dy).filter(|n| grid.contains_cell(*n)) else {
                continue;
            };
            let j = grid.flat(n);
            if grid.is_free(n) && ambiguous[j].is_none() {
                vote += tangents[j];
                voters += 1;
            }
        }
        resolved[i] = if voters == 0 || vote.length_squared() < 1e-12 {
            DVec2::ZERO
        } else {
            // ties go to the first candidate, which is the cell's own nearest wall
            let mut best = options[0];
            let mut best_score = best.dot(vote);
            for &t in &options[1..] {
                let s = t.dot(vote);
                if s > best_score + 1e-12 {
                    best = t;
                    best_score = s;
                }
            }
            best
        };
    }

    let vectors = grid
        .cells()
        .map(|c| {
            if grid.is_occupied(c) {
                DVec2::ZERO
            } else {
                resolved[grid.flat(c)] * profile.magnitude(dfield.clearance(c))
            }
        })
        .collect();
    Ok(LaneField {
        width: w,
        height: h,
        vectors,
        profile,
        handedness,
    })
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("edge direction must be a unit vector (norm {norm})")]
pub struct NonUnitDirection {
    pub norm: f64,
}

/// Lane-following cost `0.5 - 0.5 * v . d` for lane vector `v` and unit edge
/// direction `d`.
pub fn lane_cost(v: DVec2, edge_dir: DVec2) -> Result<f64, NonUnitDirection> {
    let norm = edge_dir.length();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(NonUnitDirection { norm });
    }
    Ok(0.5 - 0.5 * v.dot(edge_dir))
}
