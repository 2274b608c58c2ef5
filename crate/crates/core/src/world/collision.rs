use std::f64::consts::SQRT_2;

use glam::DVec2;

use super::{DistanceField, Footprint, MapError, OccupancyGrid, Pose2};

fn check_inside(grid: &OccupancyGrid, p: DVec2) -> Result<(), MapError> {
    if grid.contains_point(p) {
        Ok(())
    } else {
        Err(MapError::OutOfBounds { x: p.x, y: p.y })
    }
}

/// True iff the segment crosses no occupied cell, sampled at no more than half
/// a cell per step. Symmetric in its endpoints.
pub fn raycast_clear(grid: &OccupancyGrid, from: DVec2, to: DVec2) -> Result<bool, MapError> {
    check_inside(grid, from)?;
    check_inside(grid, to)?;
    // canonical endpoint order keeps the sample set identical both ways
    let (a, b) = if (from.x, from.y) <= (to.x, to.y) {
        (from, to)
    } else {
        (to, from)
    };
    let len = (b - a).length();
    let n = (len / (0.5 * grid.resolution())).ceil().max(1.0) as usize;
    for i in 0..=n {
        let t = i as f64 / n as f64;
        if grid.occupied_at(a + (b - a) * t) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Number of sample intervals covering `extent` at no more than half a cell.
fn sample_count(extent: f64, resolution: f64) -> usize {
    (extent / (0.5 * resolution)).ceil().max(1.0) as usize
}

/// Local sample offsets along one rectangle axis, endpoints included.
fn axis_samples(extent: f64, resolution: f64) -> impl Iterator<Item = f64> {
    let n = sample_count(extent, resolution);
    (0..=n).map(move |i| -0.5 * extent + extent * i as f64 / n as f64)
}

/// Dense-sampling footprint test: true iff any sample of the oriented rectangle
/// lands in an occupied cell or outside the map.
pub fn footprint_collides(grid: &OccupancyGrid, pose: &Pose2, footprint: &Footprint) -> Result<bool, MapError> {
    check_inside(grid, pose.position())?;
    let res = grid.resolution();
    let h = pose.heading();
    let n = h.perp();
    for u in axis_samples(footprint.length, res) {
        for w in axis_samples(footprint.width, res) {
            if grid.occupied_at(pose.position() + h * u + n * w) {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

const DISCS: usize = 8;

/// Footprint tester that gives the same answers as [`footprint_collides`] but
/// skips sample slabs the distance field proves to be clear.
#[derive(Clone, Copy)]
pub struct FootprintChecker<'a> {
    grid: &'a OccupancyGrid,
    dfield: &'a DistanceField,
    footprint: Footprint,
    along: usize,
    across: usize,
}

impl<'a> FootprintChecker<'a> {
    pub fn new(grid: &'a OccupancyGrid, dfield: &'a DistanceField, footprint: Footprint) -> Self {
        let res = grid.resolution();
        Self {
            grid,
            dfield,
            footprint,
            along: sample_count(footprint.length, res),
            across: sample_count(footprint.width, res),
        }
    }

    pub fn footprint(&self) -> &Footprint {
        &self.footprint
    }

    /// A distance every sample of this pose can move and still land in a
    /// free in-map cell, or `None` when no positive bound is proven. Poses
    /// whose samples move less than this are collision-free.
    pub fn margin(&self, pose: &Pose2) -> Option<f64> {
        let grid = self.grid;
        let slack = grid.resolution() * SQRT_2;
        let corners = self.footprint.corners(pose);
        let (lo, hi) = (grid.origin(), grid.extent());
        let mut border = f64::INFINITY;
        for c in corners {
            if !grid.contains_point(c) {
                return None;
            }
            border = border.min((c - lo).min_element()).min((hi - c).min_element());
        }
        let center = pose.position();
        let h = pose.heading();
        let len = self.footprint.length;
        let hw = self.footprint.half_width();
        let round = self.dfield.distance(grid.world_to_cell(center)?) - self.footprint.circumradius() - slack;
        // DISCS discs strung along the axis cover the rectangle
        let seg = len / DISCS as f64;
        let r = (hw * hw + 0.25 * seg * seg).sqrt() + slack;
        let mut discs = f64::INFINITY;
        for i in 0..DISCS {
            let q = center + h * (-0.5 * len + seg * (i as f64 + 0.5));
            discs = discs.min(self.dfield.distance(grid.world_to_cell(q)?) - r);
        }
        let m = round.max(discs).min(border);
        (m > 0.0).then_some(m)
    }

    /// Out-of-map poses are reported as colliding.
    pub fn collides(&self, pose: &Pose2) -> bool {
        let grid = self.grid;
        let res = grid.resolution();
        let slack = res * SQRT_2;
        let center = pose.position();
        if !grid.contains_point(center) {
            return true;
        }
        if self.margin(pose).is_some() {
            return false;
        }
        let (len, wid) = (self.footprint.length, self.footprint.width);
        let hw = 0.5 * wid;
        let h = pose.heading();
        let n = h.perp();
        for i in 0..=self.along {
            let u = -0.5 * len + len * i as f64 / self.along as f64;
            let q = center + h * u;
            // samples closer to q than this sit in free cells
            let mut free = f64::NEG_INFINITY;
            if let Some(qc) = grid.world_to_cell(q) {
                let ends_inside = grid.contains_point(q + n * hw) && grid.contains_point(q - n * hw);
                if ends_inside {
                    free = self.dfield.distance(qc) - slack;
                    if free > hw {
                        continue;
                    }
                }
            }
            for j in 0..=self.across {
                let w = -hw + wid * j as f64 / self.across as f64;
                if w.abs() < free {
                    continue;
                }
                if grid.occupied_at(q + n * w) {
                    return true;
                }
            }
        }
        false
    }
}
