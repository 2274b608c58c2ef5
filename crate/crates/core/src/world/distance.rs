use glam::DVec2;

use super::{CellIndex, MapError, OccupancyGrid};

/// Per-cell Euclidean distance (cell center to nearest occupied cell center)
/// and unit direction toward that nearest occupied cell.
#[derive(Debug, Clone)]
pub struct DistanceField {
    width: usize,
    height: usize,
    resolution: f64,
    origin: DVec2,
    dist: Vec<f64>,
    dir: Vec<DVec2>,
    nearest: Vec<u32>,
}

impl DistanceField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    fn idx(&self, c: CellIndex) -> usize {
        c.iy * self.width + c.ix
    }

    /// Center-to-center distance in meters; 0 on occupied cells.
    pub fn distance(&self, c: CellIndex) -> f64 {
        self.dist[self.idx(c)]
    }

    /// Unit vector toward the nearest occupied cell; zero on occupied cells.
    pub fn direction(&self, c: CellIndex) -> DVec2 {
        self.dir[self.idx(c)]
    }

    /// The occupied cell realizing [`distance`](Self::distance).
    pub fn nearest(&self, c: CellIndex) -> CellIndex {
        let i = self.nearest[self.idx(c)] as usize;
        CellIndex::new(i % self.width, i / self.width)
    }

    /// Distance to the nearest wall face: center distance minus half a cell,
    /// which is exact for axis-aligned walls.
    pub fn clearance(&self, c: CellIndex) -> f64 {
        (self.distance(c) - 0.5 * self.resolution).max(0.0)
    }

    fn cell_of(&self, p: DVec2) -> Option<CellIndex> {
        let rel = (p - self.origin) / self.resolution;
        if !(rel.x >= 0.0 && rel.y >= 0.0) {
            return None;
        }
        let (ix, iy) = (rel.x.floor() as usize, rel.y.floor() as usize);
        (ix < self.width && iy < self.height).then_some(CellIndex::new(ix, iy))
    }

    /// Wall clearance of the cell containing `p`; 0 outside the map.
    pub fn clearance_at(&self, p: DVec2) -> f64 {
        self.cell_of(p).map_or(0.0, |c| self.clearance(c))
    }

    pub fn distance_at(&self, p: DVec2) -> f64 {
        self.cell_of(p).map_or(0.0, |c| self.distance(c))
    }

    pub fn direction_at(&self, p: DVec2) -> DVec2 {
        self.cell_of(p).map_or(DVec2::ZERO, |c| self.direction(c))
    }
}

/// Exact squared-distance lower envelope (Felzenszwalb & Huttenlocher) over a
/// 1D sampled function, tracking which sample realizes each minimum.
fn envelope_1d(f: &[f64], out: &mut [f64], arg: &mut [usize], v: &mut Vec<usize>, z: &mut Vec<f64>) {
    let n = f.len();
    v.clear();
    z.clear();
    for q in 0..n {
        if !f[q].is_finite() {
            continue;
        }
        let qf = q as f64;
        loop {
            match v.last() {
                None => {
                    v.push(q);
                    z.push(f64::NEG_INFINITY);
                    break;
                }
                Some(&p) => {
                    let pf = p as f64;
                    let s = ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * qf - 2.0 * pf);
                    if s <= *z.last().unwrap() {
                        v.pop();
                        z.pop();
                    } else {
                        v.push(q);
                        z.push(s);
                        break;
                    }
                }
            }
        }
    }
    if v.is_empty() {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let mut k = 0;
    for p in 0..n {
        let pf = p as f64;
        while k + 1 < v.len() && z[k + 1] < pf {
            k += 1;
        }
        let q = v[k];
        let d = pf - q as f64;
        out[p] = d * d + f[q];
        arg[p] = q;
    }
}

/// Exact Euclidean distance transform with nearest-occupied tracking.
pub fn distance_transform(grid: &OccupancyGrid) -> Result<DistanceField, MapError> {
    let (w, h) = (grid.width(), grid.height());
    if grid.count(super::CellState::Occupied) == 0 {
        return Err(MapError::Unbounded);
    }
    let mut v = Vec::new();
    let mut z = Vec::new();

    // columns: squared vertical distance and source row
    let mut col_d2 = vec![f64::INFINITY; w * h];
    let mut col_src = vec![0usize; w * h];
    let mut f = vec![0.0; h];
    let mut out = vec![0.0; h];
    let mut arg = vec![0usize; h];
    for ix in 0..w {
        for iy in 0..h {
            f[iy] = if grid.is_occupied(CellIndex::new(ix, iy)) {
                0.0
            } else {
                f64::INFINITY
            };
        }
        envelope_1d(&f, &mut out, &mut arg, &mut v, &mut z);
        for iy in 0..h {
            col_d2[iy * w + ix] = out[iy];
            col_src[iy * w + ix] = arg[iy];
        }
    }

    // rows
    let mut dist = vec![0.0; w * h];
    let mut dir = vec![DVec2::ZERO; w * h];
    let mut nearest = vec![0u32; w * h];
    let mut f = vec![0.0; w];
    let mut out = vec![0.0; w];
    let mut arg = vec![0usize; w];
    for iy in 0..h {
        f.copy_from_slice(&col_d2[iy * w..(iy + 1) * w]);
        envelope_1d(&f, &mut out, &mut arg, &mut v, &mut z);
        for ix in 0..w {
            let i = iy * w + ix;
            let sx = arg[ix];
            let sy = col_src[iy * w + sx];
            nearest[i] = (sy * w + sx) as u32;
            dist[i] = out[ix].sqrt() * grid.resolution();
            let delta = DVec2::new(sx as f64 - ix as f64, sy as f64 - iy as f64);
            dir[i] = delta.normalize_or_zero();
        }
    }

    Ok(DistanceField {
        width: w,
        height: h,
        resolution: grid.resolution(),
        origin: grid.origin(),
        dist,
        dir,
        nearest,
    })
}
