use std::fmt;

use glam::DVec2;
use serde::{Deserialize, Serialize};

use super::MapError;

/// Occupancy of a single map cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellState {
    Free,
    Occupied,
}

/// Integer cell coordinate. `ix` grows with world x, `iy` with world y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellIndex {
    pub ix: usize,
    pub iy: usize,
}

impl CellIndex {
    pub const fn new(ix: usize, iy: usize) -> Self {
        Self { ix, iy }
    }

    /// Neighbor at a signed offset, if it stays non-negative.
    pub fn offset(self, dx: i64, dy: i64) -> Option<CellIndex> {
        let ix = self.ix as i64 + dx;
        let iy = self.iy as i64 + dy;
        if ix < 0 || iy < 0 {
            None
        } else {
            Some(CellIndex::new(ix as usize, iy as usize))
        }
    }
}

impl fmt::Display for CellIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.ix, self.iy)
    }
}

/// Binary rasterized map at a fixed resolution.
///
/// Cell `(ix, iy)` covers the square
/// `[origin.x + ix*res, origin.x + (ix+1)*res) x [origin.y + iy*res, origin.y + (iy+1)*res)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    resolution: f64,
    origin: DVec2,
    cells: Vec<CellState>,
}

impl OccupancyGrid {
    /// Creates an all-free grid.
    pub fn new(width: usize, height: usize, resolution: f64, origin: DVec2) -> Result<Self, MapError> {
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(MapError::InvalidResolution(resolution));
        }
        if width == 0 || height == 0 {
            return Err(MapError::Empty);
        }
        Ok(Self {
            width,
            height,
            resolution,
            origin,
            cells: vec![CellState::Free; width * height],
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> DVec2 {
        self.origin
    }

    pub fn with_origin(mut self, origin: DVec2) -> Self {
        self.origin = origin;
        self
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// World-space upper corner of the map.
    pub fn extent(&self) -> DVec2 {
        self.origin + DVec2::new(self.width as f64, self.height as f64) * self.resolution
    }

    pub fn contains_cell(&self, c: CellIndex) -> bool {
        c.ix < self.width && c.iy < self.height
    }

    /// Row-major flat index.
    pub fn flat(&self, c: CellIndex) -> usize {
        c.iy * self.width + c.ix
    }

    pub fn unflat(&self, i: usize) -> CellIndex {
        CellIndex::new(i % self.width, i / self.width)
    }

    pub fn get(&self, c: CellIndex) -> CellState {
        self.cells[self.flat(c)]
    }

    pub fn set(&mut self, c: CellIndex, state: CellState) {
        let i = self.flat(c);
        self.cells[i] = state;
    }

    pub fn is_occupied(&self, c: CellIndex) -> bool {
        self.get(c) == CellState::Occupied
    }

    pub fn is_free(&self, c: CellIndex) -> bool {
        self.get(c) == CellState::Free
    }

    pub fn states(&self) -> &[CellState] {
        &self.cells
    }

    pub fn count(&self, state: CellState) -> usize {
        self.cells.iter().filter(|&&s| s == state).count()
    }

    pub fn cells(&self) -> impl Iterator<Item = CellIndex> + '_ {
        (0..self.cells.len()).map(move |i| self.unflat(i))
    }

    pub fn cell_center(&self, c: CellIndex) -> DVec2 {
        self.origin + (DVec2::new(c.ix as f64, c.iy as f64) + 0.5) * self.resolution
    }

    /// Cell containing a world point, or `None` outside the map.
    pub fn world_to_cell(&self, p: DVec2) -> Option<CellIndex> {
        let rel = (p - self.origin) / self.resolution;
        if !(rel.x >= 0.0 && rel.y >= 0.0) {
            return None;
        }
        let (ix, iy) = (rel.x.floor() as usize, rel.y.floor() as usize);
        (ix < self.width && iy < self.height).then_some(CellIndex::new(ix, iy))
    }

    pub fn contains_point(&self, p: DVec2) -> bool {
        self.world_to_cell(p).is_some()
    }

    /// Points outside the map count as occupied (closed world).
    pub fn occupied_at(&self, p: DVec2) -> bool {
        match self.world_to_cell(p) {
            Some(c) => self.is_occupied(c),
            None => true,
        }
    }

    /// Sets every cell whose center lies in the axis-aligned box to `state`.
    pub fn fill_rect(&mut self, min: DVec2, max: DVec2, state: CellState) {
        for iy in 0..self.height {
            for ix in 0..self.width {
                let c = CellIndex::new(ix, iy);
                let p = self.cell_center(c);
                if p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y {
                    self.set(c, state);
                }
            }
        }
    }

    /// Returns a copy mirrored top-to-bottom (`iy -> height-1-iy`); origin is kept.
    pub fn flipped_vertically(&self) -> OccupancyGrid {
        let mut out = self.clone();
        for iy in 0..self.height {
            for ix in 0..self.width {
                let src = CellIndex::new(ix, self.height - 1 - iy);
                out.set(CellIndex::new(ix, iy), self.get(src));
            }
        }
        out
    }

    /// Serializes to the ASCII map format; the first line is the highest row.
    pub fn to_ascii(&self) -> String {
        let mut s = String::with_capacity((self.width + 1) * self.height);
        for iy in (0..self.height).rev() {
            for ix in 0..self.width {
                s.push(match self.get(CellIndex::new(ix, iy)) {
                    CellState::Free => '.',
                    CellState::Occupied => '#',
                });
            }
            s.push('\n');
        }
        s
    }
}

/// Parses the ASCII map format: `#` is occupied, `.` is free, one text line per
/// row with the first line at the top (highest `iy`). The origin is `(0, 0)`.
pub fn parse_map(ascii_text: &str, resolution: f64) -> Result<OccupancyGrid, MapError> {
    let lines: Vec<&str> = ascii_text
        .lines()
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .collect();
    // tolerate trailing blank lines from editors
    let end = lines.iter().rposition(|l| !l.is_empty()).map_or(0, |i| i + 1);
    let lines = &lines[..end];
    if lines.is_empty() {
        return Err(MapError::Empty);
    }
    let width = lines[0].chars().count();
    let height = lines.len();
    let mut grid = OccupancyGrid::new(width.max(1), height, resolution, DVec2::ZERO)?;
    if width == 0 {
        return Err(MapError::Empty);
    }
    for (row, line) in lines.iter().enumerate() {
        let found = line.chars().count();
        if found != width {
            return Err(MapError::Ragged {
                line: row + 1,
                expected: width,
                found,
            });
        }
        let iy = height - 1 - row;
        for (col, ch) in line.chars().enumerate() {
            let state = match ch {
                '#' => CellState::Occupied,
                '.' => CellState::Free,
                other => {
                    return Err(MapError::IllegalChar {
                        line: row + 1,
                        column: col + 1,
                        ch: other,
                    })
                }
            };
            grid.set(CellIndex::new(col, iy), state);
        }
    }
    Ok(grid)
}
