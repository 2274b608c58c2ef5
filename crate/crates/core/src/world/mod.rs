//! Map representation and geometric queries shared by every other module.

mod collision;
mod distance;
mod geometry;
mod grid;

use thiserror::Error;

pub use collision::{footprint_collides, raycast_clear, FootprintChecker};
pub use distance::{distance_transform, DistanceField};
pub use geometry::{normalize_angle, Footprint, Pose2};
pub use grid::{parse_map, CellIndex, CellState, OccupancyGrid};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("map text is empty")]
    Empty,
    #[error("ragged map: line {line} has {found} cells, expected {expected}")]
    Ragged { line: usize, expected: usize, found: usize },
    #[error("illegal map character {ch:?} at line {line}, column {column}")]
    IllegalChar { line: usize, column: usize, ch: char },
    #[error("resolution must be positive and finite, got {0}")]
    InvalidResolution(f64),
    #[error("unbounded map: no occupied cell")]
    Unbounded,
    #[error("point ({x:.3}, {y:.3}) lies outside the map")]
    OutOfBounds { x: f64, y: f64 },
}
