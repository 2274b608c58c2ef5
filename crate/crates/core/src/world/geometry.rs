use std::f64::consts::{PI, TAU};

use glam::DVec2;
use serde::{Deserialize, Serialize};

/// Wraps an angle into `(-pi, pi]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let mut a = theta % TAU;
    if a <= -PI {
        a += TAU;
    } else if a > PI {
        a -= TAU;
    }
    a
}

/// Planar pose; `theta` is kept in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn from_point(p: DVec2, theta: f64) -> Self {
        Self::new(p.x, p.y, theta)
    }

    pub fn position(&self) -> DVec2 {
        DVec2::new(self.x, self.y)
    }

    pub fn heading(&self) -> DVec2 {
        DVec2::from_angle(self.theta)
    }

    /// Maps a robot-frame vector into the world frame.
    pub fn rotate(&self, v: DVec2) -> DVec2 {
        self.heading().rotate(v)
    }

    /// Maps a world point into the robot frame.
    pub fn to_local(&self, p: DVec2) -> DVec2 {
        let d = p - self.position();
        let h = self.heading();
        DVec2::new(d.dot(h), d.dot(h.perp()))
    }

    pub fn translated(&self, d: DVec2) -> Pose2 {
        Pose2::new(self.x + d.x, self.y + d.y, self.theta)
    }
}

/// Robot body rectangle, centered on the pose, `length` along the heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Footprint {
    pub length: f64,
    pub width: f64,
}

impl Default for Footprint {
    fn default() -> Self {
        Self {
            length: 1.13,
            width: 0.65,
        }
    }
}

impl Footprint {
    pub fn new(length: f64, width: f64) -> Option<Self> {
        (length > 0.0 && width > 0.0).then_some(Self { length, width })
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.width
    }

    pub fn half_length(&self) -> f64 {
        0.5 * self.length
    }

    /// Radius of the circle enclosing the rectangle.
    pub fn circumradius(&self) -> f64 {
        DVec2::new(self.half_length(), self.half_width()).length()
    }

    /// World-frame corners, counter-clockwise from front-left.
    pub fn corners(&self, pose: &Pose2) -> [DVec2; 4] {
        let (hl, hw) = (self.half_length(), self.half_width());
        [
            DVec2::new(hl, hw),
            DVec2::new(-hl, hw),
            DVec2::new(-hl, -hw),
            DVec2::new(hl, -hw),
        ]
        .map(|c| pose.position() + pose.rotate(c))
    }

    /// Euclidean distance from a world point to the rectangle (0 inside).
    pub fn distance_to(&self, pose: &Pose2, p: DVec2) -> f64 {
        let l = pose.to_local(p);
        let dx = (l.x.abs() - self.half_length()).max(0.0);
        let dy = (l.y.abs() - self.half_width()).max(0.0);
        DVec2::new(dx, dy).length()
    }
}
