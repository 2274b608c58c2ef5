//! Hallway navigation with proactive lane changing.
//!
//! The crate bundles a small navigation stack (keep-left lane field, grid A*
//! with a lane-following edge cost, binary Bayes person filter, dynamic-window
//! local planner) together with a deterministic simulator of a robot meeting
//! a single pedestrian in a straight hallway or at a blind corner.

pub mod world;
pub mod lane;
pub mod perception;
pub mod planner;
pub mod local;
pub mod behavior;
pub mod pedestrian;
pub mod harness;
