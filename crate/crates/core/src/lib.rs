//! Equal-volume allocation of space to the points of a Poisson process with a
//! generalized Ajtai–Komlós–Tusnády transport scheme, its shift-averaged
//! fractional version, and a growing-ball purification into a pure
//! allocation.

pub mod cli;
pub mod error;
pub mod fractional;
pub mod geometry;
pub mod pointprocess;
pub mod purify;
pub mod rng;
pub mod stats;
pub mod svg;
pub mod transport;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{Cuboid, Point, ShiftedLattice};
pub use pointprocess::Configuration;
