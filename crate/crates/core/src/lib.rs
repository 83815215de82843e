//! Hierarchical Triangular Mesh indexing of points on the unit sphere.
//!
//! [`mesh`] maps points to 64-bit trixel keys, [`region`] parses and
//! normalizes region specifications, [`cover`] turns a region into sorted
//! key ranges and [`index`] answers point queries with a coarse range scan
//! followed by an exact test.

pub mod cover;
pub mod geom;
pub mod index;
pub mod mesh;
pub mod region;

/// Library version.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
