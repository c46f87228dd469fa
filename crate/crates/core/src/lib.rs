//! High-order finite elements for the axisymmetric orthoradial eddy-current
//! problem: conductor skin layers, curvature-corrected skin depth and the
//! post-processing that extracts decay slopes from computed fields.

pub mod fem;
pub mod geometry;
pub mod lagrange;
pub mod linsolve;
pub mod mesh;
pub mod physics;
pub mod postprocess;
pub mod quadrature;

/// Crate version, part of every cache and manifest key.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
