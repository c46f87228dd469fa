//! `Q_p` discretization of the axisymmetric form
//!
//! `a(H, w) = int (1/eps) (dH/dz dw/dz + (dH/dr + H/r)(dw/dr + w/r)) r dr dz
//!           - kappa^2 int H w r dr dz`
//!
//! with the bilinear (unconjugated) pairing, Dirichlet conditions on the outer
//! boundary and the axis, and interior sources.

mod assemble;
mod basis;
mod condense;
mod field;
mod space;

use std::sync::Arc;

use thiserror::Error;

use crate::geometry::ConfigId;
use crate::linsolve::LinsolveError;
use crate::mesh::{MeshError, QuadMesh};
use crate::physics::PhysicalParams;

pub use assemble::{
    assemble, dirichlet_values, BoundaryData, Coefficients, InteriorSource, LinearSystem,
    SourceSpec,
};
pub use basis::{shape_basis, ShapeBasis, Tabulation, MAX_DEGREE};
pub use condense::{
    assemble_condensed, solve_condensed, solve_system, CondensedSystem, RESIDUAL_TOL,
};
pub use field::{DiscreteField, FieldMeta, NEWTON_TOL, REFERENCE_SLACK};
pub use space::{DofConstraint, FeSpace};

#[derive(Debug, Error)]
pub enum FemError {
    #[error("polynomial degree {0} outside 1..=20")]
    Degree(usize),
    #[error("invalid DOF permutation")]
    InvalidPermutation,
    #[error("element {elem}: quadrature point with r = {r}, det J = {det}")]
    DegenerateQuadraturePoint { elem: usize, r: f64, det: f64 },
    #[error("length mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("point ({r}, {z}) is not inside the mesh")]
    NotFound { r: f64, z: f64 },
    #[error("inverse map of element {elem} did not converge for point ({r}, {z})")]
    InverseMap { r: f64, z: f64, elem: usize },
    #[error("relative residual {residual} above tolerance")]
    Residual { residual: f64 },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Linsolve(#[from] LinsolveError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Solves benchmark configuration `config` at conductivity `params.sigma`
/// with `Q_p` elements on `mesh`.
pub fn solve_benchmark(
    config: ConfigId,
    mesh: Arc<QuadMesh>,
    params: &PhysicalParams,
    p: usize,
) -> Result<DiscreteField, FemError> {
    let meta = FieldMeta {
        sigma: Some(params.sigma),
        p,
        mesh: mesh.name.clone(),
    };
    let space = Arc::new(FeSpace::new(mesh, p)?);
    solve_condensed(
        &space,
        &Coefficients::from_params(params),
        &SourceSpec::for_config(config),
        meta,
    )
}
