//! Global degree-of-freedom numbering of the continuous `Q_p` space.

use std::collections::HashMap;
use std::sync::Arc;

use crate::geometry::Vec2;
use crate::lagrange::tensor_index;
use crate::mesh::{face_tensor_indices, FacetTag, QuadMesh};
use crate::quadrature::gauss_legendre_unit;

use super::basis::{shape_basis, ShapeBasis, Tabulation};
use super::FemError;

/// Essential condition attached to a degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofConstraint {
    /// On the symmetry axis: always zero.
    Axis,
    /// On the outer boundary: Dirichlet data.
    Outer,
}

/// Where a local node sits in the mesh topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum NodeKey {
    Vertex(usize),
    Edge(usize, usize, usize),
}

/// `Q_p` space over a mesh: element-to-global DOF maps, DOF locations and the
/// constrained set (every DOF on an outer or axis facet).
#[derive(Debug)]
pub struct FeSpace {
    mesh: Arc<QuadMesh>,
    basis: ShapeBasis,
    elem_dofs: Vec<Vec<usize>>,
    dof_points: Vec<Vec2>,
    constraints: Vec<Option<DofConstraint>>,
    quad_points: Vec<f64>,
    quad_weights: Vec<f64>,
    tab: Tabulation,
}

impl FeSpace {
    /// Numbers DOFs in order of first appearance over (element, tensor index).
    /// Vertex and edge nodes shared between elements are identified through
    /// the mesh connectivity.
    pub fn new(mesh: Arc<QuadMesh>, p: usize) -> Result<Self, FemError> {
        let basis = shape_basis(p)?;
        let nodes_1d = basis.nodes_1d().to_vec();
        let mut keys: HashMap<NodeKey, usize> = HashMap::new();
        let mut elem_dofs = Vec::with_capacity(mesh.elements.len());
        let mut dof_points = Vec::new();
        for (e, el) in mesh.elements.iter().enumerate() {
            let vertex_at = |i: usize, j: usize| el.nodes[tensor_index(el.geom_degree, i, j)];
            let g = el.geom_degree;
            let mut dofs = Vec::with_capacity(basis.len());
            for j in 0..=p {
                for i in 0..=p {
                    let key = node_key(p, i, j, |ci, cj| vertex_at(ci * g, cj * g));
                    let id = match key {
                        Some(k) => match keys.get(&k) {
                            Some(&id) => id,
                            None => {
                                let id = dof_points.len();
                                keys.insert(k, id);
                                dof_points.push(mesh.map(e, nodes_1d[i], nodes_1d[j]).0);
                                id
                            }
                        },
                        None => {
                            dof_points.push(mesh.map(e, nodes_1d[i], nodes_1d[j]).0);
                            dof_points.len() - 1
                        }
                    };
                    dofs.push(id);
                }
            }
            elem_dofs.push(dofs);
        }

        let mut constraints = vec![None; dof_points.len()];
        for facet in &mesh.facets {
            let kind = match facet.tag {
                FacetTag::Axis => DofConstraint::Axis,
                FacetTag::Outer => DofConstraint::Outer,
                FacetTag::Interface => continue,
            };
            for k in face_tensor_indices(p, facet.face) {
                let d = elem_dofs[facet.elem][k];
                if constraints[d] != Some(DofConstraint::Axis) {
                    constraints[d] = Some(kind);
                }
            }
        }

        let (quad_points, quad_weights) = gauss_legendre_unit(p + 3);
        let tab = basis.tabulate_grid(&quad_points, &quad_points);
        Ok(Self {
            mesh,
            basis,
            elem_dofs,
            dof_points,
            constraints,
            quad_points,
            quad_weights,
            tab,
        })
    }

    /// Same space with DOF `i` renamed `perm[i]`.
    pub fn permuted(mut self, perm: &[usize]) -> Result<Self, FemError> {
        let n = self.n_dofs();
        let mut seen = vec![false; n];
        if perm.len() != n
            || perm
                .iter()
                .any(|&k| k >= n || std::mem::replace(&mut seen[k], true))
        {
            return Err(FemError::InvalidPermutation);
        }
        for dofs in &mut self.elem_dofs {
            for d in dofs.iter_mut() {
                *d = perm[*d];
            }
        }
        let mut points = vec![[0.0; 2]; n];
        let mut cons = vec![None; n];
        for i in 0..n {
            points[perm[i]] = self.dof_points[i];
            cons[perm[i]] = self.constraints[i];
        }
        self.dof_points = points;
        self.constraints = cons;
        Ok(self)
    }

    pub fn mesh(&self) -> &Arc<QuadMesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn basis(&self) -> &ShapeBasis {
        &self.basis
    }

    pub fn n_dofs(&self) -> usize {
        self.dof_points.len()
    }

    pub fn element_dofs(&self, e: usize) -> &[usize] {
        &self.elem_dofs[e]
    }

    pub fn dof_point(&self, d: usize) -> Vec2 {
        self.dof_points[d]
    }

    pub fn constraint(&self, d: usize) -> Option<DofConstraint> {
        self.constraints[d]
    }

    pub fn n_constrained(&self) -> usize {
        self.constraints.iter().filter(|c| c.is_some()).count()
    }

    /// 1D Gauss–Legendre rule (`p + 3` points on `[0, 1]`) used for element integrals.
    pub fn quadrature(&self) -> (&[f64], &[f64]) {
        (&self.quad_points, &self.quad_weights)
    }

    /// Basis tabulated at the tensor quadrature points.
    pub fn tabulation(&self) -> &Tabulation {
        &self.tab
    }

    /// Local tensor indices on the element boundary, in tensor order.
    pub fn skeleton_local(&self) -> Vec<usize> {
        let p = self.degree();
        (0..self.basis.len())
            .filter(|k| {
                let (i, j) = (k % (p + 1), k / (p + 1));
                i == 0 || j == 0 || i == p || j == p
            })
            .collect()
    }

    /// Local tensor indices strictly inside the element, in tensor order.
    pub fn interior_local(&self) -> Vec<usize> {
        let p = self.degree();
        (0..self.basis.len())
            .filter(|k| {
                let (i, j) = (k % (p + 1), k / (p + 1));
                i != 0 && j != 0 && i != p && j != p
            })
            .collect()
    }
}

/// Topological key of local node `(i, j)`; `None` for element-interior nodes.
/// `vertex(ci, cj)` returns the mesh node at reference corner `(ci, cj)`.
fn node_key(
    p: usize,
    i: usize,
    j: usize,
    vertex: impl Fn(usize, usize) -> usize,
) -> Option<NodeKey> {
    let at_x = if i == 0 {
        Some(0)
    } else if i == p {
        Some(1)
    } else {
        None
    };
    let at_y = if j == 0 {
        Some(0)
    } else if j == p {
        Some(1)
    } else {
        None
    };
    let edge = |a: usize, b: usize, pos: usize| {
        // position counted from the lower-numbered endpoint
        if a < b {
            NodeKey::Edge(a, b, pos)
        } else {
            NodeKey::Edge(b, a, p - pos)
        }
    };
    match (at_x, at_y) {
        (Some(cx), Some(cy)) => Some(NodeKey::Vertex(vertex(cx, cy))),
        (None, Some(cy)) => Some(edge(vertex(0, cy), vertex(1, cy), i)),
        (Some(cx), None) => Some(edge(vertex(cx, 0), vertex(cx, 1), j)),
        (None, None) => None,
    }
}
