//! Curved quadrilateral meshes of the meridian domain.
//!
//! Each element carries `(g + 1)^2` geometry nodes at the tensor Gauss–Lobatto
//! points of `[0, 1]^2` (index `i + (g + 1) j`), which define its polynomial
//! map `(x, y) -> (r, z)`. Local faces are numbered 0 = `y = 0`, 1 = `x = 1`,
//! 2 = `y = 1`, 3 = `x = 0`; the face parameter increases with the free
//! reference coordinate.

mod generate;
mod io;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::{ConfigId, GeometryError, Subdomain, Vec2};
use crate::lagrange::{tensor_index, LagrangeBasis1d};
use crate::quadrature::gauss_legendre_unit;

pub use generate::{
    band_offsets, layered_mesh_b, square_mesh_a, LayeredMeshOptions, SkinBand,
    SKIN_REGION_THICKNESS,
};
pub use io::{read_quadmesh, write_quadmesh};

/// Coordinates with `|r|` below this are snapped onto the axis.
pub const AXIS_SNAP: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("refinement index must be at least 1, got {0}")]
    InvalidRefinement(usize),
    #[error("configuration {0} has no layered mesh")]
    NotLayered(ConfigId),
    #[error(
        "boundary-layer band of thickness {thickness} exceeds the normal-coordinate limit {limit}"
    )]
    LayerTooThick { thickness: f64, limit: f64 },
    #[error("element {elem}: {reason}")]
    InvalidElement { elem: usize, reason: String },
    #[error("non-conforming mesh: {0}")]
    NonConforming(String),
    #[error("element {elem} has non-positive Jacobian {det} at reference point ({x}, {y})")]
    NonPositiveJacobian {
        elem: usize,
        det: f64,
        x: f64,
        y: f64,
    },
    #[error("unknown mesh '{0}' (expected M<k>)")]
    UnknownMesh(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Boundary label of a facet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FacetTag {
    /// Outer boundary, carries the Dirichlet data.
    Outer,
    /// Symmetry axis `r = 0`.
    Axis,
    /// Conductor/dielectric interface (stored on the conductor element).
    Interface,
}

impl FacetTag {
    pub fn as_str(self) -> &'static str {
        match self {
            FacetTag::Outer => "outer",
            FacetTag::Axis => "axis",
            FacetTag::Interface => "interface",
        }
    }
}

impl FromStr for FacetTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "outer" => Ok(FacetTag::Outer),
            "axis" => Ok(FacetTag::Axis),
            "interface" => Ok(FacetTag::Interface),
            _ => Err(format!("unknown facet tag '{s}'")),
        }
    }
}

pub(crate) fn subdomain_str(s: Subdomain) -> &'static str {
    match s {
        Subdomain::Conductor => "conductor",
        Subdomain::Dielectric => "dielectric",
    }
}

pub(crate) fn parse_subdomain(s: &str) -> Result<Subdomain, String> {
    match s {
        "conductor" => Ok(Subdomain::Conductor),
        "dielectric" => Ok(Subdomain::Dielectric),
        _ => Err(format!("unknown subdomain tag '{s}'")),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    /// Geometry node ids in tensor order.
    pub nodes: Vec<usize>,
    pub geom_degree: usize,
    pub subdomain: Subdomain,
}

impl Element {
    /// Corner node ids in counter-clockwise reference order.
    pub fn vertices(&self) -> [usize; 4] {
        let g = self.geom_degree;
        [
            self.nodes[tensor_index(g, 0, 0)],
            self.nodes[tensor_index(g, g, 0)],
            self.nodes[tensor_index(g, g, g)],
            self.nodes[tensor_index(g, 0, g)],
        ]
    }

    /// Node ids along local face `face`, in increasing face parameter.
    pub fn face_nodes(&self, face: usize) -> Vec<usize> {
        face_tensor_indices(self.geom_degree, face)
            .into_iter()
            .map(|k| self.nodes[k])
            .collect()
    }
}

/// Tensor indices of the nodes on local face `face` of a degree-`p` element.
pub fn face_tensor_indices(p: usize, face: usize) -> Vec<usize> {
    (0..=p)
        .map(|t| match face {
            0 => tensor_index(p, t, 0),
            1 => tensor_index(p, p, t),
            2 => tensor_index(p, t, p),
            3 => tensor_index(p, 0, t),
            _ => panic!("face index {face} out of range"),
        })
        .collect()
}

/// Reference point of face `face` at face parameter `t`.
pub fn face_point(face: usize, t: f64) -> (f64, f64) {
    match face {
        0 => (t, 0.0),
        1 => (1.0, t),
        2 => (t, 1.0),
        3 => (0.0, t),
        _ => panic!("face index {face} out of range"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Facet {
    pub elem: usize,
    pub face: usize,
    pub tag: FacetTag,
}

/// Jacobian `[[dr/dx, dr/dy], [dz/dx, dz/dy]]` of an element map.
pub type Jacobian = [[f64; 2]; 2];

pub fn det(j: &Jacobian) -> f64 {
    j[0][0] * j[1][1] - j[0][1] * j[1][0]
}

#[derive(Debug, Clone)]
pub struct QuadMesh {
    pub name: String,
    pub nodes: Vec<Vec2>,
    pub elements: Vec<Element>,
    pub facets: Vec<Facet>,
    geom_bases: Vec<Option<LagrangeBasis1d>>,
}

impl PartialEq for QuadMesh {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.nodes == other.nodes
            && self.elements == other.elements
            && self.facets == other.facets
    }
}

impl QuadMesh {
    /// Builds a mesh from nodes and elements, deriving boundary and interface
    /// facets and checking conformity.
    pub fn from_parts(
        name: impl Into<String>,
        nodes: Vec<Vec2>,
        elements: Vec<Element>,
    ) -> Result<Self, MeshError> {
        let mut mesh = Self::unchecked(name.into(), nodes, elements, Vec::new())?;
        mesh.facets = mesh.derive_facets()?;
        Ok(mesh)
    }

    /// Builds a mesh with explicitly given facets (used by the importer).
    pub fn with_facets(
        name: impl Into<String>,
        nodes: Vec<Vec2>,
        elements: Vec<Element>,
        facets: Vec<Facet>,
    ) -> Result<Self, MeshError> {
        let mesh = Self::unchecked(name.into(), nodes, elements, facets)?;
        let derived = mesh.derive_facets()?;
        let mut given = mesh.facets.clone();
        let mut expect = derived;
        let key = |f: &Facet| (f.elem, f.face);
        given.sort_by_key(key);
        expect.sort_by_key(key);
        if given != expect {
            return Err(MeshError::NonConforming(
                "facet list does not match the element connectivity".into(),
            ));
        }
        Ok(mesh)
    }

    fn unchecked(
        name: String,
        nodes: Vec<Vec2>,
        elements: Vec<Element>,
        facets: Vec<Facet>,
    ) -> Result<Self, MeshError> {
        let mut max_deg = 0;
        for (e, el) in elements.iter().enumerate() {
            let g = el.geom_degree;
            if g == 0 {
                return Err(MeshError::InvalidElement {
                    elem: e,
                    reason: "geometry degree must be at least 1".into(),
                });
            }
            if el.nodes.len() != (g + 1) * (g + 1) {
                return Err(MeshError::InvalidElement {
                    elem: e,
                    reason: format!(
                        "expected {} nodes, found {}",
                        (g + 1) * (g + 1),
                        el.nodes.len()
                    ),
                });
            }
            if let Some(&bad) = el.nodes.iter().find(|&&n| n >= nodes.len()) {
                return Err(MeshError::InvalidElement {
                    elem: e,
                    reason: format!("node id {bad} out of range"),
                });
            }
            max_deg = max_deg.max(g);
        }
        if let Some(p) = nodes.iter().find(|p| !(p[0] >= 0.0) || !p[1].is_finite()) {
            return Err(MeshError::NonConforming(format!(
                "node ({}, {}) outside the closed half-plane r >= 0",
                p[0], p[1]
            )));
        }
        let mut geom_bases = vec![None; max_deg + 1];
        for el in &elements {
            if geom_bases[el.geom_degree].is_none() {
                geom_bases[el.geom_degree] = Some(LagrangeBasis1d::gauss_lobatto(el.geom_degree));
            }
        }
        Ok(Self {
            name,
            nodes,
            elements,
            facets,
            geom_bases,
        })
    }

    /// Checks the face-sharing structure and returns the boundary and
    /// interface facets, sorted by (element, face).
    fn derive_facets(&self) -> Result<Vec<Facet>, MeshError> {
        let mut faces: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
        for (e, el) in self.elements.iter().enumerate() {
            for face in 0..4 {
                let fn_ = el.face_nodes(face);
                let (a, b) = (fn_[0], fn_[fn_.len() - 1]);
                if a == b {
                    return Err(MeshError::InvalidElement {
                        elem: e,
                        reason: format!("face {face} is degenerate"),
                    });
                }
                faces
                    .entry((a.min(b), a.max(b)))
                    .or_default()
                    .push((e, face));
            }
        }
        let mut facets = Vec::new();
        for (key, owners) in &faces {
            match owners.as_slice() {
                [(e, face)] => {
                    let (e, face) = (*e, *face);
                    let on_axis = self.elements[e]
                        .face_nodes(face)
                        .iter()
                        .all(|&n| self.nodes[n][0] == 0.0);
                    let tag = if on_axis {
                        FacetTag::Axis
                    } else {
                        FacetTag::Outer
                    };
                    facets.push(Facet { elem: e, face, tag });
                }
                [(e1, f1), (e2, f2)] => {
                    let (e1, f1, e2, f2) = (*e1, *f1, *e2, *f2);
                    let mut n1 = self.elements[e1].face_nodes(f1);
                    let n2 = self.elements[e2].face_nodes(f2);
                    if n1 != n2 {
                        n1.reverse();
                    }
                    if n1 != n2 {
                        return Err(MeshError::NonConforming(format!(
                            "elements {e1} and {e2} share corners {key:?} but not the facet nodes"
                        )));
                    }
                    let (s1, s2) = (self.elements[e1].subdomain, self.elements[e2].subdomain);
                    if s1 != s2 {
                        let (elem, face) = if s1 == Subdomain::Conductor {
                            (e1, f1)
                        } else {
                            (e2, f2)
                        };
                        facets.push(Facet {
                            elem,
                            face,
                            tag: FacetTag::Interface,
                        });
                    }
                }
                _ => {
                    return Err(MeshError::NonConforming(format!(
                        "facet {key:?} shared by {} elements",
                        owners.len()
                    )))
                }
            }
        }
        facets.sort_by_key(|f| (f.elem, f.face));
        Ok(facets)
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn facets_with_tag(&self, tag: FacetTag) -> impl Iterator<Item = &Facet> {
        self.facets.iter().filter(move |f| f.tag == tag)
    }

    /// The Lagrange basis used for geometry degree `g`.
    pub fn geom_basis(&self, g: usize) -> &LagrangeBasis1d {
        self.geom_bases[g]
            .as_ref()
            .expect("geometry basis exists for every degree present")
    }

    /// Geometry node coordinates of element `e` in tensor order.
    pub fn element_coords(&self, e: usize) -> Vec<Vec2> {
        self.elements[e]
            .nodes
            .iter()
            .map(|&n| self.nodes[n])
            .collect()
    }

    /// Physical point and Jacobian of element `e` at reference `(x, y)`.
    pub fn map(&self, e: usize, x: f64, y: f64) -> (Vec2, Jacobian) {
        let el = &self.elements[e];
        let basis = self.geom_basis(el.geom_degree);
        let (vx, dx) = basis.values_and_derivatives(x);
        let (vy, dy) = basis.values_and_derivatives(y);
        let n = el.geom_degree + 1;
        let mut p = [0.0; 2];
        let mut jac = [[0.0; 2]; 2];
        for j in 0..n {
            for i in 0..n {
                let node = self.nodes[el.nodes[i + n * j]];
                let w = vx[i] * vy[j];
                let wx = dx[i] * vy[j];
                let wy = vx[i] * dy[j];
                for c in 0..2 {
                    p[c] += w * node[c];
                    jac[c][0] += wx * node[c];
                    jac[c][1] += wy * node[c];
                }
            }
        }
        (p, jac)
    }

    /// Axis-aligned bounding box of the geometry nodes of element `e`.
    pub fn bounding_box(&self, e: usize) -> [Vec2; 2] {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for &n in &self.elements[e].nodes {
            for c in 0..2 {
                lo[c] = lo[c].min(self.nodes[n][c]);
                hi[c] = hi[c].max(self.nodes[n][c]);
            }
        }
        [lo, hi]
    }

    /// Area of element `e` by Gauss–Legendre quadrature.
    pub fn element_area(&self, e: usize) -> f64 {
        let (x, w) = gauss_legendre_unit(self.elements[e].geom_degree + 4);
        let mut area = 0.0;
        for (qy, wy) in x.iter().zip(&w) {
            for (qx, wx) in x.iter().zip(&w) {
                let (_, jac) = self.map(e, *qx, *qy);
                area += wx * wy * det(&jac);
            }
        }
        area
    }

    /// Sum of element areas, optionally restricted to one subdomain.
    pub fn area(&self, subdomain: Option<Subdomain>) -> f64 {
        (0..self.elements.len())
            .filter(|&e| subdomain.is_none_or(|s| self.elements[e].subdomain == s))
            .map(|e| self.element_area(e))
            .sum()
    }

    /// Checks that every element map has a positive Jacobian at the tensor
    /// Gauss–Legendre points of an `n`-point rule.
    pub fn check_jacobians(&self, n: usize) -> Result<(), MeshError> {
        let (x, _) = gauss_legendre_unit(n);
        for e in 0..self.elements.len() {
            for &qy in &x {
                for &qx in &x {
                    let d = det(&self.map(e, qx, qy).1);
                    if !(d > 0.0) {
                        return Err(MeshError::NonPositiveJacobian {
                            elem: e,
                            det: d,
                            x: qx,
                            y: qy,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Re-runs the conformity check of the construction.
    pub fn check_conformity(&self) -> Result<(), MeshError> {
        let derived = self.derive_facets()?;
        if derived != self.facets {
            return Err(MeshError::NonConforming("stored facets are stale".into()));
        }
        Ok(())
    }
}

/// Named mesh family member, `M<k>`: square mesh of side `1/k` for
/// configuration A, `k` boundary layers for the spheroidal configurations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshSpec {
    pub level: usize,
}

impl MeshSpec {
    pub fn new(level: usize) -> Self {
        Self { level }
    }

    pub fn build(&self, config: ConfigId) -> Result<QuadMesh, MeshError> {
        if config.is_spheroidal() {
            layered_mesh_b(config, self.level, &LayeredMeshOptions::for_config(config))
        } else {
            square_mesh_a(self.level)
        }
    }
}

impl fmt::Display for MeshSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "M{}", self.level)
    }
}

impl FromStr for MeshSpec {
    type Err = MeshError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let digits = t.strip_prefix('M').or_else(|| t.strip_prefix('m'));
        match digits.and_then(|d| d.parse::<usize>().ok()) {
            Some(k) if k >= 1 => Ok(Self::new(k)),
            _ => Err(MeshError::UnknownMesh(s.to_string())),
        }
    }
}

/// Spatial hash merging points closer than `tol`.
#[derive(Debug)]
pub(crate) struct PointIndex {
    cell: f64,
    tol: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
    pub points: Vec<Vec2>,
}

impl PointIndex {
    pub fn new(tol: f64) -> Self {
        Self {
            cell: 10.0 * tol,
            tol,
            buckets: HashMap::new(),
            points: Vec::new(),
        }
    }

    fn key(&self, p: Vec2) -> (i64, i64) {
        (
            (p[0] / self.cell).floor() as i64,
            (p[1] / self.cell).floor() as i64,
        )
    }

    /// Id of an existing point within `tol` of `p`, or a new one.
    pub fn insert(&mut self, mut p: Vec2) -> usize {
        if p[0].abs() < AXIS_SNAP {
            p[0] = 0.0;
        }
        let (kx, ky) = self.key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.buckets.get(&(kx + dx, ky + dy)) {
                    for &id in ids {
                        let q = self.points[id];
                        if (q[0] - p[0]).abs() <= self.tol && (q[1] - p[1]).abs() <= self.tol {
                            return id;
                        }
                    }
                }
            }
        }
        let id = self.points.len();
        self.points.push(p);
        self.buckets.entry((kx, ky)).or_default().push(id);
        id
    }
}
