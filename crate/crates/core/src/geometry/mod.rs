//! Meridian-domain geometry: the conductor interface as an arc-length curve
//! with its curvature quantities, and the benchmark configurations.

mod curve;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

pub use curve::{ArcLengthCurve, EllipseArc, ParametricCurve, Reversed, Segment, Vec2};

/// Positions closer than this (relative to the curve length) to a corner are
/// treated as the corner itself.
const CORNER_SNAP: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("arc-length position {xi} outside [0, {length}]")]
    OutOfRange { xi: f64, length: f64 },
    #[error("curvature undefined at the corner point xi = {xi}")]
    CornerPoint { xi: f64 },
    #[error("mean curvature undefined on the axis (r = {r} at xi = {xi})")]
    AxisPoint { xi: f64, r: f64 },
    #[error("normal offset {h} outside the tubular neighbourhood [0, {limit})")]
    OffsetOutOfRange { h: f64, limit: f64 },
    #[error("invalid ellipse semi-axes a = {a}, c = {c} (need a >= c > 0)")]
    InvalidEllipse { a: f64, c: f64 },
    #[error("unknown configuration '{0}' (expected A, B1, B2, C1 or C2)")]
    UnknownConfig(String),
}

#[derive(Debug, Clone)]
struct Piece {
    start: f64,
    curve: ArcLengthCurve,
}

/// Arc-length parametrized interface `xi -> (r, z)`, oriented so that
/// `n = (-z', r')` points into the conductor. Made of smooth pieces; the
/// junctions between pieces are corners.
#[derive(Debug, Clone)]
pub struct InterfaceCurve {
    pieces: Vec<Piece>,
    length: f64,
    corners: Vec<f64>,
    max_curvature: f64,
}

impl InterfaceCurve {
    /// Builds a curve from smooth pieces traversed end to end.
    pub fn from_pieces(pieces: Vec<Arc<dyn ParametricCurve>>) -> Self {
        let mut out = Vec::with_capacity(pieces.len());
        let mut start = 0.0;
        let mut corners = Vec::new();
        let mut max_curvature: f64 = 0.0;
        for (i, base) in pieces.into_iter().enumerate() {
            let curve = ArcLengthCurve::new(base);
            if i > 0 {
                corners.push(start);
            }
            max_curvature = max_curvature.max(curve.max_abs_curvature());
            let len = curve.length();
            out.push(Piece { start, curve });
            start += len;
        }
        Self {
            pieces: out,
            length: start,
            corners,
            max_curvature,
        }
    }

    /// Arc-length reparametrization of the half ellipse with semi-axes `a`
    /// (along r) and `c` (along z), from `(0, -c)` to `(0, c)`.
    pub fn ellipse_arclength(a: f64, c: f64) -> Result<Self, GeometryError> {
        if !(c > 0.0 && a >= c && a.is_finite()) {
            return Err(GeometryError::InvalidEllipse { a, c });
        }
        Ok(Self::from_pieces(vec![Arc::new(EllipseArc::half(a, c))]))
    }

    /// The same curve traversed in the opposite direction.
    pub fn reversed(&self) -> Self {
        let pieces = self
            .pieces
            .iter()
            .rev()
            .map(|p| Arc::new(Reversed(Arc::new(p.curve.clone()))) as Arc<dyn ParametricCurve>)
            .collect();
        Self::from_pieces(pieces)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Arc-length positions of the corners (empty for smooth curves).
    pub fn corners(&self) -> &[f64] {
        &self.corners
    }

    /// `sup |k|` over the curve.
    pub fn max_abs_curvature(&self) -> f64 {
        self.max_curvature
    }

    fn check_range(&self, xi: f64) -> Result<(), GeometryError> {
        let slack = CORNER_SNAP * self.length.max(1.0);
        if !(xi >= -slack && xi <= self.length + slack) {
            return Err(GeometryError::OutOfRange {
                xi,
                length: self.length,
            });
        }
        Ok(())
    }

    fn check_not_corner(&self, xi: f64) -> Result<(), GeometryError> {
        let snap = CORNER_SNAP * self.length.max(1.0);
        match self.corners.iter().find(|&&c| (c - xi).abs() <= snap) {
            Some(_) => Err(GeometryError::CornerPoint { xi }),
            None => Ok(()),
        }
    }

    fn locate(&self, xi: f64) -> (&ArcLengthCurve, f64) {
        let idx = self
            .pieces
            .partition_point(|p| p.start <= xi)
            .saturating_sub(1);
        let piece = &self.pieces[idx];
        let local = (xi - piece.start).clamp(0.0, piece.curve.length());
        (&piece.curve, local)
    }

    pub fn point(&self, xi: f64) -> Result<Vec2, GeometryError> {
        self.check_range(xi)?;
        let (c, s) = self.locate(xi);
        Ok(c.point(s))
    }

    /// Unit tangent `(r', z')`; at a corner, the tangent of the outgoing piece.
    pub fn tangent(&self, xi: f64) -> Result<Vec2, GeometryError> {
        self.check_range(xi)?;
        let (c, s) = self.locate(xi);
        Ok(c.d1(s))
    }

    /// Second derivative `(r'', z'')` in arc length.
    pub fn second_derivative(&self, xi: f64) -> Result<Vec2, GeometryError> {
        self.check_range(xi)?;
        self.check_not_corner(xi)?;
        let (c, s) = self.locate(xi);
        Ok(c.d2(s))
    }

    /// Unit normal `(-z', r')`, pointing into the conductor.
    pub fn normal(&self, xi: f64) -> Result<Vec2, GeometryError> {
        let t = self.tangent(xi)?;
        Ok([-t[1], t[0]])
    }

    /// Curvature `k = r' z'' - z' r''`.
    pub fn curvature(&self, xi: f64) -> Result<f64, GeometryError> {
        self.check_range(xi)?;
        self.check_not_corner(xi)?;
        let (c, s) = self.locate(xi);
        let d1 = c.d1(s);
        let d2 = c.d2(s);
        Ok(d1[0] * d2[1] - d1[1] * d2[0])
    }

    /// Mean curvature `(k + z'/r) / 2` of the surface of revolution.
    pub fn mean_curvature(&self, xi: f64) -> Result<f64, GeometryError> {
        let k = self.curvature(xi)?;
        let p = self.point(xi)?;
        if p[0] <= 1e-14 {
            return Err(GeometryError::AxisPoint { xi, r: p[0] });
        }
        let t = self.tangent(xi)?;
        Ok(0.5 * (k + t[1] / p[0]))
    }

    /// Point at normal distance `h` from the interface point `xi`, on the
    /// conductor side: `(r - h z', z + h r')`.
    pub fn normal_coords(&self, xi: f64, h: f64) -> Result<Vec2, GeometryError> {
        let limit = if self.max_curvature > 0.0 {
            1.0 / self.max_curvature
        } else {
            f64::INFINITY
        };
        if !(h >= 0.0 && h < limit) {
            return Err(GeometryError::OffsetOutOfRange { h, limit });
        }
        let p = self.point(xi)?;
        if h == 0.0 {
            return Ok(p);
        }
        self.check_not_corner(xi)?;
        let t = self.tangent(xi)?;
        Ok([p[0] - h * t[1], p[1] + h * t[0]])
    }
}

/// The benchmark configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConfigId {
    A,
    B1,
    B2,
    C1,
    C2,
}

impl ConfigId {
    pub const ALL: [ConfigId; 5] = [
        ConfigId::A,
        ConfigId::B1,
        ConfigId::B2,
        ConfigId::C1,
        ConfigId::C2,
    ];

    pub fn is_spheroidal(self) -> bool {
        !matches!(self, ConfigId::A)
    }

    /// Configurations where the conductor is the outer shell.
    pub fn is_swapped(self) -> bool {
        matches!(self, ConfigId::C1 | ConfigId::C2)
    }
}

impl fmt::Display for ConfigId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConfigId::A => "A",
            ConfigId::B1 => "B1",
            ConfigId::B2 => "B2",
            ConfigId::C1 => "C1",
            ConfigId::C2 => "C2",
        };
        f.write_str(s)
    }
}

impl FromStr for ConfigId {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(ConfigId::A),
            "B1" => Ok(ConfigId::B1),
            "B2" => Ok(ConfigId::B2),
            "C1" => Ok(ConfigId::C1),
            "C2" => Ok(ConfigId::C2),
            _ => Err(GeometryError::UnknownConfig(s.to_string())),
        }
    }
}

/// Conductor / dielectric label of a region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subdomain {
    Conductor,
    Dielectric,
}

/// Shape parameters (metres).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// Conductor `[0, r0] x [-l0/2, l0/2]` inside `[0, r1] x [-l1/2, l1/2]`.
    Cylinder { r0: f64, l0: f64, r1: f64, l1: f64 },
    /// Inner half-ellipse `(a, c)` inside outer half-ellipse `(b, d)`.
    Spheroid { a: f64, b: f64, c: f64, d: f64 },
}

/// Geometry of one benchmark configuration.
#[derive(Debug, Clone)]
pub struct MeridianDomain {
    pub id: ConfigId,
    pub shape: Shape,
    pub interface: InterfaceCurve,
}

impl MeridianDomain {
    pub fn new(id: ConfigId) -> Self {
        match id {
            ConfigId::A => Self::cylinder(1.0, 2.0, 2.0, 4.0),
            ConfigId::B1 | ConfigId::C1 => Self::spheroid(id, 2.0, 4.0, 1.0, 2.0),
            ConfigId::B2 | ConfigId::C2 => Self::spheroid(id, 4.0, 8.0, 1.0, 2.0),
        }
    }

    fn cylinder(r0: f64, l0: f64, r1: f64, l1: f64) -> Self {
        let h = 0.5 * l0;
        let pieces: Vec<Arc<dyn ParametricCurve>> = vec![
            Arc::new(Segment::new([0.0, -h], [r0, -h])),
            Arc::new(Segment::new([r0, -h], [r0, h])),
            Arc::new(Segment::new([r0, h], [0.0, h])),
        ];
        Self {
            id: ConfigId::A,
            shape: Shape::Cylinder { r0, l0, r1, l1 },
            interface: InterfaceCurve::from_pieces(pieces),
        }
    }

    fn spheroid(id: ConfigId, a: f64, b: f64, c: f64, d: f64) -> Self {
        let inward = InterfaceCurve::ellipse_arclength(a, c).expect("benchmark ellipse is valid");
        let interface = if id.is_swapped() {
            inward.reversed()
        } else {
            inward
        };
        Self {
            id,
            shape: Shape::Spheroid { a, b, c, d },
            interface,
        }
    }

    /// Whether `(r, z)` lies in the closed meridian domain.
    pub fn contains(&self, r: f64, z: f64) -> bool {
        if r < 0.0 {
            return false;
        }
        match self.shape {
            Shape::Cylinder { r1, l1, .. } => r <= r1 && z.abs() <= 0.5 * l1,
            Shape::Spheroid { b, d, .. } => (r / b).powi(2) + (z / d).powi(2) <= 1.0 + 1e-12,
        }
    }

    /// Whether `(r, z)` lies inside the inner body (cylinder or inner spheroid).
    pub fn in_inner_body(&self, r: f64, z: f64) -> bool {
        match self.shape {
            Shape::Cylinder { r0, l0, .. } => r <= r0 && z.abs() <= 0.5 * l0,
            Shape::Spheroid { a, c, .. } => (r / a).powi(2) + (z / c).powi(2) <= 1.0,
        }
    }

    pub fn subdomain_at(&self, r: f64, z: f64) -> Subdomain {
        let inner = self.in_inner_body(r, z);
        if inner != self.id.is_swapped() {
            Subdomain::Conductor
        } else {
            Subdomain::Dielectric
        }
    }

    pub fn is_conductor(&self, r: f64, z: f64) -> bool {
        self.contains(r, z) && self.subdomain_at(r, z) == Subdomain::Conductor
    }

    /// Meridian area of the whole domain.
    pub fn area(&self) -> f64 {
        match self.shape {
            Shape::Cylinder { r1, l1, .. } => r1 * l1,
            Shape::Spheroid { b, d, .. } => 0.5 * std::f64::consts::PI * b * d,
        }
    }

    /// Meridian area of the conductor.
    pub fn conductor_area(&self) -> f64 {
        let inner = match self.shape {
            Shape::Cylinder { r0, l0, .. } => r0 * l0,
            Shape::Spheroid { a, c, .. } => 0.5 * std::f64::consts::PI * a * c,
        };
        if self.id.is_swapped() {
            self.area() - inner
        } else {
            inner
        }
    }

    /// Radius where the interface crosses `z = 0`.
    pub fn equator_radius(&self) -> f64 {
        match self.shape {
            Shape::Cylinder { r0, .. } => r0,
            Shape::Spheroid { a, .. } => a,
        }
    }

    /// Arc-length position of the interface point on `z = 0`.
    pub fn equator_xi(&self) -> f64 {
        0.5 * self.interface.length()
    }
}
