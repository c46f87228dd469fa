//! Discrete fields: point evaluation through the inverse element map, and
//! plain-text export.

use std::fmt::Write as _;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;

use crate::geometry::Vec2;
use crate::mesh::det;

use super::space::FeSpace;
use super::FemError;

/// Reference-coordinate tolerance of the inverse map.
pub const NEWTON_TOL: f64 = 1e-12;
/// Slack allowed outside `[0, 1]^2` when accepting a containing element.
pub const REFERENCE_SLACK: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 60;

/// Run parameters attached to a field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMeta {
    pub sigma: Option<f64>,
    pub p: usize,
    pub mesh: String,
}

#[derive(Debug, Clone)]
pub struct DiscreteField {
    space: Arc<FeSpace>,
    coeffs: Vec<Complex64>,
    pub meta: FieldMeta,
}

/// Outcome of inverting one element map.
enum Inverse {
    Inside(f64, f64),
    Outside,
    Failed,
}

impl DiscreteField {
    pub fn new(
        space: Arc<FeSpace>,
        coeffs: Vec<Complex64>,
        meta: FieldMeta,
    ) -> Result<Self, FemError> {
        if coeffs.len() != space.n_dofs() {
            return Err(FemError::DimensionMismatch {
                expected: space.n_dofs(),
                found: coeffs.len(),
            });
        }
        Ok(Self {
            space,
            coeffs,
            meta,
        })
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(
        space: Arc<FeSpace>,
        f: impl Fn(f64, f64) -> Complex64,
        meta: FieldMeta,
    ) -> Self {
        let coeffs = (0..space.n_dofs())
            .map(|d| {
                let p = space.dof_point(d);
                f(p[0], p[1])
            })
            .collect();
        Self {
            space,
            coeffs,
            meta,
        }
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Value at reference point `(x, y)` of element `e`.
    pub fn evaluate_in_element(&self, e: usize, x: f64, y: f64) -> Complex64 {
        let line = self.space.basis().line();
        let vx = line.values(x);
        let vy = line.values(y);
        let dofs = self.space.element_dofs(e);
        let n = vx.len();
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, by) in vy.iter().enumerate() {
            let mut row = Complex64::new(0.0, 0.0);
            for (i, bx) in vx.iter().enumerate() {
                row += self.coeffs[dofs[i + n * j]] * bx;
            }
            acc += row * by;
        }
        acc
    }

    fn invert(&self, e: usize, target: Vec2) -> Inverse {
        let mesh = self.space.mesh();
        let (mut x, mut y) = (0.5, 0.5);
        let residual = |x: f64, y: f64| {
            let p = mesh.map(e, x, y).0;
            [p[0] - target[0], p[1] - target[1]]
        };
        let mut res = residual(x, y);
        for _ in 0..NEWTON_MAX_ITER {
            let (_, jac) = mesh.map(e, x, y);
            let dj = det(&jac);
            if dj == 0.0 || !dj.is_finite() {
                return Inverse::Failed;
            }
            let dx = (jac[1][1] * res[0] - jac[0][1] * res[1]) / dj;
            let dy = (-jac[1][0] * res[0] + jac[0][0] * res[1]) / dj;
            // damping: halve the step until the residual decreases
            let norm0 = res[0].hypot(res[1]);
            let mut t = 1.0;
            let (mut nx, mut ny, mut nres);
            loop {
                nx = (x - t * dx).clamp(-1.0, 2.0);
                ny = (y - t * dy).clamp(-1.0, 2.0);
                nres = residual(nx, ny);
                if nres[0].hypot(nres[1]) <= norm0 || t < 1e-3 {
                    break;
                }
                t *= 0.5;
            }
            let step = (nx - x).abs().max((ny - y).abs());
            x = nx;
            y = ny;
            res = nres;
            if step < NEWTON_TOL {
                let inside = (-REFERENCE_SLACK..=1.0 + REFERENCE_SLACK).contains(&x)
                    && (-REFERENCE_SLACK..=1.0 + REFERENCE_SLACK).contains(&y);
                return if inside {
                    Inverse::Inside(x.clamp(0.0, 1.0), y.clamp(0.0, 1.0))
                } else {
                    Inverse::Outside
                };
            }
            if x.abs() > 1.5 && y.abs() > 1.5 {
                return Inverse::Outside;
            }
        }
        Inverse::Failed
    }

    /// Element and reference coordinates of the physical point `(r, z)`.
    pub fn locate(&self, r: f64, z: f64) -> Result<(usize, f64, f64), FemError> {
        let mesh = self.space.mesh();
        let mut failed = None;
        for e in 0..mesh.num_elements() {
            let [lo, hi] = mesh.bounding_box(e);
            let mr = 0.05 * (hi[0] - lo[0]) + 1e-12;
            let mz = 0.05 * (hi[1] - lo[1]) + 1e-12;
            if r < lo[0] - mr || r > hi[0] + mr || z < lo[1] - mz || z > hi[1] + mz {
                continue;
            }
            match self.invert(e, [r, z]) {
                Inverse::Inside(x, y) => return Ok((e, x, y)),
                Inverse::Outside => {}
                Inverse::Failed => failed = Some(e),
            }
        }
        match failed {
            Some(elem) => Err(FemError::InverseMap { r, z, elem }),
            None => Err(FemError::NotFound { r, z }),
        }
    }

    pub fn evaluate(&self, r: f64, z: f64) -> Result<Complex64, FemError> {
        let (e, x, y) = self.locate(r, z)?;
        Ok(self.evaluate_in_element(e, x, y))
    }

    /// Writes the field as `FIELD v1`: metadata lines, then one `re im`
    /// pair per DOF with 17 significant digits.
    pub fn export(&self, out: &mut impl Write) -> Result<(), FemError> {
        let mut s = String::new();
        let _ = writeln!(s, "FIELD v1");
        let _ = writeln!(s, "# mesh {}", self.meta.mesh);
        let _ = writeln!(s, "# p {}", self.meta.p);
        match self.meta.sigma {
            Some(sig) => {
                let _ = writeln!(s, "# sigma {sig:.16e}");
            }
            None => {
                let _ = writeln!(s, "# sigma none");
            }
        }
        let _ = writeln!(s, "dofs {}", self.coeffs.len());
        for c in &self.coeffs {
            let _ = writeln!(s, "{:.16e} {:.16e}", c.re, c.im);
        }
        out.write_all(s.as_bytes())?;
        Ok(())
    }
}
