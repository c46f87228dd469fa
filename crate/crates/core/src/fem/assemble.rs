//! Element integrals of the weighted form and global assembly.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::geometry::{ConfigId, Subdomain};
use crate::linsolve::{SparseComplexMatrix, TripletBuilder};
use crate::mesh::det;
use crate::physics::PhysicalParams;
use crate::quadrature::gauss_legendre_unit;

use super::space::{DofConstraint, FeSpace};
use super::FemError;

/// Subcells per direction for elements cut by a discontinuous source.
const SOURCE_SUBDIVISION: usize = 4;
/// Samples per direction used to decide whether an element is cut.
const CUT_SAMPLES: usize = 9;

/// Per-subdomain coefficients of the form: `1/eps` in front of the
/// derivative terms and `kappa^2` in front of the mass term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub inv_eps_conductor: Complex64,
    pub inv_eps_dielectric: Complex64,
    pub kappa2: f64,
}

impl Coefficients {
    pub fn from_params(params: &PhysicalParams) -> Self {
        Self {
            inv_eps_conductor: params.inverse_permittivity(true),
            inv_eps_dielectric: params.inverse_permittivity(false),
            kappa2: params.kappa * params.kappa,
        }
    }

    /// `eps = 1` everywhere.
    pub fn uniform(kappa: f64) -> Self {
        let one = Complex64::new(1.0, 0.0);
        Self {
            inv_eps_conductor: one,
            inv_eps_dielectric: one,
            kappa2: kappa * kappa,
        }
    }

    pub fn inv_eps(&self, s: Subdomain) -> Complex64 {
        match s {
            Subdomain::Conductor => self.inv_eps_conductor,
            Subdomain::Dielectric => self.inv_eps_dielectric,
        }
    }
}

/// Dirichlet data on the outer boundary (the axis always carries zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryData {
    Zero,
    /// `g(r, z) = r`
    Radius,
}

impl BoundaryData {
    pub fn value(self, r: f64, _z: f64) -> f64 {
        match self {
            BoundaryData::Zero => 0.0,
            BoundaryData::Radius => r,
        }
    }
}

/// Interior source density `f` in the right-hand side `int f w r dr dz`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InteriorSource {
    None,
    /// `value` on `r^2 / r_scale2 + z^2 / z_scale2 <= bound`, zero elsewhere;
    /// applied on dielectric elements only.
    EllipticPatch {
        value: f64,
        r_scale2: f64,
        z_scale2: f64,
        bound: f64,
    },
    /// `coeff * r` on every element.
    Linear {
        coeff: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpec {
    pub boundary: BoundaryData,
    pub interior: InteriorSource,
}

impl SourceSpec {
    /// Data of the benchmark configurations: `g = r` for A and B, a patch
    /// source `f = 100` on `r^2/4 + z^2 <= 0.8` with zero boundary data for C.
    pub fn for_config(id: ConfigId) -> Self {
        if id.is_swapped() {
            Self {
                boundary: BoundaryData::Zero,
                interior: InteriorSource::EllipticPatch {
                    value: 100.0,
                    r_scale2: 4.0,
                    z_scale2: 1.0,
                    bound: 0.8,
                },
            }
        } else {
            Self {
                boundary: BoundaryData::Radius,
                interior: InteriorSource::None,
            }
        }
    }

    /// Data for which `H = r` solves the problem with `eps = 1`.
    pub fn manufactured(kappa: f64) -> Self {
        Self {
            boundary: BoundaryData::Radius,
            interior: InteriorSource::Linear {
                coeff: -kappa * kappa,
            },
        }
    }

    fn density(&self, r: f64, z: f64, sub: Subdomain) -> f64 {
        match self.interior {
            InteriorSource::None => 0.0,
            InteriorSource::Linear { coeff } => coeff * r,
            InteriorSource::EllipticPatch {
                value,
                r_scale2,
                z_scale2,
                bound,
            } => {
                if sub == Subdomain::Dielectric && r * r / r_scale2 + z * z / z_scale2 <= bound {
                    value
                } else {
                    0.0
                }
            }
        }
    }

    fn is_discontinuous(&self) -> bool {
        matches!(self.interior, InteriorSource::EllipticPatch { .. })
    }
}

/// Real element blocks: stiffness `K`, mass `M` (both `r`-weighted) and load.
pub(crate) struct ElementBlocks {
    pub k: Mat<f64>,
    pub m: Mat<f64>,
    pub load: Vec<f64>,
}

impl ElementBlocks {
    /// `c K - kappa^2 M` as a complex matrix.
    pub fn combine(&self, c: Complex64, kappa2: f64) -> Mat<Complex64> {
        let n = self.k.nrows();
        Mat::from_fn(n, n, |i, j| c * self.k[(i, j)] - kappa2 * self.m[(i, j)])
    }
}

/// Element blocks of element `e`, exactly symmetric.
pub(crate) fn element_blocks(
    space: &FeSpace,
    e: usize,
    source: &SourceSpec,
) -> Result<ElementBlocks, FemError> {
    let mesh = space.mesh();
    let sub = mesh.elements[e].subdomain;
    let tab = space.tabulation();
    let nb = tab.n_basis;
    let (xs, ws) = space.quadrature();
    let nq = xs.len();

    let mut g = Mat::<f64>::zeros(2 * nq * nq, nb);
    let mut phi = Mat::<f64>::zeros(nq * nq, nb);
    let mut load = vec![0.0; nb];
    for qy in 0..nq {
        for qx in 0..nq {
            let q = qx + nq * qy;
            let (pt, jac) = mesh.map(e, xs[qx], xs[qy]);
            let dj = det(&jac);
            let r = pt[0];
            if !(r > 0.0) || !(dj > 0.0) {
                return Err(FemError::DegenerateQuadraturePoint {
                    elem: e,
                    r,
                    det: dj,
                });
            }
            let weight = ws[qx] * ws[qy] * dj * r;
            let sq = weight.sqrt();
            let f = source.density(r, pt[1], sub);
            for a in 0..nb {
                let v = tab.values[q * nb + a];
                let dx = tab.dx[q * nb + a];
                let dy = tab.dy[q * nb + a];
                let dr = (dx * jac[1][1] - dy * jac[1][0]) / dj;
                let dz = (-dx * jac[0][1] + dy * jac[0][0]) / dj;
                g[(2 * q, a)] = sq * (dr + v / r);
                g[(2 * q + 1, a)] = sq * dz;
                phi[(q, a)] = sq * v;
                if f != 0.0 {
                    load[a] += weight * f * v;
                }
            }
        }
    }

    if source.is_discontinuous() && element_is_cut(space, e, source) {
        load = subdivided_load(space, e, source)?;
    }

    let mut k = Mat::<f64>::zeros(nb, nb);
    matmul(
        k.as_mut(),
        Accum::Replace,
        g.transpose(),
        g.as_ref(),
        1.0,
        Par::Seq,
    );
    let mut m = Mat::<f64>::zeros(nb, nb);
    matmul(
        m.as_mut(),
        Accum::Replace,
        phi.transpose(),
        phi.as_ref(),
        1.0,
        Par::Seq,
    );
    for j in 0..nb {
        for i in 0..j {
            k[(j, i)] = k[(i, j)];
            m[(j, i)] = m[(i, j)];
        }
    }
    Ok(ElementBlocks { k, m, load })
}

fn element_is_cut(space: &FeSpace, e: usize, source: &SourceSpec) -> bool {
    let mesh = space.mesh();
    let sub = mesh.elements[e].subdomain;
    let mut seen = [false; 2];
    for j in 0..CUT_SAMPLES {
        for i in 0..CUT_SAMPLES {
            let x = i as f64 / (CUT_SAMPLES - 1) as f64;
            let y = j as f64 / (CUT_SAMPLES - 1) as f64;
            let pt = mesh.map(e, x, y).0;
            seen[(source.density(pt[0].max(f64::MIN_POSITIVE), pt[1], sub) != 0.0) as usize] = true;
        }
    }
    seen[0] && seen[1]
}

/// Load vector integrated on a `4 x 4` subdivision of the element.
fn subdivided_load(space: &FeSpace, e: usize, source: &SourceSpec) -> Result<Vec<f64>, FemError> {
    let mesh = space.mesh();
    let sub = mesh.elements[e].subdomain;
    let basis = space.basis();
    let (xs, ws) = gauss_legendre_unit(space.degree() + 3);
    let h = 1.0 / SOURCE_SUBDIVISION as f64;
    let mut load = vec![0.0; basis.len()];
    for cy in 0..SOURCE_SUBDIVISION {
        for cx in 0..SOURCE_SUBDIVISION {
            for (y0, wy) in xs.iter().zip(&ws) {
                for (x0, wx) in xs.iter().zip(&ws) {
                    let x = (cx as f64 + x0) * h;
                    let y = (cy as f64 + y0) * h;
                    let (pt, jac) = mesh.map(e, x, y);
                    let dj = det(&jac);
                    if !(pt[0] > 0.0) || !(dj > 0.0) {
                        return Err(FemError::DegenerateQuadraturePoint {
                            elem: e,
                            r: pt[0],
                            det: dj,
                        });
                    }
                    let f = source.density(pt[0], pt[1], sub);
                    if f == 0.0 {
                        continue;
                    }
                    let w = wx * wy * h * h * dj * pt[0] * f;
                    for (l, v) in load.iter_mut().zip(basis.values(x, y)) {
                        *l += w * v;
                    }
                }
            }
        }
    }
    Ok(load)
}

/// Prescribed value of every DOF (`None` for free DOFs).
pub fn dirichlet_values(space: &FeSpace, source: &SourceSpec) -> Vec<Option<Complex64>> {
    (0..space.n_dofs())
        .map(|d| {
            space.constraint(d).map(|c| match c {
                DofConstraint::Axis => Complex64::new(0.0, 0.0),
                DofConstraint::Outer => {
                    let p = space.dof_point(d);
                    Complex64::new(source.boundary.value(p[0], p[1]), 0.0)
                }
            })
        })
        .collect()
}

/// Complex element matrix and load of element `e`.
pub(crate) fn element_system(
    space: &FeSpace,
    e: usize,
    coeffs: &Coefficients,
    source: &SourceSpec,
) -> Result<(Mat<Complex64>, Vec<Complex64>), FemError> {
    let blocks = element_blocks(space, e, source)?;
    let c = coeffs.inv_eps(space.mesh().elements[e].subdomain);
    let a = blocks.combine(c, coeffs.kappa2);
    let b = blocks
        .load
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    Ok((a, b))
}

/// Computes `f(e)` for every element, in parallel chunks, and feeds the
/// results to `sink` in element order.
pub(crate) fn for_each_element<T: Send>(
    n_elements: usize,
    f: impl Fn(usize) -> Result<T, FemError> + Sync,
    mut sink: impl FnMut(usize, T) -> Result<(), FemError>,
) -> Result<(), FemError> {
    let chunk = (2 * rayon::current_num_threads()).max(1);
    let mut start = 0;
    while start < n_elements {
        let end = (start + chunk).min(n_elements);
        let results: Vec<Result<T, FemError>> = (start..end).into_par_iter().map(&f).collect();
        for (k, r) in results.into_iter().enumerate() {
            sink(start + k, r?)?;
        }
        start = end;
    }
    Ok(())
}

/// Assembled system with constraints applied: constrained rows and columns
/// are replaced by the identity and the prescribed values are lifted into
/// the right-hand side.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: SparseComplexMatrix,
    pub rhs: Vec<Complex64>,
}

/// Assembles the full (uncondensed) system. Element contributions are summed
/// in element order, so the result does not depend on the thread count.
pub fn assemble(
    space: &FeSpace,
    coeffs: &Coefficients,
    source: &SourceSpec,
) -> Result<LinearSystem, FemError> {
    let n = space.n_dofs();
    let fixed = dirichlet_values(space, source);
    let nb = space.basis().len();
    let mut trip = TripletBuilder::with_capacity(n, space.mesh().num_elements() * nb * nb);
    let mut rhs = vec![Complex64::new(0.0, 0.0); n];
    for_each_element(
        space.mesh().num_elements(),
        |e| element_system(space, e, coeffs, source),
        |e, (a, b)| {
            let dofs = space.element_dofs(e);
            for (la, &i) in dofs.iter().enumerate() {
                if fixed[i].is_some() {
                    continue;
                }
                rhs[i] += b[la];
                for (lb, &j) in dofs.iter().enumerate() {
                    match fixed[j] {
                        Some(g) => rhs[i] -= a[(la, lb)] * g,
                        None => trip.push(i, j, a[(la, lb)]),
                    }
                }
            }
            Ok(())
        },
    )?;
    for (d, g) in fixed.iter().enumerate() {
        if let Some(g) = g {
            trip.push(d, d, Complex64::new(1.0, 0.0));
            rhs[d] = *g;
        }
    }
    let matrix = trip.build()?.into_symmetric()?;
    Ok(LinearSystem { matrix, rhs })
}
