//! Quantities extracted from computed fields: conductor norms and their
//! scaling in `sigma`, radial decay slopes at the equator, pointwise slopes
//! towards a corner, and field rasters.

use std::fmt::Write as _;
use std::io::Write;

use num_complex::Complex64;
use thiserror::Error;

use crate::fem::{DiscreteField, FemError};
use crate::geometry::{GeometryError, MeridianDomain, Subdomain};
use crate::mesh::{det, face_point, QuadMesh};
use crate::physics::{curv_ratio, theoretical_slope, PhysicalParams, PhysicsError};
use crate::quadrature::{gauss_legendre_unit, gauss_lobatto_unit};

/// Points closer than this along `z` count as lying on `z = 0`.
const EQUATOR_TOL: f64 = 1e-10;
/// Abscissae closer than this are merged.
const MERGE_TOL: f64 = 1e-12;
/// Corner samples are spaced `ell / CORNER_SPACING_DIV` apart.
pub const CORNER_SPACING_DIV: f64 = 4.0;
/// Corner samples extend to `CORNER_REACH` skin depths from the corner.
pub const CORNER_REACH: f64 = 8.0;

#[derive(Debug, Error)]
pub enum PostprocessError {
    #[error("need at least {needed} (sigma, A) pairs, got {found}")]
    TooFewPairs { needed: usize, found: usize },
    #[error("scaling data must be strictly positive, got ({sigma}, {value})")]
    NonPositive { sigma: f64, value: f64 },
    #[error("only {found} samples within the skin depth {ell}; the regression needs 2")]
    TooFewSamples { found: usize, ell: f64 },
    #[error("coincident sample distances at rho = {rho}")]
    CoincidentSamples { rho: f64 },
    #[error("no mesh edges along z = 0 inside the conductor")]
    NoEquatorEdges,
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Anything that can be evaluated at a meridian point.
pub trait FieldSampler {
    fn sample(&self, r: f64, z: f64) -> Result<Complex64, PostprocessError>;
}

impl FieldSampler for DiscreteField {
    fn sample(&self, r: f64, z: f64) -> Result<Complex64, PostprocessError> {
        Ok(self.evaluate(r, z)?)
    }
}

/// A closed-form field.
pub struct FnField<F>(pub F);

impl<F: Fn(f64, f64) -> Complex64> FieldSampler for FnField<F> {
    fn sample(&self, r: f64, z: f64) -> Result<Complex64, PostprocessError> {
        Ok((self.0)(r, z))
    }
}

/// `sqrt(int |H|^2 r dr dz)` over the conductor elements.
pub fn conductor_norm(field: &DiscreteField) -> f64 {
    let space = field.space();
    let mesh = space.mesh();
    let (xs, ws) = gauss_legendre_unit(space.degree() + 3);
    let mut sum = 0.0;
    for (e, el) in mesh.elements.iter().enumerate() {
        if el.subdomain != Subdomain::Conductor {
            continue;
        }
        for (y, wy) in xs.iter().zip(&ws) {
            for (x, wx) in xs.iter().zip(&ws) {
                let (pt, jac) = mesh.map(e, *x, *y);
                let v = field.evaluate_in_element(e, *x, *y);
                sum += wx * wy * det(&jac) * pt[0] * v.norm_sqr();
            }
        }
    }
    sum.sqrt()
}

/// Ordinary least squares `y = slope x + intercept`.
fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Least-squares slope of `log A` against `log sigma`.
pub fn scaling_exponent(pairs: &[(f64, f64)]) -> Result<f64, PostprocessError> {
    if pairs.len() < 3 {
        return Err(PostprocessError::TooFewPairs {
            needed: 3,
            found: pairs.len(),
        });
    }
    if let Some(&(sigma, value)) = pairs.iter().find(|(s, a)| !(*s > 0.0 && *a > 0.0)) {
        return Err(PostprocessError::NonPositive { sigma, value });
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    Ok(least_squares(&xs, &ys).0)
}

/// Radii of the element-edge nodes (degree-`p` Gauss–Lobatto points) on the
/// line `z = 0` inside the conductor, ascending.
pub fn radial_abscissae(mesh: &QuadMesh, p: usize) -> Result<Vec<f64>, PostprocessError> {
    let t = gauss_lobatto_unit(p + 1);
    let mut rs = Vec::new();
    for (e, el) in mesh.elements.iter().enumerate() {
        if el.subdomain != Subdomain::Conductor {
            continue;
        }
        for face in 0..4 {
            let nodes = el.face_nodes(face);
            let on_equator = nodes.iter().all(|&n| mesh.nodes[n][1].abs() < EQUATOR_TOL);
            if !on_equator {
                continue;
            }
            for &tk in &t {
                let (x, y) = face_point(face, tk);
                rs.push(mesh.map(e, x, y).0[0]);
            }
        }
    }
    if rs.is_empty() {
        return Err(PostprocessError::NoEquatorEdges);
    }
    rs.sort_by(f64::total_cmp);
    rs.dedup_by(|a, b| (*a - *b).abs() < MERGE_TOL);
    Ok(rs)
}

/// Samples `(y3, log10 |H|)` at the given radii on `z = 0`, where `y3` is the
/// distance to the interface; sorted by `y3`, zero moduli dropped.
pub fn extract_radial(
    field: &impl FieldSampler,
    domain: &MeridianDomain,
    radii: &[f64],
) -> Result<Vec<(f64, f64)>, PostprocessError> {
    let r_eq = domain.equator_radius();
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        let y3 = if domain.id.is_swapped() {
            r - r_eq
        } else {
            r_eq - r
        };
        let m = field.sample(r, 0.0)?.norm();
        if m > 0.0 {
            out.push((y3.max(0.0), m.log10()));
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

/// Least-squares fit `log10|H| = -s y3 + b` over the samples with `y3 <= ell`.
/// Returns `(s, b, n_used)`.
pub fn regression_slope(
    samples: &[(f64, f64)],
    ell: f64,
) -> Result<(f64, f64, usize), PostprocessError> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = samples.iter().filter(|s| s.0 <= ell).copied().unzip();
    if xs.len() < 2 {
        return Err(PostprocessError::TooFewSamples {
            found: xs.len(),
            ell,
        });
    }
    let (slope, b) = least_squares(&xs, &ys);
    Ok((-slope, b, xs.len()))
}

/// Distances from the corner `(1, 1)` along the diagonal `r = z`: multiples
/// of `ell / 4` up to `8 ell`, plus `extra` values in that range, merged.
pub fn corner_sample_distances(ell: f64, extra: &[f64]) -> Vec<f64> {
    let reach = CORNER_REACH * ell;
    let n = (CORNER_REACH * CORNER_SPACING_DIV).round() as usize;
    let mut rho: Vec<f64> = (0..=n)
        .map(|k| k as f64 * ell / CORNER_SPACING_DIV)
        .collect();
    rho.extend(
        extra
            .iter()
            .copied()
            .filter(|&x| (0.0..=reach).contains(&x)),
    );
    rho.sort_by(f64::total_cmp);
    rho.dedup_by(|a, b| (*a - *b).abs() < MERGE_TOL);
    rho
}

/// Diagonal distances of the mesh vertices on `r = z` inside `[0, 1]^2`.
pub fn diagonal_vertex_distances(mesh: &QuadMesh) -> Vec<f64> {
    let mut out: Vec<f64> = mesh
        .nodes
        .iter()
        .filter(|p| p[0] == p[1] && p[0] >= 0.0 && p[0] <= 1.0)
        .map(|p| std::f64::consts::SQRT_2 * (1.0 - p[0]))
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Pointwise slopes `(rho_i, (log10|H_i| - log10|H_{i+1}|) / (rho_{i+1} - rho_i))`
/// along the diagonal towards the corner `(1, 1)`, for increasing distances `rho`.
pub fn corner_slopes(
    field: &impl FieldSampler,
    rho: &[f64],
) -> Result<Vec<(f64, f64)>, PostprocessError> {
    let mut sorted = rho.to_vec();
    sorted.sort_by(f64::total_cmp);
    if let Some(w) = sorted.windows(2).find(|w| w[1] - w[0] <= 0.0) {
        return Err(PostprocessError::CoincidentSamples { rho: w[0] });
    }
    let logs = sorted
        .iter()
        .map(|&d| {
            let c = 1.0 - d / std::f64::consts::SQRT_2;
            Ok(field.sample(c, c)?.norm().log10())
        })
        .collect::<Result<Vec<f64>, PostprocessError>>()?;
    Ok(sorted
        .windows(2)
        .zip(logs.windows(2))
        .map(|(d, l)| (d[0], (l[0] - l[1]) / (d[1] - d[0])))
        .collect())
}

/// Radial slope analysis at the equator.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeReport {
    pub sigma: f64,
    pub p: usize,
    pub ell: f64,
    pub mean_curvature: f64,
    pub samples: Vec<(f64, f64)>,
    pub n_used: usize,
    pub slope_fit: f64,
    pub intercept: f64,
    pub slope_theory: f64,
    pub rel_err: f64,
    pub curv_ratio: f64,
}

/// Extraction, regression and comparison with the curvature-corrected slope
/// at the equator of `domain`.
pub fn slope_report(
    field: &impl FieldSampler,
    domain: &MeridianDomain,
    params: &PhysicalParams,
    p: usize,
    radii: &[f64],
) -> Result<SlopeReport, PostprocessError> {
    let mean_curvature = domain.interface.mean_curvature(domain.equator_xi())?;
    let samples = extract_radial(field, domain, radii)?;
    let (slope_fit, intercept, n_used) = regression_slope(&samples, params.ell)?;
    let slope_theory = theoretical_slope(params, mean_curvature);
    Ok(SlopeReport {
        sigma: params.sigma,
        p,
        ell: params.ell,
        mean_curvature,
        samples,
        n_used,
        slope_fit,
        intercept,
        slope_theory,
        rel_err: ((slope_theory - slope_fit) / slope_theory).abs(),
        curv_ratio: curv_ratio(params, mean_curvature)?,
    })
}

/// `|H|` and `|Im H|` on a regular grid; `None` outside the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub rs: Vec<f64>,
    pub zs: Vec<f64>,
    /// `values[j * rs.len() + i]` at `(rs[i], zs[j])`: `(|H|, |Im H|)`.
    pub values: Vec<Option<(f64, f64)>>,
}

impl Raster {
    /// Largest `|Im H|` and where it occurs.
    pub fn max_imag(&self) -> Option<(f64, [f64; 2])> {
        let n = self.rs.len();
        self.values
            .iter()
            .enumerate()
            .filter_map(|(k, v)| v.map(|(_, im)| (im, [self.rs[k % n], self.zs[k / n]])))
            .max_by(|a, b| a.0.total_cmp(&b.0))
    }
}

/// Regular `nr x nz` grid over `[r0, r1] x [z0, z1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub r_range: (f64, f64),
    pub z_range: (f64, f64),
    pub nr: usize,
    pub nz: usize,
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
        .collect()
}

pub fn imag_field_map(
    field: &impl FieldSampler,
    domain: &MeridianDomain,
    grid: &Grid,
) -> Result<Raster, PostprocessError> {
    let rs = linspace(grid.r_range.0, grid.r_range.1, grid.nr);
    let zs = linspace(grid.z_range.0, grid.z_range.1, grid.nz);
    let mut values = Vec::with_capacity(rs.len() * zs.len());
    for &z in &zs {
        for &r in &rs {
            if !domain.contains(r, z) {
                values.push(None);
                continue;
            }
            match field.sample(r, z) {
                Ok(v) => values.push(Some((v.norm(), v.im.abs()))),
                // inside the exact domain but outside the polygonal approximation
                Err(PostprocessError::Fem(FemError::NotFound { .. })) => values.push(None),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(Raster { rs, zs, values })
}

/// Writes two-column CSV with 17 significant digits.
pub fn write_csv_pairs(
    out: &mut impl Write,
    header: &str,
    rows: &[(f64, f64)],
) -> Result<(), PostprocessError> {
    let mut s = String::new();
    let _ = writeln!(s, "{header}");
    for (a, b) in rows {
        let _ = writeln!(s, "{a:.16e},{b:.16e}");
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

/// `y3,log10H` samples.
pub fn write_radial_csv(
    out: &mut impl Write,
    samples: &[(f64, f64)],
) -> Result<(), PostprocessError> {
    write_csv_pairs(out, "y3,log10H", samples)
}

/// `rho,slope` corner sequence.
pub fn write_corner_csv(
    out: &mut impl Write,
    slopes: &[(f64, f64)],
) -> Result<(), PostprocessError> {
    write_csv_pairs(out, "rho,slope", slopes)
}

/// `sigma,A` scaling data.
pub fn write_scaling_csv(
    out: &mut impl Write,
    pairs: &[(f64, f64)],
) -> Result<(), PostprocessError> {
    write_csv_pairs(out, "sigma,A", pairs)
}

/// `r,z,absH,absImH` raster, absent points omitted.
pub fn write_raster_csv(out: &mut impl Write, raster: &Raster) -> Result<(), PostprocessError> {
    let mut s = String::from("r,z,absH,absImH\n");
    let n = raster.rs.len();
    for (k, v) in raster.values.iter().enumerate() {
        if let Some((a, im)) = v {
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{a:.16e},{im:.16e}",
                raster.rs[k % n],
                raster.zs[k / n]
            );
        }
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}
