//! Mesh generators: uniform squares for the cylinder configuration and
//! boundary-layer meshes for the spheroidal ones.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::geometry::{
    ArcLengthCurve, ConfigId, EllipseArc, MeridianDomain, ParametricCurve, Shape, Subdomain, Vec2,
};
use crate::physics::{skin_depth, MU0, OMEGA_DEFAULT};
use crate::quadrature::gauss_lobatto_unit;

use super::{Element, MeshError, PointIndex, QuadMesh};

const MERGE_TOL: f64 = 1e-10;

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    (1.0 - t) * a + t * b
}

fn blend(p: Vec2, q: Vec2, s: f64) -> Vec2 {
    [lerp(p[0], q[0], s), lerp(p[1], q[1], s)]
}

/// Appends one element whose geometry node `(i, j)` is `map(i, j)`, flipping
/// the first reference direction if the map is inverted.
fn push_element(
    index: &mut PointIndex,
    elements: &mut Vec<Element>,
    gll: &[f64],
    subdomain: Subdomain,
    map: impl Fn(usize, usize) -> Vec2,
) {
    let n = gll.len();
    let g = n - 1;
    let mut pts = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            pts.push(map(i, j));
        }
    }
    let (v0, v1, v3) = (pts[0], pts[g], pts[n * g]);
    let cross = (v1[0] - v0[0]) * (v3[1] - v0[1]) - (v1[1] - v0[1]) * (v3[0] - v0[0]);
    let nodes = (0..n * n)
        .map(|k| {
            let (i, j) = (k % n, k / n);
            let src = if cross < 0.0 { (g - i) + n * j } else { k };
            index.insert(pts[src])
        })
        .collect();
    elements.push(Element {
        nodes,
        geom_degree: g,
        subdomain,
    });
}

/// Uniform mesh `M_k` of squares of side `1/k` on `[0, 2] x [-2, 2]`; the
/// conductor is `[0, 1] x [-1, 1]`.
pub fn square_mesh_a(k: usize) -> Result<QuadMesh, MeshError> {
    if k == 0 {
        return Err(MeshError::InvalidRefinement(k));
    }
    let kf = k as f64;
    let (nr, nz) = (2 * k, 4 * k);
    let mut nodes = Vec::with_capacity((nr + 1) * (nz + 1));
    for j in 0..=nz {
        for i in 0..=nr {
            nodes.push([i as f64 / kf, (j as f64 - 2.0 * kf) / kf]);
        }
    }
    let id = |i: usize, j: usize| i + (nr + 1) * j;
    let mut elements = Vec::with_capacity(nr * nz);
    for j in 0..nz {
        for i in 0..nr {
            let conductor = i < k && j >= k && j < 3 * k;
            elements.push(Element {
                nodes: vec![id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1)],
                geom_degree: 1,
                subdomain: if conductor {
                    Subdomain::Conductor
                } else {
                    Subdomain::Dielectric
                },
            });
        }
    }
    QuadMesh::from_parts(format!("A-M{k}"), nodes, elements)
}

/// Thickness of the skin region of the `M_k` meshes. Split into `k` equal
/// layers, it puts 7, 6, 5 element-edge nodes within one skin depth of the
/// equator for `(sigma, p) = (5, 10), (20, 12), (80, 16)` on `M_3` and
/// 13, 9, 7 for `(5, 8), (20, 12), (80, 16)` on `M_6`.
pub const SKIN_REGION_THICKNESS: f64 = 0.4;
/// Largest skin region, relative to the smallest radius of curvature, used by
/// [`LayeredMeshOptions::for_config`].
pub const SKIN_REGION_CAP: f64 = 0.8;

/// Thickness and layering of the conductor-side band along the interface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SkinBand {
    /// Fixed thickness split into equal layers.
    Uniform { thickness: f64 },
    /// `factor` skin depths at `sigma_max`, each layer `grading` times as
    /// thick as its neighbour further from the interface.
    Graded {
        factor: f64,
        grading: f64,
        sigma_max: f64,
    },
}

impl SkinBand {
    pub fn thickness(&self) -> Result<f64, MeshError> {
        match *self {
            SkinBand::Uniform { thickness } => Ok(thickness),
            SkinBand::Graded {
                factor, sigma_max, ..
            } => {
                let ell = skin_depth(OMEGA_DEFAULT, MU0, sigma_max).map_err(|e| {
                    MeshError::InvalidElement {
                        elem: 0,
                        reason: e.to_string(),
                    }
                })?;
                Ok(factor * ell)
            }
        }
    }

    /// Layer offsets from the interface, `0` first.
    pub fn offsets(&self, n_layers: usize) -> Result<Vec<f64>, MeshError> {
        let total = self.thickness()?;
        Ok(match *self {
            SkinBand::Uniform { .. } => band_offsets(n_layers, total, 1.0),
            SkinBand::Graded { grading, .. } => band_offsets(n_layers, total, grading),
        })
    }
}

/// Structural choices of [`layered_mesh_b`].
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredMeshOptions {
    /// Elements along the bottom (and top) side of the interior block.
    pub block_width: usize,
    /// Elements along the lateral side of the interior block (even, so that
    /// `z = 0` is a mesh line).
    pub block_height: usize,
    /// Element layers between the interior block and the skin band.
    pub core_layers: usize,
    /// Element layers between the skin band (or interface) and the outer boundary.
    pub outer_layers: usize,
    pub geom_degree: usize,
    pub band: SkinBand,
}

impl Default for LayeredMeshOptions {
    fn default() -> Self {
        Self {
            block_width: 3,
            block_height: 6,
            core_layers: 2,
            outer_layers: 3,
            geom_degree: 4,
            band: SkinBand::Uniform {
                thickness: SKIN_REGION_THICKNESS,
            },
        }
    }
}

impl LayeredMeshOptions {
    /// Defaults with the skin region capped at `SKIN_REGION_CAP` times the
    /// smallest radius of curvature of the interface.
    pub fn for_config(config: ConfigId) -> Self {
        let limit = 1.0 / MeridianDomain::new(config).interface.max_abs_curvature();
        Self {
            band: SkinBand::Uniform {
                thickness: SKIN_REGION_THICKNESS.min(SKIN_REGION_CAP * limit),
            },
            ..Self::default()
        }
    }
}

/// Offsets from the interface `0 = h_0 < ... < h_n = total`, each layer
/// `grading` times as thick as its neighbour further from the interface.
pub fn band_offsets(n_layers: usize, total: f64, grading: f64) -> Vec<f64> {
    let weights: Vec<f64> = (0..n_layers).map(|k| grading.powi(-(k as i32))).collect();
    let sum: f64 = weights.iter().sum();
    let mut out = vec![0.0];
    let mut acc = 0.0;
    for (k, w) in weights.iter().enumerate() {
        acc += w;
        out.push(if k + 1 == n_layers {
            total
        } else {
            total * acc / sum
        });
    }
    out
}

/// Boundary-layer mesh of a spheroidal configuration.
///
/// The conductor side of the interface carries `n_layers` layers within the
/// band described by `opts.band`. Tangential breaks are uniform in the
/// elliptic angle. The remaining regions are an interior rectangular block, a
/// ring from the block to the first curve, and an annulus to the outer
/// boundary; every strip is a linear blend between its two bounding curves.
pub fn layered_mesh_b(
    config: ConfigId,
    n_layers: usize,
    opts: &LayeredMeshOptions,
) -> Result<QuadMesh, MeshError> {
    let dom = MeridianDomain::new(config);
    let Shape::Spheroid { a, b, c, d } = dom.shape else {
        return Err(MeshError::NotLayered(config));
    };
    if n_layers == 0 {
        return Err(MeshError::InvalidRefinement(0));
    }
    if !opts.block_height.is_multiple_of(2)
        || opts.block_width == 0
        || opts.core_layers == 0
        || opts.outer_layers == 0
    {
        return Err(MeshError::InvalidElement {
            elem: 0,
            reason: "layered mesh options need positive counts and an even block height".into(),
        });
    }
    let thickness = opts.band.thickness()?;
    let limit = 1.0 / dom.interface.max_abs_curvature();
    if !(thickness > 0.0) || thickness >= limit {
        return Err(MeshError::LayerTooThick { thickness, limit });
    }

    let swapped = config.is_swapped();
    let inner_ellipse = EllipseArc::half(a, c);
    let outer_ellipse = EllipseArc::half(b, d);
    let inward = ArcLengthCurve::new(Arc::new(inner_ellipse));
    let length = dom.interface.length();

    let (nb, nr) = (opts.block_width, opts.block_height);
    let nt = 2 * nb + nr;
    let u_at = |i: usize, t: f64| lerp(i as f64 / nt as f64, (i + 1) as f64 / nt as f64, t);

    // point at conductor-side normal offset h from the interface, at tangential position u
    let skin = |u: f64, h: f64| -> Result<Vec2, MeshError> {
        let phi = PI * u;
        if h == 0.0 {
            return Ok(inner_ellipse.point(phi));
        }
        let xi_b = inward.arclength_at(phi);
        let xi = if swapped { length - xi_b } else { xi_b };
        Ok(dom.interface.normal_coords(xi, h)?)
    };
    let outer = |u: f64| outer_ellipse.point(PI * u);

    // interior block [0, rc] x [-zc, zc] inside the innermost curve
    let (a_in, c_in) = if swapped {
        (a, c)
    } else {
        (a - thickness, c - thickness)
    };
    let phi_b = PI * nb as f64 / nt as f64;
    let rc = 0.5 * a_in * phi_b.sin();
    let zc = 0.5 * c_in * phi_b.cos();
    let rs: Vec<f64> = (0..=nb)
        .map(|i| {
            if i == nb {
                rc
            } else {
                rc * i as f64 / nb as f64
            }
        })
        .collect();
    let zs: Vec<f64> = (0..=nr)
        .map(|j| {
            if j == nr {
                zc
            } else {
                -zc + 2.0 * zc * j as f64 / nr as f64
            }
        })
        .collect();
    // block boundary, traversed bottom -> right side -> top like the interface
    let block = |i: usize, t: f64| -> Vec2 {
        if i < nb {
            [lerp(rs[i], rs[i + 1], t), zs[0]]
        } else if i < nb + nr {
            let k = i - nb;
            [rc, lerp(zs[k], zs[k + 1], t)]
        } else {
            let k = i - nb - nr;
            [lerp(rs[nb - k], rs[nb - k - 1], t), zs[nr]]
        }
    };

    let gll = gauss_lobatto_unit(opts.geom_degree + 1);
    let mut index = PointIndex::new(MERGE_TOL);
    let mut elements = Vec::new();
    let (inside, outside) = if swapped {
        (Subdomain::Dielectric, Subdomain::Conductor)
    } else {
        (Subdomain::Conductor, Subdomain::Dielectric)
    };

    for j in 0..nr {
        for i in 0..nb {
            push_element(&mut index, &mut elements, &gll, inside, |ix, iy| {
                [
                    lerp(rs[i], rs[i + 1], gll[ix]),
                    lerp(zs[j], zs[j + 1], gll[iy]),
                ]
            });
        }
    }

    let offsets = opts.band.offsets(n_layers)?;
    let uniform = |n: usize| -> Vec<f64> {
        (0..=n)
            .map(|k| if k == n { 1.0 } else { k as f64 / n as f64 })
            .collect()
    };

    // tabulate a curve at the tangential positions used by the strips
    let tabulate =
        |f: &dyn Fn(usize, f64) -> Result<Vec2, MeshError>| -> Result<Vec<Vec<Vec2>>, MeshError> {
            (0..nt)
                .map(|i| gll.iter().map(|&t| f(i, t)).collect::<Result<Vec<_>, _>>())
                .collect()
        };
    let block_curve = tabulate(&|i, t| Ok(block(i, t)))?;
    let sigma_curve = tabulate(&|i, t| skin(u_at(i, t), 0.0))?;
    let band_curve = tabulate(&|i, t| skin(u_at(i, t), thickness))?;
    let outer_curve = tabulate(&|i, t| Ok(outer(u_at(i, t))))?;

    let mut strip = |from: &[Vec<Vec2>], to: &[Vec<Vec2>], s_breaks: &[f64], sub: Subdomain| {
        for w in s_breaks.windows(2) {
            for i in 0..nt {
                push_element(&mut index, &mut elements, &gll, sub, |ix, iy| {
                    blend(from[i][iy], to[i][iy], lerp(w[0], w[1], gll[ix]))
                });
            }
        }
    };

    if swapped {
        strip(
            &block_curve,
            &sigma_curve,
            &uniform(opts.core_layers),
            inside,
        );
        let s: Vec<f64> = offsets.iter().map(|h| h / thickness).collect();
        strip(&sigma_curve, &band_curve, &s, outside);
        strip(
            &band_curve,
            &outer_curve,
            &uniform(opts.outer_layers),
            outside,
        );
    } else {
        strip(
            &block_curve,
            &band_curve,
            &uniform(opts.core_layers),
            inside,
        );
        let s: Vec<f64> = offsets.iter().rev().map(|h| 1.0 - h / thickness).collect();
        strip(&band_curve, &sigma_curve, &s, inside);
        strip(
            &sigma_curve,
            &outer_curve,
            &uniform(opts.outer_layers),
            outside,
        );
    }

    let name = match opts.band {
        SkinBand::Uniform { .. } => format!("{config}-M{n_layers}"),
        SkinBand::Graded { sigma_max, .. } => format!("{config}-M{n_layers}-s{sigma_max}"),
    };
    QuadMesh::from_parts(name, index.points, elements)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{det, FacetTag};
    use approx::assert_relative_eq;

    #[test]
    fn square_mesh_counts() {
        for (k, total, cond) in [(1, 8, 2), (2, 32, 8), (3, 72, 18)] {
            let m = square_mesh_a(k).unwrap();
            assert_eq!(m.num_elements(), total);
            let n_cond = m
                .elements
                .iter()
                .filter(|e| e.subdomain == Subdomain::Conductor)
                .count();
            assert_eq!(n_cond, cond);
            for f in m.facets_with_tag(FacetTag::Interface) {
                for n in m.elements[f.elem].face_nodes(f.face) {
                    let p = m.nodes[n];
                    assert!(p[0] == 1.0 || p[1].abs() == 1.0, "{p:?}");
                }
            }
            assert_relative_eq!(m.area(None), 8.0, max_relative = 1e-14);
        }
        assert!(square_mesh_a(0).is_err());
    }

    #[test]
    fn band_offsets_are_graded() {
        let h = band_offsets(3, 7.0, 0.5);
        assert_eq!(h.len(), 4);
        assert_relative_eq!(h[1], 1.0, epsilon = 1e-14);
        assert_relative_eq!(h[2], 3.0, epsilon = 1e-14);
        assert_eq!(h[3], 7.0);
    }

    #[test]
    fn layered_meshes_cover_the_domain() {
        for cfg in [ConfigId::B1, ConfigId::B2, ConfigId::C1, ConfigId::C2] {
            let m = layered_mesh_b(cfg, 3, &LayeredMeshOptions::for_config(cfg)).unwrap();
            m.check_jacobians(8).unwrap();
            let dom = MeridianDomain::new(cfg);
            let area = m.area(None);
            assert!(
                ((area - dom.area()) / dom.area()).abs() < 1e-6,
                "{cfg}: {area} vs {}",
                dom.area()
            );
            let ca = m.area(Some(Subdomain::Conductor));
            assert!(
                ((ca - dom.conductor_area()) / dom.conductor_area()).abs() < 1e-6,
                "{cfg}"
            );
            assert_eq!(m.facets_with_tag(FacetTag::Interface).count(), 12);
            for f in m.facets_with_tag(FacetTag::Axis) {
                for n in m.elements[f.elem].face_nodes(f.face) {
                    assert_eq!(m.nodes[n][0], 0.0);
                }
            }
            let (_, j) = m.map(0, 0.5, 0.5);
            assert!(det(&j) > 0.0);
        }
    }

    #[test]
    fn graded_band_meshes_are_valid() {
        let opts = LayeredMeshOptions {
            band: SkinBand::Graded {
                factor: 3.0,
                grading: 0.5,
                sigma_max: 80.0,
            },
            ..LayeredMeshOptions::default()
        };
        let m = layered_mesh_b(ConfigId::B1, 3, &opts).unwrap();
        m.check_jacobians(8).unwrap();
        assert_eq!(m.name, "B1-M3-s80");
        let dom = MeridianDomain::new(ConfigId::B1);
        assert!(((m.area(None) - dom.area()) / dom.area()).abs() < 1e-6);
    }

    #[test]
    fn layer_too_thick() {
        let thick = LayeredMeshOptions {
            band: SkinBand::Uniform { thickness: 0.3 },
            ..LayeredMeshOptions::default()
        };
        let err = layered_mesh_b(ConfigId::B2, 3, &thick).unwrap_err();
        assert!(matches!(err, MeshError::LayerTooThick { .. }));
        let graded = LayeredMeshOptions {
            band: SkinBand::Graded {
                factor: 3.0,
                grading: 0.5,
                sigma_max: 5.0,
            },
            ..LayeredMeshOptions::default()
        };
        assert!(matches!(
            layered_mesh_b(ConfigId::B2, 3, &graded),
            Err(MeshError::LayerTooThick { .. })
        ));
        assert!(matches!(
            layered_mesh_b(ConfigId::A, 3, &LayeredMeshOptions::default()),
            Err(MeshError::NotLayered(ConfigId::A))
        ));
    }
}
