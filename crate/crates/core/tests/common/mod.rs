//! Property checks shared by the property suites and the acceptance runner.
//! Each check takes its sampled inputs and returns a `TestCaseError` on
//! violation.

#![allow(dead_code)]

use std::collections::HashMap;
use std::f64::consts::{LN_10, PI};
use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use skinfem::fem::{assemble, Coefficients, FeSpace, SourceSpec};
use skinfem::geometry::{
    ArcLengthCurve, ConfigId, EllipseArc, MeridianDomain, ParametricCurve, Shape,
};
use skinfem::linsolve::{factor, SparseComplexMatrix, TripletBuilder};
use skinfem::mesh::{FacetTag, MeshSpec};
use skinfem::physics::{profile_v0, profile_v1, theoretical_slope, PhysicalParams, ProfileTrace};
use skinfem::postprocess::regression_slope;

pub type CheckResult = Result<(), TestCaseError>;

/// Deterministic runner used by the acceptance suite.
pub fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

pub fn sigma_strategy() -> impl Strategy<Value = f64> {
    (0.0f64..3.0).prop_map(|e| 10f64.powf(e))
}

pub fn complex_strategy() -> impl Strategy<Value = Complex64> {
    (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| Complex64::new(a, b))
}

pub fn spheroid_strategy() -> impl Strategy<Value = ConfigId> {
    prop_oneof![
        Just(ConfigId::B1),
        Just(ConfigId::B2),
        Just(ConfigId::C1),
        Just(ConfigId::C2)
    ]
}

pub fn config_strategy() -> impl Strategy<Value = ConfigId> {
    prop_oneof![Just(ConfigId::A), spheroid_strategy()]
}

fn close(a: f64, b: f64, tol: f64, what: &str) -> CheckResult {
    prop_assert!((a - b).abs() <= tol, "{what}: {a} vs {b} (tol {tol})");
    Ok(())
}

// ---------------------------------------------------------------- physics

/// `ell = sqrt(2) delta / kappa`.
pub fn check_length_identity(sigma: f64) -> CheckResult {
    let p = PhysicalParams::with_sigma(sigma).unwrap();
    close(p.ell, 2f64.sqrt() * p.delta / p.kappa, 1e-14 * p.ell, "ell")
}

/// `|v0(Y)| = |h0| exp(-kappa Y / sqrt 2)`, decreasing, and `1/e` of the
/// boundary value at physical depth `ell`.
pub fn check_v0_modulus(sigma: f64, y: f64, h0: Complex64) -> CheckResult {
    prop_assume!(h0.norm() > 1e-3);
    let p = PhysicalParams::with_sigma(sigma).unwrap();
    let tr = ProfileTrace::new(h0, Complex64::new(0.0, 0.0), 0.0);
    let v = profile_v0(&p, &tr, y);
    let expect = h0.norm() * (-p.kappa * y / 2f64.sqrt()).exp();
    close(v.norm(), expect, 1e-13 * h0.norm(), "modulus")?;
    prop_assert!(profile_v0(&p, &tr, y + 0.1).norm() < v.norm());
    let at_ell = profile_v0(&p, &tr, p.ell / p.delta).norm();
    close(
        at_ell / h0.norm(),
        (-1f64).exp(),
        1e-12,
        "decay over one skin depth",
    )
}

/// Central second difference minus `lambda^2 v` against the exact right-hand
/// side, within the truncation bound `step^2 / 12 max |v''''|`.
fn ode_residual_check(
    v: impl Fn(f64) -> Complex64,
    fourth: impl Fn(f64) -> f64,
    rhs: Complex64,
    lambda2: Complex64,
    y: f64,
    step: f64,
    what: &str,
) -> CheckResult {
    let fd = (v(y + step) - v(y) * 2.0 + v(y - step)) / (step * step);
    let residual = (fd - lambda2 * v(y) - rhs).norm();
    let sup = [y - step, y, y + step]
        .iter()
        .map(|&t| fourth(t))
        .fold(0.0, f64::max);
    let bound = 1.1 * step * step / 12.0 * sup + 1e-12 * v(y).norm().max(1e-300) / (step * step);
    prop_assert!(
        residual <= bound,
        "{what}: residual {residual} above {bound} at Y = {y}"
    );
    Ok(())
}

/// `v0'' - lambda^2 v0 = 0` by finite differences.
pub fn check_v0_ode(sigma: f64, y: f64, h0: Complex64) -> CheckResult {
    let p = PhysicalParams::with_sigma(sigma).unwrap();
    let tr = ProfileTrace::new(h0, Complex64::new(0.0, 0.0), 0.0);
    let lam = p.lambda;
    ode_residual_check(
        |t| profile_v0(&p, &tr, t),
        |t| ((-lam * t).exp() * lam.powi(4) * h0).norm(),
        Complex64::new(0.0, 0.0),
        lam * lam,
        y,
        0.5,
        "v0",
    )
}

/// `v1'' - lambda^2 v1 = -lambda (k + z'/r) h0 exp(-lambda Y)` by finite differences.
pub fn check_v1_ode(
    sigma: f64,
    y: f64,
    h0: Complex64,
    h1: Complex64,
    k: f64,
    zr: f64,
) -> CheckResult {
    let p = PhysicalParams::with_sigma(sigma).unwrap();
    let tr = ProfileTrace::new(h0, h1, 0.0);
    let lam = p.lambda;
    let c = k + zr;
    let g = |t: f64| h1 + h0 * (0.5 * t * c);
    let dg = h0 * (0.5 * c);
    ode_residual_check(
        |t| profile_v1(&p, &tr, t, k, zr),
        |t| ((-lam * t).exp() * (lam.powi(4) * g(t) - lam.powi(3) * dg * 4.0)).norm(),
        -(-lam * y).exp() * lam * c * h0,
        lam * lam,
        y,
        0.5,
        "v1",
    )
}

/// The theoretical slope equals the decay rate of `log10 |v0|` in `y3`
/// minus `H / ln 10`.
pub fn check_slope_from_profile(sigma: f64, y3_frac: f64, h: f64) -> CheckResult {
    let p = PhysicalParams::with_sigma(sigma).unwrap();
    let tr = ProfileTrace::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), 0.0);
    let y3 = y3_frac * p.ell;
    let dy = 1e-3 * p.ell;
    let log = |y: f64| profile_v0(&p, &tr, y / p.delta).norm().log10();
    let rate = -(log(y3 + dy) - log(y3 - dy)) / (2.0 * dy);
    let s = theoretical_slope(&p, h);
    close(s, rate - h / LN_10, 1e-8 * s.abs(), "slope")
}

/// With `h1 = 0`, `|v0 + delta v1|^2 / |v0|^2 = 1 + 2 y3 H + O((delta + y3)^2)`.
pub fn check_v1_modulus_expansion(sigma: f64, y3_frac: f64, h: f64) -> CheckResult {
    let p = PhysicalParams::with_sigma(sigma).unwrap();
    let tr = ProfileTrace::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), 0.0);
    let y3 = y3_frac * p.ell;
    let big_y = y3 / p.delta;
    let v0 = profile_v0(&p, &tr, big_y);
    // k + z'/r = 2H
    let v1 = profile_v1(&p, &tr, big_y, 2.0 * h, 0.0);
    let ratio = (v0 + v1 * p.delta).norm_sqr() / v0.norm_sqr();
    let rest = (ratio - 1.0 - 2.0 * y3 * h).abs();
    let scale = (p.delta + y3).powi(2);
    prop_assert!(
        rest <= h * h * scale * (1.0 + 1e-9) + 1e-12,
        "remainder {rest} vs {scale}"
    );
    Ok(())
}

// --------------------------------------------------------------- geometry

fn domain(cfg: ConfigId) -> MeridianDomain {
    MeridianDomain::new(cfg)
}

/// Unit speed, tangent equal to the derivative of the position.
pub fn check_unit_speed(cfg: ConfigId, frac: f64) -> CheckResult {
    let d = domain(cfg);
    let c = &d.interface;
    let xi = frac * c.length();
    let t = c.tangent(xi).unwrap();
    close(t[0].hypot(t[1]), 1.0, 1e-10, "speed")?;
    let e = 1e-5;
    let (a, b) = (c.point(xi - e).unwrap(), c.point(xi + e).unwrap());
    close((b[0] - a[0]) / (2.0 * e), t[0], 1e-7, "dr/dxi")?;
    close((b[1] - a[1]) / (2.0 * e), t[1], 1e-7, "dz/dxi")
}

/// Differentiating the unit tangent reproduces `k n` at second order.
pub fn check_frenet(cfg: ConfigId, frac: f64) -> CheckResult {
    let d = domain(cfg);
    let c = &d.interface;
    let xi = frac * c.length();
    let k = c.curvature(xi).unwrap();
    let n = c.normal(xi).unwrap();
    let err = |e: f64| {
        let (a, b) = (c.tangent(xi - e).unwrap(), c.tangent(xi + e).unwrap());
        let dt = [(b[0] - a[0]) / (2.0 * e), (b[1] - a[1]) / (2.0 * e)];
        (dt[0] - k * n[0]).hypot(dt[1] - k * n[1])
    };
    let (e1, e2) = (err(2e-3), err(1e-3));
    // second order: halving the step divides the error by about 4
    prop_assert!(e2 <= 1e-9 || e2 <= 0.3 * e1, "errors {e1} -> {e2}");
    prop_assert!(
        e2 <= 1e-4 * (1.0 + k.abs()).powi(3),
        "error {e2} at k = {k}"
    );
    Ok(())
}

/// The normal points into the conductor and the mean curvature is positive on
/// B interfaces, negative on C interfaces.
pub fn check_orientation(cfg: ConfigId, frac: f64) -> CheckResult {
    let d = domain(cfg);
    let c = &d.interface;
    let xi = frac * c.length();
    let p = c.point(xi).unwrap();
    let n = c.normal(xi).unwrap();
    let e = 1e-6;
    prop_assert!(d.is_conductor(p[0] + e * n[0], p[1] + e * n[1]));
    prop_assert!(!d.is_conductor(p[0] - e * n[0], p[1] - e * n[1]));
    let h = c.mean_curvature(xi).unwrap();
    if cfg.is_swapped() {
        prop_assert!(h < 0.0, "H = {h}");
    } else {
        prop_assert!(h > 0.0, "H = {h}");
    }
    Ok(())
}

/// Distance from `q` to the half ellipse `(a sin t, -c cos t)`, by dense
/// sampling and Newton refinement of the foot point.
pub fn ellipse_distance(a: f64, c: f64, q: [f64; 2]) -> f64 {
    let pt = |t: f64| [a * t.sin(), -c * t.cos()];
    let dist = |t: f64| {
        let p = pt(t);
        (p[0] - q[0]).hypot(p[1] - q[1])
    };
    let n = 4000;
    let mut t = (0..=n)
        .map(|i| PI * i as f64 / n as f64)
        .min_by(|x, y| dist(*x).total_cmp(&dist(*y)))
        .unwrap();
    for _ in 0..50 {
        let p = pt(t);
        let d1 = [a * t.cos(), c * t.sin()];
        let d2 = [-a * t.sin(), c * t.cos()];
        let f = (p[0] - q[0]) * d1[0] + (p[1] - q[1]) * d1[1];
        let df = d1[0] * d1[0] + d1[1] * d1[1] + (p[0] - q[0]) * d2[0] + (p[1] - q[1]) * d2[1];
        let step = f / df;
        t = (t - step).clamp(0.0, PI);
        if step.abs() < 1e-15 {
            break;
        }
    }
    dist(t)
}

/// `normal_coords(xi, h)` lies at distance `h` from the interface, on the
/// conductor side.
pub fn check_normal_coords(cfg: ConfigId, frac: f64, h_frac: f64) -> CheckResult {
    let d = domain(cfg);
    let Shape::Spheroid { a, c, .. } = d.shape else {
        return Ok(());
    };
    let curve = &d.interface;
    let xi = frac * curve.length();
    let h = h_frac / curve.max_abs_curvature();
    let q = curve.normal_coords(xi, h).unwrap();
    close(ellipse_distance(a, c, q), h, 1e-10, "distance")?;
    prop_assert!(d.is_conductor(q[0], q[1]) || q[0] < 1e-9);
    Ok(())
}

/// Half perimeter of the ellipse with semi-axes `a`, `c` from the
/// arithmetic-geometric mean series.
pub fn ellipse_half_perimeter(a: f64, c: f64) -> f64 {
    let (mut x, mut y) = (a.max(c), a.min(c));
    let mut sum = 0.5 * (x * x - y * y);
    let mut pow = 1.0;
    for _ in 0..40 {
        let cn = 0.5 * (x - y);
        let (nx, ny) = (0.5 * (x + y), (x * y).sqrt());
        x = nx;
        y = ny;
        sum += pow * cn * cn;
        pow *= 2.0;
        if cn == 0.0 {
            break;
        }
    }
    PI * (a.max(c).powi(2) - sum) / x
}

/// Arc-length parametrization of `(a, c)` half ellipses has the exact length
/// and reaches the axis at both ends.
pub fn check_ellipse_length(a_over_c: f64, c: f64) -> CheckResult {
    let a = a_over_c * c;
    let curve = skinfem::geometry::InterfaceCurve::ellipse_arclength(a, c).unwrap();
    let exact = ellipse_half_perimeter(a, c);
    close(curve.length(), exact, 1e-8 * exact, "length")?;
    close(curve.point(0.0).unwrap()[0], 0.0, 1e-12, "start on axis")?;
    close(
        curve.point(curve.length()).unwrap()[0],
        0.0,
        1e-10,
        "end on axis",
    )
}

/// Reparametrizing an arc-length curve again is the identity.
pub fn check_reparametrization_idempotent(a_over_c: f64, frac: f64) -> CheckResult {
    let once = ArcLengthCurve::new(Arc::new(EllipseArc::half(a_over_c, 1.0)));
    let twice = ArcLengthCurve::new(Arc::new(once.clone()));
    close(twice.length(), once.length(), 1e-10, "length")?;
    let s = frac * once.length();
    let (p, q) = (once.point(s), twice.point(twice.param_at(s)));
    close(p[0], q[0], 1e-10, "r")?;
    close(p[1], q[1], 1e-10, "z")
}

// ------------------------------------------------------------- regression

pub fn samples_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0f64..0.1, -5.0f64..5.0), 2..30).prop_filter(
        "distinct abscissae",
        |v| {
            let first = v[0].0;
            v.iter().any(|s| (s.0 - first).abs() > 1e-3)
        },
    )
}

/// Adding `shift` to every log sample moves the intercept by `shift` and
/// leaves the slope unchanged.
pub fn check_regression_shift(samples: &[(f64, f64)], shift: f64) -> CheckResult {
    let (s, b, n) = regression_slope(samples, 0.1).unwrap();
    let moved: Vec<(f64, f64)> = samples.iter().map(|&(y, v)| (y, v + shift)).collect();
    let (s2, b2, n2) = regression_slope(&moved, 0.1).unwrap();
    prop_assert_eq!(n, n2);
    let scale = 1.0 + s.abs();
    close(s2, s, 1e-9 * scale * (1.0 + shift.abs()), "slope")?;
    close(
        b2,
        b + shift,
        1e-9 * (1.0 + b.abs() + shift.abs()) * scale,
        "intercept",
    )
}

/// Samples of `log10 |exp(-lambda y3 / delta)|` regress to `1 / (ell ln 10)`.
pub fn check_regression_exponential(sigma: f64, n: usize) -> CheckResult {
    let p = PhysicalParams::with_sigma(sigma).unwrap();
    let samples: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let y = 0.99 * p.ell * k as f64 / (n - 1) as f64;
            (y, (-p.lambda * (y / p.delta)).exp().norm().log10())
        })
        .collect();
    let (s, _, used) = regression_slope(&samples, p.ell).unwrap();
    prop_assert_eq!(used, n);
    let exact = 1.0 / (p.ell * LN_10);
    close(s, exact, 1e-10 * exact, "slope")
}

// ---------------------------------------------------------- discretization

/// The assembled matrix is exactly complex symmetric.
pub fn check_matrix_symmetry(cfg: ConfigId, p: usize, sigma: f64) -> CheckResult {
    let mesh = Arc::new(MeshSpec::new(1).build(cfg).unwrap());
    let space = FeSpace::new(mesh, p).unwrap();
    let params = PhysicalParams::with_sigma(sigma).unwrap();
    let sys = assemble(
        &space,
        &Coefficients::from_params(&params),
        &SourceSpec::for_config(cfg),
    )
    .unwrap();
    prop_assert_eq!(sys.matrix.max_asymmetry(), 0.0);
    prop_assert!(sys.matrix.is_symmetric());
    Ok(())
}

/// Every face is shared by at most two elements with identical geometry
/// nodes, unshared faces lie on the axis or the outer boundary, and the
/// stored facet tags agree with the geometry.
pub fn check_mesh_conformity(cfg: ConfigId, level: usize) -> CheckResult {
    let mesh = MeshSpec::new(level).build(cfg).unwrap();
    let dom = MeridianDomain::new(cfg);
    let mut seen: HashMap<Vec<usize>, Vec<(usize, usize)>> = HashMap::new();
    for (e, el) in mesh.elements.iter().enumerate() {
        for face in 0..4 {
            let mut key = el.face_nodes(face);
            key.sort_unstable();
            seen.entry(key).or_default().push((e, face));
        }
    }
    let on_outer = |p: [f64; 2]| match dom.shape {
        Shape::Cylinder { r1, l1, .. } => {
            (p[0] - r1).abs() < 1e-9 || (p[1].abs() - 0.5 * l1).abs() < 1e-9
        }
        Shape::Spheroid { b, d, .. } => {
            ((p[0] / b).powi(2) + (p[1] / d).powi(2) - 1.0).abs() < 1e-9
        }
    };
    let mut boundary = 0;
    for (key, users) in &seen {
        prop_assert!(users.len() <= 2, "face shared by {} elements", users.len());
        if users.len() == 1 {
            boundary += 1;
            let (e, face) = users[0];
            let tags: Vec<FacetTag> = mesh
                .facets
                .iter()
                .filter(|f| f.elem == e && f.face == face)
                .map(|f| f.tag)
                .collect();
            prop_assert_eq!(
                tags.len(),
                1,
                "boundary face of element {} has tags {:?}",
                e,
                tags
            );
            let axis = key.iter().all(|&n| mesh.nodes[n][0] == 0.0);
            let outer = key.iter().all(|&n| on_outer(mesh.nodes[n]));
            prop_assert!(
                axis || outer,
                "boundary face of element {} off the boundary",
                e
            );
            let expect = if axis {
                FacetTag::Axis
            } else {
                FacetTag::Outer
            };
            prop_assert_eq!(tags[0], expect);
        } else {
            let (e0, e1) = (users[0].0, users[1].0);
            let differs = mesh.elements[e0].subdomain != mesh.elements[e1].subdomain;
            let tagged = mesh
                .facets
                .iter()
                .filter(|f| {
                    (f.elem == e0 && f.face == users[0].1) || (f.elem == e1 && f.face == users[1].1)
                })
                .count();
            prop_assert_eq!(tagged, usize::from(differs));
        }
    }
    prop_assert_eq!(
        mesh.facets
            .iter()
            .filter(|f| f.tag != FacetTag::Interface)
            .count(),
        boundary
    );
    Ok(())
}

/// Sparse LU of a random diagonally weighted complex symmetric matrix
/// recovers a known solution.
pub fn check_known_solution(n: usize, seed: u64) -> CheckResult {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut b = TripletBuilder::with_capacity(n, 6 * n);
    for i in 0..n {
        b.push(
            i,
            i,
            Complex64::new(4.0 + rng.gen::<f64>(), rng.gen::<f64>() - 0.5),
        );
        for _ in 0..2 {
            let j = rng.gen_range(0..n);
            if j != i {
                let v = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
                b.push(i, j, v);
                b.push(j, i, v);
            }
        }
    }
    let a: SparseComplexMatrix = b.build().unwrap();
    let x: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.gen(), rng.gen()))
        .collect();
    let rhs = a.mul_vec(&x).unwrap();
    let got = factor(&a).unwrap().solve(&rhs).unwrap();
    let scale = x.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let err = x
        .iter()
        .zip(&got)
        .map(|(u, v)| (u - v).norm())
        .fold(0.0, f64::max);
    prop_assert!(err <= 1e-10 * scale, "error {err}");
    Ok(())
}
