//! Planar parametric curves in the meridian half-plane and their arc-length
//! reparametrization.

use std::fmt::Debug;
use std::sync::Arc;

use crate::quadrature::{integrate_adaptive, integrate_panel};

/// A point or vector `(r, z)` of the meridian half-plane.
pub type Vec2 = [f64; 2];

pub(crate) fn norm(v: Vec2) -> f64 {
    v[0].hypot(v[1])
}

pub(crate) fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// A twice-differentiable regular curve `t -> (r(t), z(t))`.
pub trait ParametricCurve: Debug + Send + Sync {
    fn domain(&self) -> (f64, f64);
    fn point(&self, t: f64) -> Vec2;
    fn d1(&self, t: f64) -> Vec2;
    fn d2(&self, t: f64) -> Vec2;

    /// Signed curvature `(r' z'' - z' r'') / |X'|^3`.
    fn signed_curvature(&self, t: f64) -> f64 {
        let a = self.d1(t);
        let b = self.d2(t);
        (a[0] * b[1] - a[1] * b[0]) / norm(a).powi(3)
    }

    /// Upper bound on `|curvature|` over the whole domain.
    fn max_abs_curvature(&self) -> f64 {
        let (t0, t1) = self.domain();
        let n = 2000;
        (0..=n)
            .map(|i| {
                let t = t0 + (t1 - t0) * i as f64 / n as f64;
                self.signed_curvature(t).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Straight segment from `start` to `end`, parametrized by arc length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: Vec2,
    pub end: Vec2,
}

impl Segment {
    pub fn new(start: Vec2, end: Vec2) -> Self {
        Self { start, end }
    }

    fn length(&self) -> f64 {
        norm([self.end[0] - self.start[0], self.end[1] - self.start[1]])
    }
}

impl ParametricCurve for Segment {
    fn domain(&self) -> (f64, f64) {
        (0.0, self.length())
    }

    fn point(&self, t: f64) -> Vec2 {
        let s = t / self.length();
        [
            (1.0 - s) * self.start[0] + s * self.end[0],
            (1.0 - s) * self.start[1] + s * self.end[1],
        ]
    }

    fn d1(&self, _t: f64) -> Vec2 {
        let l = self.length();
        [
            (self.end[0] - self.start[0]) / l,
            (self.end[1] - self.start[1]) / l,
        ]
    }

    fn d2(&self, _t: f64) -> Vec2 {
        [0.0, 0.0]
    }

    fn max_abs_curvature(&self) -> f64 {
        0.0
    }
}

/// Meridian half-ellipse `phi -> (a sin phi, -c cos phi)` for `phi` in
/// `[phi0, phi1]`, running from the bottom of the axis towards the top.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseArc {
    /// semi-axis along r
    pub a: f64,
    /// semi-axis along z
    pub c: f64,
    pub phi0: f64,
    pub phi1: f64,
}

impl EllipseArc {
    /// The full meridian half-ellipse, `phi` in `[0, pi]`.
    pub fn half(a: f64, c: f64) -> Self {
        Self {
            a,
            c,
            phi0: 0.0,
            phi1: std::f64::consts::PI,
        }
    }
}

impl ParametricCurve for EllipseArc {
    fn domain(&self) -> (f64, f64) {
        (self.phi0, self.phi1)
    }

    fn point(&self, t: f64) -> Vec2 {
        [self.a * t.sin(), -self.c * t.cos()]
    }

    fn d1(&self, t: f64) -> Vec2 {
        [self.a * t.cos(), self.c * t.sin()]
    }

    fn d2(&self, t: f64) -> Vec2 {
        [-self.a * t.sin(), self.c * t.cos()]
    }

    fn max_abs_curvature(&self) -> f64 {
        // curvature a c / (a^2 cos^2 + c^2 sin^2)^(3/2) peaks at the vertex of the
        // smaller semi-axis when that vertex lies in the range, else at an end
        let k = |t: f64| self.signed_curvature(t).abs();
        let vertex = if self.c <= self.a {
            std::f64::consts::FRAC_PI_2
        } else {
            0.0
        };
        let mut best = k(self.phi0).max(k(self.phi1));
        for cand in [vertex, vertex + std::f64::consts::PI] {
            if cand >= self.phi0 && cand <= self.phi1 {
                best = best.max(k(cand));
            }
        }
        best
    }
}

/// The same curve traversed backwards.
#[derive(Debug, Clone)]
pub struct Reversed(pub Arc<dyn ParametricCurve>);

impl ParametricCurve for Reversed {
    fn domain(&self) -> (f64, f64) {
        self.0.domain()
    }

    fn point(&self, t: f64) -> Vec2 {
        let (t0, t1) = self.0.domain();
        self.0.point(t0 + t1 - t)
    }

    fn d1(&self, t: f64) -> Vec2 {
        let (t0, t1) = self.0.domain();
        let d = self.0.d1(t0 + t1 - t);
        [-d[0], -d[1]]
    }

    fn d2(&self, t: f64) -> Vec2 {
        let (t0, t1) = self.0.domain();
        self.0.d2(t0 + t1 - t)
    }

    fn max_abs_curvature(&self) -> f64 {
        self.0.max_abs_curvature()
    }
}

const TABLE_INTERVALS: usize = 64;
const ARCLENGTH_TOL: f64 = 1e-13;

/// Unit-speed reparametrization of a regular curve.
///
/// The cumulative length is tabulated on a uniform parameter grid by adaptive
/// quadrature. `t(s)` starts from a monotone cubic Hermite interpolant of the
/// inverse table and is polished by Newton iterations on `S(t) = s`.
#[derive(Debug, Clone)]
pub struct ArcLengthCurve {
    base: Arc<dyn ParametricCurve>,
    params: Vec<f64>,
    lengths: Vec<f64>,
    inv_speed: Vec<f64>,
    max_curvature: f64,
}

impl ArcLengthCurve {
    pub fn new(base: Arc<dyn ParametricCurve>) -> Self {
        let (t0, t1) = base.domain();
        let speed = |t: f64| norm(base.d1(t));
        let params: Vec<f64> = (0..=TABLE_INTERVALS)
            .map(|i| {
                if i == TABLE_INTERVALS {
                    t1
                } else {
                    t0 + (t1 - t0) * i as f64 / TABLE_INTERVALS as f64
                }
            })
            .collect();
        let mut lengths = Vec::with_capacity(params.len());
        lengths.push(0.0);
        for w in params.windows(2) {
            let piece = integrate_adaptive(speed, w[0], w[1], ARCLENGTH_TOL);
            lengths.push(lengths.last().unwrap() + piece);
        }
        let inv_speed = params.iter().map(|&t| 1.0 / speed(t)).collect();
        let max_curvature = base.max_abs_curvature();
        Self {
            base,
            params,
            lengths,
            inv_speed,
            max_curvature,
        }
    }

    pub fn base(&self) -> &Arc<dyn ParametricCurve> {
        &self.base
    }

    pub fn length(&self) -> f64 {
        *self.lengths.last().unwrap()
    }

    /// Arc length from the start of the curve to base parameter `t`.
    pub fn arclength_at(&self, t: f64) -> f64 {
        let (t0, t1) = self.base.domain();
        let t = t.clamp(t0, t1);
        let i = self.interval_of_param(t);
        let base = &self.base;
        self.lengths[i] + integrate_panel(&mut |u| norm(base.d1(u)), self.params[i], t)
    }

    fn interval_of_param(&self, t: f64) -> usize {
        let i = self.params.partition_point(|&p| p <= t);
        i.saturating_sub(1).min(TABLE_INTERVALS - 1)
    }

    /// Base parameter at arc length `s`.
    pub fn param_at(&self, s: f64) -> f64 {
        let (t0, t1) = self.base.domain();
        if s <= 0.0 {
            return t0;
        }
        if s >= self.length() {
            return t1;
        }
        let i = self
            .lengths
            .partition_point(|&l| l <= s)
            .saturating_sub(1)
            .min(TABLE_INTERVALS - 1);
        let (s0, s1) = (self.lengths[i], self.lengths[i + 1]);
        let (p0, p1) = (self.params[i], self.params[i + 1]);
        let h = s1 - s0;
        let u = (s - s0) / h;
        let slope = (p1 - p0) / h;
        // Fritsch–Carlson limiting keeps the Hermite interpolant monotone
        let mut m0 = self.inv_speed[i];
        let mut m1 = self.inv_speed[i + 1];
        let (a, b) = (m0 / slope, m1 / slope);
        let rr = a * a + b * b;
        if rr > 9.0 {
            let tau = 3.0 / rr.sqrt();
            m0 = tau * a * slope;
            m1 = tau * b * slope;
        }
        let h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
        let h10 = u * (1.0 - u) * (1.0 - u);
        let h01 = u * u * (3.0 - 2.0 * u);
        let h11 = u * u * (u - 1.0);
        let mut t = h00 * p0 + h10 * h * m0 + h01 * p1 + h11 * h * m1;

        let base = &self.base;
        for _ in 0..20 {
            let f = s0 + integrate_panel(&mut |v| norm(base.d1(v)), p0, t) - s;
            let step = f / norm(base.d1(t));
            t = (t - step).clamp(p0, p1);
            if step.abs() < 1e-15 * (1.0 + t.abs()) {
                break;
            }
        }
        t
    }
}

impl ParametricCurve for ArcLengthCurve {
    fn domain(&self) -> (f64, f64) {
        (0.0, self.length())
    }

    fn point(&self, s: f64) -> Vec2 {
        self.base.point(self.param_at(s))
    }

    fn d1(&self, s: f64) -> Vec2 {
        let d = self.base.d1(self.param_at(s));
        let n = norm(d);
        [d[0] / n, d[1] / n]
    }

    /// `(X'' - (X''.T) T) / |X'|^2` with derivatives taken in the base parameter.
    fn d2(&self, s: f64) -> Vec2 {
        let t = self.param_at(s);
        let d = self.base.d1(t);
        let dd = self.base.d2(t);
        let speed2 = dot(d, d);
        let n = speed2.sqrt();
        let tan = [d[0] / n, d[1] / n];
        let along = dot(dd, tan);
        [
            (dd[0] - along * tan[0]) / speed2,
            (dd[1] - along * tan[1]) / speed2,
        ]
    }

    fn max_abs_curvature(&self) -> f64 {
        self.max_curvature
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn circle_has_unit_speed_and_constant_curvature() {
        let r = 1.7;
        let c = ArcLengthCurve::new(Arc::new(EllipseArc::half(r, r)));
        assert_relative_eq!(c.length(), PI * r, max_relative = 1e-13);
        for i in 0..=50 {
            let s = c.length() * i as f64 / 50.0;
            assert_relative_eq!(norm(c.d1(s)), 1.0, epsilon = 1e-14);
            assert_relative_eq!(c.signed_curvature(s), 1.0 / r, max_relative = 1e-10);
        }
    }

    #[test]
    fn param_inversion_roundtrip() {
        let c = ArcLengthCurve::new(Arc::new(EllipseArc::half(4.0, 1.0)));
        for i in 0..=200 {
            let t = PI * i as f64 / 200.0;
            let s = c.arclength_at(t);
            assert!((c.param_at(s) - t).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn reversed_curve_flips_curvature_sign() {
        let e: Arc<dyn ParametricCurve> = Arc::new(EllipseArc::half(2.0, 1.0));
        let r = Reversed(e.clone());
        for t in [0.3, 1.0, 2.2] {
            assert_relative_eq!(
                r.signed_curvature(t),
                -e.signed_curvature(PI - t),
                max_relative = 1e-14
            );
        }
        assert_eq!(r.max_abs_curvature(), e.max_abs_curvature());
        assert_relative_eq!(e.max_abs_curvature(), 2.0, max_relative = 1e-14);
    }
}
