//! One-dimensional quadrature rules and node sets on `[-1, 1]`, plus an
//! adaptive integrator.

use std::f64::consts::PI;

/// Legendre polynomial `P_n(x)` and its derivative by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = if (1.0 - x * x).abs() < 1e-300 {
        // endpoint limit P_n'(+-1) = (+-1)^(n-1) n(n+1)/2
        let s = if x > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 };
        s * (n * (n + 1)) as f64 / 2.0
    } else {
        n as f64 * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, dp)
}

/// Gauss–Legendre rule with `n` points on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = -(PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        weights[i] = w;
        nodes[n - 1 - i] = -x;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss–Lobatto–Legendre nodes (`n >= 2` points) on `[-1, 1]`, ascending,
/// exactly symmetric, endpoints exactly `-1` and `1`.
pub fn gauss_lobatto_nodes(n: usize) -> Vec<f64> {
    assert!(n >= 2, "Gauss-Lobatto rule needs at least two points");
    let deg = n - 1;
    let mut nodes = vec![0.0; n];
    nodes[0] = -1.0;
    nodes[deg] = 1.0;
    // interior nodes are roots of P'_deg; Newton on P'_deg using
    // (1 - x^2) P''_deg = 2x P'_deg - deg(deg+1) P_deg
    for i in 1..n.div_ceil(2) {
        let mut x = -(PI * i as f64 / deg as f64).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(deg, x);
            let ddp = (2.0 * x * dp - (deg * (deg + 1)) as f64 * p) / (1.0 - x * x);
            let dx = dp / ddp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        nodes[deg - i] = -x;
    }
    if n % 2 == 1 {
        nodes[deg / 2] = 0.0;
    }
    nodes
}

/// Maps nodes from `[-1, 1]` onto `[0, 1]`, keeping the endpoints exact.
pub fn to_unit_interval(nodes: &[f64]) -> Vec<f64> {
    nodes.iter().map(|&x| 0.5 * (x + 1.0)).collect()
}

/// Gauss–Legendre rule on `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    (to_unit_interval(&x), w.iter().map(|w| 0.5 * w).collect())
}

/// Gauss–Lobatto nodes on `[0, 1]`.
pub fn gauss_lobatto_unit(n: usize) -> Vec<f64> {
    to_unit_interval(&gauss_lobatto_nodes(n))
}

/// Fixed panel rule used by [`integrate_adaptive`] and [`integrate_panel`].
#[derive(Debug, Clone)]
pub struct PanelRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl PanelRule {
    pub fn new(points: usize) -> Self {
        let (nodes, weights) = gauss_legendre(points);
        Self { nodes, weights }
    }

    pub fn integrate(&self, f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        half * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
    }
}

/// Integrates `f` over `[a, b]` with a single 20-point Gauss–Legendre panel.
pub fn integrate_panel(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
    thread_local! {
        static RULE: PanelRule = PanelRule::new(20);
    }
    RULE.with(|rule| rule.integrate(f, a, b))
}

/// Adaptive bisection with 10-point Gauss–Legendre panels: a panel is
/// accepted when it agrees with the sum over its two halves to `tol`
/// (scaled by the panel's share of the interval).
pub fn integrate_adaptive(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let rule = PanelRule::new(10);
    let total = (b - a).abs().max(f64::MIN_POSITIVE);
    let mut stack = vec![(a, b, rule.integrate(&mut f, a, b), 0usize)];
    let mut sum = 0.0;
    while let Some((lo, hi, whole, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = rule.integrate(&mut f, lo, mid);
        let right = rule.integrate(&mut f, mid, hi);
        let local_tol = tol * ((hi - lo).abs() / total).max(1e-3);
        if (left + right - whole).abs() <= local_tol || depth >= 40 {
            sum += left + right;
        } else {
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    sum
}
