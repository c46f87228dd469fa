//! Tensor-product Lagrange basis of `Q_p` on `[0, 1]^2`.

use crate::lagrange::LagrangeBasis1d;

use super::FemError;

pub const MAX_DEGREE: usize = 20;

/// `Q_p` basis with nodes on the tensor Gauss–Lobatto grid; function
/// `i + (p + 1) j` is `l_i(x) l_j(y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeBasis {
    p: usize,
    line: LagrangeBasis1d,
}

/// Builds the degree-`p` basis, `1 <= p <= 20`.
pub fn shape_basis(p: usize) -> Result<ShapeBasis, FemError> {
    if !(1..=MAX_DEGREE).contains(&p) {
        return Err(FemError::Degree(p));
    }
    Ok(ShapeBasis {
        p,
        line: LagrangeBasis1d::gauss_lobatto(p),
    })
}

/// Values and reference derivatives of every basis function at a set of points.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub n_points: usize,
    pub n_basis: usize,
    /// `values[q * n_basis + a]`
    pub values: Vec<f64>,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
}

impl ShapeBasis {
    pub fn degree(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        (self.p + 1) * (self.p + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// One-dimensional nodes on `[0, 1]`.
    pub fn nodes_1d(&self) -> &[f64] {
        self.line.nodes()
    }

    pub fn line(&self) -> &LagrangeBasis1d {
        &self.line
    }

    pub fn values(&self, x: f64, y: f64) -> Vec<f64> {
        let vx = self.line.values(x);
        let vy = self.line.values(y);
        vy.iter()
            .flat_map(|b| vx.iter().map(move |a| a * b))
            .collect()
    }

    /// Values and `(d/dx, d/dy)` at one point.
    pub fn values_and_gradients(&self, x: f64, y: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (vx, dx) = self.line.values_and_derivatives(x);
        let (vy, dy) = self.line.values_and_derivatives(y);
        let n = self.p + 1;
        let mut v = Vec::with_capacity(n * n);
        let mut gx = Vec::with_capacity(n * n);
        let mut gy = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                v.push(vx[i] * vy[j]);
                gx.push(dx[i] * vy[j]);
                gy.push(vx[i] * dy[j]);
            }
        }
        (v, gx, gy)
    }

    /// Tabulates the basis at the tensor grid `xs x ys` (x fastest).
    pub fn tabulate_grid(&self, xs: &[f64], ys: &[f64]) -> Tabulation {
        let nb = self.len();
        let n_points = xs.len() * ys.len();
        let mut t = Tabulation {
            n_points,
            n_basis: nb,
            values: Vec::with_capacity(n_points * nb),
            dx: Vec::with_capacity(n_points * nb),
            dy: Vec::with_capacity(n_points * nb),
        };
        for &y in ys {
            for &x in xs {
                let (v, gx, gy) = self.values_and_gradients(x, y);
                t.values.extend(v);
                t.dx.extend(gx);
                t.dy.extend(gy);
            }
        }
        t
    }
}
