//! Nodal Lagrange bases on `[0, 1]` and their tensor products on `[0, 1]^2`.

use crate::quadrature::gauss_lobatto_unit;

/// Lagrange polynomials through a fixed node set on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangeBasis1d {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl LagrangeBasis1d {
    pub fn new(nodes: Vec<f64>) -> Self {
        let weights = (0..nodes.len())
            .map(|j| {
                let prod: f64 = (0..nodes.len())
                    .filter(|&k| k != j)
                    .map(|k| nodes[j] - nodes[k])
                    .product();
                1.0 / prod
            })
            .collect();
        Self { nodes, weights }
    }

    /// Degree-`p` basis on the Gauss–Lobatto points.
    pub fn gauss_lobatto(p: usize) -> Self {
        Self::new(gauss_lobatto_unit(p + 1))
    }

    pub fn degree(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Values of every basis function at `x`.
    pub fn values(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.nodes.len()];
        self.values_into(x, &mut out);
        out
    }

    pub fn values_into(&self, x: f64, out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let mut prod = self.weights[j];
            for (k, &xk) in self.nodes.iter().enumerate() {
                if k != j {
                    prod *= x - xk;
                }
            }
            *o = prod;
        }
    }

    /// Values and first derivatives at `x`.
    pub fn values_and_derivatives(&self, x: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.nodes.len();
        let mut v = vec![0.0; n];
        let mut d = vec![0.0; n];
        for j in 0..n {
            // forward accumulation of (P, P') for P = prod_{k != j} (x - x_k)
            let (mut p, mut dp) = (1.0, 0.0);
            for (k, &xk) in self.nodes.iter().enumerate() {
                if k != j {
                    dp = dp * (x - xk) + p;
                    p *= x - xk;
                }
            }
            v[j] = self.weights[j] * p;
            d[j] = self.weights[j] * dp;
        }
        (v, d)
    }
}

/// Tensor-product index of node `(i, j)` in a degree-`p` element.
#[inline]
pub fn tensor_index(p: usize, i: usize, j: usize) -> usize {
    i + (p + 1) * j
}
