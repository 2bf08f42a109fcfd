use nalgebra::DMatrix;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Legendre-Gauss-Lobatto rule of order `p` on `[-1, 1]`: `p + 1` nodes
/// including both endpoints, exact for polynomials of degree `2p - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LglRule {
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    bary: Vec<f64>,
}

impl LglRule {
    pub fn new(order: usize) -> Result<Self> {
        if order < 1 {
            return Err(Error::InvalidOrder(order));
        }
        let p = order;
        let n = p + 1;
        // Chebyshev-Lobatto starting guess, descending.
        let mut x: Vec<f64> = (0..n).map(|j| (PI * j as f64 / p as f64).cos()).collect();
        let mut leg = vec![vec![0.0; n]; n];
        for _ in 0..100 {
            for (i, &xi) in x.iter().enumerate() {
                leg[i][0] = 1.0;
                if p >= 1 {
                    leg[i][1] = xi;
                }
                for k in 2..=p {
                    let kf = k as f64;
                    leg[i][k] =
                        ((2.0 * kf - 1.0) * xi * leg[i][k - 1] - (kf - 1.0) * leg[i][k - 2]) / kf;
                }
            }
            let mut delta: f64 = 0.0;
            for i in 0..n {
                let step = (x[i] * leg[i][p] - leg[i][p - 1]) / (n as f64 * leg[i][p]);
                x[i] -= step;
                delta = delta.max(step.abs());
            }
            if delta < 1e-14 {
                break;
            }
        }
        for (i, &xi) in x.iter().enumerate() {
            leg[i][0] = 1.0;
            leg[i][1] = xi;
            for k in 2..=p {
                let kf = k as f64;
                leg[i][k] =
                    ((2.0 * kf - 1.0) * xi * leg[i][k - 1] - (kf - 1.0) * leg[i][k - 2]) / kf;
            }
        }
        let pf = p as f64;
        let mut weights: Vec<f64> = (0..n)
            .map(|i| 2.0 / (pf * (pf + 1.0) * leg[i][p].powi(2)))
            .collect();
        x.reverse();
        weights.reverse();
        // Enforce exact symmetry about the origin.
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let xs = 0.5 * (x[j] - x[i]);
            x[i] = -xs;
            x[j] = xs;
            let ws = 0.5 * (weights[i] + weights[j]);
            weights[i] = ws;
            weights[j] = ws;
        }
        if n % 2 == 1 {
            x[n / 2] = 0.0;
        }
        x[0] = -1.0;
        x[n - 1] = 1.0;
        let bary = barycentric_weights(&x);
        Ok(Self {
            order,
            nodes: x,
            weights,
            bary,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn barycentric(&self) -> &[f64] {
        &self.bary
    }

    /// Spectral differentiation matrix of the Lagrange interpolant on `[-1, 1]`.
    pub fn differentiation_matrix(&self) -> DMatrix<f64> {
        differentiation_matrix(&self.nodes, &self.bary)
    }

    /// Applies the differentiation matrix to nodal values on `[-1, 1]`.
    pub fn differentiate(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.len() {
            return Err(Error::SizeMismatch {
                expected: self.len(),
                got: values.len(),
            });
        }
        let d = self.differentiation_matrix();
        Ok((0..self.len())
            .map(|i| (0..self.len()).map(|j| d[(i, j)] * values[j]).sum())
            .collect())
    }
}

/// Barycentric weights `1 / prod_{k != j} (x_j - x_k)`, normalized to unit max.
pub fn barycentric_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w: Vec<f64> = (0..n)
        .map(|j| {
            let mut prod = 1.0;
            for k in 0..n {
                if k != j {
                    // scale by 2 to keep the product away from underflow for large n
                    prod *= 2.0 * (x[j] - x[k]);
                }
            }
            1.0 / prod
        })
        .collect();
    let m = w.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    for v in &mut w {
        *v /= m;
    }
    w
}

pub fn differentiation_matrix(x: &[f64], bary: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = bary[j] / bary[i] / (x[i] - x[j]);
                d[(i, j)] = v;
                diag -= v;
            }
        }
        d[(i, i)] = diag;
    }
    d
}

/// Row of Lagrange basis values `l_j(t)` at `t` via the barycentric formula.
pub fn lagrange_row(x: &[f64], bary: &[f64], t: f64) -> Vec<f64> {
    if let Some(hit) = x.iter().position(|&xj| xj == t) {
        let mut row = vec![0.0; x.len()];
        row[hit] = 1.0;
        return row;
    }
    let terms: Vec<f64> = x.iter().zip(bary).map(|(&xj, &wj)| wj / (t - xj)).collect();
    let denom: f64 = terms.iter().sum();
    terms.into_iter().map(|v| v / denom).collect()
}
