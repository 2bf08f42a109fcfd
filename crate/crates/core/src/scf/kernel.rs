use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::domain::UniformGrid;
use crate::operator::GridFft;
use crate::{Error, Result};

/// How the Yukawa interaction is placed on the periodic box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum KernelMode {
    /// Periodic Green's function of `-u'' + mu^2 u = 4 pi / eps0 delta`.
    #[default]
    Periodic,
    /// Free-space kernel `2 pi exp(-mu |d|) / (mu eps0)` at the minimum-image distance.
    FreeSpace,
}

/// `4 pi / (eps0 (k^2 + mu^2))`.
pub fn yukawa_symbol(k2: f64, mu: f64, eps0: f64) -> f64 {
    4.0 * PI / (eps0 * (k2 + mu * mu))
}

/// Translation-invariant Yukawa kernel on a 1D periodic grid.
#[derive(Debug, Clone)]
pub struct YukawaKernel {
    pub mu: f64,
    pub eps0: f64,
    pub length: f64,
    pub mode: KernelMode,
    /// `K(x_j, 0)` on the grid.
    row: Vec<f64>,
    /// Circulant eigenvalues of the quadrature matrix `K h`.
    symbol: Vec<f64>,
    fft: GridFft,
}

impl YukawaKernel {
    pub fn new(grid: &UniformGrid, mu: f64, eps0: f64, mode: KernelMode) -> Result<Self> {
        if grid.dim() != 1 {
            return Err(Error::Unsupported(
                "the Yukawa kernel is implemented in 1D only".into(),
            ));
        }
        if !(mu > 0.0) || !(eps0 > 0.0) {
            return Err(Error::Domain(format!(
                "need mu > 0 and eps0 > 0, got {mu}, {eps0}"
            )));
        }
        let length = grid.lengths()[0];
        let mut k = Self {
            mu,
            eps0,
            length,
            mode,
            row: Vec::new(),
            symbol: Vec::new(),
            fft: GridFft::new(grid),
        };
        let (n, h) = (grid.len(), grid.spacing(0));
        k.row = (0..n).map(|j| k.eval(j.min(n - j) as f64 * h)).collect();
        let mut buf: Vec<Complex64> = k
            .row
            .iter()
            .map(|&v| Complex64::new(v * grid.cell_volume(), 0.0))
            .collect();
        k.fft.forward(&mut buf);
        k.symbol = buf.iter().map(|c| c.re).collect();
        Ok(k)
    }

    /// Kernel value at separation `d`.
    pub fn eval(&self, d: f64) -> f64 {
        let l = self.length;
        let d = d.rem_euclid(l);
        let pref = 2.0 * PI / (self.mu * self.eps0);
        match self.mode {
            KernelMode::Periodic => {
                let ml = (-self.mu * l).exp();
                pref * ((-self.mu * d).exp() + (-self.mu * (l - d)).exp()) / (1.0 - ml)
            }
            KernelMode::FreeSpace => pref * (-self.mu * d.min(l - d)).exp(),
        }
    }

    pub fn row(&self) -> &[f64] {
        &self.row
    }

    /// Dense samples `K(x_i, x_j)`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.row.len();
        DMatrix::from_fn(n, n, |i, j| self.row[(i + n - j) % n])
    }

    /// `K(x_i, y_j)` for arbitrary point sets.
    pub fn at_points(&self, x: &[f64], y: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(x.len(), y.len(), |i, j| self.eval(x[i] - y[j]))
    }

    /// `int K(x, y) v(y) dy` by trapezoid quadrature, evaluated as a
    /// circulant product in Fourier space.
    pub fn convolve(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.row.len() {
            return Err(Error::SizeMismatch {
                expected: self.row.len(),
                got: v.len(),
            });
        }
        let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fft.forward(&mut buf);
        for (b, s) in buf.iter_mut().zip(&self.symbol) {
            *b *= s;
        }
        self.fft.inverse(&mut buf);
        Ok(buf.iter().map(|c| c.re).collect())
    }
}

/// Hartree-type potential `int K(x, y) q(y) dy` of a charge `q = m + rho`.
pub fn hartree_potential(charge: &[f64], kernel: &YukawaKernel) -> Result<Vec<f64>> {
    kernel.convolve(charge)
}

/// `E_X = -sum_ij P_ij K_ij P_ij h^2`.
pub fn exchange_energy(p: &DMatrix<f64>, k: &DMatrix<f64>, grid: &UniformGrid) -> Result<f64> {
    if p.shape() != k.shape() || p.nrows() != grid.len() {
        return Err(Error::SizeMismatch {
            expected: grid.len(),
            got: p.nrows(),
        });
    }
    let h = grid.cell_volume();
    Ok(-p.component_mul(k).dot(p) * h * h)
}
