use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Uniform periodic grid on the box `(0, L_1) x ... x (0, L_d)`.
///
/// Samples are stored with the first dimension varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    lengths: Vec<f64>,
    points: Vec<usize>,
}

impl UniformGrid {
    pub fn new(lengths: Vec<f64>, points: Vec<usize>) -> Result<Self> {
        if lengths.is_empty() || lengths.len() > 3 {
            return Err(Error::Domain(format!(
                "grid dimension {} not in 1..=3",
                lengths.len()
            )));
        }
        if lengths.len() != points.len() {
            return Err(Error::SizeMismatch {
                expected: lengths.len(),
                got: points.len(),
            });
        }
        if let Some(&n) = points.iter().find(|&&n| n < 2) {
            return Err(Error::Domain(format!(
                "grid needs at least 2 points per dimension, got {n}"
            )));
        }
        if lengths.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::Domain(
                "grid lengths must be positive and finite".into(),
            ));
        }
        Ok(Self { lengths, points })
    }

    /// Cubic grid with the same length and point count in every dimension.
    pub fn cube(dim: usize, length: f64, points: usize) -> Result<Self> {
        Self::new(vec![length; dim], vec![points; dim])
    }

    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    /// Total number of grid points `N_g`.
    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self, d: usize) -> f64 {
        self.lengths[d] / self.points[d] as f64
    }

    /// Volume element of the trapezoidal rule.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|d| self.spacing(d)).product()
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    pub fn coord(&self, d: usize, i: usize) -> f64 {
        i as f64 * self.spacing(d)
    }

    pub fn coords(&self, d: usize) -> Vec<f64> {
        (0..self.points[d]).map(|i| self.coord(d, i)).collect()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for d in (0..self.dim()).rev() {
            flat = flat * self.points[d] + idx[d];
        }
        flat
    }

    pub fn multi_index(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        for d in 0..self.dim() {
            idx[d] = flat % self.points[d];
            flat /= self.points[d];
        }
        idx
    }

    pub fn point(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let mut x = [0.0; 3];
        for d in 0..self.dim() {
            x[d] = self.coord(d, idx[d]);
        }
        x
    }

    /// Angular wavenumbers `2 pi m / L` in FFT order. For even `N` the Nyquist
    /// entry carries `+N/2`.
    pub fn wavenumbers(&self, d: usize) -> Vec<f64> {
        let n = self.points[d];
        let scale = 2.0 * PI / self.lengths[d];
        (0..n)
            .map(|m| {
                let signed = if m <= n / 2 {
                    m as f64
                } else {
                    m as f64 - n as f64
                };
                scale * signed
            })
            .collect()
    }

    /// `|k|^2` for every Fourier mode, laid out like the grid samples.
    pub fn k_squared(&self) -> Vec<f64> {
        let ks: Vec<Vec<f64>> = (0..self.dim()).map(|d| self.wavenumbers(d)).collect();
        (0..self.len())
            .map(|flat| {
                let idx = self.multi_index(flat);
                (0..self.dim()).map(|d| ks[d][idx[d]].powi(2)).sum()
            })
            .collect()
    }

    /// Largest `|k|^2` on the grid.
    pub fn max_k_squared(&self) -> f64 {
        (0..self.dim())
            .map(|d| (PI * self.points[d] as f64 / self.lengths[d]).powi(2))
            .sum()
    }

    /// Grid inner product `sum conj(u) v * dV`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() * self.cell_volume()
    }
}

/// Wraps a coordinate into `[0, L)`.
pub fn wrap(x: f64, length: f64) -> f64 {
    let r = x.rem_euclid(length);
    if r >= length {
        0.0
    } else {
        r
    }
}

/// Minimum-image signed separation `x - y` on a periodic interval.
pub fn min_image(x: f64, y: f64, length: f64) -> f64 {
    let d = (x - y).rem_euclid(length);
    if d > 0.5 * length {
        d - length
    } else {
        d
    }
}
