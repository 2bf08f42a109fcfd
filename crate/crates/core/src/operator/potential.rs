use serde::{Deserialize, Serialize};

use crate::domain::{min_image, UniformGrid};
use crate::error::{Error, Result};

/// Sum of Gaussian wells `depth * exp(-r^2 / (2 sigma^2))` with periodic
/// minimum-image distance `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianWellSpec {
    pub centers: Vec<Vec<f64>>,
    pub depths: Vec<f64>,
    pub sigmas: Vec<f64>,
}

impl GaussianWellSpec {
    /// All wells share one depth and width.
    pub fn uniform(centers: Vec<Vec<f64>>, depth: f64, sigma: f64) -> Self {
        let n = centers.len();
        Self {
            centers,
            depths: vec![depth; n],
            sigmas: vec![sigma; n],
        }
    }

    pub fn validate(&self, lengths: &[f64]) -> Result<()> {
        let n = self.centers.len();
        if self.depths.len() != n || self.sigmas.len() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                got: self.depths.len().min(self.sigmas.len()),
            });
        }
        if self.sigmas.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::Domain("well widths must be positive".into()));
        }
        for c in &self.centers {
            if c.len() != lengths.len() {
                return Err(Error::SizeMismatch {
                    expected: lengths.len(),
                    got: c.len(),
                });
            }
            if c.iter()
                .zip(lengths)
                .any(|(&x, &l)| !(0.0..=l).contains(&x))
            {
                return Err(Error::Domain(format!("well center {c:?} outside the box")));
            }
        }
        Ok(())
    }

    pub fn eval(&self, lengths: &[f64], x: &[f64]) -> f64 {
        let dim = lengths.len();
        self.centers
            .iter()
            .zip(&self.depths)
            .zip(&self.sigmas)
            .map(|((c, &depth), &sigma)| {
                let r2: f64 = (0..dim)
                    .map(|d| min_image(x[d], c[d], lengths[d]).powi(2))
                    .sum();
                depth * (-r2 / (2.0 * sigma * sigma)).exp()
            })
            .sum()
    }

    /// Copies the wells `rep` times along every dimension of a box of
    /// `lengths`, producing a spec for the enlarged box.
    pub fn repeated(&self, lengths: &[f64], rep: usize) -> Self {
        let dim = lengths.len();
        let mut out = Self {
            centers: Vec::new(),
            depths: Vec::new(),
            sigmas: Vec::new(),
        };
        let copies = rep.pow(dim as u32);
        for t in 0..copies {
            let mut shift = vec![0.0; dim];
            let mut rem = t;
            for d in 0..dim {
                shift[d] = (rem % rep) as f64 * lengths[d];
                rem /= rep;
            }
            for ((c, &depth), &sigma) in self.centers.iter().zip(&self.depths).zip(&self.sigmas) {
                out.centers
                    .push(c.iter().zip(&shift).map(|(a, b)| a + b).collect());
                out.depths.push(depth);
                out.sigmas.push(sigma);
            }
        }
        out
    }
}

/// Samples the well potential on the grid.
pub fn build_gaussian_potential(spec: &GaussianWellSpec, grid: &UniformGrid) -> Result<Vec<f64>> {
    spec.validate(grid.lengths())?;
    let lengths = grid.lengths();
    Ok((0..grid.len())
        .map(|i| spec.eval(lengths, &grid.point(i)[..grid.dim()]))
        .collect())
}
