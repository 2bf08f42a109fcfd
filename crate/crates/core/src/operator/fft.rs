use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::domain::UniformGrid;

/// Multi-dimensional FFT over a uniform grid (first axis fastest).
#[derive(Clone)]
pub struct GridFft {
    shape: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for GridFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridFft")
            .field("shape", &self.shape)
            .finish()
    }
}

impl GridFft {
    pub fn new(grid: &UniformGrid) -> Self {
        let mut planner = FftPlanner::new();
        let shape = grid.points().to_vec();
        let forward = shape.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = shape.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        Self {
            shape,
            forward,
            inverse,
        }
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn transform(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        debug_assert_eq!(data.len(), self.len());
        for (axis, plan) in plans.iter().enumerate() {
            let n = self.shape[axis];
            let inner: usize = self.shape[..axis].iter().product();
            if inner == 1 {
                plan.process(data);
                continue;
            }
            let outer: usize = self.shape[axis + 1..].iter().product();
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
            for o in 0..outer {
                let base = o * inner * n;
                for i in 0..inner {
                    for (k, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + i + k * inner];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (k, val) in line.iter().enumerate() {
                        data[base + i + k * inner] = *val;
                    }
                }
            }
        }
    }

    /// Unnormalized forward transform.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse transform including the `1/N` normalization.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / self.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// Applies a real Fourier multiplier in place.
    pub fn multiply(&self, data: &mut [Complex64], symbol: &[f64]) {
        self.forward(data);
        for (v, s) in data.iter_mut().zip(symbol) {
            *v *= *s;
        }
        self.inverse(data);
    }

    /// Applies a real, even Fourier multiplier to two real vectors at once by
    /// packing them as real and imaginary parts.
    pub fn multiply_real_pair(
        &self,
        a: &[f64],
        b: Option<&[f64]>,
        symbol: &[f64],
    ) -> (Vec<f64>, Option<Vec<f64>>) {
        let mut buf: Vec<Complex64> = match b {
            Some(b) => a
                .iter()
                .zip(b)
                .map(|(&x, &y)| Complex64::new(x, y))
                .collect(),
            None => a.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        };
        self.multiply(&mut buf, symbol);
        let ra = buf.iter().map(|c| c.re).collect();
        let rb = b.map(|_| buf.iter().map(|c| c.im).collect());
        (ra, rb)
    }
}
