use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use std::sync::Arc;

use crate::domain::UniformGrid;
use crate::error::{Error, Result};
use crate::operator::fft::GridFft;
use crate::operator::potential::GaussianWellSpec;

/// Nonlocal exchange term `-alpha_x * int K(x,y) P(x,y) v(y) dy` on a 1D grid,
/// stored as the dense quadrature matrix.
#[derive(Debug, Clone)]
pub struct NonlocalExchange {
    kernel: DMatrix<f64>,
    projector: DMatrix<f64>,
    alpha_x: f64,
    matrix: DMatrix<f64>,
}

impl NonlocalExchange {
    pub fn new(
        grid: &UniformGrid,
        kernel: DMatrix<f64>,
        projector: DMatrix<f64>,
        alpha_x: f64,
    ) -> Result<Self> {
        if grid.dim() != 1 {
            return Err(Error::Unsupported(
                "nonlocal exchange is implemented in 1D only".into(),
            ));
        }
        let n = grid.len();
        for m in [&kernel, &projector] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::SizeMismatch {
                    expected: n,
                    got: m.nrows(),
                });
            }
        }
        if alpha_x < 0.0 {
            return Err(Error::Domain(
                "exchange fraction must be non-negative".into(),
            ));
        }
        let h = grid.cell_volume();
        let matrix = kernel.component_mul(&projector) * (-alpha_x * h);
        Ok(Self {
            kernel,
            projector,
            alpha_x,
            matrix,
        })
    }

    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    pub fn projector(&self) -> &DMatrix<f64> {
        &self.projector
    }

    pub fn alpha_x(&self) -> f64 {
        self.alpha_x
    }

    /// Dense quadrature matrix `-alpha_x K .* P * h`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

/// `H = -c_k Laplacian + V (+ nonlocal exchange)` on a uniform periodic grid,
/// applied matrix-free with a spectral Laplacian.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    grid: UniformGrid,
    kinetic: f64,
    potential: Vec<f64>,
    exchange: Option<NonlocalExchange>,
    analytic: Option<GaussianWellSpec>,
    fft: Arc<GridFft>,
    k2: Arc<Vec<f64>>,
}

impl Hamiltonian {
    pub fn new(grid: UniformGrid, kinetic: f64, potential: Vec<f64>) -> Result<Self> {
        if !(kinetic > 0.0) {
            return Err(Error::Domain("kinetic coefficient must be positive".into()));
        }
        if potential.len() != grid.len() {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                got: potential.len(),
            });
        }
        if potential.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("potential must be finite".into()));
        }
        let fft = Arc::new(GridFft::new(&grid));
        let k2 = Arc::new(grid.k_squared());
        Ok(Self {
            grid,
            kinetic,
            potential,
            exchange: None,
            analytic: None,
            fft,
            k2,
        })
    }

    /// Records the closed form of the local potential so that quadrature on
    /// other point sets can evaluate it exactly.
    pub fn with_analytic_potential(mut self, wells: GaussianWellSpec) -> Self {
        self.analytic = Some(wells);
        self
    }

    pub fn with_exchange(mut self, exchange: NonlocalExchange) -> Result<Self> {
        if exchange.matrix.nrows() != self.grid.len() {
            return Err(Error::SizeMismatch {
                expected: self.grid.len(),
                got: exchange.matrix.nrows(),
            });
        }
        self.exchange = Some(exchange);
        Ok(self)
    }

    /// Same operator with a different local potential (shares FFT plans).
    pub fn with_potential(&self, potential: Vec<f64>) -> Result<Self> {
        if potential.len() != self.grid.len() {
            return Err(Error::SizeMismatch {
                expected: self.grid.len(),
                got: potential.len(),
            });
        }
        let mut h = self.clone();
        h.potential = potential;
        h.analytic = None;
        Ok(h)
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn kinetic(&self) -> f64 {
        self.kinetic
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn analytic_potential(&self) -> Option<&GaussianWellSpec> {
        self.analytic.as_ref()
    }

    pub fn exchange(&self) -> Option<&NonlocalExchange> {
        self.exchange.as_ref()
    }

    pub fn fft(&self) -> &GridFft {
        &self.fft
    }

    pub fn k_squared(&self) -> &[f64] {
        &self.k2
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Crude upper bound on the spectral radius.
    pub fn norm_estimate(&self) -> f64 {
        let vmax = self.potential.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let xmax = self
            .exchange
            .as_ref()
            .map(|x| {
                x.matrix
                    .row_iter()
                    .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
                    .fold(0.0, f64::max)
            })
            .unwrap_or(0.0);
        self.kinetic * self.grid.max_k_squared() + vmax + xmax
    }

    fn kinetic_symbol(&self) -> Vec<f64> {
        self.k2.iter().map(|k| self.kinetic * k).collect()
    }

    /// `H v` for complex samples.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.len() {
            return Err(Error::SizeMismatch {
                expected: self.len(),
                got: v.len(),
            });
        }
        let mut out = v.to_vec();
        self.fft.forward(&mut out);
        for (o, k) in out.iter_mut().zip(self.k2.iter()) {
            *o *= self.kinetic * k;
        }
        self.fft.inverse(&mut out);
        for ((o, x), p) in out.iter_mut().zip(v).zip(&self.potential) {
            *o += x * p;
        }
        if let Some(ex) = &self.exchange {
            let n = self.len();
            for i in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    acc += v[j] * ex.matrix[(i, j)];
                }
                out[i] += acc;
            }
        }
        Ok(out)
    }

    /// `H v` for real samples.
    pub fn apply_real(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.len() {
            return Err(Error::SizeMismatch {
                expected: self.len(),
                got: v.len(),
            });
        }
        let (lap, _) = self.fft.multiply_real_pair(v, None, &self.kinetic_symbol());
        Ok(self.finish_real(v, lap))
    }

    fn finish_real(&self, v: &[f64], mut out: Vec<f64>) -> Vec<f64> {
        for ((o, x), p) in out.iter_mut().zip(v).zip(&self.potential) {
            *o += x * p;
        }
        if let Some(ex) = &self.exchange {
            let xv = &ex.matrix * nalgebra::DVector::from_column_slice(v);
            for (o, a) in out.iter_mut().zip(xv.iter()) {
                *o += a;
            }
        }
        out
    }

    /// Applies `H` to every column of a real block, two columns per FFT.
    pub fn apply_block(&self, block: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(block.nrows(), self.len());
        let symbol = self.kinetic_symbol();
        let ncols = block.ncols();
        let pairs: Vec<(usize, Option<usize>)> = (0..ncols)
            .step_by(2)
            .map(|j| (j, if j + 1 < ncols { Some(j + 1) } else { None }))
            .collect();
        let results: Vec<(usize, Vec<f64>, Option<(usize, Vec<f64>)>)> = pairs
            .par_iter()
            .map(|&(a, b)| {
                let ca = block.column(a);
                let va = ca.as_slice();
                let vb = b.map(|j| block.column(j).as_slice().to_vec());
                let (la, lb) = self.fft.multiply_real_pair(va, vb.as_deref(), &symbol);
                let ra = self.finish_real(va, la);
                let rb = b
                    .zip(lb)
                    .map(|(j, l)| (j, self.finish_real(vb.as_ref().unwrap(), l)));
                (a, ra, rb)
            })
            .collect();
        let mut out = DMatrix::zeros(block.nrows(), ncols);
        for (a, ra, rb) in results {
            out.column_mut(a).copy_from_slice(&ra);
            if let Some((b, v)) = rb {
                out.column_mut(b).copy_from_slice(&v);
            }
        }
        out
    }

    /// Column-by-column dense matrix of `H` (real).
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let eye = DMatrix::<f64>::identity(n, n);
        self.apply_block(&eye)
    }
}

/// `(-c_k Laplacian - sigma)^{-1} v` via division in Fourier space.
pub fn apply_shifted_laplacian_inverse(
    grid: &UniformGrid,
    kinetic: f64,
    shift: Complex64,
    v: &[Complex64],
) -> Result<Vec<Complex64>> {
    let pre = ShiftedLaplacian::new(grid, kinetic, shift)?;
    pre.apply(v)
}

/// Reusable shifted-Laplacian inverse for one shift.
#[derive(Debug, Clone)]
pub struct ShiftedLaplacian {
    fft: Arc<GridFft>,
    inv_symbol: Vec<Complex64>,
    real_symbol: Option<Vec<f64>>,
}

impl ShiftedLaplacian {
    pub fn new(grid: &UniformGrid, kinetic: f64, shift: Complex64) -> Result<Self> {
        Self::with_fft(
            Arc::new(GridFft::new(grid)),
            &grid.k_squared(),
            kinetic,
            shift,
        )
    }

    /// Builds from an existing Hamiltonian's FFT plans.
    pub fn for_hamiltonian(h: &Hamiltonian, shift: Complex64) -> Result<Self> {
        Self::with_fft(h.fft.clone(), &h.k2, h.kinetic, shift)
    }

    fn with_fft(fft: Arc<GridFft>, k2: &[f64], kinetic: f64, shift: Complex64) -> Result<Self> {
        let mut inv_symbol = Vec::with_capacity(k2.len());
        for &k in k2 {
            let d = Complex64::new(kinetic * k, 0.0) - shift;
            if d.norm() <= 1e-14 * (1.0 + kinetic * k) {
                return Err(Error::SingularShift(shift));
            }
            inv_symbol.push(d.inv());
        }
        let real_symbol = (shift.im == 0.0).then(|| inv_symbol.iter().map(|c| c.re).collect());
        Ok(Self {
            fft,
            inv_symbol,
            real_symbol,
        })
    }

    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.inv_symbol.len() {
            return Err(Error::SizeMismatch {
                expected: self.inv_symbol.len(),
                got: v.len(),
            });
        }
        let mut out = v.to_vec();
        self.apply_in_place(&mut out);
        Ok(out)
    }

    pub fn apply_in_place(&self, v: &mut [Complex64]) {
        self.fft.forward(v);
        for (x, s) in v.iter_mut().zip(&self.inv_symbol) {
            *x *= s;
        }
        self.fft.inverse(v);
    }

    /// Real shifts only: applies to a real block, two columns per FFT.
    pub fn apply_real_block(&self, block: &DMatrix<f64>) -> DMatrix<f64> {
        let symbol = self
            .real_symbol
            .as_ref()
            .expect("real block application needs a real shift");
        let ncols = block.ncols();
        let cols: Vec<(usize, Vec<f64>, Option<Vec<f64>>)> = (0..ncols)
            .step_by(2)
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&a| {
                let b = (a + 1 < ncols).then(|| block.column(a + 1).as_slice().to_vec());
                let (ra, rb) =
                    self.fft
                        .multiply_real_pair(block.column(a).as_slice(), b.as_deref(), symbol);
                (a, ra, rb)
            })
            .collect();
        let mut out = DMatrix::zeros(block.nrows(), ncols);
        for (a, ra, rb) in cols {
            out.column_mut(a).copy_from_slice(&ra);
            if let Some(v) = rb {
                out.column_mut(a + 1).copy_from_slice(&v);
            }
        }
        out
    }
}
