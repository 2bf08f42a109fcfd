//! Interior penalty discontinuous Galerkin discretization over adaptive
//! local bases.

mod assemble;
mod density;
mod penalty;

pub use assemble::{assemble_dg, discretize, DGMatrix, LglExchange};
pub use density::{functions_at_nodes, GridSampler};
pub use penalty::{estimate_penalty, PenaltyParams, DEFAULT_SAFETY};

use crate::basis::DGBasis;
use crate::domain::UniformGrid;
use crate::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};

#[cfg(test)]
mod tests;

#[derive(Debug, Clone)]
pub struct DGEigenSolution {
    pub eigenvalues: Vec<f64>,
    /// `N_K × n`, Euclidean-orthonormal columns.
    pub coefficients: DMatrix<f64>,
}

/// Lowest `n` eigenpairs of the DG matrix, ascending.
pub fn solve_dg_eig(a: &DGMatrix, n: usize) -> Result<DGEigenSolution> {
    solve_dense(&a.matrix, n)
}

pub(crate) fn solve_dense(a: &DMatrix<f64>, n: usize) -> Result<DGEigenSolution> {
    let dim = a.nrows();
    if n > dim {
        return Err(Error::SizeMismatch {
            expected: dim,
            got: n,
        });
    }
    let eig = SymmetricEigen::new((a + a.transpose()) * 0.5);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let coefficients = DMatrix::from_fn(dim, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(DGEigenSolution {
        eigenvalues: order[..n].iter().map(|&i| eig.eigenvalues[i]).collect(),
        coefficients,
    })
}

/// Projector `Γ = C Cᵀ` in the DG coefficient space, kept in factored form.
#[derive(Debug, Clone)]
pub struct ProjectorDG {
    pub factor: DMatrix<f64>,
}

impl ProjectorDG {
    pub fn from_solution(sol: &DGEigenSolution) -> Self {
        Self {
            factor: sol.coefficients.clone(),
        }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        &self.factor * self.factor.transpose()
    }

    pub fn trace(&self) -> f64 {
        self.factor.norm_squared()
    }

    /// `‖Γ² − Γ‖_F`.
    pub fn idempotency_defect(&self) -> f64 {
        let g = self.matrix();
        (&g * &g - &g).norm()
    }
}

/// Occupied orbitals of a DG solution on the uniform grid, `grid × n`.
pub fn orbitals_on_grid(
    sol: &DGEigenSolution,
    basis: &DGBasis,
    grid: &UniformGrid,
    n: usize,
) -> Result<DMatrix<f64>> {
    if n > sol.coefficients.ncols() {
        return Err(Error::SizeMismatch {
            expected: sol.coefficients.ncols(),
            got: n,
        });
    }
    let sampler = GridSampler::new(grid, &basis.partition)?;
    Ok(sampler.functions(basis, &sol.coefficients.columns(0, n).into_owned()))
}

/// `ρ(x) = Σ_{i<n} |ψ_i(x)|²` on the uniform grid.
pub fn reconstruct_density(
    sol: &DGEigenSolution,
    basis: &DGBasis,
    grid: &UniformGrid,
    n: usize,
) -> Result<Vec<f64>> {
    let psi = orbitals_on_grid(sol, basis, grid, n)?;
    Ok(psi.row_iter().map(|r| r.norm_squared()).collect())
}

/// Projector kernel `P(x, x') = Σ_{i<n} ψ_i(x) ψ_i(x')` on the grid (1D).
pub fn projector_kernel(
    sol: &DGEigenSolution,
    basis: &DGBasis,
    grid: &UniformGrid,
    n: usize,
) -> Result<DMatrix<f64>> {
    if grid.dim() != 1 {
        return Err(Error::Unsupported(
            "projector kernel assembly is 1D only".into(),
        ));
    }
    let psi = orbitals_on_grid(sol, basis, grid, n)?;
    Ok(&psi * psi.transpose())
}

/// `Σ|ε_i − ε_i^ref| / Σ|ε_i^ref|`.
pub fn relative_eigenvalue_error(computed: &[f64], reference: &[f64]) -> Result<f64> {
    if computed.len() != reference.len() {
        return Err(Error::SizeMismatch {
            expected: reference.len(),
            got: computed.len(),
        });
    }
    let den: f64 = reference.iter().map(|x| x.abs()).sum();
    if den == 0.0 || !den.is_finite() {
        return Err(Error::MetricUndefined(format!(
            "reference eigenvalue sum {den}"
        )));
    }
    Ok(computed
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / den)
}

/// `ρ` at every element's LGL nodes, element-major.
pub fn density_at_nodes(sol: &DGEigenSolution, basis: &DGBasis, n: usize) -> Result<Vec<f64>> {
    if n > sol.coefficients.ncols() {
        return Err(Error::SizeMismatch {
            expected: sol.coefficients.ncols(),
            got: n,
        });
    }
    let psi = functions_at_nodes(basis, &sol.coefficients.columns(0, n).into_owned());
    Ok(psi.row_iter().map(|r| r.norm_squared()).collect())
}

/// `∫ρ` by element LGL quadrature.
pub fn density_integral(sol: &DGEigenSolution, basis: &DGBasis, n: usize) -> Result<f64> {
    let rho = density_at_nodes(sol, basis, n)?;
    let w: Vec<f64> = basis
        .partition
        .elements()
        .iter()
        .flat_map(|e| e.tensor_weights())
        .collect();
    Ok(rho.iter().zip(&w).map(|(r, w)| r * w).sum())
}
