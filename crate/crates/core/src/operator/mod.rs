//! Matrix-free Hamiltonians on periodic grids, the shifted-Laplacian
//! preconditioner and Lanczos spectrum bounds.

mod fft;
mod hamiltonian;
mod lanczos;
mod potential;

pub use fft::GridFft;
pub use hamiltonian::{
    apply_shifted_laplacian_inverse, Hamiltonian, NonlocalExchange, ShiftedLaplacian,
};
pub use lanczos::{estimate_spectrum_bounds, lanczos_ritz_values, SpectrumBounds};
pub use potential::{build_gaussian_potential, GaussianWellSpec};
