//! Periodic grids, element partitions, LGL quadrature and the interpolation
//! operators between the uniform and LGL representations.

mod grid;
mod interp;
mod lgl;
mod partition;

pub use grid::{min_image, wrap, UniformGrid};
pub use interp::{
    apply_along_axis, apply_tensor, barycentric_interpolate, element_gradient, fourier_interpolate,
    fourier_matrix, lagrange_matrix, periodic_cardinal, GridToLgl,
};
pub use lgl::{barycentric_weights, differentiation_matrix, lagrange_row, LglRule};
pub use partition::{Element, Partition};
