use nalgebra::{DMatrix, DMatrixView};
use std::f64::consts::PI;

use crate::domain::grid::{wrap, UniformGrid};
use crate::domain::lgl::lagrange_row;
use crate::domain::partition::{Element, Partition};
use crate::error::{Error, Result};

/// Trigonometric cardinal function of an `n`-point periodic grid of length
/// `length`, evaluated at offset `x`. The Nyquist mode of even grids is split
/// symmetrically so real data interpolate to a real function.
pub fn periodic_cardinal(n: usize, length: f64, x: f64) -> f64 {
    let theta = 2.0 * PI * x / length;
    let half = 0.5 * theta;
    let s = half.sin();
    if s.abs() < 1e-13 {
        // theta is a multiple of 2 pi
        return 1.0;
    }
    let nf = n as f64;
    let num = (nf * half).sin();
    if n.is_multiple_of(2) {
        num * half.cos() / (s * nf)
    } else {
        num / (s * nf)
    }
}

/// Dense Fourier evaluation matrix (targets x grid points) for one dimension.
pub fn fourier_matrix(n: usize, length: f64, targets: &[f64]) -> DMatrix<f64> {
    let h = length / n as f64;
    DMatrix::from_fn(targets.len(), n, |t, m| {
        let x = targets[t] - m as f64 * h;
        periodic_cardinal(n, length, x)
    })
}

/// Applies `mat` (T x N_axis) along `axis` of data shaped `shape` (first axis
/// fastest). Returns the new data; `shape[axis]` becomes `mat.nrows()`.
pub fn apply_along_axis(
    data: &[f64],
    shape: &[usize],
    axis: usize,
    mat: &DMatrix<f64>,
) -> Vec<f64> {
    let n_axis = shape[axis];
    assert_eq!(mat.ncols(), n_axis);
    let inner: usize = shape[..axis].iter().product();
    let outer: usize = shape[axis + 1..].iter().product();
    let t = mat.nrows();
    if inner == 1 {
        let src = DMatrixView::from_slice(data, n_axis, outer);
        let out = mat * src;
        return out.as_slice().to_vec();
    }
    let mut out = vec![0.0; inner * t * outer];
    let mat_t = mat.transpose();
    for o in 0..outer {
        let block = DMatrixView::from_slice(
            &data[o * inner * n_axis..(o + 1) * inner * n_axis],
            inner,
            n_axis,
        );
        let res = block * &mat_t;
        out[o * inner * t..(o + 1) * inner * t].copy_from_slice(res.as_slice());
    }
    out
}

/// Tensor application of per-dimension matrices.
pub fn apply_tensor(
    data: &[f64],
    shape: &[usize],
    mats: &[DMatrix<f64>],
) -> (Vec<f64>, Vec<usize>) {
    let mut cur = data.to_vec();
    let mut cur_shape = shape.to_vec();
    for (axis, m) in mats.iter().enumerate() {
        cur = apply_along_axis(&cur, &cur_shape, axis, m);
        cur_shape[axis] = m.nrows();
    }
    (cur, cur_shape)
}

/// Evaluates the trigonometric interpolant of grid samples at arbitrary points.
/// Points outside the box are wrapped periodically.
pub fn fourier_interpolate(
    grid: &UniformGrid,
    values: &[f64],
    targets: &[[f64; 3]],
) -> Result<Vec<f64>> {
    if values.len() != grid.len() {
        return Err(Error::SizeMismatch {
            expected: grid.len(),
            got: values.len(),
        });
    }
    let dim = grid.dim();
    Ok(targets
        .iter()
        .map(|x| {
            let rows: Vec<Vec<f64>> = (0..dim)
                .map(|d| {
                    let n = grid.points()[d];
                    let l = grid.lengths()[d];
                    let xd = wrap(x[d], l);
                    (0..n)
                        .map(|m| periodic_cardinal(n, l, xd - grid.coord(d, m)))
                        .collect()
                })
                .collect();
            let mut cur = values.to_vec();
            let mut shape = grid.points().to_vec();
            for (axis, row) in rows.iter().enumerate() {
                let m = DMatrix::from_row_slice(1, row.len(), row);
                cur = apply_along_axis(&cur, &shape, axis, &m);
                shape[axis] = 1;
            }
            cur[0]
        })
        .collect())
}

/// Precomputed Fourier interpolation from a uniform grid onto every element's
/// tensor LGL nodes.
#[derive(Debug, Clone)]
pub struct GridToLgl {
    mats: Vec<DMatrix<f64>>,
    grid_shape: Vec<usize>,
    lgl_shape: Vec<usize>,
    points_per_dim: usize,
}

impl GridToLgl {
    pub fn new(grid: &UniformGrid, partition: &Partition) -> Result<Self> {
        if grid.dim() != partition.dim() {
            return Err(Error::SizeMismatch {
                expected: grid.dim(),
                got: partition.dim(),
            });
        }
        let mats: Vec<DMatrix<f64>> = (0..grid.dim())
            .map(|d| {
                fourier_matrix(
                    grid.points()[d],
                    grid.lengths()[d],
                    &partition.global_lgl_coords(d),
                )
            })
            .collect();
        let lgl_shape = mats.iter().map(|m| m.nrows()).collect();
        Ok(Self {
            mats,
            grid_shape: grid.points().to_vec(),
            lgl_shape,
            points_per_dim: partition.lgl_points(),
        })
    }

    /// Interpolates one grid function onto the global LGL tensor grid.
    pub fn global(&self, values: &[f64]) -> Vec<f64> {
        apply_tensor(values, &self.grid_shape, &self.mats).0
    }

    /// Extracts element values (element node order) from global LGL data.
    pub fn element_slice(&self, global: &[f64], element: &Element) -> Vec<f64> {
        let p = self.points_per_dim;
        let dim = self.lgl_shape.len();
        (0..element.num_nodes())
            .map(|flat| {
                let idx = element.node_multi_index(flat);
                let mut g = 0;
                for d in (0..dim).rev() {
                    g = g * self.lgl_shape[d] + element.index[d] * p + idx[d];
                }
                global[g]
            })
            .collect()
    }
}

/// Evaluates the tensor Lagrange interpolant of element nodal values at
/// targets inside the closed element.
pub fn barycentric_interpolate(
    element: &Element,
    bary: &[f64],
    values: &[f64],
    targets: &[[f64; 3]],
) -> Result<Vec<f64>> {
    if values.len() != element.num_nodes() {
        return Err(Error::SizeMismatch {
            expected: element.num_nodes(),
            got: values.len(),
        });
    }
    let dim = element.dim();
    let p = element.points_per_dim();
    let tol = 1e-12;
    targets
        .iter()
        .map(|x| {
            let mut rows = Vec::with_capacity(dim);
            for d in 0..dim {
                let (lo, hi) = (element.lower[d], element.upper[d]);
                let span = hi - lo;
                if x[d] < lo - tol * span || x[d] > hi + tol * span {
                    return Err(Error::OutOfElement {
                        dim: d,
                        coord: x[d],
                        lo,
                        hi,
                    });
                }
                rows.push(lagrange_row(&element.nodes[d], bary, x[d]));
            }
            let mut cur = values.to_vec();
            let mut shape = vec![p; dim];
            for (axis, row) in rows.iter().enumerate() {
                let m = DMatrix::from_row_slice(1, row.len(), row);
                cur = apply_along_axis(&cur, &shape, axis, &m);
                shape[axis] = 1;
            }
            Ok(cur[0])
        })
        .collect()
}

/// Lagrange interpolation matrix from element nodes (per dimension) to the
/// given 1D coordinates.
pub fn lagrange_matrix(nodes: &[f64], bary: &[f64], targets: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(targets.len(), nodes.len());
    for (i, &t) in targets.iter().enumerate() {
        let row = lagrange_row(nodes, bary, t);
        for (j, v) in row.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    m
}

/// Physical-space gradient of nodal values on an element: one vector per
/// dimension. `diff` is the reference differentiation matrix on `[-1, 1]`.
pub fn element_gradient(element: &Element, diff: &DMatrix<f64>, values: &[f64]) -> Vec<Vec<f64>> {
    let dim = element.dim();
    let p = element.points_per_dim();
    let shape = vec![p; dim];
    (0..dim)
        .map(|d| {
            let scale = 2.0 / element.size(d);
            let scaled = diff * scale;
            apply_along_axis(values, &shape, d, &scaled)
        })
        .collect()
}
