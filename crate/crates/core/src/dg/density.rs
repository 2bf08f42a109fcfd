use crate::basis::DGBasis;
use crate::domain::{apply_tensor, lagrange_matrix, Partition, UniformGrid};
use crate::{Error, Result};
use nalgebra::DMatrix;
use rayon::prelude::*;

/// Maps element nodal values to uniform grid samples. Grid points on element
/// boundaries receive the average of the adjacent elements.
#[derive(Debug, Clone)]
pub struct GridSampler {
    grid_len: usize,
    /// Per element: grid flat indices (first dimension fastest) and the 1D
    /// Lagrange matrices from element nodes to those points.
    entries: Vec<(Vec<usize>, Vec<DMatrix<f64>>, Vec<usize>)>,
    inv_mult: Vec<f64>,
    nodes_per_element: usize,
}

impl GridSampler {
    pub fn new(grid: &UniformGrid, partition: &Partition) -> Result<Self> {
        if grid.dim() != partition.dim() {
            return Err(Error::SizeMismatch {
                expected: grid.dim(),
                got: partition.dim(),
            });
        }
        let dim = grid.dim();
        let bary = partition.rule().barycentric().to_vec();
        let mut mult = vec![0usize; grid.len()];
        let mut entries = Vec::with_capacity(partition.num_elements());
        for el in partition.elements() {
            let mut idx_per_dim = Vec::with_capacity(dim);
            let mut mats = Vec::with_capacity(dim);
            for d in 0..dim {
                let l = grid.lengths()[d];
                let tol = 1e-10 * partition.element_size(d);
                let mut idx = Vec::new();
                let mut xs = Vec::new();
                for i in 0..grid.points()[d] {
                    let x = grid.coord(d, i);
                    for cand in [x, x + l] {
                        if cand >= el.lower[d] - tol && cand <= el.upper[d] + tol {
                            idx.push(i);
                            xs.push(cand.clamp(el.lower[d], el.upper[d]));
                            break;
                        }
                    }
                }
                mats.push(lagrange_matrix(&el.nodes[d], &bary, &xs));
                idx_per_dim.push(idx);
            }
            let shape: Vec<usize> = idx_per_dim.iter().map(|v| v.len()).collect();
            let count: usize = shape.iter().product();
            let flat: Vec<usize> = (0..count)
                .map(|mut f| {
                    let mut gidx = [0usize; 3];
                    for d in 0..dim {
                        gidx[d] = idx_per_dim[d][f % shape[d]];
                        f /= shape[d];
                    }
                    grid.flat_index(&gidx[..dim])
                })
                .collect();
            for &g in &flat {
                mult[g] += 1;
            }
            entries.push((flat, mats, vec![partition.lgl_points(); dim]));
        }
        let inv_mult = mult
            .iter()
            .map(|&m| if m == 0 { 0.0 } else { 1.0 / m as f64 })
            .collect();
        Ok(Self {
            grid_len: grid.len(),
            entries,
            inv_mult,
            nodes_per_element: partition.nodes_per_element(),
        })
    }

    /// Samples of `Σ_κ Φ_κ C_κ` on the grid; `blocks[κ]` is `nodes × m`.
    pub fn sample(&self, blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
        let m = blocks.first().map(|b| b.ncols()).unwrap_or(0);
        let parts: Vec<(usize, DMatrix<f64>)> = self
            .entries
            .par_iter()
            .zip(blocks.par_iter())
            .enumerate()
            .map(|(k, ((flat, mats, shape), block))| {
                let mut out = DMatrix::zeros(flat.len(), block.ncols());
                for j in 0..block.ncols() {
                    let (vals, _) = apply_tensor(block.column(j).as_slice(), shape, mats);
                    out.set_column(j, &nalgebra::DVector::from_vec(vals));
                }
                (k, out)
            })
            .collect();
        let mut out = DMatrix::zeros(self.grid_len, m);
        for (k, part) in parts {
            let flat = &self.entries[k].0;
            for (r, &g) in flat.iter().enumerate() {
                for j in 0..part.ncols() {
                    out[(g, j)] += part[(r, j)] * self.inv_mult[g];
                }
            }
        }
        out
    }

    /// Every basis function on the grid, zero outside its element:
    /// `grid × N_K`.
    pub fn basis_on_grid(&self, basis: &DGBasis) -> DMatrix<f64> {
        let total = basis.total();
        let offsets = basis.offsets();
        let blocks: Vec<DMatrix<f64>> = basis
            .locals
            .iter()
            .zip(&offsets)
            .map(|(b, &o)| {
                let mut full = DMatrix::zeros(self.nodes_per_element, total);
                full.columns_mut(o, b.count()).copy_from(&b.values);
                full
            })
            .collect();
        self.sample(&blocks)
    }

    /// Grid samples of DG functions given by coefficient columns `N_K × m`.
    pub fn functions(&self, basis: &DGBasis, coeffs: &DMatrix<f64>) -> DMatrix<f64> {
        let offsets = basis.offsets();
        let blocks: Vec<DMatrix<f64>> = basis
            .locals
            .iter()
            .zip(&offsets)
            .map(|(b, &o)| &b.values * coeffs.rows(o, b.count()))
            .collect();
        self.sample(&blocks)
    }
}

/// DG functions at every element's LGL nodes, element-major: `nodes_total × m`.
pub fn functions_at_nodes(basis: &DGBasis, coeffs: &DMatrix<f64>) -> DMatrix<f64> {
    let offsets = basis.offsets();
    let per = basis.partition.nodes_per_element();
    let mut out = DMatrix::zeros(per * basis.locals.len(), coeffs.ncols());
    for (k, (b, &o)) in basis.locals.iter().zip(&offsets).enumerate() {
        out.rows_mut(k * per, per)
            .copy_from(&(&b.values * coeffs.rows(o, b.count())));
    }
    out
}
