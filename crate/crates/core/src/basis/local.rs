use super::{basis_from_element_samples, DGBasis};
use crate::domain::{apply_tensor, fourier_matrix, Partition, UniformGrid};
use crate::eig::{lowest_eigenpairs, LobpcgConfig};
use crate::operator::Hamiltonian;
use crate::{Error, Result};
use nalgebra::DMatrix;
use rayon::prelude::*;

/// Singular values below this fraction of the largest are dropped when
/// restricting local eigenfunctions.
pub const LOCAL_DROP: f64 = 1e-12;

/// Buffered box around one element, with its own periodic grid at the
/// global grid spacing.
#[derive(Debug, Clone)]
pub struct ExtendedElement {
    pub element: usize,
    /// Global coordinate of the lower corner.
    pub origin: Vec<f64>,
    /// First global grid index per dimension.
    pub start: Vec<usize>,
    pub grid: UniformGrid,
}

impl ExtendedElement {
    /// `buffer` elements are added on each side per dimension, capped at the
    /// whole domain.
    pub fn new(
        grid: &UniformGrid,
        partition: &Partition,
        element: usize,
        buffer: usize,
    ) -> Result<Self> {
        let dim = grid.dim();
        let idx = partition.element_index(element);
        let mut origin = Vec::with_capacity(dim);
        let mut start = Vec::with_capacity(dim);
        let mut lengths = Vec::with_capacity(dim);
        let mut points = Vec::with_capacity(dim);
        for d in 0..dim {
            let m = partition.elements_per_dim()[d];
            let n = grid.points()[d];
            if !n.is_multiple_of(m) {
                return Err(Error::Config(format!(
                    "{n} grid points do not split evenly into {m} elements"
                )));
            }
            let per = n / m;
            let span = (2 * buffer + 1).min(m);
            let first = if span == m {
                0
            } else {
                (idx[d] + m - buffer % m) % m
            };
            origin.push(first as f64 * partition.element_size(d));
            start.push(first * per);
            lengths.push(span as f64 * partition.element_size(d));
            points.push(span * per);
        }
        Ok(Self {
            element,
            origin,
            start,
            grid: UniformGrid::new(lengths, points)?,
        })
    }

    /// Samples a global grid function on the extended grid.
    pub fn restrict(&self, global: &UniformGrid, values: &[f64]) -> Vec<f64> {
        let dim = global.dim();
        (0..self.grid.len())
            .map(|flat| {
                let local = self.grid.multi_index(flat);
                let mut idx = [0usize; 3];
                for d in 0..dim {
                    idx[d] = (self.start[d] + local[d]) % global.points()[d];
                }
                values[global.flat_index(&idx[..dim])]
            })
            .collect()
    }
}

/// Local eigenfunctions on an element's LGL nodes, ordered by eigenvalue.
#[derive(Debug, Clone)]
pub struct LocalSamples {
    pub element: usize,
    pub eigenvalues: Vec<f64>,
    /// `nodes × count`.
    pub values: DMatrix<f64>,
}

/// Solves the buffered local problem of every element for its lowest
/// `count` eigenpairs and samples the eigenfunctions on the element's LGL
/// nodes.
pub fn lcalb_local_functions(
    h: &Hamiltonian,
    partition: &Partition,
    count: usize,
    buffer: usize,
    cfg: &LobpcgConfig,
) -> Result<Vec<LocalSamples>> {
    if h.exchange().is_some() {
        return Err(Error::Unsupported(
            "local basis construction with a nonlocal potential".into(),
        ));
    }
    let grid = h.grid();
    (0..partition.num_elements())
        .into_par_iter()
        .map(|id| {
            local_functions(h, grid, partition, id, count, buffer, cfg).map_err(|e| {
                Error::Element {
                    element: id,
                    source: Box::new(e),
                }
            })
        })
        .collect()
}

fn local_functions(
    h: &Hamiltonian,
    grid: &UniformGrid,
    partition: &Partition,
    id: usize,
    count: usize,
    buffer: usize,
    cfg: &LobpcgConfig,
) -> Result<LocalSamples> {
    let ext = ExtendedElement::new(grid, partition, id, buffer)?;
    let v = ext.restrict(grid, h.potential());
    let local_h = Hamiltonian::new(ext.grid.clone(), h.kinetic(), v)?;
    let n = count.min(ext.grid.len());
    let eig = lowest_eigenpairs(&local_h, n, cfg)?;
    let el = partition.element(id);
    let mats: Vec<DMatrix<f64>> = (0..grid.dim())
        .map(|d| {
            let l = grid.lengths()[d];
            let targets: Vec<f64> = el.nodes[d]
                .iter()
                .map(|x| (x - ext.origin[d]).rem_euclid(l))
                .collect();
            fourier_matrix(ext.grid.points()[d], ext.grid.lengths()[d], &targets)
        })
        .collect();
    let mut values = DMatrix::zeros(el.num_nodes(), n);
    for j in 0..n {
        let (col, _) = apply_tensor(
            eig.eigenvectors.column(j).as_slice(),
            ext.grid.points(),
            &mats,
        );
        values.set_column(j, &nalgebra::DVector::from_vec(col));
    }
    Ok(LocalSamples {
        element: id,
        eigenvalues: eig.eigenvalues,
        values,
    })
}

/// LC-ALB from precomputed local eigenfunctions, using the lowest `count`.
pub fn lcalb_from_local(partition: &Partition, local: &[LocalSamples], count: usize) -> DGBasis {
    let samples: Vec<DMatrix<f64>> = local
        .iter()
        .map(|s| {
            s.values
                .columns(0, count.min(s.values.ncols()))
                .into_owned()
        })
        .collect();
    basis_from_element_samples(partition, &samples, count, LOCAL_DROP)
}

pub fn build_lcalb(
    h: &Hamiltonian,
    partition: &Partition,
    count: usize,
    buffer: usize,
    cfg: &LobpcgConfig,
) -> Result<DGBasis> {
    let local = lcalb_local_functions(h, partition, count, buffer, cfg)?;
    Ok(lcalb_from_local(partition, &local, count))
}
