use super::density::GridSampler;
use super::penalty::{penalty_from_data, rows, weighted_product, ElementData, PenaltyParams};
use crate::basis::DGBasis;
use crate::domain::{GridToLgl, Partition};
use crate::operator::Hamiltonian;
use crate::{Error, Result};
use nalgebra::DMatrix;
use rayon::prelude::*;

/// Dense DG Hamiltonian with its block layout.
#[derive(Debug, Clone)]
pub struct DGMatrix {
    pub matrix: DMatrix<f64>,
    pub offsets: Vec<usize>,
    pub counts: Vec<usize>,
    pub kinetic: f64,
}

impl DGMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn block(&self, a: usize, b: usize) -> DMatrix<f64> {
        self.matrix
            .view(
                (self.offsets[a], self.offsets[b]),
                (self.counts[a], self.counts[b]),
            )
            .into_owned()
    }
}

/// Nonlocal kernel sampled on pairs of element LGL nodes, element-major
/// (all nodes of element 0, then element 1, ...). Quadrature weights are
/// not included.
#[derive(Debug, Clone)]
pub struct LglExchange {
    pub matrix: DMatrix<f64>,
}

/// Local potential at every element's LGL nodes.
fn potential_at_nodes(h: &Hamiltonian, partition: &Partition) -> Result<Vec<Vec<f64>>> {
    let elements = partition.elements();
    if let Some(spec) = h.analytic_potential() {
        let lengths = h.grid().lengths();
        return Ok(elements
            .iter()
            .map(|el| {
                (0..el.num_nodes())
                    .map(|i| spec.eval(lengths, &el.node(i)[..el.dim()]))
                    .collect()
            })
            .collect());
    }
    let interp = GridToLgl::new(h.grid(), partition)?;
    let global = interp.global(h.potential());
    Ok(elements
        .iter()
        .map(|el| interp.element_slice(&global, el))
        .collect())
}

/// Estimates the penalties and assembles the DG matrix in one pass over the
/// element data.
pub fn discretize(
    h: &Hamiltonian,
    basis: &DGBasis,
    safety: f64,
    exchange: Option<&LglExchange>,
) -> Result<(DGMatrix, PenaltyParams)> {
    let data = element_data(basis);
    let elements = basis.partition.elements();
    let gamma = elements
        .par_iter()
        .zip(data.par_iter())
        .map(|(el, d)| penalty_from_data(el, d, h.kinetic(), safety))
        .collect::<Result<Vec<f64>>>()?;
    let penalties = PenaltyParams { gamma };
    let m = assemble_from_data(h, basis, &data, &penalties, exchange)?;
    Ok((m, penalties))
}

pub fn assemble_dg(
    h: &Hamiltonian,
    basis: &DGBasis,
    penalties: &PenaltyParams,
    exchange: Option<&LglExchange>,
) -> Result<DGMatrix> {
    let data = element_data(basis);
    assemble_from_data(h, basis, &data, penalties, exchange)
}

fn element_data(basis: &DGBasis) -> Vec<ElementData> {
    let diff = basis.partition.rule().differentiation_matrix();
    basis
        .partition
        .elements()
        .par_iter()
        .zip(basis.locals.par_iter())
        .map(|(el, b)| ElementData::new(el, &diff, b))
        .collect()
}

fn assemble_from_data(
    h: &Hamiltonian,
    basis: &DGBasis,
    data: &[ElementData],
    penalties: &PenaltyParams,
    exchange: Option<&LglExchange>,
) -> Result<DGMatrix> {
    let partition = &basis.partition;
    if h.grid().dim() != partition.dim() {
        return Err(Error::SizeMismatch {
            expected: h.grid().dim(),
            got: partition.dim(),
        });
    }
    if penalties.gamma.len() != partition.num_elements() {
        return Err(Error::SizeMismatch {
            expected: partition.num_elements(),
            got: penalties.gamma.len(),
        });
    }
    let ck = h.kinetic();
    let offsets = basis.offsets();
    let counts: Vec<usize> = basis.locals.iter().map(|b| b.count()).collect();
    let total = basis.total();
    let elements = partition.elements();
    let vnodes = potential_at_nodes(h, partition)?;

    let volume: Vec<DMatrix<f64>> = elements
        .par_iter()
        .enumerate()
        .map(|(k, _)| {
            let d = &data[k];
            let mut vphi = d.values.clone();
            for (i, v) in vnodes[k].iter().enumerate() {
                vphi.row_mut(i).scale_mut(*v);
            }
            let mut block = d.weighted(&d.values, &vphi);
            for g in &d.grads {
                block += d.weighted(g, g) * ck;
            }
            block
        })
        .collect();

    // each face once: the upper face of element k in dimension d
    let faces: Vec<(usize, usize, usize)> = (0..elements.len())
        .flat_map(|k| (0..partition.dim()).map(move |d| (k, d)))
        .map(|(k, d)| (k, d, partition.neighbor(k, d, 1)))
        .collect();
    let face_blocks: Vec<DMatrix<f64>> = faces
        .par_iter()
        .map(|&(k, d, nb)| {
            let (lo_nodes, w) = elements[nb].face(d, false);
            let (up_nodes, _) = elements[k].face(d, true);
            let (a, b) = (&data[k], &data[nb]);
            let fm = rows(&a.values, &up_nodes);
            let fp = rows(&b.values, &lo_nodes);
            let gm = rows(&a.grads[d], &up_nodes);
            let gp = rows(&b.grads[d], &lo_nodes);
            let (jump, avg) = if nb == k {
                (&fm - &fp, (&gm + &gp) * 0.5)
            } else {
                let nf = fm.nrows();
                let mut jump = DMatrix::zeros(nf, fm.ncols() + fp.ncols());
                let mut avg = DMatrix::zeros(nf, fm.ncols() + fp.ncols());
                jump.columns_mut(0, fm.ncols()).copy_from(&fm);
                jump.columns_mut(fm.ncols(), fp.ncols()).copy_from(&(-&fp));
                avg.columns_mut(0, gm.ncols()).copy_from(&(&gm * 0.5));
                avg.columns_mut(gm.ncols(), gp.ncols())
                    .copy_from(&(&gp * 0.5));
                (jump, avg)
            };
            let gamma = 0.5 * (penalties.gamma[k] + penalties.gamma[nb]);
            let cross = weighted_product(&avg, &jump, &w);
            (cross.transpose() + cross) * (-ck) + weighted_product(&jump, &jump, &w) * gamma
        })
        .collect();

    let mut matrix = DMatrix::zeros(total, total);
    for (k, block) in volume.iter().enumerate() {
        let mut view = matrix.view_mut((offsets[k], offsets[k]), (counts[k], counts[k]));
        view += block;
    }
    for (&(k, _, nb), block) in faces.iter().zip(&face_blocks) {
        if nb == k {
            let mut view = matrix.view_mut((offsets[k], offsets[k]), (counts[k], counts[k]));
            view += block;
            continue;
        }
        let ids = [(k, 0), (nb, counts[k])];
        for &(ra, ro) in &ids {
            for &(cb, co) in &ids {
                let sub = block.view((ro, co), (counts[ra], counts[cb]));
                let mut view =
                    matrix.view_mut((offsets[ra], offsets[cb]), (counts[ra], counts[cb]));
                view += sub;
            }
        }
    }

    if let Some(ex) = exchange {
        matrix += lgl_exchange_block(ex, data, &elements)?;
    } else if let Some(ex) = h.exchange() {
        let sampler = GridSampler::new(h.grid(), partition)?;
        let phi = sampler.basis_on_grid(basis);
        matrix += phi.transpose() * ex.matrix() * &phi * h.grid().cell_volume();
    }
    let matrix = (&matrix + matrix.transpose()) * 0.5;
    Ok(DGMatrix {
        matrix,
        offsets,
        counts,
        kinetic: ck,
    })
}

fn lgl_exchange_block(
    ex: &LglExchange,
    data: &[ElementData],
    elements: &[crate::domain::Element],
) -> Result<DMatrix<f64>> {
    let nodes: usize = elements.iter().map(|e| e.num_nodes()).sum();
    if ex.matrix.nrows() != nodes || ex.matrix.ncols() != nodes {
        return Err(Error::SizeMismatch {
            expected: nodes,
            got: ex.matrix.nrows(),
        });
    }
    let total: usize = data.iter().map(|d| d.values.ncols()).sum();
    // block-diagonal W^{1/2}-free map from coefficients to weighted nodal values
    let mut wphi = DMatrix::zeros(nodes, total);
    let (mut r, mut c) = (0, 0);
    for d in data {
        let mut block = d.values.clone();
        for (i, w) in d.weights.iter().enumerate() {
            block.row_mut(i).scale_mut(*w);
        }
        wphi.view_mut((r, c), (block.nrows(), block.ncols()))
            .copy_from(&block);
        r += block.nrows();
        c += block.ncols();
    }
    Ok(wphi.transpose() * &ex.matrix * &wphi)
}
