use crate::basis::LocalBasis;
use crate::domain::{element_gradient, Element};
use crate::{Error, Result};
use nalgebra::DMatrix;

pub const DEFAULT_SAFETY: f64 = 2.0;

/// Per-element penalty parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyParams {
    pub gamma: Vec<f64>,
}

/// Nodal values and physical gradients of a local basis.
pub(crate) struct ElementData {
    pub values: DMatrix<f64>,
    pub grads: Vec<DMatrix<f64>>,
    pub weights: Vec<f64>,
}

impl ElementData {
    pub fn new(element: &Element, diff: &DMatrix<f64>, basis: &LocalBasis) -> Self {
        let n = basis.count();
        let dim = element.dim();
        let nodes = element.num_nodes();
        let mut grads = vec![DMatrix::zeros(nodes, n); dim];
        for j in 0..n {
            let g = element_gradient(element, diff, basis.values.column(j).as_slice());
            for (d, gd) in g.into_iter().enumerate() {
                grads[d].set_column(j, &nalgebra::DVector::from_vec(gd));
            }
        }
        Self {
            values: basis.values.clone(),
            grads,
            weights: element.tensor_weights(),
        }
    }

    /// `Aᵀ diag(w) B` over all nodes.
    pub fn weighted(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        weighted_product(a, b, &self.weights)
    }
}

pub(crate) fn weighted_product(a: &DMatrix<f64>, b: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let mut wb = b.clone();
    for (i, x) in w.iter().enumerate() {
        wb.row_mut(i).scale_mut(*x);
    }
    a.transpose() * wb
}

pub(crate) fn rows(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), m.ncols(), |i, j| m[(idx[i], j)])
}

/// `safety · c_k · λ_max(B, A)` where `B` is the face trace form of values
/// and normal derivatives and `A` the element H¹ Gram matrix.
pub fn estimate_penalty(
    element: &Element,
    diff: &DMatrix<f64>,
    basis: &LocalBasis,
    kinetic: f64,
    safety: f64,
) -> Result<f64> {
    if basis.count() == 0 {
        return Err(Error::PenaltyEstimation {
            element: element.id,
            reason: "empty basis".into(),
        });
    }
    let data = ElementData::new(element, diff, basis);
    penalty_from_data(element, &data, kinetic, safety)
}

pub(crate) fn penalty_from_data(
    element: &Element,
    data: &ElementData,
    kinetic: f64,
    safety: f64,
) -> Result<f64> {
    let mut a = data.weighted(&data.values, &data.values);
    for g in &data.grads {
        a += data.weighted(g, g);
    }
    let n = a.nrows();
    let mut b = DMatrix::zeros(n, n);
    for d in 0..element.dim() {
        for upper in [false, true] {
            let (nodes, w) = element.face(d, upper);
            let f = rows(&data.values, &nodes);
            let g = rows(&data.grads[d], &nodes);
            b += weighted_product(&f, &f, &w) + weighted_product(&g, &g, &w);
        }
    }
    let a = (&a + a.transpose()) * 0.5;
    let chol = a.cholesky().ok_or_else(|| Error::PenaltyEstimation {
        element: element.id,
        reason: "element Gram matrix is not positive definite".into(),
    })?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::PenaltyEstimation {
            element: element.id,
            reason: "singular Cholesky factor".into(),
        })?;
    let c = &linv * b * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let lmax = nalgebra::SymmetricEigen::new(c).eigenvalues.max();
    if !(lmax.is_finite() && lmax > 0.0) {
        return Err(Error::PenaltyEstimation {
            element: element.id,
            reason: format!("largest eigenvalue {lmax}"),
        });
    }
    Ok(safety * kinetic * lmax)
}
