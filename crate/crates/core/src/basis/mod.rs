//! Discontinuous element bases: randomized range finder, globally and
//! locally constructed adaptive local bases, and the optimal basis.

mod local;

pub use local::{
    build_lcalb, lcalb_from_local, lcalb_local_functions, ExtendedElement, LocalSamples,
};

use crate::domain::{GridToLgl, Partition, UniformGrid};
use crate::{Error, Result};
use log::warn;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;


/// Relative singular value cutoff used to detect numerical rank.
pub const RANK_TOL: f64 = 1e-14;

/// Seeded Gaussian block orthonormalized by QR.
#[derive(Debug, Clone)]
pub struct RandomSketch {
    pub columns: DMatrix<f64>,
    pub seed: u64,
    pub oversampling: usize,
}

/// L²(κ)-orthonormal functions sampled on one element's tensor LGL grid.
#[derive(Debug, Clone)]
pub struct LocalBasis {
    pub element: usize,
    /// `nodes × count`.
    pub values: DMatrix<f64>,
    pub singular_values: Vec<f64>,
}

impl LocalBasis {
    pub fn count(&self) -> usize {
        self.values.ncols()
    }

    /// Keeps only the leading `count` functions.
    pub fn truncated(&self, count: usize) -> LocalBasis {
        let k = count.min(self.count());
        LocalBasis {
            element: self.element,
            values: self.values.columns(0, k).into_owned(),
            singular_values: self.singular_values[..k].to_vec(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DGBasis {
    pub partition: Partition,
    pub locals: Vec<LocalBasis>,
}

impl DGBasis {
    pub fn total(&self) -> usize {
        self.locals.iter().map(|b| b.count()).sum()
    }

    /// First global row of each element's block.
    pub fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.locals
            .iter()
            .map(|b| {
                let o = acc;
                acc += b.count();
                o
            })
            .collect()
    }
}

/// `q` orthonormal columns of length `n_g` from a seeded Gaussian draw.
///
/// Entries are drawn column by column, so the first `k` columns do not
/// depend on `q`.
pub fn random_orthonormal(n_g: usize, q: usize, seed: u64) -> Result<RandomSketch> {
    if q > n_g {
        return Err(Error::Rank(format!(
            "cannot draw {q} orthonormal vectors of length {n_g}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = DMatrix::zeros(n_g, q);
    for j in 0..q {
        for i in 0..n_g {
            g[(i, j)] = StandardNormal.sample(&mut rng);
        }
    }
    let columns = if q == 0 { g } else { g.qr().q() };
    Ok(RandomSketch {
        columns,
        seed,
        oversampling: 0,
    })
}

/// Leading left singular vectors of a matrix, with singular values sorted
/// in non-increasing order. Columns whose singular value falls below
/// `rel_drop * σ_1` are discarded.
pub fn leading_left_singular(
    w: &DMatrix<f64>,
    k: usize,
    rel_drop: f64,
) -> (DMatrix<f64>, Vec<f64>) {
    if w.ncols() == 0 || w.nrows() == 0 {
        return (DMatrix::zeros(w.nrows(), 0), Vec::new());
    }
    let svd = w.clone().svd(true, false);
    let u = svd.u.expect("left vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let s1 = svd.singular_values[order[0]];
    let kept: Vec<usize> = order
        .into_iter()
        .take(k)
        .filter(|&i| s1 > 0.0 && svd.singular_values[i] > rel_drop * s1)
        .collect();
    let mut out = DMatrix::zeros(w.nrows(), kept.len());
    for (c, &i) in kept.iter().enumerate() {
        out.set_column(c, &u.column(i));
    }
    (out, kept.iter().map(|&i| svd.singular_values[i]).collect())
}

/// Output of the randomized range finder.
#[derive(Debug, Clone)]
pub struct RangeBasis {
    pub vectors: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    /// Set when fewer than `k` directions were numerically present.
    pub rank_deficient: bool,
}

pub fn randomized_range_finder<A>(
    apply: A,
    n_g: usize,
    k: usize,
    c: usize,
    seed: u64,
) -> Result<RangeBasis>
where
    A: FnOnce(&DMatrix<f64>) -> Result<DMatrix<f64>>,
{
    let r = random_orthonormal(n_g, k + c, seed)?;
    let w = apply(&r.columns)?;
    let (vectors, singular_values) = leading_left_singular(&w, k, RANK_TOL);
    let rank_deficient = vectors.ncols() < k;
    if rank_deficient {
        warn!(
            "range finder found numerical rank {} < {k}",
            vectors.ncols()
        );
    }
    Ok(RangeBasis {
        vectors,
        singular_values,
        rank_deficient,
    })
}

/// Weighted SVD of element samples (`nodes × q`). Rows are scaled by the
/// square roots of the LGL weights before the SVD and unscaled afterwards.
pub fn local_basis_from_samples(
    element: usize,
    weights: &[f64],
    samples: &DMatrix<f64>,
    count: usize,
    rel_drop: f64,
) -> LocalBasis {
    let sq: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let mut scaled = samples.clone();
    for (i, s) in sq.iter().enumerate() {
        scaled.row_mut(i).scale_mut(*s);
    }
    let (mut u, singular_values) = leading_left_singular(&scaled, count, rel_drop);
    for (i, s) in sq.iter().enumerate() {
        u.row_mut(i).unscale_mut(*s);
    }
    if u.ncols() < count {
        warn!(
            "element {element}: kept {} of {count} basis functions",
            u.ncols()
        );
    }
    LocalBasis {
        element,
        values: u,
        singular_values,
    }
}

/// Global grid functions interpolated to every element: one `nodes × q`
/// matrix per element.
pub fn grid_to_element_samples(
    grid: &UniformGrid,
    partition: &Partition,
    columns: &DMatrix<f64>,
) -> Result<Vec<DMatrix<f64>>> {
    if columns.nrows() != grid.len() {
        return Err(Error::SizeMismatch {
            expected: grid.len(),
            got: columns.nrows(),
        });
    }
    let interp = GridToLgl::new(grid, partition)?;
    let global: Vec<Vec<f64>> = (0..columns.ncols())
        .into_par_iter()
        .map(|j| interp.global(columns.column(j).as_slice()))
        .collect();
    let elements = partition.elements();
    Ok(elements
        .par_iter()
        .map(|el| {
            let mut m = DMatrix::zeros(el.num_nodes(), columns.ncols());
            for (j, g) in global.iter().enumerate() {
                m.set_column(j, &nalgebra::DVector::from_vec(interp.element_slice(g, el)));
            }
            m
        })
        .collect())
}

/// Per-element weighted SVD of grid samples, keeping `count` functions.
pub fn basis_from_grid_samples(
    grid: &UniformGrid,
    partition: &Partition,
    columns: &DMatrix<f64>,
    count: usize,
    rel_drop: f64,
) -> Result<DGBasis> {
    let samples = grid_to_element_samples(grid, partition, columns)?;
    Ok(basis_from_element_samples(
        partition, &samples, count, rel_drop,
    ))
}

pub fn basis_from_element_samples(
    partition: &Partition,
    samples: &[DMatrix<f64>],
    count: usize,
    rel_drop: f64,
) -> DGBasis {
    let locals = partition
        .elements()
        .par_iter()
        .zip(samples.par_iter())
        .map(|(el, s)| local_basis_from_samples(el.id, &el.tensor_weights(), s, count, rel_drop))
        .collect();
    DGBasis {
        partition: partition.clone(),
        locals,
    }
}

/// GC-ALB from already filtered samples `W = f(H) R`. Only the first
/// `count + c` columns of `w` are used.
pub fn gcalb_from_filtered(
    grid: &UniformGrid,
    partition: &Partition,
    w: &DMatrix<f64>,
    count: usize,
    c: usize,
) -> Result<DGBasis> {
    let q = (count + c).min(w.ncols());
    basis_from_grid_samples(
        grid,
        partition,
        &w.columns(0, q).into_owned(),
        count,
        RANK_TOL,
    )
}

/// GC-ALB: draws `R`, applies the filtered operator once and builds the
/// per-element bases.
pub fn build_gcalb<F>(
    apply_fh: F,
    grid: &UniformGrid,
    partition: &Partition,
    count: usize,
    c: usize,
    seed: u64,
) -> Result<DGBasis>
where
    F: FnOnce(&DMatrix<f64>) -> Result<DMatrix<f64>>,
{
    if count + c > grid.len() {
        return Err(Error::Rank(format!(
            "{count} + {c} sketch columns exceed {} grid points",
            grid.len()
        )));
    }
    let r = random_orthonormal(grid.len(), count + c, seed)?;
    let w = apply_fh(&r.columns)?;
    gcalb_from_filtered(grid, partition, &w, count, c)
}

/// Optimal basis from reference eigenfunctions on the grid (one per column).
pub fn build_opt_basis(
    grid: &UniformGrid,
    partition: &Partition,
    psi: &DMatrix<f64>,
    count: usize,
) -> Result<DGBasis> {
    let mut count = count;
    if count > psi.ncols() {
        warn!(
            "optimal basis truncated from {count} to {} functions",
            psi.ncols()
        );
        count = psi.ncols();
    }
    basis_from_grid_samples(grid, partition, psi, count, RANK_TOL)
}
