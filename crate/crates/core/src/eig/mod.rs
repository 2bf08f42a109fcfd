//! Reference eigensolvers for the pseudo-spectral problem: blocked LOBPCG and
//! a dense oracle for small grids.

use crate::operator::{Hamiltonian, ShiftedLaplacian};
use crate::{Error, Result};
use log::debug;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};


/// Lowest eigenpairs of a grid Hamiltonian. Eigenvectors are normalized in
/// the grid inner product `Σ u v dV`.
#[derive(Debug, Clone)]
pub struct EigResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
    /// `‖H x - λ x‖` for Euclidean-normalized `x`.
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LobpcgConfig {
    /// Residual tolerance relative to the operator norm estimate.
    pub tol: f64,
    pub max_iter: usize,
    pub guards: usize,
    pub seed: u64,
    pub precondition: bool,
}

impl Default for LobpcgConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 2000,
            guards: 5,
            seed: 0,
            precondition: true,
        }
    }
}

pub const DENSE_LIMIT: usize = 4096;

pub fn dense_reference_eig(h: &Hamiltonian) -> Result<EigResult> {
    let n = h.len();
    if n > DENSE_LIMIT {
        return Err(Error::Unsupported(format!(
            "dense eigensolve on {n} points exceeds {DENSE_LIMIT}"
        )));
    }
    let mut a = h.to_dense();
    a = (&a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vecs = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let res = residual_norms(&(&a * &vecs), &vecs, &vals);
    let scale = 1.0 / h.grid().cell_volume().sqrt();
    Ok(EigResult {
        eigenvalues: vals,
        eigenvectors: vecs * scale,
        residuals: res,
        iterations: 0,
    })
}

/// Lowest `n` eigenpairs, dense when the grid is small and LOBPCG otherwise.
pub fn lowest_eigenpairs(h: &Hamiltonian, n: usize, cfg: &LobpcgConfig) -> Result<EigResult> {
    if h.len() <= 1024 {
        let mut full = dense_reference_eig(h)?;
        if n > h.len() {
            return Err(Error::SizeMismatch {
                expected: h.len(),
                got: n,
            });
        }
        full.eigenvalues.truncate(n);
        full.residuals.truncate(n);
        full.eigenvectors = full.eigenvectors.columns(0, n).into_owned();
        Ok(full)
    } else {
        lobpcg(h, n, cfg)
    }
}

fn residual_norms(ax: &DMatrix<f64>, x: &DMatrix<f64>, lambda: &[f64]) -> Vec<f64> {
    (0..lambda.len())
        .map(|j| (ax.column(j) - x.column(j) * lambda[j]).norm())
        .collect()
}

/// Orthonormalizes the columns of `s` (and applies the same map to `as_`),
/// dropping directions whose Gram eigenvalue falls below `drop * max`.
fn svqb(
    s: &DMatrix<f64>,
    as_: Option<&DMatrix<f64>>,
    drop: f64,
) -> (DMatrix<f64>, Option<DMatrix<f64>>) {
    if s.ncols() == 0 {
        return (s.clone(), as_.cloned());
    }
    let g = s.transpose() * s;
    let d: Vec<f64> = (0..g.nrows())
        .map(|i| g[(i, i)].max(f64::MIN_POSITIVE).sqrt().recip())
        .collect();
    let dm = DMatrix::from_diagonal(&DVector::from_vec(d));
    let gs = &dm * g * &dm;
    let eig = SymmetricEigen::new((&gs + gs.transpose()) * 0.5);
    let emax = eig.eigenvalues.max();
    let keep: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] > drop * emax)
        .collect();
    let mut t = DMatrix::zeros(s.ncols(), keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let f = eig.eigenvalues[i].sqrt().recip();
        t.set_column(c, &(&dm * eig.eigenvectors.column(i) * f));
    }
    (s * &t, as_.map(|a| a * &t))
}

/// Removes the components of `w` along the orthonormal columns of `q`, twice.
fn project_out(
    w: &mut DMatrix<f64>,
    aw: Option<&mut DMatrix<f64>>,
    q: &DMatrix<f64>,
    aq: Option<&DMatrix<f64>>,
) {
    let c1 = q.transpose() * &*w;
    *w -= q * &c1;
    let c2 = q.transpose() * &*w;
    *w -= q * &c2;
    if let (Some(aw), Some(aq)) = (aw, aq) {
        *aw -= aq * (c1 + c2);
    }
}

fn columns(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), idx.len(), |i, j| m[(i, idx[j])])
}

fn hcat(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let nrows = blocks[0].nrows();
    let ncols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(nrows, ncols);
    let mut c = 0;
    for b in blocks {
        out.columns_mut(c, b.ncols()).copy_from(*b);
        c += b.ncols();
    }
    out
}

/// Block LOBPCG with soft locking for the lowest `n` eigenpairs.
pub fn lobpcg(h: &Hamiltonian, n: usize, cfg: &LobpcgConfig) -> Result<EigResult> {
    let ng = h.len();
    if n == 0 || n > ng {
        return Err(Error::SizeMismatch {
            expected: ng,
            got: n,
        });
    }
    let m = (n + cfg.guards).min(ng);
    let tol = cfg.tol * h.norm_estimate().max(1.0);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let x0 = DMatrix::from_fn(ng, m, |_, _| StandardNormal.sample(&mut rng));
    let (x0, _) = svqb(&x0, None, 1e-14);
    let ax0 = h.apply_block(&x0);
    let (mut x, mut ax, mut lambda) = rayleigh_ritz(&x0, &ax0, m);
    let mut p: Option<(DMatrix<f64>, DMatrix<f64>)> = None;
    let mut res = residual_norms(&ax, &x, &lambda);

    for it in 1..=cfg.max_iter {
        let worst = res[..n].iter().cloned().fold(0.0, f64::max);
        if worst <= tol {
            debug!(
                "lobpcg converged in {} iterations, residual {worst:e}",
                it - 1
            );
            return Ok(finish(h, x, lambda, res, n, it - 1));
        }
        let active: Vec<usize> = (0..m).filter(|&j| res[j] > tol).collect();
        let mut w = DMatrix::zeros(ng, active.len());
        for (c, &j) in active.iter().enumerate() {
            w.set_column(c, &(ax.column(j) - x.column(j) * lambda[j]));
        }
        if cfg.precondition {
            let shift = (lambda[0] - 1.0).min(-1.0);
            let pre = ShiftedLaplacian::for_hamiltonian(h, Complex64::new(shift, 0.0))?;
            w = pre.apply_real_block(&w);
        }
        project_out(&mut w, None, &x, None);
        let (w, _) = svqb(&w, None, 1e-14);
        let aw = h.apply_block(&w);

        let (s, as_) = match p.take() {
            Some((pp, app)) => {
                let mut pa = columns(&pp, &active);
                let mut apa = columns(&app, &active);
                project_out(&mut pa, Some(&mut apa), &x, Some(&ax));
                project_out(&mut pa, Some(&mut apa), &w, Some(&aw));
                let (pa, apa) = svqb(&pa, Some(&apa), 1e-14);
                let apa = apa.unwrap();
                (hcat(&[&x, &w, &pa]), hcat(&[&ax, &aw, &apa]))
            }
            None => (hcat(&[&x, &w]), hcat(&[&ax, &aw])),
        };
        let a_small = s.transpose() * &as_;
        let a_small = (&a_small + a_small.transpose()) * 0.5;
        let eig = SymmetricEigen::new(a_small);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let c = columns(&eig.eigenvectors, &order[..m]);
        lambda = order[..m].iter().map(|&i| eig.eigenvalues[i]).collect();

        let new_x = &s * &c;
        let new_ax = &as_ * &c;
        // search direction: the part of the update outside the old X
        let c_rest = c.rows(m, c.nrows() - m).into_owned();
        let s_rest = s.columns(m, s.ncols() - m);
        let as_rest = as_.columns(m, as_.ncols() - m);
        p = Some((s_rest * &c_rest, as_rest * &c_rest));
        x = new_x;
        ax = new_ax;
        if it % 10 == 0 {
            let (xo, _) = svqb(&x, None, 0.0);
            x = xo;
            ax = h.apply_block(&x);
            let (xr, axr, lr) = rayleigh_ritz(&x, &ax, m);
            x = xr;
            ax = axr;
            lambda = lr;
        }
        res = residual_norms(&ax, &x, &lambda);
    }
    let worst = res[..n].iter().cloned().fold(0.0, f64::max);
    Err(Error::NonConvergence {
        what: "LOBPCG".into(),
        iterations: cfg.max_iter,
        residual: worst,
    })
}

fn rayleigh_ritz(
    x: &DMatrix<f64>,
    ax: &DMatrix<f64>,
    m: usize,
) -> (DMatrix<f64>, DMatrix<f64>, Vec<f64>) {
    let a = x.transpose() * ax;
    let eig = SymmetricEigen::new((&a + a.transpose()) * 0.5);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let c = columns(&eig.eigenvectors, &order[..m]);
    (
        x * &c,
        ax * &c,
        order[..m].iter().map(|&i| eig.eigenvalues[i]).collect(),
    )
}

fn finish(
    h: &Hamiltonian,
    x: DMatrix<f64>,
    lambda: Vec<f64>,
    res: Vec<f64>,
    n: usize,
    iterations: usize,
) -> EigResult {
    let scale = 1.0 / h.grid().cell_volume().sqrt();
    EigResult {
        eigenvalues: lambda[..n].to_vec(),
        eigenvectors: x.columns(0, n) * scale,
        residuals: res[..n].to_vec(),
        iterations,
    }
}
