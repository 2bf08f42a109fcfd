use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::hamiltonian::Hamiltonian;

/// Spectrum estimates with safety margins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumBounds {
    pub lambda_min_est: f64,
    /// Estimate of the `n`-th eigenvalue; present only when requested.
    pub lambda_n_est: Option<f64>,
    pub lambda_max_est: f64,
    /// Margin that was subtracted/added to the extreme Ritz values.
    pub margin: f64,
}

/// Lanczos with full reorthogonalization from a seeded random start.
/// Breakdowns restart from a fresh vector, at most three times.
pub fn estimate_spectrum_bounds(
    h: &Hamiltonian,
    iterations: usize,
    seed: u64,
) -> Result<SpectrumBounds> {
    let (ritz, margin) = lanczos_ritz_values(h, iterations, seed)?;
    let lo = ritz[0];
    let hi = ritz[ritz.len() - 1];
    Ok(SpectrumBounds {
        lambda_min_est: lo - margin,
        lambda_n_est: None,
        lambda_max_est: hi + margin,
        margin,
    })
}

/// Ascending Ritz values of a Lanczos run together with the last
/// off-diagonal coefficient.
pub fn lanczos_ritz_values(
    h: &Hamiltonian,
    iterations: usize,
    seed: u64,
) -> Result<(Vec<f64>, f64)> {
    if iterations < 2 {
        return Err(Error::Domain("Lanczos needs at least 2 iterations".into()));
    }
    let n = h.len();
    let steps = iterations.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _attempt in 0..=3 {
        let mut q = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        q /= q.norm();
        let mut basis: Vec<DVector<f64>> = vec![q];
        let mut alpha = Vec::with_capacity(steps);
        let mut beta: Vec<f64> = Vec::with_capacity(steps);
        let mut broke = false;
        for j in 0..steps {
            let qj = &basis[j];
            let mut w = DVector::from_vec(h.apply_real(qj.as_slice())?);
            let a = qj.dot(&w);
            alpha.push(a);
            for _ in 0..2 {
                for b in &basis {
                    let c = b.dot(&w);
                    w.axpy(-c, b, 1.0);
                }
            }
            let bnorm = w.norm();
            beta.push(bnorm);
            if j + 1 == steps {
                break;
            }
            if bnorm < 1e-12 * h.norm_estimate().max(1.0) {
                broke = j + 1 < steps && steps < n;
                break;
            }
            basis.push(w / bnorm);
        }
        if broke {
            continue;
        }
        let m = alpha.len();
        let mut t = DMatrix::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let mut ritz: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ritz.sort_by(f64::total_cmp);
        return Ok((ritz, *beta.last().unwrap()));
    }
    Err(Error::NonConvergence {
        what: "Lanczos (repeated breakdown)".into(),
        iterations,
        residual: 0.0,
    })
}
