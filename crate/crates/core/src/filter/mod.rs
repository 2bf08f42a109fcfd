//! Rational approximation of the indicator function of an interval and its
//! application to a Hamiltonian through shifted linear solves.

mod elliptic;
mod mobius;
mod zolotarev;

pub use elliptic::{elliptic_k, elliptic_k_from_complement, jacobi_sn_cn_dn};
pub use mobius::{solve_mobius, MobiusMap};
pub use zolotarev::{zolotarev_coeffs, ZolotarevCoeffs};

use crate::krylov::{gmres, SolverConfig};
use crate::operator::{Hamiltonian, ShiftedLaplacian};
use crate::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[cfg(test)]
mod tests;

/// Target interval `[a, b]`, gap `(b, b_plus)` and degree parameter `r`.
/// `a_minus` may be `-inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub a_minus: f64,
    pub a: f64,
    pub b: f64,
    pub b_plus: f64,
    pub r: usize,
}

impl FilterSpec {
    pub fn semi_infinite(a: f64, b: f64, b_plus: f64, r: usize) -> Self {
        Self {
            a_minus: f64::NEG_INFINITY,
            a,
            b,
            b_plus,
            r,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RationalFilter {
    pub constant: f64,
    pub poles: Vec<Complex64>,
    pub weights: Vec<Complex64>,
    pub spec: FilterSpec,
    pub mobius: MobiusMap,
    pub zolotarev: ZolotarevCoeffs,
}

impl RationalFilter {
    /// Pole-sum form `C0 + Σ 2 Re(w_j / (x - σ_j))`.
    pub fn eval(&self, x: f64) -> f64 {
        if x.is_infinite() {
            return self.constant;
        }
        self.constant
            + self
                .poles
                .iter()
                .zip(&self.weights)
                .map(|(s, w)| 2.0 * (w / (x - s)).re)
                .sum::<f64>()
    }

    /// `(Z(T(x)) + 1) / 2` evaluated by composition.
    pub fn eval_composed(&self, x: f64) -> f64 {
        0.5 * (self.zolotarev.eval(self.mobius.eval(x)) + 1.0)
    }
}

pub fn evaluate_filter(f: &RationalFilter, x: f64) -> f64 {
    f.eval(x)
}

pub fn build_filter(spec: FilterSpec) -> Result<RationalFilter> {
    if spec.r == 0 {
        return Err(Error::FilterConstruction("r must be at least 1".into()));
    }
    let mobius = solve_mobius(spec.a_minus, spec.a, spec.b, spec.b_plus)?;
    let zolotarev = zolotarev_coeffs(spec.r, mobius.ell)?;
    let mut poles = Vec::with_capacity(spec.r);
    let mut weights = Vec::with_capacity(spec.r);
    for (aj, cj) in zolotarev.a_part.iter().zip(zolotarev.odd_c()) {
        // Z has residue M a_j / 2 at t = ±i sqrt(c); pick the preimage in the upper half-plane.
        let mut t = Complex64::new(0.0, cj.sqrt());
        let mut sigma = mobius.inverse(t);
        if sigma.im < 0.0 {
            t = t.conj();
            sigma = mobius.inverse(t);
        }
        if !(sigma.im > 0.0) {
            return Err(Error::FilterConstruction(format!(
                "pole {sigma} on the real axis"
            )));
        }
        poles.push(sigma);
        weights.push(zolotarev.mscale * aj / (4.0 * mobius.derivative(sigma)));
    }
    let constant = 0.5 * (zolotarev.eval(mobius.gamma) + 1.0);
    let filter = RationalFilter {
        constant,
        poles,
        weights,
        spec,
        mobius,
        zolotarev,
    };
    validate(&filter)?;
    Ok(filter)
}

/// Compares the pole-sum and composed forms away from the gap.
fn validate(f: &RationalFilter) -> Result<()> {
    let FilterSpec { a, b, b_plus, .. } = f.spec;
    let width = (b - a).max(b_plus - b);
    let lo = if f.spec.a_minus.is_finite() {
        f.spec.a_minus
    } else {
        a - 10.0 * width
    };
    let mut worst: f64 = 0.0;
    let n = 200;
    for i in 0..=n {
        let s = i as f64 / n as f64;
        for x in [lo + s * (b - lo), b_plus + s * 10.0 * width] {
            worst = worst.max((f.eval(x) - f.eval_composed(x)).abs());
        }
    }
    if !(worst <= 1e-11) {
        return Err(Error::FilterConstruction(format!(
            "pole-sum form deviates by {worst:e}"
        )));
    }
    Ok(())
}

/// Result of `f(H) R`.
#[derive(Debug, Clone)]
pub struct FilteredBlock {
    pub block: DMatrix<f64>,
    /// Arnoldi steps summed over all poles and columns.
    pub total_iterations: usize,
}

impl FilteredBlock {
    /// Iterations per right-hand side, summed over poles.
    pub fn iterations_per_rhs(&self) -> f64 {
        if self.block.ncols() == 0 {
            0.0
        } else {
            self.total_iterations as f64 / self.block.ncols() as f64
        }
    }
}

/// `f(H) R = C0 R + Σ_j 2 Re(w_j (H - σ_j)^{-1} R)` for a real block `R`.
pub fn apply_filter(
    f: &RationalFilter,
    h: &Hamiltonian,
    r: &DMatrix<f64>,
    cfg: &SolverConfig,
    parallel: bool,
) -> Result<FilteredBlock> {
    if r.nrows() != h.len() {
        return Err(Error::SizeMismatch {
            expected: h.len(),
            got: r.nrows(),
        });
    }
    let precs = f
        .poles
        .iter()
        .enumerate()
        .map(|(j, &s)| {
            ShiftedLaplacian::for_hamiltonian(h, s).map_err(|e| Error::FilterApplication {
                pole: j,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let tasks: Vec<(usize, usize)> = (0..f.poles.len())
        .flat_map(|j| (0..r.ncols()).map(move |c| (j, c)))
        .collect();
    let solve = |&(j, c): &(usize, usize)| -> Result<(Vec<f64>, usize)> {
        let sigma = f.poles[j];
        let rhs: Vec<Complex64> = r
            .column(c)
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect();
        let apply = |v: &[Complex64]| -> Result<Vec<Complex64>> {
            let mut hv = h.apply(v)?;
            for (o, x) in hv.iter_mut().zip(v) {
                *o -= sigma * x;
            }
            Ok(hv)
        };
        let pre = |v: &[Complex64]| precs[j].apply(v);
        let (x, report) =
            gmres(apply, &rhs, Some(pre), cfg).map_err(|e| Error::FilterApplication {
                pole: j,
                source: Box::new(e),
            })?;
        let w = f.weights[j];
        Ok((
            x.iter().map(|z| 2.0 * (w * z).re).collect(),
            report.iterations,
        ))
    };
    let results: Vec<Result<(Vec<f64>, usize)>> = if parallel {
        tasks.par_iter().map(solve).collect()
    } else {
        tasks.iter().map(solve).collect()
    };
    let mut block = r * f.constant;
    let mut total_iterations = 0;
    for (&(_, c), res) in tasks.iter().zip(results) {
        let (col, its) = res?;
        total_iterations += its;
        for (o, v) in block.column_mut(c).iter_mut().zip(col) {
            *o += v;
        }
    }
    Ok(FilteredBlock {
        block,
        total_iterations,
    })
}
