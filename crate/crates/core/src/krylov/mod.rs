//! Restarted GMRES with right preconditioning for complex systems.

use crate::{Error, Result};
use num_complex::Complex64;


#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub restart: usize,
    pub tol: f64,
    pub max_restarts: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            restart: 30,
            tol: 1e-12,
            max_restarts: 200,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restart == 0 || !(self.tol > 0.0) || self.max_restarts == 0 {
            return Err(Error::Config(format!("bad solver config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    /// Arnoldi steps summed over restarts.
    pub iterations: usize,
    pub final_relative_residual: f64,
    pub converged: bool,
    /// Residual norm after each inner step, relative to `‖b‖`. Only the
    /// last restart cycle is kept.
    pub history_len: usize,
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Solve `A x = b` by restarted GMRES, preconditioned on the right by `precond`.
///
/// On stall the error carries the best iterate and the report.
pub fn gmres<A, P>(
    mut apply_a: A,
    b: &[Complex64],
    mut precond: Option<P>,
    cfg: &SolverConfig,
) -> Result<(Vec<Complex64>, SolveReport)>
where
    A: FnMut(&[Complex64]) -> Result<Vec<Complex64>>,
    P: FnMut(&[Complex64]) -> Result<Vec<Complex64>>,
{
    let (x, report, _) = gmres_with_history(&mut apply_a, b, precond.as_mut(), cfg)?;
    if report.converged {
        Ok((x, report))
    } else {
        Err(Error::GmresStalled { report, best: x })
    }
}

/// Same as [`gmres`] but never fails on stall and also returns the residual
/// estimates of the final restart cycle.
pub fn gmres_with_history<A, P>(
    apply_a: &mut A,
    b: &[Complex64],
    mut precond: Option<&mut P>,
    cfg: &SolverConfig,
) -> Result<(Vec<Complex64>, SolveReport, Vec<f64>)>
where
    A: FnMut(&[Complex64]) -> Result<Vec<Complex64>>,
    P: FnMut(&[Complex64]) -> Result<Vec<Complex64>>,
{
    cfg.validate()?;
    let n = b.len();
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    let bnorm = norm(b);
    if bnorm == 0.0 {
        let report = SolveReport {
            iterations: 0,
            final_relative_residual: 0.0,
            converged: true,
            history_len: 0,
        };
        return Ok((x, report, Vec::new()));
    }
    let m = cfg.restart.min(n.max(1));
    let mut iterations = 0;
    let mut r: Vec<Complex64> = b.to_vec();
    let mut rel = 1.0;
    let mut history = Vec::new();

    for _cycle in 0..cfg.max_restarts {
        let beta = norm(&r);
        rel = beta / bnorm;
        if rel <= cfg.tol {
            break;
        }
        history.clear();
        let mut v: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
        let mut z: Vec<Vec<Complex64>> = Vec::with_capacity(m);
        v.push(r.iter().map(|c| c / beta).collect());
        // column-major Hessenberg, h[j] has j + 2 entries
        let mut h: Vec<Vec<Complex64>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<Complex64> = Vec::with_capacity(m);
        let mut g = vec![Complex64::new(0.0, 0.0); m + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut k = 0;
        while k < m {
            let zk = match precond.as_mut() {
                Some(p) => p(&v[k])?,
                None => v[k].clone(),
            };
            let mut w = apply_a(&zk)?;
            if w.len() != n {
                return Err(Error::SizeMismatch {
                    expected: n,
                    got: w.len(),
                });
            }
            z.push(zk);
            iterations += 1;

            let before = norm(&w);
            let mut col = vec![Complex64::new(0.0, 0.0); k + 2];
            for (i, vi) in v.iter().enumerate() {
                let hij = dot(vi, &w);
                axpy(-hij, vi, &mut w);
                col[i] = hij;
            }
            if norm(&w) < 0.7 * before {
                for (i, vi) in v.iter().enumerate() {
                    let corr = dot(vi, &w);
                    axpy(-corr, vi, &mut w);
                    col[i] += corr;
                }
            }
            let wn = norm(&w);
            col[k + 1] = Complex64::new(wn, 0.0);

            for i in 0..k {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i].conj() * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let (c, s, rr) = givens(col[k], col[k + 1]);
            col[k] = rr;
            col[k + 1] = Complex64::new(0.0, 0.0);
            cs.push(c);
            sn.push(s);
            g[k + 1] = -s.conj() * g[k];
            g[k] *= c;
            h.push(col);
            k += 1;

            let est = g[k].norm() / bnorm;
            history.push(est);
            let breakdown = wn <= 1e-14 * before.max(f64::MIN_POSITIVE);
            if est <= cfg.tol || breakdown {
                break;
            }
            v.push(w.iter().map(|c| c / wn).collect());
        }

        // back substitution on the triangular factor
        let mut y = vec![Complex64::new(0.0, 0.0); k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[j][i] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (yi, zi) in y.iter().zip(&z) {
            axpy(*yi, zi, &mut x);
        }
        let ax = apply_a(&x)?;
        for i in 0..n {
            r[i] = b[i] - ax[i];
        }
        rel = norm(&r) / bnorm;
        if rel <= cfg.tol {
            break;
        }
    }
    let report = SolveReport {
        iterations,
        final_relative_residual: rel,
        converged: rel <= cfg.tol,
        history_len: history.len(),
    };
    Ok((x, report, history))
}

/// Complex Givens rotation with real cosine zeroing `b` against `a`.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64, Complex64) {
    let an = a.norm();
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0), a);
    }
    if an == 0.0 {
        return (
            0.0,
            Complex64::new(1.0, 0.0) * (b.conj() / bn),
            Complex64::new(bn, 0.0),
        );
    }
    let r = an.hypot(bn);
    let phase = a / an;
    let c = an / r;
    let s = phase * b.conj() / r;
    (c, s, phase * r)
}
