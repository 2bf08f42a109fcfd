use crate::{Error, Result};
use nalgebra::{Matrix3, Vector3};

/// `T(x) = gamma (x - alpha) / (x - beta)` sending `(a_-, a, b, b_+)` to
/// `(-1, 1, ell, -ell)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobiusMap {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub ell: f64,
}

impl MobiusMap {
    pub fn eval(&self, x: f64) -> f64 {
        if x.is_infinite() {
            return self.gamma;
        }
        self.gamma * (x - self.alpha) / (x - self.beta)
    }

    pub fn derivative(&self, x: num_complex::Complex64) -> num_complex::Complex64 {
        let d = x - self.beta;
        self.gamma * (self.alpha - self.beta) / (d * d)
    }

    /// Preimage of `t` (complex allowed).
    pub fn inverse(&self, t: num_complex::Complex64) -> num_complex::Complex64 {
        (t * self.beta - self.gamma * self.alpha) / (t - self.gamma)
    }

    /// Largest violation of the four endpoint conditions.
    pub fn residual(&self, a_minus: f64, a: f64, b: f64, b_plus: f64) -> f64 {
        let lim = if a_minus.is_infinite() {
            (self.gamma + 1.0).abs()
        } else {
            (self.eval(a_minus) + 1.0).abs()
        };
        lim.max((self.eval(a) - 1.0).abs())
            .max((self.eval(b) - self.ell).abs())
            .max((self.eval(b_plus) + self.ell).abs())
    }
}

pub fn solve_mobius(a_minus: f64, a: f64, b: f64, b_plus: f64) -> Result<MobiusMap> {
    let finite = [a, b, b_plus].iter().all(|x| x.is_finite())
        && !a_minus.is_nan()
        && a_minus != f64::INFINITY;
    if !finite || !(a_minus < a && a <= b && b < b_plus) {
        return Err(Error::InfeasibleGap(format!(
            "need a_- < a <= b < b_+, got ({a_minus}, {a}, {b}, {b_plus})"
        )));
    }
    let map = if a_minus == f64::NEG_INFINITY {
        let s = ((b - a) * (b_plus - a)).sqrt();
        let (alpha, beta) = (a + s, a - s);
        MobiusMap {
            alpha,
            beta,
            gamma: -1.0,
            ell: (alpha - b) / (b - beta),
        }
    } else {
        let cr = ((b - a_minus) * (b_plus - a)) / ((b - a) * (b_plus - a_minus));
        let q = cr.sqrt();
        let ell = (q - 1.0) / (q + 1.0);
        if !(ell > 0.0 && ell < 1.0) {
            return Err(Error::InfeasibleGap(format!(
                "cross ratio {cr} gives ell = {ell}"
            )));
        }
        // gamma x - delta + y beta = y x at (a, 1), (b, ell), (b_+, -ell)
        let pts = [(a, 1.0), (b, ell), (b_plus, -ell)];
        let m = Matrix3::from_fn(|i, j| match j {
            0 => pts[i].0,
            1 => -1.0,
            _ => pts[i].1,
        });
        let rhs = Vector3::from_fn(|i, _| pts[i].0 * pts[i].1);
        let sol = m
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::InfeasibleGap("degenerate interpolation system".into()))?;
        let (gamma, delta, beta) = (sol[0], sol[1], sol[2]);
        MobiusMap {
            alpha: delta / gamma,
            beta,
            gamma,
            ell,
        }
    };
    if !(map.ell > 0.0 && map.ell < 1.0) {
        return Err(Error::InfeasibleGap(format!(
            "ell = {} outside (0, 1)",
            map.ell
        )));
    }
    let res = map.residual(a_minus, a, b, b_plus);
    if !(res < 1e-10) {
        return Err(Error::InfeasibleGap(format!(
            "Möbius back-substitution residual {res:e}"
        )));
    }
    Ok(map)
}
