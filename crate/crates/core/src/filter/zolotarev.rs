use super::elliptic::{elliptic_k_from_complement, sn_cn_dn_with_complement};
use crate::{Error, Result};

/// Best odd rational approximant of `sign(t)` on `[-1,-ell] ∪ [ell,1]`, in
/// partial-fraction form `Z(t) = M t Σ_j a_j / (t² + c_{2j-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZolotarevCoeffs {
    pub r: usize,
    pub ell: f64,
    /// `c_1, ..., c_{2r-1}`.
    pub c: Vec<f64>,
    /// `a_1, ..., a_r`.
    pub a_part: Vec<f64>,
    pub mscale: f64,
}

impl ZolotarevCoeffs {
    /// `c_{2j-1}` for `j = 1..=r`.
    pub fn odd_c(&self) -> impl Iterator<Item = f64> + '_ {
        self.c.iter().step_by(2).copied()
    }

    fn g(&self, t: f64) -> f64 {
        t * self
            .a_part
            .iter()
            .zip(self.odd_c())
            .map(|(a, c)| a / (t * t + c))
            .sum::<f64>()
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t.is_infinite() {
            return 0.0;
        }
        self.mscale * self.g(t)
    }

    /// Max of `|Z(t) - 1|` over dense samples of `[ell, 1]`.
    pub fn max_error(&self) -> f64 {
        let (lo, hi) = (self.ell.ln(), 0.0);
        let n = 20_000;
        (0..=n)
            .map(|i| (self.eval((lo + (hi - lo) * i as f64 / n as f64).exp()) - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

pub fn zolotarev_coeffs(r: usize, ell: f64) -> Result<ZolotarevCoeffs> {
    if r == 0 {
        return Err(Error::Domain(
            "Zolotarev degree r must be at least 1".into(),
        ));
    }
    if !(ell > 0.0 && ell < 1.0) {
        return Err(Error::Domain(format!("ell = {ell} outside (0, 1)")));
    }
    let kp = (1.0 - ell * ell).sqrt();
    let big_k = elliptic_k_from_complement(ell);
    let ratio = |i: usize| {
        let (sn, cn, _) = sn_cn_dn_with_complement(i as f64 * big_k / (2 * r) as f64, kp, ell);
        (sn, cn)
    };
    let mut c = Vec::with_capacity(2 * r - 1);
    for i in 1..2 * r {
        let ci = if i <= r {
            let (sn, cn) = ratio(i);
            ell * ell * sn * sn / (cn * cn)
        } else {
            // reflection about K: sn/cn(K - v) = cn(v) / (ell sn(v))
            let (sn, cn) = ratio(2 * r - i);
            cn * cn / (sn * sn)
        };
        if !(ci.is_finite() && ci > 1e-300) {
            return Err(Error::Precision(format!(
                "Zolotarev coefficient c_{i} = {ci:e} underflows"
            )));
        }
        c.push(ci);
    }
    let a_part: Vec<f64> = (0..r)
        .map(|j| {
            let cj = c[2 * j];
            let num: f64 = (0..r - 1).map(|i| c[2 * i + 1] - cj).product();
            let den: f64 = (0..r).filter(|&i| i != j).map(|i| c[2 * i] - cj).product();
            num / den
        })
        .collect();
    let mut z = ZolotarevCoeffs {
        r,
        ell,
        c,
        a_part,
        mscale: 1.0,
    };
    let (gmin, gmax) = extremes(&z);
    z.mscale = 2.0 / (gmin + gmax);
    if !(z.mscale.is_finite() && z.mscale > 0.0) {
        return Err(Error::Precision(format!("Zolotarev scale {}", z.mscale)));
    }
    Ok(z)
}

/// Min and max of `g(t) = t Σ a_j / (t² + c_{2j-1})` on `[ell, 1]`: log-spaced
/// samples followed by golden-section refinement around each candidate.
fn extremes(z: &ZolotarevCoeffs) -> (f64, f64) {
    let n = 4000;
    let lo = z.ell.ln();
    let s: Vec<f64> = (0..=n).map(|i| lo * (1.0 - i as f64 / n as f64)).collect();
    let vals: Vec<f64> = s.iter().map(|&x| z.g(x.exp())).collect();
    let mut gmin = vals[0].min(vals[n]);
    let mut gmax = vals[0].max(vals[n]);
    for i in 1..n {
        let is_max = vals[i] >= vals[i - 1] && vals[i] >= vals[i + 1];
        let is_min = vals[i] <= vals[i - 1] && vals[i] <= vals[i + 1];
        if is_max {
            gmax = gmax.max(-golden(|x| -z.g(x.exp()), s[i - 1], s[i + 1]));
        }
        if is_min {
            gmin = gmin.min(golden(|x| z.g(x.exp()), s[i - 1], s[i + 1]));
        }
    }
    (gmin, gmax)
}

/// Minimum value of a unimodal function on `[a, b]`.
fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        }
        if (b - a).abs() < 1e-15 {
            break;
        }
    }
    f1.min(f2).min(f(a)).min(f(b))
}
