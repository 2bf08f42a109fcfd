use crate::{Error, Result};
use std::f64::consts::FRAC_PI_2;

fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        if (a - b).abs() <= 1e-16 * a {
            break;
        }
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    0.5 * (a + b)
}

/// Complete elliptic integral of the first kind, `K(k)`.
pub fn elliptic_k(k: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&k) {
        return Err(Error::Domain(format!(
            "elliptic modulus {k} outside [0, 1)"
        )));
    }
    Ok(elliptic_k_from_complement((1.0 - k * k).sqrt()))
}

/// `K(k)` given only the complementary modulus `k' = sqrt(1 - k^2)`. Keeps
/// full precision when `k` is close to one.
pub fn elliptic_k_from_complement(kc: f64) -> f64 {
    FRAC_PI_2 / agm(1.0, kc)
}

/// Jacobi `sn`, `cn`, `dn` at argument `u` and modulus `k`.
pub fn jacobi_sn_cn_dn(u: f64, k: f64) -> (f64, f64, f64) {
    sn_cn_dn_with_complement(u, k, (1.0 - k * k).max(0.0).sqrt())
}

/// Descending Landen (AGM) scheme with modulus and its complement given
/// separately.
pub(crate) fn sn_cn_dn_with_complement(u: f64, k: f64, kc: f64) -> (f64, f64, f64) {
    if k == 0.0 {
        return (u.sin(), u.cos(), 1.0);
    }
    let mut a = vec![1.0];
    let mut c = vec![k];
    let mut b = kc;
    while c.last().unwrap().abs() > 1e-17 && a.len() < 40 {
        let an = *a.last().unwrap();
        a.push(0.5 * (an + b));
        c.push(0.5 * (an - b));
        b = (an * b).sqrt();
    }
    let n = a.len() - 1;
    let mut phi = 2f64.powi(n as i32) * a[n] * u;
    let mut prev = phi;
    for i in (1..=n).rev() {
        prev = phi;
        phi = 0.5 * (phi + (c[i] / a[i] * phi.sin()).asin());
    }
    let (sn, cn) = phi.sin_cos();
    let dn = if n == 0 { 1.0 } else { cn / (prev - phi).cos() };
    (sn, cn, dn)
}
