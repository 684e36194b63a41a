//! Laguerre polynomials and normalized Bessel functions.

use crate::quad::{legendre, ln_gamma};

/// Generalized Laguerre polynomial `L_k^{(ν)}(x)` by the three-term recurrence.
pub fn laguerre(k: usize, nu: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if k == 0 {
        return prev;
    }
    let mut cur = 1.0 + nu - x;
    for j in 1..k {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + nu - x) * cur - (jf + nu) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `binom(k + ν, k)`, the value of `L_k^{(ν)}` at the origin.
pub fn laguerre_at_zero(k: usize, nu: f64) -> f64 {
    (ln_gamma(k as f64 + nu + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma(nu + 1.0)).exp()
}

/// Normalized Laguerre polynomial `ℓ_k = L_k^{(ν)} / L_k^{(ν)}(0)`.
pub fn laguerre_normalized(k: usize, nu: f64, x: f64) -> f64 {
    laguerre_function_table(k, nu, x, 0.0)[k]
}

/// `ℓ_k^{(ν)}(x) e^{-c x}` for `k = 0..=kmax`.
///
/// The recurrence for the normalized polynomials,
/// `ℓ_{k+1} = ((2k+1+ν-x) ℓ_k - k ℓ_{k-1}) / (k+1+ν)`, is run with a floating
/// exponent so that large `x` neither overflows the polynomials nor
/// underflows the exponential.
pub fn laguerre_function_table(kmax: usize, nu: f64, x: f64, c: f64) -> Vec<f64> {
    const BIG: f64 = 1e150;
    let mut out = Vec::with_capacity(kmax + 1);
    let mut log_scale = -c * x;
    let mut prev = 1.0;
    let mut cur = (1.0 + nu - x) / (1.0 + nu);
    // Values are stored unscaled together with the running exponent; the
    // exponent only grows, so earlier entries are rescaled at the end.
    let mut scales = Vec::with_capacity(kmax + 1);
    out.push(prev);
    scales.push(log_scale);
    if kmax >= 1 {
        out.push(cur);
        scales.push(log_scale);
    }
    for j in 1..kmax {
        let jf = j as f64;
        let mut next = ((2.0 * jf + 1.0 + nu - x) * cur - jf * prev) / (jf + 1.0 + nu);
        if next.abs() > BIG {
            next /= BIG;
            cur /= BIG;
            log_scale += BIG.ln();
        }
        prev = cur;
        cur = next;
        out.push(cur);
        scales.push(log_scale);
    }
    out.iter()
        .zip(&scales)
        .map(|(v, s)| if *v == 0.0 { 0.0 } else { v.signum() * (v.abs().ln() + s).exp() })
        .collect()
}

/// Average of `e^{i x u_1}` over the unit sphere `S^{d-1}`, i.e.
/// `Γ(d/2) (2/x)^{d/2-1} J_{d/2-1}(x)`.
///
/// Even `d` uses the periodic trapezoid rule in the polar angle, odd `d` a
/// Gauss–Legendre rule in `cos θ`; both converge spectrally.
pub fn sphere_bessel(d: usize, x: f64) -> f64 {
    assert!(d >= 1, "sphere dimension");
    let x = x.abs();
    if d == 1 {
        return x.cos();
    }
    if x == 0.0 {
        return 1.0;
    }
    let m = 2 * (x.ceil() as usize) + d + 40;
    if d.is_multiple_of(2) {
        let p = (d - 2) as i32;
        let (mut num, mut den) = (0.0, 0.0);
        for j in 0..2 * m {
            let th = std::f64::consts::PI * j as f64 / m as f64;
            let w = th.sin().powi(p);
            num += w * (x * th.cos()).cos();
            den += w;
        }
        num / den
    } else {
        let p = ((d - 3) / 2) as i32;
        let r = legendre(m / 2 + 8);
        let (mut num, mut den) = (0.0, 0.0);
        for (s, w) in r.nodes.iter().zip(&r.weights) {
            let ww = w * (1.0 - s * s).powi(p);
            num += ww * (x * s).cos();
            den += ww;
        }
        num / den
    }
}
