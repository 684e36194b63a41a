//! Cached Gauss rules and the closed-form one-dimensional moments used by
//! the transform engine.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::{GaussHermite, GaussLaguerre, GaussLegendre};
use num_complex::Complex64;

/// Nodes and weights of a rule.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Affine map of a rule on `[-1, 1]` onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> Rule {
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        Rule {
            nodes: self.nodes.iter().map(|x| c + h * x).collect(),
            weights: self.weights.iter().map(|w| h * w).collect(),
        }
    }
}

/// Gauss–Legendre rule on `[-1, 1]`, `deg ≥ 1`.
pub fn legendre(deg: usize) -> Arc<Rule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Rule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(r) = cache.lock().unwrap().get(&deg) {
        return r.clone();
    }
    let rule = if deg == 1 {
        Rule {
            nodes: vec![0.0],
            weights: vec![2.0],
        }
    } else {
        let q = GaussLegendre::new(deg).expect("degree at least 2");
        let mut pairs = q.as_node_weight_pairs().to_vec();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Rule {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    };
    let rule = Arc::new(rule);
    cache.lock().unwrap().insert(deg, rule.clone());
    rule
}

/// Gauss–Hermite rule for the weight `e^{-x²}` on `R`, `deg ≥ 2`.
pub fn hermite(deg: usize) -> Arc<Rule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Rule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let deg = deg.max(2);
    if let Some(r) = cache.lock().unwrap().get(&deg) {
        return r.clone();
    }
    let q = GaussHermite::new(deg).expect("degree at least 2");
    let mut pairs = q.as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let rule = Arc::new(Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    });
    cache.lock().unwrap().insert(deg, rule.clone());
    rule
}

/// Gauss–Laguerre rule for the weight `u^alpha e^{-u}` on `(0, ∞)`.
///
/// Nodes come from `gauss-quad` and get two Newton steps; weights are then
/// recomputed in log space from `w_i = Γ(n+α+1) x_i / (n! (n+α)² L_{n-1}(x_i)²)`.
/// The eigenvector-based weights are accurate only in absolute terms, which
/// is useless once integrands are compensated by `e^{u}` at large nodes.
pub fn laguerre(deg: usize, alpha: f64) -> Arc<Rule> {
    type Cache = Mutex<HashMap<(usize, u64), Arc<Rule>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (deg.max(2), alpha.to_bits());
    if let Some(r) = cache.lock().unwrap().get(&key) {
        return r.clone();
    }
    let q = GaussLaguerre::new(key.0, alpha).expect("valid Gauss-Laguerre parameters");
    let mut nodes: Vec<f64> = q.as_node_weight_pairs().iter().map(|p| p.0).collect();
    nodes.sort_by(f64::total_cmp);
    let n = key.0;
    let nf = n as f64;
    let ln_const = ln_gamma(nf + alpha + 1.0) - ln_gamma(nf + 1.0) - 2.0 * (nf + alpha).ln();
    let weights = nodes
        .iter_mut()
        .map(|x| {
            for _ in 0..2 {
                let (ln_n, s_n, ln_m, s_m) = laguerre_log_pair(n, alpha, *x);
                let ratio = s_n * s_m * (ln_m - ln_n).exp();
                let step = *x / (nf - (nf + alpha) * ratio);
                if step.is_finite() {
                    *x -= step;
                }
            }
            let (_, _, ln_m, _) = laguerre_log_pair(n, alpha, *x);
            (ln_const + x.ln() - 2.0 * ln_m).exp()
        })
        .collect();
    let rule = Arc::new(Rule { nodes, weights });
    cache.lock().unwrap().insert(key, rule.clone());
    rule
}

/// `(ln|L_n|, sign L_n, ln|L_{n-1}|, sign L_{n-1})` of `L^{(α)}` at `x`.
fn laguerre_log_pair(n: usize, alpha: f64, x: f64) -> (f64, f64, f64, f64) {
    let mut prev = 1.0f64;
    let mut cur = 1.0 + alpha - x;
    let mut log_scale = 0.0;
    for j in 1..n {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + alpha - x) * cur - (jf + alpha) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
        let big = cur.abs().max(prev.abs());
        if big > 1e100 {
            cur /= big;
            prev /= big;
            log_scale += big.ln();
        }
    }
    (
        cur.abs().ln() + log_scale,
        cur.signum(),
        prev.abs().ln() + log_scale,
        prev.signum(),
    )
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// `I_k = ∫ t^k e^{-β t²} e^{-iωt} dt` for `k = 0..=kmax`.
///
/// From `I_{k+1} = (k I_{k-1} - iω I_k) / (2β)`, obtained by integrating the
/// derivative of the Gaussian by parts.
pub fn fourier_gauss_moments(beta: f64, omega: f64, kmax: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(kmax + 1);
    let i0 = (std::f64::consts::PI / beta).sqrt() * (-omega * omega / (4.0 * beta)).exp();
    out.push(Complex64::new(i0, 0.0));
    if kmax >= 1 {
        out.push(Complex64::new(0.0, -omega) * out[0] / (2.0 * beta));
    }
    for k in 1..kmax {
        let next = (out[k - 1] * k as f64 - Complex64::new(0.0, omega) * out[k]) / (2.0 * beta);
        out.push(next);
    }
    out
}

/// `∫_{R^d} |v|^{2q} e^{-β|v|²} dv = π^{d/2} Γ(d/2 + q) / (Γ(d/2) β^{d/2+q})`.
/// For `d = 0` only `q = 0` survives and the integral is 1.
pub fn gaussian_radial_moment(beta: f64, d: usize, q: usize) -> f64 {
    if d == 0 {
        return if q == 0 { 1.0 } else { 0.0 };
    }
    let h = 0.5 * d as f64;
    (h * std::f64::consts::PI.ln() + ln_gamma(h + q as f64) - ln_gamma(h) - (h + q as f64) * beta.ln())
        .exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let r = legendre(6);
        let v: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(10)).sum();
        assert!((v - 2.0 / 11.0).abs() < 1e-14);
        let m = r.mapped(0.0, 3.0);
        let v: f64 = m.nodes.iter().zip(&m.weights).map(|(x, w)| w * x * x).sum();
        assert!((v - 9.0).abs() < 1e-13);
    }

    #[test]
    fn laguerre_reproduces_gamma() {
        let r = laguerre(12, 1.5);
        let v: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(3)).sum();
        assert!((v / gamma(5.5) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn laguerre_weights_are_relatively_accurate() {
        let r = laguerre(200, 0.0);
        let v: f64 = r.weights.iter().sum();
        assert!((v - 1.0).abs() < 1e-11, "{v}");
        // ∫ e^{-0.3u} du = 1/0.3 evaluated through the e^{u} compensation.
        let v: f64 = r.nodes.iter().zip(&r.weights).map(|(u, w)| w * (0.7 * u).exp()).sum();
        assert!((v - 1.0 / 0.3).abs() < 1e-8, "{v}");
        assert!(r.weights.iter().all(|w| w.is_finite() && *w >= 0.0));
    }

    #[test]
    fn fourier_gauss_against_quadrature() {
        let (beta, omega) = (0.8, 1.7);
        let m = fourier_gauss_moments(beta, omega, 5);
        let r = legendre(200).mapped(-12.0, 12.0);
        for (k, mk) in m.iter().enumerate() {
            let q: Complex64 = r
                .nodes
                .iter()
                .zip(&r.weights)
                .map(|(t, w)| {
                    Complex64::from_polar(w * t.powi(k as i32) * (-beta * t * t).exp(), -omega * t)
                })
                .sum();
            assert!((q - mk).norm() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn hermite_moments() {
        let r = hermite(20);
        let v: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(4)).sum();
        assert!((v - 0.75 * std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn gaussian_moment_in_two_dimensions() {
        // ∫_{R²} |v|² e^{-|v|²} = π.
        assert!((gaussian_radial_moment(1.0, 2, 1) - std::f64::consts::PI).abs() < 1e-14);
        assert_eq!(gaussian_radial_moment(2.0, 0, 0), 1.0);
    }
}
