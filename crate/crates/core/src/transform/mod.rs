//! Spherical transform of invariant test functions on `F(n)`, its inversion,
//! the Plancherel identity, the `M±` intertwining relations and the
//! integrability regions of spectrum functions.
//!
//! Test functions are `P(|X|², |A|²) e^{-β_v |X|² - β_z |A|²}`, optionally
//! multiplied by a polynomial in the Heisenberg coordinates of `ψ2(x)`.
//! For invariant `f` the `O(n)` average in `φ` can be dropped, so
//!
//! `f̂(r, α, λ) = ∫ f(x) e^{-ir y} e^{-iλ t} ∏_j ℓ_{α_j}(|λ| μ̂_j ρ_j / 2) e^{-|λ| μ̂_j ρ_j / 4} dx`
//!
//! with `ρ_j` the squared norm of block `j` of `X`, `y = ⟨X_p*, X⟩`, and
//! `t = ⟨A, D2(Λ̂)⟩`. Splitting `|X|² = Σ ρ_j + y² + |v|²` and
//! `|A|² = t² + |s|²` turns the integrand into a polynomial in
//! `(ρ_1, …, ρ_{p1}, y, |v|², t, |s|²)` times factors that integrate one
//! variable at a time.

mod integrability;
mod inversion;
mod intertwining;

pub use integrability::*;
pub use inversion::*;
pub use intertwining::*;

use num_complex::Complex64;

use crate::combinatorics::{LambdaFunction, MultiIndexSet};
use crate::error::{check_finite, Error, Result};
use crate::freegroup::GroupElement;
use crate::poly::Poly;
use crate::quad::{fourier_gauss_moments, gamma, gaussian_radial_moment, hermite, laguerre, ln_gamma};
use crate::special::laguerre_function_table;
use crate::spectrum::{psi2_coords, SphericalPoint, SpectrumSlice};

/// Catalog family of a test function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Gaussian,
    PolyGaussian,
    Multiplied,
}

/// Polynomial multiplier in the coordinates `(z, t) = ψ2(x)`, with
/// `γ = |z|²/2`. The operators `M±` correspond to the multipliers taken at
/// `x⁻¹`, where `t` changes sign: `M⁺` pairs with [`Multiplier::GammaHalfMinusIt`]
/// and `M⁻` with [`Multiplier::GammaHalfPlusIt`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Multiplier {
    GammaHalfPlusIt,
    GammaHalfMinusIt,
    T,
    Gamma,
}

/// An `O(n)`-invariant Schwartz function, or such a function times a multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantTestFunction {
    pub family: Family,
    /// `coeffs[i][j]` multiplies `|X|^{2i} |A|^{2j}`.
    pub coeffs: Vec<Vec<f64>>,
    pub beta_v: f64,
    pub beta_z: f64,
    pub multiplier: Option<Multiplier>,
}

impl InvariantTestFunction {
    pub fn gaussian(beta_v: f64, beta_z: f64) -> Result<Self> {
        Self::build(Family::Gaussian, vec![vec![1.0]], beta_v, beta_z)
    }

    pub fn poly_gaussian(coeffs: Vec<Vec<f64>>, beta_v: f64, beta_z: f64) -> Result<Self> {
        Self::build(Family::PolyGaussian, coeffs, beta_v, beta_z)
    }

    fn build(family: Family, coeffs: Vec<Vec<f64>>, beta_v: f64, beta_z: f64) -> Result<Self> {
        if !(beta_v > 0.0 && beta_z > 0.0 && beta_v.is_finite() && beta_z.is_finite()) {
            return Err(Error::Invalid(format!("widths must be positive, got {beta_v}, {beta_z}")));
        }
        if coeffs.is_empty() {
            return Err(Error::Invalid("empty coefficient table".into()));
        }
        for row in &coeffs {
            check_finite("test function coefficients", row)?;
        }
        Ok(Self {
            family,
            coeffs,
            beta_v,
            beta_z,
            multiplier: None,
        })
    }

    /// The same function times `m(ψ2(x))`.
    pub fn multiplied(&self, m: Multiplier) -> Result<Self> {
        if self.multiplier.is_some() {
            return Err(Error::Invalid("function already carries a multiplier".into()));
        }
        Ok(Self {
            family: Family::Multiplied,
            multiplier: Some(m),
            ..self.clone()
        })
    }

    /// The same function times a real constant.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|row| row.iter().map(|c| c * s).collect()).collect(),
            ..self.clone()
        }
    }

    pub fn is_invariant(&self) -> bool {
        self.multiplier.is_none()
    }

    /// Pointwise value.
    pub fn value(&self, g: &GroupElement, slice: &SpectrumSlice) -> Result<Complex64> {
        let x2: f64 = g.x.iter().map(|v| v * v).sum();
        let a2: f64 = g.a.iter().map(|v| v * v).sum();
        let base = self.radial(x2, a2);
        Ok(match self.multiplier {
            None => Complex64::new(base, 0.0),
            Some(m) => {
                let h = psi2_coords(g, slice)?;
                let z2: f64 = h.z.iter().map(|z| z.norm_sqr()).sum();
                let i = Complex64::new(0.0, 1.0);
                base * match m {
                    Multiplier::GammaHalfPlusIt => 0.25 * z2 + i * h.t,
                    Multiplier::GammaHalfMinusIt => 0.25 * z2 - i * h.t,
                    Multiplier::T => Complex64::new(h.t, 0.0),
                    Multiplier::Gamma => Complex64::new(0.5 * z2, 0.0),
                }
            }
        })
    }

    /// `P(x2, a2) e^{-β_v x2 - β_z a2}`.
    pub fn radial(&self, x2: f64, a2: f64) -> f64 {
        let mut p = 0.0;
        for (i, row) in self.coeffs.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                p += c * x2.powi(i as i32) * a2.powi(j as i32);
            }
        }
        p * (-self.beta_v * x2 - self.beta_z * a2).exp()
    }

    /// `L f` on `F(2)`, where `L = -(X_1² + X_2²)` acts on radial functions as
    /// `-(Δ_x + (|x|²/4) ∂_u²)`. The result stays in the polynomial-Gaussian family.
    pub fn sublaplacian_f2(&self) -> Result<Self> {
        if !self.is_invariant() {
            return Err(Error::Invalid("the sub-Laplacian is implemented for invariant functions".into()));
        }
        let c = |v: f64| Complex64::new(v, 0.0);
        let mut p = Poly::zero(2);
        for (i, row) in self.coeffs.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let mono = Poly::var(2, 0).pow(i as u32).mul(&Poly::var(2, 1).pow(j as u32));
                p = p.add(&mono.scale(c(*v)));
            }
        }
        let (bs, bw) = (c(self.beta_v), c(self.beta_z));
        let (s, w) = (Poly::var(2, 0), Poly::var(2, 1));
        // h = p e^{-β_v s - β_z w} with s = |x|², w = u².
        let ps = p.derivative(0);
        let pss = ps.derivative(0);
        let pw = p.derivative(1);
        let pww = pw.derivative(1);
        let hs = ps.add(&p.scale(-bs));
        let hss = pss.add(&ps.scale(-2.0 * bs)).add(&p.scale(bs * bs));
        let hw = pw.add(&p.scale(-bw));
        let hww = pww.add(&pw.scale(-2.0 * bw)).add(&p.scale(bw * bw));
        let lap_x = s.mul(&hss).scale(c(4.0)).add(&hs.scale(c(4.0)));
        let d2u = w.mul(&hww).scale(c(4.0)).add(&hw.scale(c(2.0)));
        let total = lap_x.add(&s.mul(&d2u).scale(c(0.25))).scale(c(-1.0));
        let di = total.degree_in(0) as usize;
        let dj = total.degree_in(1) as usize;
        let mut coeffs = vec![vec![0.0; dj + 1]; di + 1];
        for (e, v) in total.terms() {
            coeffs[e[0] as usize][e[1] as usize] = v.re;
        }
        Self::build(Family::PolyGaussian, coeffs, self.beta_v, self.beta_z)
    }

    /// `‖f‖₂²` for invariant `f`, exactly.
    pub fn l2_norm_sqr(&self, n: usize) -> Result<f64> {
        if !self.is_invariant() {
            return Err(Error::Invalid("L2 norm is implemented for invariant functions".into()));
        }
        let dz = n * (n - 1) / 2;
        let mut sum = 0.0;
        for (i1, r1) in self.coeffs.iter().enumerate() {
            for (j1, c1) in r1.iter().enumerate() {
                for (i2, r2) in self.coeffs.iter().enumerate() {
                    for (j2, c2) in r2.iter().enumerate() {
                        sum += c1
                            * c2
                            * gaussian_radial_moment(2.0 * self.beta_v, n, i1 + i2)
                            * gaussian_radial_moment(2.0 * self.beta_z, dz, j1 + j2);
                    }
                }
            }
        }
        Ok(sum)
    }

    /// `‖f‖₁` for invariant `f` by Gauss–Laguerre quadrature in `|X|²` and `|A|²`.
    pub fn l1_norm(&self, n: usize, order: usize) -> Result<f64> {
        if !self.is_invariant() {
            return Err(Error::Invalid("L1 norm is implemented for invariant functions".into()));
        }
        let dz = n * (n - 1) / 2;
        let hx = 0.5 * n as f64;
        let hz = 0.5 * dz as f64;
        let rx = laguerre(order, hx - 1.0);
        let rz = laguerre(order, (hz - 1.0).max(-0.5));
        let cx = (hx * std::f64::consts::PI.ln() - ln_gamma(hx) - hx * self.beta_v.ln()).exp();
        let mut sum = 0.0;
        for (u, wu) in rx.nodes.iter().zip(&rx.weights) {
            let x2 = u / self.beta_v;
            if dz == 1 {
                // One central coordinate: ∫_R g(a²) da = ∫ g(w/β) w^{-1/2} e^{-w} dw / √β.
                for (w, ww) in rz.nodes.iter().zip(&rz.weights) {
                    let a2 = w / self.beta_z;
                    let p = self.radial(x2, a2) * (self.beta_v * x2 + self.beta_z * a2).exp();
                    sum += wu * ww * p.abs() * cx / self.beta_z.sqrt();
                }
            } else {
                let cz = (hz * std::f64::consts::PI.ln() - ln_gamma(hz) - hz * self.beta_z.ln()).exp();
                for (w, ww) in rz.nodes.iter().zip(&rz.weights) {
                    let a2 = w / self.beta_z;
                    let p = self.radial(x2, a2) * (self.beta_v * x2 + self.beta_z * a2).exp();
                    // Weight w^{hz-1} against the rule's w^{-1/2} when hz ≥ 1/2.
                    let corr = if hz - 1.0 >= -0.5 { 1.0 } else { w.powf(hz - 0.5) };
                    sum += wu * ww * p.abs() * cx * cz * corr;
                }
            }
        }
        Ok(sum)
    }
}

/// Quadrature and grid settings for the transform engine.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    /// Starting Gauss–Laguerre order per block.
    pub radial_order: usize,
    /// Starting Gauss–Hermite order for `t` and `y`.
    pub central_order: usize,
    /// Starting Gauss–Laguerre order for the transverse radii `|v|`, `|s|`.
    pub transverse_order: usize,
    /// λ-integration covers `λ_min ≤ |λ| ≤ λ_max`.
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Gauss–Legendre order per λ-panel.
    pub lambda_order: usize,
    /// `r`-integration covers `[0, r_max]` when `r` is free.
    pub r_max: f64,
    pub r_order: usize,
    pub r_panels: usize,
    /// Target size of the neglected `α`-tail.
    pub alpha_tol: f64,
    /// Upper limit for the adaptive `α` truncation.
    pub alpha_cap: usize,
    /// Truncation `T` of the certificate and intertwining grids. Shell
    /// stabilization compares the halves of the table, so the peak of
    /// `|∂_λ^m f̂| κ^N` must fall below `T/2` at the smallest grid `|λ|`.
    pub truncation: usize,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            radial_order: 16,
            central_order: 24,
            transverse_order: 16,
            lambda_min: 1e-3,
            lambda_max: 16.0,
            lambda_order: 16,
            r_max: 10.0,
            r_order: 16,
            r_panels: 8,
            alpha_tol: 1e-15,
            alpha_cap: 200_000,
            truncation: 120,
            mc_samples: 200_000,
            seed: 0,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        let orders = [
            ("radial_order", self.radial_order),
            ("central_order", self.central_order),
            ("transverse_order", self.transverse_order),
            ("lambda_order", self.lambda_order),
            ("r_order", self.r_order),
        ];
        for (name, o) in orders {
            if o < 4 {
                return Err(Error::Invalid(format!("{name} must be at least 4, got {o}")));
            }
        }
        if !(self.lambda_min > 0.0 && self.lambda_max > self.lambda_min && self.lambda_max.is_finite()) {
            return Err(Error::Invalid(format!(
                "need 0 < lambda_min < lambda_max, got {} and {}",
                self.lambda_min, self.lambda_max
            )));
        }
        if !(self.r_max > 0.0 && self.r_max.is_finite()) || self.r_panels == 0 {
            return Err(Error::Invalid("r_max must be positive with at least one panel".into()));
        }
        if !(self.alpha_tol > 0.0 && self.alpha_tol < 1.0) {
            return Err(Error::Invalid(format!("alpha_tol must lie in (0, 1), got {}", self.alpha_tol)));
        }
        Ok(())
    }
}

/// Variable layout of the reduced integrand polynomial.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Vars {
    pub p1: usize,
    /// Dimension of the `X_p*` direction (0 or 1).
    pub dy: usize,
    /// Transverse first-layer dimension `n - 2 p0 - dy`.
    pub dv: usize,
    /// Transverse central dimension `n(n-1)/2 - 1`.
    pub ds: usize,
}

impl Vars {
    pub fn of(slice: &SpectrumSlice) -> Self {
        let rest = slice.n - 2 * slice.p0();
        let dy = usize::from(rest > 0);
        Self {
            p1: slice.blocks.p1(),
            dy,
            dv: rest - dy,
            ds: slice.n * (slice.n - 1) / 2 - 1,
        }
    }
    pub fn count(&self) -> usize {
        self.p1 + 4
    }
    pub fn y(&self) -> usize {
        self.p1
    }
    pub fn v(&self) -> usize {
        self.p1 + 1
    }
    pub fn t(&self) -> usize {
        self.p1 + 2
    }
    pub fn s(&self) -> usize {
        self.p1 + 3
    }
}

fn real(nv: usize, c: f64) -> Poly {
    Poly::constant(nv, Complex64::new(c, 0.0))
}

/// The polynomial part of the reduced integrand of `f`.
pub(crate) fn integrand_poly(f: &InvariantTestFunction, slice: &SpectrumSlice) -> Poly {
    let vars = Vars::of(slice);
    let nv = vars.count();
    let mut x2 = Poly::zero(nv);
    for j in 0..vars.p1 {
        x2 = x2.add(&Poly::var(nv, j));
    }
    if vars.dy > 0 {
        x2 = x2.add(&Poly::var(nv, vars.y()).pow(2));
    }
    if vars.dv > 0 {
        x2 = x2.add(&Poly::var(nv, vars.v()));
    }
    let mut a2 = Poly::var(nv, vars.t()).pow(2);
    if vars.ds > 0 {
        a2 = a2.add(&Poly::var(nv, vars.s()));
    }
    let mut p = Poly::zero(nv);
    for (i, row) in f.coeffs.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            if *c != 0.0 {
                p = p.add(&x2.pow(i as u32).mul(&a2.pow(j as u32)).scale(Complex64::new(*c, 0.0)));
            }
        }
    }
    match f.multiplier {
        None => p,
        Some(m) => p.mul(&multiplier_poly(m, slice, &vars)),
    }
}

fn multiplier_poly(m: Multiplier, slice: &SpectrumSlice, vars: &Vars) -> Poly {
    let nv = vars.count();
    let mut z2 = Poly::zero(nv);
    for (j, u) in slice.mu_hat.iter().enumerate() {
        z2 = z2.add(&Poly::var(nv, j).scale(Complex64::new(*u, 0.0)));
    }
    let t = Poly::var(nv, vars.t());
    let i = Complex64::new(0.0, 1.0);
    match m {
        Multiplier::GammaHalfPlusIt => z2.scale(Complex64::new(0.25, 0.0)).add(&t.scale(i)),
        Multiplier::GammaHalfMinusIt => z2.scale(Complex64::new(0.25, 0.0)).add(&t.scale(-i)),
        Multiplier::T => t,
        Multiplier::Gamma => z2.scale(Complex64::new(0.5, 0.0)),
    }
}

/// One-variable moments of the reduced integrand at a fixed `(r, λ)`.
struct Moments {
    /// `block[j][α][k] = ∫_{R^{2m_j}} ρ^k ℓ_α(cρ) e^{-(β_v + c/2) ρ} dx`.
    block: Vec<Vec<Vec<f64>>>,
    y: Vec<Complex64>,
    v: Vec<f64>,
    t: Vec<Complex64>,
    s: Vec<f64>,
}

fn falling(a: usize, i: usize) -> f64 {
    (0..i).map(|l| a as f64 - l as f64).product()
}

fn rising(a: f64, i: usize) -> f64 {
    (0..i).map(|l| a + l as f64).product()
}

fn binom(k: usize, i: usize) -> f64 {
    (0..i).map(|l| (k - l) as f64 / (l + 1) as f64).product()
}

/// Closed form. With `p = β + c/2` and `q = (β - c/2)/p`, the `k = 0`
/// moment is `π^m q^α / p^m`; higher `k` are `(-∂_β)^k` of it, expanded by
/// the Leibniz rule on `(p - c)^α p^{-(α+m)}`.
fn block_moments_closed(m: usize, beta: f64, c: f64, t: usize, kmax: usize) -> Vec<Vec<f64>> {
    let p = beta + 0.5 * c;
    let q = (beta - 0.5 * c) / p;
    let pim = std::f64::consts::PI.powi(m as i32);
    (0..=t)
        .map(|alpha| {
            (0..=kmax)
                .map(|k| {
                    let mut sum = 0.0;
                    for i in 0..=k.min(alpha) {
                        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                        sum += sign
                            * binom(k, i)
                            * falling(alpha, i)
                            * rising((alpha + m) as f64, k - i)
                            * q.powi((alpha - i) as i32);
                    }
                    pim * sum / p.powi((m + k) as i32)
                })
                .collect()
        })
        .collect()
}

/// The same moments by Gauss–Laguerre quadrature in `u = pρ`.
/// With `abs`, the summands enter by magnitude, which gives the scale that
/// bounds the rounding error of the oscillatory sums.
fn block_moments_quad(m: usize, beta: f64, c: f64, t: usize, kmax: usize, order: usize, abs: bool) -> Vec<Vec<f64>> {
    let p = beta + 0.5 * c;
    let rule = laguerre(order, (m - 1) as f64);
    let pre = std::f64::consts::PI.powi(m as i32) / gamma(m as f64);
    let mut out = vec![vec![0.0; kmax + 1]; t + 1];
    for (u, w) in rule.nodes.iter().zip(&rule.weights) {
        let ell = laguerre_function_table(t, (m - 1) as f64, c * u / p, 0.0);
        for (alpha, l) in ell.iter().enumerate() {
            for (k, slot) in out[alpha].iter_mut().enumerate() {
                let v = w * u.powi(k as i32) * l;
                *slot += if abs { v.abs() } else { v };
            }
        }
    }
    for row in &mut out {
        for (k, v) in row.iter_mut().enumerate() {
            *v *= pre / p.powi((m + k) as i32);
        }
    }
    out
}

fn hermite_fourier(beta: f64, omega: f64, kmax: usize, order: usize, abs: bool) -> Vec<Complex64> {
    let rule = hermite(order);
    let sb = beta.sqrt();
    (0..=kmax)
        .map(|k| {
            rule.nodes
                .iter()
                .zip(&rule.weights)
                .map(|(x, w)| {
                    let y = x / sb;
                    let mag = w * y.powi(k as i32) / sb;
                    if abs {
                        Complex64::new(mag.abs(), 0.0)
                    } else {
                        Complex64::from_polar(mag, -omega * y)
                    }
                })
                .sum()
        })
        .collect()
}

fn laguerre_radial_moments(beta: f64, d: usize, qmax: usize, order: usize) -> Vec<f64> {
    if d == 0 {
        return (0..=qmax).map(|q| if q == 0 { 1.0 } else { 0.0 }).collect();
    }
    let h = 0.5 * d as f64;
    let rule = laguerre(order, h - 1.0);
    let pre = (h * std::f64::consts::PI.ln() - ln_gamma(h)).exp();
    (0..=qmax)
        .map(|q| {
            let s: f64 = rule.nodes.iter().zip(&rule.weights).map(|(u, w)| w * u.powi(q as i32)).sum();
            pre * s / beta.powf(h + q as f64)
        })
        .collect()
}

#[derive(Clone, Copy)]
enum MomentMethod {
    Closed,
    Quadrature { radial: usize, central: usize, transverse: usize, abs: bool },
}

fn moments(
    (bv, bz): (f64, f64),
    slice: &SpectrumSlice,
    poly: &Poly,
    r: f64,
    lambda: f64,
    t: usize,
    method: MomentMethod,
) -> Moments {
    let vars = Vars::of(slice);
    let block = (0..vars.p1)
        .map(|j| {
            let m = slice.blocks.mult[j];
            let c = 0.5 * lambda.abs() * slice.mu_hat[j];
            let kmax = poly.degree_in(j) as usize;
            match method {
                MomentMethod::Closed => block_moments_closed(m, bv, c, t, kmax),
                MomentMethod::Quadrature { radial, abs, .. } => {
                    let order = radial.max((t + kmax) / 2 + m + 2);
                    block_moments_quad(m, bv, c, t, kmax, order, abs)
                }
            }
        })
        .collect();
    let ky = poly.degree_in(vars.y()) as usize;
    let kv = poly.degree_in(vars.v()) as usize;
    let kt = poly.degree_in(vars.t()) as usize;
    let ks = poly.degree_in(vars.s()) as usize;
    let y = if vars.dy == 0 {
        vec![Complex64::new(1.0, 0.0)]
    } else {
        match method {
            MomentMethod::Closed => fourier_gauss_moments(bv, r, ky),
            MomentMethod::Quadrature { central, abs, .. } => hermite_fourier(bv, r, ky, central, abs),
        }
    };
    let (t_m, v, s) = match method {
        MomentMethod::Closed => (
            fourier_gauss_moments(bz, lambda, kt),
            (0..=kv).map(|q| gaussian_radial_moment(bv, vars.dv, q)).collect(),
            (0..=ks).map(|q| gaussian_radial_moment(bz, vars.ds, q)).collect(),
        ),
        MomentMethod::Quadrature { central, transverse, abs, .. } => (
            hermite_fourier(bz, lambda, kt, central, abs),
            laguerre_radial_moments(bv, vars.dv, kv, transverse),
            laguerre_radial_moments(bz, vars.ds, ks, transverse),
        ),
    };
    Moments {
        block,
        y,
        v,
        t: t_m,
        s,
    }
}

/// Assemble `Σ_terms c ∏ moments` for every `α` of `set`, together with the
/// sum of the magnitudes of the contributions (a conditioning scale).
fn assemble(poly: &Poly, mom: &Moments, vars: &Vars, set: &MultiIndexSet) -> (Vec<Complex64>, Vec<f64>) {
    let consts: Vec<(&[u32], Complex64)> = poly
        .terms()
        .map(|(e, c)| {
            let k = c
                * mom.y[e[vars.y()] as usize]
                * mom.v[e[vars.v()] as usize]
                * mom.t[e[vars.t()] as usize]
                * mom.s[e[vars.s()] as usize];
            (e, k)
        })
        .collect();
    let mut values = Vec::with_capacity(set.len());
    let mut scales = Vec::with_capacity(set.len());
    for al in set.iter() {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut mag = 0.0;
        for (e, k) in &consts {
            let b: f64 = (0..vars.p1).map(|j| mom.block[j][al.0[j]][e[j] as usize]).product();
            acc += k * b;
            mag += k.norm() * b.abs();
        }
        values.push(acc);
        scales.push(mag);
    }
    (values, scales)
}

/// `f̂(r, α, λ)` for all `|α| ≤ t`, from closed-form one-variable moments.
pub fn transform_table(
    f: &InvariantTestFunction,
    slice: &SpectrumSlice,
    r: f64,
    lambda: f64,
    t: usize,
) -> Result<LambdaFunction> {
    table_from_poly(&integrand_poly(f, slice), (f.beta_v, f.beta_z), slice, r, lambda, t)
}

/// Transform table of `poly · e^{-β_v |X|² - β_z |A|²}` with `poly` in the
/// reduced variables of [`Vars`].
pub(crate) fn table_from_poly(
    poly: &Poly,
    betas: (f64, f64),
    slice: &SpectrumSlice,
    r: f64,
    lambda: f64,
    t: usize,
) -> Result<LambdaFunction> {
    check_type1(slice, r, lambda)?;
    let vars = Vars::of(slice);
    let mom = moments(betas, slice, poly, r, lambda, t, MomentMethod::Closed);
    let set = std::sync::Arc::new(MultiIndexSet::new(vars.p1, t));
    let (values, _) = assemble(poly, &mom, &vars, &set);
    if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::NonFinite("transform table"));
    }
    Ok(LambdaFunction {
        blocks: slice.blocks.clone(),
        set,
        values,
    })
}

fn check_type1(slice: &SpectrumSlice, r: f64, lambda: f64) -> Result<()> {
    let alpha = vec![0; slice.blocks.p1()];
    slice.validate_point(&SphericalPoint::Type1 { r, alpha, lambda })
}

/// Relative change allowed under order doubling.
pub const DOUBLING_TOL: f64 = 1e-8;

/// `f̂(ψ)` at one spectrum point by tensor-product quadrature, one variable
/// at a time: Gauss–Laguerre in each block radius and the transverse radii,
/// Gauss–Hermite in `t` and `y`. Orders double until two successive values
/// agree to [`DOUBLING_TOL`] relative to the magnitude of the contributions.
pub fn forward_transform(
    f: &InvariantTestFunction,
    point: &SphericalPoint,
    slice: &SpectrumSlice,
    quad: &QuadratureSpec,
) -> Result<Complex64> {
    quad.validate()?;
    slice.validate_point(point)?;
    match point {
        SphericalPoint::Type2 { r } => type2_transform(f, slice, *r),
        SphericalPoint::Type1 { r, alpha, lambda } => {
            let poly = integrand_poly(f, slice);
            let vars = Vars::of(slice);
            let t: usize = alpha.iter().sum();
            let set = MultiIndexSet::new(vars.p1, t);
            let idx = set
                .index_of(&crate::combinatorics::MultiIndex(alpha.clone()))
                .expect("alpha lies in its own degree set");
            let run = |scale: usize, abs: bool| {
                let method = MomentMethod::Quadrature {
                    radial: quad.radial_order * scale,
                    central: quad.central_order * scale,
                    transverse: quad.transverse_order * scale,
                    abs,
                };
                let mom = moments((f.beta_v, f.beta_z), slice, &poly, *r, *lambda, t, method);
                let (v, s) = assemble(&poly, &mom, &vars, &set);
                (v[idx], s[idx])
            };
            let mut prev = run(1, false).0;
            for scale in [2usize, 4, 8, 16] {
                let cur = run(scale, false).0;
                let mag = run(scale, true).1;
                if (cur - prev).norm() <= DOUBLING_TOL * mag.max(cur.norm()) {
                    return Ok(cur);
                }
                prev = cur;
            }
            Err(Error::Truncation(format!(
                "quadrature did not converge under order doubling; last value {prev}"
            )))
        }
    }
}

/// Type-2 transform `∫ f(x) j_n(r|X|) dx`, using that the sphere average of
/// `e^{-i⟨ξ,X⟩}` is `j_n(|ξ||X|)`: the `|X|^{2i}` moments are
/// `(-Δ_ξ)^i (π/β)^{n/2} e^{-|ξ|²/(4β)}` at `|ξ| = r`.
fn type2_transform(f: &InvariantTestFunction, slice: &SpectrumSlice, r: f64) -> Result<Complex64> {
    if !f.is_invariant() {
        return Err(Error::Invalid("type-2 transforms are implemented for invariant functions".into()));
    }
    let n = slice.n;
    let dz = n * (n - 1) / 2;
    let kappa = 0.25 / f.beta_v;
    let s = r * r;
    let mut poly = real(1, (std::f64::consts::PI / f.beta_v).powf(0.5 * n as f64));
    let mut xm = Vec::new();
    for _ in 0..f.coeffs.len() {
        xm.push(poly.eval(&[s]).re * (-kappa * s).exp());
        // (-Δ) on p(s) e^{-κs} with s = |ξ|² in R^n.
        let d1 = poly.derivative(0);
        let d2 = d1.derivative(0);
        let sv = Poly::var(1, 0);
        let k = Complex64::new(kappa, 0.0);
        let inner = d2.add(&d1.scale(-2.0 * k)).add(&poly.scale(k * k));
        let lap = sv.mul(&inner).scale(Complex64::new(4.0, 0.0)).add(&d1.add(&poly.scale(-k)).scale(Complex64::new(2.0 * n as f64, 0.0)));
        poly = lap.scale(Complex64::new(-1.0, 0.0));
    }
    let mut sum = 0.0;
    for (i, row) in f.coeffs.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            sum += c * xm[i] * gaussian_radial_moment(f.beta_z, dz, j);
        }
    }
    Ok(Complex64::new(sum, 0.0))
}
