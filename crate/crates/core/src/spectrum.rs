//! The Gelfand spectrum of `(O(n), F(n))` on a fixed orbit slice.
//!
//! A slice fixes the block structure `m`, the normalized distinct values
//! `μ̂` with `Σ m_j μ̂_j² = 1`, and a unit vector `X_p*` in the coordinates
//! after the first `2 p0`. Type-1 points `(r, α, λ)` scale the slice by `|λ|`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;

use crate::combinatorics::{
    d_minus_at, d_plus_at, shell_stabilization, LambdaFunction, MultiIndex, MultiIndexSet,
};
use crate::error::{check_finite, check_len, Error, Result};
use crate::freegroup::{act_orthogonal, coords_from_skew, d2, z_inner, GroupElement};
use crate::haar::{haar_orthogonal, mc_mean};
use crate::heisenberg::{omega_type1, BlockStructure, HeisenbergPoint};
use crate::quad::legendre;
use crate::special::sphere_bessel;

/// Tolerance on `Σ m_j μ̂_j² = 1` and on `|X_p*| = 1`.
pub const NORM_TOL: f64 = 1e-14;

/// A normalized orbit slice.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSlice {
    pub n: usize,
    pub blocks: BlockStructure,
    /// Strictly decreasing positive values, one per block.
    pub mu_hat: Vec<f64>,
    /// Unit vector of length `n - 2 p0`; empty when `2 p0 = n`.
    pub xp_star: Vec<f64>,
}

impl SpectrumSlice {
    pub fn new(n: usize, mult: Vec<usize>, mu_hat: Vec<f64>, xp_star: Vec<f64>) -> Result<Self> {
        let blocks = BlockStructure::new(mult)?;
        check_len("mu_hat", blocks.p1(), mu_hat.len())?;
        check_finite("mu_hat", &mu_hat)?;
        check_finite("xp_star", &xp_star)?;
        if 2 * blocks.p0() > n {
            return Err(Error::Invalid(format!(
                "blocks need 2 p0 = {} coordinates but n = {n}",
                2 * blocks.p0()
            )));
        }
        if mu_hat.iter().any(|&m| m <= 0.0) || mu_hat.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::Invalid("mu_hat must be positive and strictly decreasing".into()));
        }
        let norm: f64 = blocks.mult.iter().zip(&mu_hat).map(|(&m, u)| m as f64 * u * u).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Invalid(format!("sum of m_j mu_hat_j^2 is {norm}, expected 1")));
        }
        check_len("xp_star", n - 2 * blocks.p0(), xp_star.len())?;
        if !xp_star.is_empty() {
            let len: f64 = xp_star.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (len - 1.0).abs() > NORM_TOL {
                return Err(Error::Invalid(format!("xp_star has length {len}, expected 1")));
            }
        }
        Ok(Self {
            n,
            blocks,
            mu_hat,
            xp_star,
        })
    }

    /// Like [`SpectrumSlice::new`] but rescales `mu` and `xp_star` to unit
    /// norm first. The flag reports whether `mu` needed rescaling.
    pub fn normalized(n: usize, mult: Vec<usize>, mu: Vec<f64>, xp_star: Vec<f64>) -> Result<(Self, bool)> {
        check_len("mu_hat", mult.len(), mu.len())?;
        let norm: f64 = mult.iter().zip(&mu).map(|(&m, u)| m as f64 * u * u).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Invalid("mu_hat has zero or non-finite norm".into()));
        }
        let changed = (norm - 1.0).abs() > NORM_TOL;
        let mu = if changed { mu.iter().map(|u| u / norm).collect() } else { mu };
        let len: f64 = xp_star.iter().map(|v| v * v).sum::<f64>().sqrt();
        let xp_star = if len > 0.0 && (len - 1.0).abs() > NORM_TOL {
            xp_star.iter().map(|v| v / len).collect()
        } else {
            xp_star
        };
        Ok((Self::new(n, mult, mu, xp_star)?, changed))
    }

    /// One block of multiplicity `floor(n/2)`, `X_p* = e_1` when there is room.
    pub fn default_for(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Invalid(format!("F(n) needs n >= 2, got {n}")));
        }
        let m = n / 2;
        let xp = if n % 2 == 1 { vec![1.0] } else { vec![] };
        Self::new(n, vec![m], vec![1.0 / (m as f64).sqrt()], xp)
    }

    pub fn p0(&self) -> usize {
        self.blocks.p0()
    }

    pub fn a(&self) -> usize {
        self.blocks.a()
    }

    /// `r` is pinned to 0 when the slice fills all of `R^n`.
    pub fn r_is_free(&self) -> bool {
        2 * self.p0() < self.n
    }

    /// `μ̂` repeated per pair, length `p0`.
    pub fn pair_values(&self) -> Vec<f64> {
        self.blocks
            .mult
            .iter()
            .zip(&self.mu_hat)
            .flat_map(|(&m, &u)| std::iter::repeat_n(u, m))
            .collect()
    }

    /// `D2(Λ̂)` as an `n × n` skew matrix.
    pub fn d2_hat(&self) -> DMatrix<f64> {
        d2(self.n, &self.pair_values())
    }

    pub fn validate_point(&self, p: &SphericalPoint) -> Result<()> {
        let r = p.r();
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::Invalid(format!("r must be finite and nonnegative, got {r}")));
        }
        if let SphericalPoint::Type1 { alpha, lambda, .. } = p {
            check_len("multi-index", self.blocks.p1(), alpha.len())?;
            if *lambda == 0.0 || !lambda.is_finite() {
                return Err(Error::Invalid(format!("type-1 lambda must be finite and nonzero, got {lambda}")));
            }
            if r != 0.0 && !self.r_is_free() {
                return Err(Error::Invalid("r must be 0 when 2 p0 = n".into()));
            }
        }
        Ok(())
    }
}

/// A point of the spectrum.
#[derive(Debug, Clone, PartialEq)]
pub enum SphericalPoint {
    Type1 { r: f64, alpha: Vec<usize>, lambda: f64 },
    Type2 { r: f64 },
}

impl SphericalPoint {
    pub fn r(&self) -> f64 {
        match self {
            SphericalPoint::Type1 { r, .. } | SphericalPoint::Type2 { r } => *r,
        }
    }
}

/// Coordinates of the image of `g` in `H_{p0}`: `z_j = sqrt(μ̂_{b(j)}) (x_{2j-1} + i x_{2j})`,
/// `t = ⟨A, D2(Λ̂)⟩`. The map is a group homomorphism onto `H_{p0}`.
pub fn psi2_coords(g: &GroupElement, slice: &SpectrumSlice) -> Result<HeisenbergPoint> {
    check_len("group element", slice.n, g.n())?;
    let z = slice
        .pair_values()
        .iter()
        .enumerate()
        .map(|(j, u)| Complex64::new(g.x[2 * j], g.x[2 * j + 1]) * u.sqrt())
        .collect();
    let t = z_inner(&g.a, &coords_from_skew(&slice.d2_hat()))?;
    Ok(HeisenbergPoint::new(z, t))
}

/// How to average over `O(n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Averaging {
    /// Exact reduction for `n = 2, 3`, and the Bessel form for type 2.
    ClosedForm,
    MonteCarlo { samples: usize, seed: u64 },
}

/// A spherical-function value and the standard error of its estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalValue {
    pub value: Complex64,
    /// Zero for closed forms.
    pub std_err: f64,
}

/// `e^{ir⟨X_p*, x⟩} ω_{α,λ}(ψ2(g))` before averaging over `K`.
fn type1_integrand(r: f64, alpha: &[usize], lambda: f64, g: &GroupElement, slice: &SpectrumSlice) -> Result<Complex64> {
    let h = psi2_coords(g, slice)?;
    let w = omega_type1(alpha, lambda, &slice.blocks, &h)?;
    let proj: f64 = slice.xp_star.iter().zip(&g.x[2 * slice.p0()..]).map(|(p, x)| p * x).sum();
    Ok(w * Complex64::from_polar(1.0, r * proj))
}

/// Evaluate a bounded spherical function at `g`.
pub fn eval_spherical(
    point: &SphericalPoint,
    g: &GroupElement,
    slice: &SpectrumSlice,
    avg: Averaging,
) -> Result<SphericalValue> {
    slice.validate_point(point)?;
    check_len("group element", slice.n, g.n())?;
    let xnorm = g.x.iter().map(|v| v * v).sum::<f64>().sqrt();
    match (point, avg) {
        (SphericalPoint::Type2 { r }, Averaging::ClosedForm) => Ok(SphericalValue {
            value: Complex64::new(sphere_bessel(slice.n, r * xnorm), 0.0),
            std_err: 0.0,
        }),
        (SphericalPoint::Type2 { r }, Averaging::MonteCarlo { samples, seed }) => {
            let n = slice.n;
            let est = mc_mean(samples, seed, |rng: &mut ChaCha8Rng| {
                let k = haar_orthogonal(n, rng);
                let kx = &k * DVector::from_column_slice(&g.x);
                Complex64::from_polar(1.0, r * kx[0])
            });
            Ok(SphericalValue {
                value: est.mean,
                std_err: est.std_err,
            })
        }
        (SphericalPoint::Type1 { r, alpha, lambda }, Averaging::ClosedForm) => {
            let value = match slice.n {
                2 => {
                    let flip = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
                    let a = type1_integrand(*r, alpha, *lambda, g, slice)?;
                    let b = type1_integrand(*r, alpha, *lambda, &act_orthogonal(&flip, g)?, slice)?;
                    0.5 * (a + b)
                }
                3 => f3_sphere_average(*r, alpha, *lambda, g, slice, xnorm)?,
                n => {
                    return Err(Error::Invalid(format!(
                        "no closed-form type-1 evaluation on F({n}); use Monte Carlo"
                    )))
                }
            };
            Ok(SphericalValue { value, std_err: 0.0 })
        }
        (SphericalPoint::Type1 { r, alpha, lambda }, Averaging::MonteCarlo { samples, seed }) => {
            let n = slice.n;
            let est = mc_mean(samples, seed, |rng: &mut ChaCha8Rng| {
                let k = haar_orthogonal(n, rng);
                act_orthogonal(&k, g)
                    .and_then(|kg| type1_integrand(*r, alpha, *lambda, &kg, slice))
                    .unwrap_or(Complex64::new(f64::NAN, f64::NAN))
            });
            if !(est.mean.re.is_finite() && est.mean.im.is_finite()) {
                return Err(Error::NonFinite("Monte Carlo spherical average"));
            }
            Ok(SphericalValue {
                value: est.mean,
                std_err: est.std_err,
            })
        }
    }
}

/// On `F(3)` with `p0 = 1` the integrand is invariant under rotations that
/// fix `e_3`, so the `O(3)` average reduces to the sphere of third rows
/// `u = kᵀe_3` and the sign `det k`. With `A v = w × v` the central
/// coordinate of `k.g` is `t = -μ̂ det(k) ⟨w, u⟩`, `|z|² = μ̂ (|X|² - ⟨u, X⟩²)`
/// and `(kX)_3 = ⟨u, X⟩`; the two signs of `det k` average `e^{iλt}` to a cosine.
fn f3_sphere_average(
    r: f64,
    alpha: &[usize],
    lambda: f64,
    g: &GroupElement,
    slice: &SpectrumSlice,
    xnorm: f64,
) -> Result<Complex64> {
    let am = g.center_matrix();
    let w = [am[(2, 1)], am[(0, 2)], am[(1, 0)]];
    let wnorm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mu = slice.mu_hat[0];
    let sx = slice.xp_star[0];
    let deg: usize = alpha.iter().sum();
    let x2 = xnorm * xnorm;
    let width = r * xnorm + lambda.abs() * mu * (wnorm + x2 * (deg as f64 + 1.0)) + 2.0;
    let n_phi = 2 * (width.ceil() as usize) + 24;
    let rule = legendre(n_phi / 2 + 8);
    let x = &g.x;
    let mut acc = Complex64::new(0.0, 0.0);
    for (s, wt) in rule.nodes.iter().zip(&rule.weights) {
        let c = (1.0 - s * s).max(0.0).sqrt();
        let mut ring = Complex64::new(0.0, 0.0);
        for j in 0..n_phi {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / n_phi as f64;
            let (sp, cp) = phi.sin_cos();
            let u = [c * cp, c * sp, *s];
            let ux = u[0] * x[0] + u[1] * x[1] + u[2] * x[2];
            let uw = u[0] * w[0] + u[1] * w[1] + u[2] * w[2];
            let rho = (mu * (x2 - ux * ux)).max(0.0);
            let radial = crate::heisenberg::laguerre_radial(alpha, lambda.abs(), &slice.blocks, &[rho]);
            ring += Complex64::from_polar(radial * (lambda * mu * uw).cos(), r * sx * ux);
        }
        acc += ring * (wt / (2.0 * n_phi as f64));
    }
    Ok(acc)
}

/// Eigenvalue `κ = |λ| Σ μ̂_j (2α_j + m_j) + r²` of the sub-Laplacian.
pub fn kappa(point: &SphericalPoint, slice: &SpectrumSlice) -> Result<f64> {
    slice.validate_point(point)?;
    match point {
        SphericalPoint::Type1 { r, alpha, lambda } => Ok(kappa_raw(*r, alpha, *lambda, slice)),
        SphericalPoint::Type2 { .. } => Err(Error::Invalid(
            "kappa is defined on type-1 points; the type-2 eigenvalue is r^2".into(),
        )),
    }
}

pub(crate) fn kappa_raw(r: f64, alpha: &[usize], lambda: f64, slice: &SpectrumSlice) -> f64 {
    let s: f64 = alpha
        .iter()
        .zip(&slice.blocks.mult)
        .zip(&slice.mu_hat)
        .map(|((&k, &m), u)| u * (2 * k + m) as f64)
        .sum();
    lambda.abs() * s + r * r
}

/// Constants with `M1/(2|α|+a) ≤ 1/κ ≤ M2/(2|α|+a)` for all `α` at `λ = 1`.
///
/// `(2|α|+a)/κ` is linear-fractional on the orthant, so its extrema are the
/// value at `α = 0` and the limits `1/μ̂_j` along the coordinate rays.
pub fn laplacian_bounds(slice: &SpectrumSlice, r: f64) -> (f64, f64) {
    let a = slice.a() as f64;
    let at_zero = a / kappa_raw(r, &vec![0; slice.blocks.p1()], 1.0, slice);
    let rays = slice.mu_hat.iter().map(|u| 1.0 / u);
    let m1 = rays.clone().fold(at_zero, f64::min);
    let m2 = rays.fold(at_zero, f64::max);
    (m1, m2)
}

/// Largest relative violation of the bounds over all `|α| ≤ max_degree`, and
/// the number of indices visited.
pub fn laplacian_bounds_violation(slice: &SpectrumSlice, r: f64, bounds: (f64, f64), max_degree: usize) -> (f64, usize) {
    let p1 = slice.blocks.p1();
    let a = slice.a() as f64;
    let mut alpha = vec![0usize; p1];
    let mut worst = 0.0f64;
    let mut count = 0usize;
    // Odometer over the box, skipping indices above the degree cap.
    loop {
        let deg: usize = alpha.iter().sum();
        if deg <= max_degree {
            let q = (2.0 * deg as f64 + a) / kappa_raw(r, &alpha, 1.0, slice);
            worst = worst.max((bounds.0 - q) / q).max((q - bounds.1) / q);
            count += 1;
        }
        let mut j = 0;
        loop {
            if j == p1 {
                return (worst, count);
            }
            alpha[j] += 1;
            if alpha.iter().sum::<usize>() <= max_degree {
                break;
            }
            alpha[j] = 0;
            j += 1;
        }
    }
}

/// A function on the type-1 part of the spectrum, produced one `α`-table at
/// a time.
pub trait SpectrumFunction: Send + Sync {
    fn blocks(&self) -> &BlockStructure;

    /// Values at `(r, λ)` for all `|α| ≤ t`.
    fn table(&self, r: f64, lambda: f64, t: usize) -> Result<LambdaFunction>;

    /// Exact `∂_λ^order` table, when the function knows it.
    fn d_lambda_table(&self, _r: f64, _lambda: f64, _t: usize, _order: u32) -> Option<Result<LambdaFunction>> {
        None
    }

    /// Degree `T` beyond which the `α`-tail at `λ` is below `tol`, when known.
    fn alpha_truncation(&self, _lambda: f64, _tol: f64, _cap: usize) -> Option<Result<usize>> {
        None
    }
}

type Derivative = Box<dyn Fn(f64, &[usize], f64, u32) -> Complex64 + Send + Sync>;

/// A spectrum function given pointwise, with an optional exact `∂_λ^k`.
pub struct FnSpectrum<F> {
    blocks: BlockStructure,
    f: F,
    derivative: Option<Derivative>,
}

impl<F> FnSpectrum<F>
where
    F: Fn(f64, &[usize], f64) -> Complex64 + Send + Sync,
{
    pub fn new(blocks: BlockStructure, f: F) -> Self {
        Self {
            blocks,
            f,
            derivative: None,
        }
    }

    /// Attach `(r, α, λ, k) ↦ ∂_λ^k G`.
    pub fn with_derivative(mut self, d: impl Fn(f64, &[usize], f64, u32) -> Complex64 + Send + Sync + 'static) -> Self {
        self.derivative = Some(Box::new(d));
        self
    }
}

impl<F> SpectrumFunction for FnSpectrum<F>
where
    F: Fn(f64, &[usize], f64) -> Complex64 + Send + Sync,
{
    fn blocks(&self) -> &BlockStructure {
        &self.blocks
    }

    fn table(&self, r: f64, lambda: f64, t: usize) -> Result<LambdaFunction> {
        Ok(LambdaFunction::from_fn(&self.blocks, t, |al| (self.f)(r, &al.0, lambda)))
    }

    fn d_lambda_table(&self, r: f64, lambda: f64, t: usize, order: u32) -> Option<Result<LambdaFunction>> {
        let d = self.derivative.as_ref()?;
        Some(Ok(LambdaFunction::from_fn(&self.blocks, t, |al| d(r, &al.0, lambda, order))))
    }
}

/// `G = e^{-κ}` on a slice, with exact λ-derivatives.
pub fn exp_minus_kappa(slice: &SpectrumSlice) -> FnSpectrum<impl Fn(f64, &[usize], f64) -> Complex64 + Send + Sync> {
    let s1 = slice.clone();
    let s2 = slice.clone();
    FnSpectrum::new(slice.blocks.clone(), move |r, al, lam| {
        Complex64::new((-kappa_raw(r, al, lam, &s1)).exp(), 0.0)
    })
    .with_derivative(move |r, al, lam, k| {
        // κ = |λ| s + r², so ∂_λ^k e^{-κ} = (-sign(λ) s)^k e^{-κ}.
        let s = kappa_raw(0.0, al, 1.0, &s2);
        let v = (-kappa_raw(r, al, lam, &s2)).exp() * (-lam.signum() * s).powi(k as i32);
        Complex64::new(v, 0.0)
    })
}

/// How `∂_λ` is taken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DLambda {
    /// Use [`SpectrumFunction::d_lambda_table`], falling back to central
    /// differences with step `1e-4 |λ|` when the function has none.
    Analytic,
    /// Richardson-extrapolated central differences with step `rel · |λ|`.
    FdRelative(f64),
    /// Same with a fixed step; rejected at nodes with `|λ| < 10 h`.
    FdAbsolute(f64),
}

impl Default for DLambda {
    fn default() -> Self {
        DLambda::FdRelative(1e-4)
    }
}

fn combine(a: &LambdaFunction, b: &LambdaFunction, f: impl Fn(Complex64, Complex64) -> Complex64) -> LambdaFunction {
    let t = a.max_degree().min(b.max_degree());
    LambdaFunction::from_fn(&a.blocks, t, |al| f(a.get_or_zero(al), b.get_or_zero(al)))
}

const ANALYTIC_FALLBACK: f64 = 1e-4;

/// `∂_λ^order G` at `(r, λ)`, degree `t`.
pub fn d_lambda(g: &dyn SpectrumFunction, r: f64, lambda: f64, t: usize, order: u32, rule: DLambda) -> Result<LambdaFunction> {
    if order == 0 {
        return g.table(r, lambda, t);
    }
    let h = match rule {
        DLambda::Analytic => match g.d_lambda_table(r, lambda, t, order) {
            Some(table) => return table,
            None => ANALYTIC_FALLBACK * lambda.abs(),
        },
        DLambda::FdRelative(rel) => rel * lambda.abs(),
        DLambda::FdAbsolute(h) => h,
    };
    if !(h > 0.0 && h.is_finite()) || lambda.abs() < 10.0 * h {
        return Err(Error::StepTooLarge { h, lambda });
    }
    // Differentiate the order-1 derivative with a fixed absolute step so
    // that nested stencils stay centred at λ.
    let inner = DLambda::FdAbsolute(h);
    let central = |step: f64| -> Result<LambdaFunction> {
        let up = d_lambda(g, r, lambda + step, t, order - 1, inner)?;
        let dn = d_lambda(g, r, lambda - step, t, order - 1, inner)?;
        Ok(combine(&up, &dn, |u, d| (u - d) / (2.0 * step)))
    };
    let coarse = central(h)?;
    let fine = central(0.5 * h)?;
    Ok(combine(&fine, &coarse, |f, c| (4.0 * f - c) / 3.0))
}

/// Which spectral operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MMode {
    Plus,
    Minus,
}

/// `M⁺G = (∂_λ - D⁺/λ) G` for `λ > 0` and `(∂_λ - D⁻/λ) G` for `λ < 0`;
/// `M⁻` swaps `D⁺` and `D⁻`.
pub struct MOp {
    inner: Arc<dyn SpectrumFunction>,
    mode: MMode,
    rule: DLambda,
}

/// Apply `M±` lazily; tables are produced on demand.
pub fn m_ops(g: Arc<dyn SpectrumFunction>, mode: MMode, rule: DLambda) -> Arc<dyn SpectrumFunction> {
    Arc::new(MOp { inner: g, mode, rule })
}

impl SpectrumFunction for MOp {
    fn blocks(&self) -> &BlockStructure {
        self.inner.blocks()
    }

    fn table(&self, r: f64, lambda: f64, t: usize) -> Result<LambdaFunction> {
        let base = self.inner.table(r, lambda, t + 1)?;
        let dl = d_lambda(self.inner.as_ref(), r, lambda, t, 1, self.rule)?;
        let use_plus = (self.mode == MMode::Plus) == (lambda > 0.0);
        let blocks = self.inner.blocks().clone();
        let lookup = |beta: &[usize]| base.get_or_zero(&MultiIndex(beta.to_vec()));
        Ok(LambdaFunction::from_fn(&blocks, t, |al| {
            let diff = if use_plus {
                d_plus_at(lookup, &al.0, &blocks)
            } else {
                d_minus_at(lookup, &al.0)
            };
            dl.get_or_zero(al) - diff / lambda
        }))
    }
}

/// Nodes on which spectrum functions are sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrid {
    pub r_nodes: Vec<f64>,
    pub lambda_nodes: Vec<f64>,
    /// Largest `|α|`.
    pub t: usize,
}

impl SpectralGrid {
    /// `|λ| ∈ {0.5, 1, 2, 4, 8}` of both signs, `T = 60`, and `r ∈ {0, 0.5, 1, 2}`
    /// when `r` is free on the slice.
    pub fn default_for(slice: &SpectrumSlice) -> Self {
        let lambdas = [0.5, 1.0, 2.0, 4.0, 8.0];
        Self {
            r_nodes: if slice.r_is_free() { vec![0.0, 0.5, 1.0, 2.0] } else { vec![0.0] },
            lambda_nodes: lambdas.iter().flat_map(|&l| [-l, l]).collect(),
            t: 60,
        }
    }
}

/// One decay constant of a certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateEntry {
    /// Operator word applied to `G`, e.g. `"M+ M- G"`.
    pub label: String,
    /// Order of the λ-derivative.
    pub m: u32,
    /// Power of κ.
    pub n: u32,
    /// `sup |∂_λ^m H| |λ|^m κ^N` over the grid.
    pub c: f64,
    pub lower_sup: f64,
    pub upper_sup: f64,
    pub pass: bool,
}

/// Outcome of [`decrease_certificate`].
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub entries: Vec<CertificateEntry>,
}

impl CertificateReport {
    pub fn pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    /// First failing entry, if any.
    pub fn first_failure(&self) -> Option<&CertificateEntry> {
        self.entries.iter().find(|e| !e.pass)
    }
}

/// Decay constants of `G` on the grid, shell by shell in `|α|`.
///
/// For `G` itself all `(m, N)` with `m ≤ m_max`, `N ≤ n_max` are certified;
/// each word `(M⁺)^l (M⁻)^k G` with `1 ≤ l + k ≤ l_max` is certified at
/// derivative order 0 for `N ≤ n_max`.
pub fn decrease_certificate(
    g: Arc<dyn SpectrumFunction>,
    slice: &SpectrumSlice,
    grid: &SpectralGrid,
    m_max: u32,
    n_max: u32,
    l_max: u32,
    rule: DLambda,
) -> Result<CertificateReport> {
    if grid.t < 2 {
        return Err(Error::Truncation("certificate needs T >= 2".into()));
    }
    let mut entries = Vec::new();
    let orders: Vec<u32> = (0..=m_max).collect();
    certify_one(g.as_ref(), "G", &orders, slice, grid, n_max, rule, &mut entries)?;
    for total in 1..=l_max {
        for l in (0..=total).rev() {
            let k = total - l;
            let mut h = g.clone();
            for _ in 0..k {
                h = m_ops(h, MMode::Minus, rule);
            }
            for _ in 0..l {
                h = m_ops(h, MMode::Plus, rule);
            }
            let label = std::iter::repeat_n("M+", l as usize)
                .chain(std::iter::repeat_n("M-", k as usize))
                .chain(std::iter::once("G"))
                .collect::<Vec<_>>()
                .join(" ");
            certify_one(h.as_ref(), &label, &[0], slice, grid, n_max, rule, &mut entries)?;
        }
    }
    Ok(CertificateReport { entries })
}

#[allow(clippy::too_many_arguments)]
fn certify_one(
    g: &dyn SpectrumFunction,
    label: &str,
    orders: &[u32],
    slice: &SpectrumSlice,
    grid: &SpectralGrid,
    n_max: u32,
    rule: DLambda,
    out: &mut Vec<CertificateEntry>,
) -> Result<()> {
    let set = Arc::new(MultiIndexSet::new(slice.blocks.p1(), grid.t));
    for &m in orders {
        // shell_sup[N][shell]
        let mut shell_sup = vec![vec![0.0f64; grid.t + 1]; n_max as usize + 1];
        for &r in &grid.r_nodes {
            for &lam in &grid.lambda_nodes {
                let table = d_lambda(g, r, lam, grid.t, m, rule)?;
                for shell in 0..=grid.t {
                    for i in set.shell(shell) {
                        let al = set.get(i);
                        let v = table.get_or_zero(al).norm() * lam.abs().powi(m as i32);
                        if !v.is_finite() {
                            return Err(Error::NonFinite("spectrum function on the certificate grid"));
                        }
                        let kap = kappa_raw(r, &al.0, lam, slice);
                        for (nn, row) in shell_sup.iter_mut().enumerate() {
                            row[shell] = row[shell].max(v * kap.powi(nn as i32));
                        }
                    }
                }
            }
        }
        for (nn, row) in shell_sup.iter().enumerate() {
            let (lower_sup, upper_sup, pass) = shell_stabilization(row);
            out.push(CertificateEntry {
                label: label.to_string(),
                m,
                n: nn as u32,
                c: row.iter().copied().fold(0.0, f64::max),
                lower_sup,
                upper_sup,
                pass,
            });
        }
    }
    Ok(())
}

/// Block unitaries `ψ1(k1)` with `ψ_c(k1 X) = ψ1(k1) ψ_c(X)`, where
/// `ψ_c(X)_j = X_{2j-1} + i X_{2j}` and `k1` commutes with `D2(Λ̂)`.
pub fn psi1_complexify(k1: &DMatrix<f64>, slice: &SpectrumSlice) -> Result<Vec<DMatrix<Complex64>>> {
    let p0 = slice.p0();
    let dim = 2 * p0;
    if k1.nrows() != dim || k1.ncols() != dim {
        return Err(Error::Dimension {
            what: "orthogonal matrix on the slice",
            expected: dim,
            got: k1.nrows().max(k1.ncols()),
        });
    }
    if (k1.transpose() * k1 - DMatrix::identity(dim, dim)).amax() > 1e-12 {
        return Err(Error::Invalid("matrix is not orthogonal".into()));
    }
    let d = d2(dim, &slice.pair_values());
    if (k1 * &d - &d * k1).norm() > 1e-10 {
        return Err(Error::Invalid("matrix does not commute with D2(mu_hat)".into()));
    }
    // Commuting with J forces each 2×2 block into the form [[a, b], [-b, a]],
    // which acts on x + iy as multiplication by a - ib.
    Ok(slice
        .blocks
        .ranges()
        .into_iter()
        .map(|range| {
            let m = range.len();
            DMatrix::from_fn(m, m, |i, l| {
                let (p, q) = (2 * (range.start + i), 2 * (range.start + l));
                Complex64::new(k1[(p, q)], -k1[(p, q + 1)])
            })
        })
        .collect())
}
