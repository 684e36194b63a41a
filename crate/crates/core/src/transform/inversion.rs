//! Inversion of the spherical transform and the Plancherel identity.
//!
//! Both are integrals of the form `∫_r ∫_λ Σ_α d_α h(r, α, λ) |λ|^a dλ dr`
//! over the type-1 spectrum. The λ-axis is split into geometric panels
//! `[λ_min 2^j, λ_min 2^{j+1}]` up to `λ_max`, each with Gauss–Legendre
//! nodes, on both signs. The `α`-sum is truncated adaptively from the
//! geometric decay of the block moments. The strip `|λ| < λ_min` is filled
//! in with the value at `±λ_min`.

use std::sync::Arc;

use super::*;
use crate::combinatorics::dim_p_f64;
use crate::heisenberg::BlockStructure;
use crate::quad::legendre;
use crate::spectrum::{eval_spherical, Averaging, SpectrumFunction};

/// `f̂` as a spectrum function.
pub struct TransformSpectrum {
    pub f: InvariantTestFunction,
    pub slice: SpectrumSlice,
}

impl TransformSpectrum {
    pub fn new(f: InvariantTestFunction, slice: SpectrumSlice) -> Arc<Self> {
        Arc::new(Self { f, slice })
    }
}

impl SpectrumFunction for TransformSpectrum {
    fn blocks(&self) -> &BlockStructure {
        &self.slice.blocks
    }

    fn table(&self, r: f64, lambda: f64, t: usize) -> Result<LambdaFunction> {
        transform_table(&self.f, &self.slice, r, lambda, t)
    }

    fn alpha_truncation(&self, lambda: f64, tol: f64, cap: usize) -> Option<Result<usize>> {
        Some(adaptive_truncation(&self.f, &self.slice, lambda, tol, cap))
    }
}

/// Smallest `T` such that the `α`-tail of `f̂(·, λ)` beyond `|α| = T` is
/// below `tol` relative to the leading terms. The block moments decay like
/// `q^{|α|}` times a polynomial, with `q = (β_v - c/2)/(β_v + c/2)`.
pub fn adaptive_truncation(
    f: &InvariantTestFunction,
    slice: &SpectrumSlice,
    lambda: f64,
    tol: f64,
    cap: usize,
) -> Result<usize> {
    let q = slice
        .mu_hat
        .iter()
        .map(|u| {
            let c = 0.5 * lambda.abs() * u;
            ((f.beta_v - 0.5 * c) / (f.beta_v + 0.5 * c)).abs()
        })
        .fold(0.0, f64::max);
    let degree: usize = f.coeffs.len() + f.coeffs.iter().map(Vec::len).max().unwrap_or(1) + 2;
    let t = if q < 1e-300 {
        degree
    } else {
        (tol.ln() / q.ln()).ceil() as usize + 4 * degree + 10
    };
    if t > cap {
        return Err(Error::Truncation(format!(
            "alpha truncation {t} at lambda = {lambda} exceeds the cap {cap}"
        )));
    }
    Ok(t)
}

/// Nodes and weights of the λ-rule on `λ_min ≤ |λ| ≤ λ_max`, both signs.
pub fn lambda_nodes(quad: &QuadratureSpec) -> Vec<(f64, f64)> {
    let rule = legendre(quad.lambda_order);
    let mut out = Vec::new();
    let mut lo = quad.lambda_min;
    while lo < quad.lambda_max {
        let hi = (2.0 * lo).min(quad.lambda_max);
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        for (u, w) in rule.nodes.iter().zip(&rule.weights) {
            let l = mid + half * u;
            out.push((l, w * half));
            out.push((-l, w * half));
        }
        lo = hi;
    }
    out
}

/// Nodes and weights in `r`: the single point `r = 0` with weight 1 when
/// `r` is fixed, Gauss–Legendre panels on `[0, r_max]` otherwise.
pub fn r_nodes(slice: &SpectrumSlice, quad: &QuadratureSpec) -> Vec<(f64, f64)> {
    if !slice.r_is_free() {
        return vec![(0.0, 1.0)];
    }
    let rule = legendre(quad.r_order);
    let h = quad.r_max / quad.r_panels as f64;
    let mut out = Vec::new();
    for p in 0..quad.r_panels {
        let mid = (p as f64 + 0.5) * h;
        for (u, w) in rule.nodes.iter().zip(&rule.weights) {
            out.push((mid + 0.5 * h * u, 0.5 * h * w));
        }
    }
    out
}

/// An evaluated spectral integral.
#[derive(Debug, Clone, Copy)]
pub struct SpectralIntegral {
    /// Integral including the `|λ| < λ_min` fill-in.
    pub value: Complex64,
    /// The fill-in itself: the integrand at `±λ_min` times `λ_min`.
    pub gap: Complex64,
    /// Integral of the magnitude of the top `α`-shell, a bound on the
    /// truncation error when the shells decay geometrically.
    pub tail: f64,
    /// Largest `α` truncation used.
    pub max_truncation: usize,
}

/// `∫_r ∫_λ Σ_α terms(r, λ, G(r, ·, λ))_α |λ|^a`, where `terms` returns the
/// weighted summands `d_α h(r, α, λ)` in the order of the table.
pub fn spectral_integral<H>(
    g: &dyn SpectrumFunction,
    slice: &SpectrumSlice,
    quad: &QuadratureSpec,
    terms: H,
) -> Result<SpectralIntegral>
where
    H: Fn(f64, f64, &LambdaFunction) -> Result<Vec<Complex64>>,
{
    quad.validate()?;
    if g.blocks() != &slice.blocks {
        return Err(Error::Invalid("spectrum function and slice have different blocks".into()));
    }
    let a = slice.a() as i32;
    let mut value = Complex64::new(0.0, 0.0);
    let mut gap = Complex64::new(0.0, 0.0);
    let mut tail = 0.0;
    let mut max_t = 0;
    let mut h = |r: f64, l: f64| -> Result<(Complex64, f64)> {
        let t = match g.alpha_truncation(l, quad.alpha_tol, quad.alpha_cap) {
            Some(t) => t?,
            None => quad.truncation,
        };
        max_t = max_t.max(t);
        let table = g.table(r, l, t)?;
        let v = terms(r, l, &table)?;
        let w = l.abs().powi(a);
        let top: Complex64 = v[table.set.shell(t)].iter().sum();
        Ok((v.iter().sum::<Complex64>() * w, top.norm() * w))
    };
    for (r, wr) in r_nodes(slice, quad) {
        for (l, wl) in lambda_nodes(quad) {
            let (v, top) = h(r, l)?;
            value += v * (wr * wl);
            tail += top * wr * wl;
        }
        for l in [quad.lambda_min, -quad.lambda_min] {
            gap += h(r, l)?.0 * (wr * quad.lambda_min);
        }
    }
    if !(value.re.is_finite() && value.im.is_finite()) {
        return Err(Error::NonFinite("spectral integral"));
    }
    Ok(SpectralIntegral {
        value: value + gap,
        gap,
        tail,
        max_truncation: max_t,
    })
}

/// `d_α G(r, α, λ) φ_{r,α,λ}(x)` for every `α` of the table.
fn phi_terms(x: &GroupElement, slice: &SpectrumSlice, r: f64, lambda: f64, table: &LambdaFunction) -> Result<Vec<Complex64>> {
    if slice.n == 2 {
        // φ_{α,λ}(x) = ℓ_α(|λ||x|²/2) e^{-|λ||x|²/4} cos(λ u) on F(2).
        let rho: f64 = x.x.iter().map(|v| v * v).sum();
        let ell = laguerre_function_table(table.max_degree(), 0.0, 0.5 * lambda.abs() * rho, 0.5);
        let c = (lambda * x.a[0]).cos();
        return Ok(table.values.iter().zip(&ell).map(|(v, l)| v * (l * c)).collect());
    }
    table
        .set
        .iter()
        .zip(&table.values)
        .map(|(al, v)| {
            let p = SphericalPoint::Type1 {
                r,
                alpha: al.0.clone(),
                lambda,
            };
            let phi = eval_spherical(&p, x, slice, Averaging::ClosedForm)?.value;
            Ok(v * phi * dim_p_f64(&al.0, &slice.blocks))
        })
        .collect()
}

/// `I(x) = ∫∫ Σ_α d_α G φ(x) |λ|^a`, so that `f(x) ≈ c I(x) / (2π)^{a+2}`
/// when `G = f̂`.
pub fn inversion_integral(
    g: &dyn SpectrumFunction,
    x: &GroupElement,
    slice: &SpectrumSlice,
    quad: &QuadratureSpec,
) -> Result<SpectralIntegral> {
    slice.validate_point(&SphericalPoint::Type2 { r: 0.0 })?;
    if x.x.len() != slice.n {
        return Err(Error::Dimension {
            what: "group element",
            expected: slice.n,
            got: x.x.len(),
        });
    }
    spectral_integral(g, slice, quad, |r, l, t| phi_terms(x, slice, r, l, t))
}

fn two_pi_power(slice: &SpectrumSlice) -> f64 {
    (2.0 * std::f64::consts::PI).powi(slice.a() as i32 + 2)
}

/// `f(x)` reconstructed from `f̂` with normalising constant `c`.
pub fn inverse_transform(
    g: &dyn SpectrumFunction,
    x: &GroupElement,
    slice: &SpectrumSlice,
    quad: &QuadratureSpec,
    c: f64,
) -> Result<Inversion> {
    let i = inversion_integral(g, x, slice, quad)?;
    let k = c / two_pi_power(slice);
    Ok(Inversion {
        value: i.value * k,
        gap: i.gap.norm() * k.abs(),
        tail: i.tail * k.abs(),
        max_truncation: i.max_truncation,
    })
}

/// A reconstructed value with its error indicators, already scaled by `c/(2π)^{a+2}`.
#[derive(Debug, Clone, Copy)]
pub struct Inversion {
    pub value: Complex64,
    pub gap: f64,
    pub tail: f64,
    pub max_truncation: usize,
}

/// The constant `c` that makes the inversion exact at the identity for `f`.
pub fn calibrate_c(f: &InvariantTestFunction, slice: &SpectrumSlice, quad: &QuadratureSpec) -> Result<f64> {
    if !f.is_invariant() {
        return Err(Error::Invalid("calibration needs an invariant reference function".into()));
    }
    let e = GroupElement::identity(slice.n);
    let fe = f.value(&e, slice)?.re;
    if fe.abs() < 1e-12 {
        return Err(Error::Invalid(format!("calibration needs f(e) != 0, got {fe}")));
    }
    let g = TransformSpectrum::new(f.clone(), slice.clone());
    let i = inversion_integral(g.as_ref(), &e, slice, quad)?.value;
    if i.re == 0.0 {
        return Err(Error::Invalid("calibration needs f(e) != 0".into()));
    }
    Ok(fe * two_pi_power(slice) / i.re)
}

/// Both sides of `‖f‖₂² = c/(2π)^{a+2} ∫∫ Σ_α d_α |f̂|² |λ|^a`.
#[derive(Debug, Clone, Copy)]
pub struct PlancherelOutcome {
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs - rhs| / lhs`, or `|rhs|` when `f = 0`.
    pub defect: f64,
}

pub fn plancherel_defect(
    f: &InvariantTestFunction,
    slice: &SpectrumSlice,
    quad: &QuadratureSpec,
    c: f64,
) -> Result<PlancherelOutcome> {
    let lhs = f.l2_norm_sqr(slice.n)?;
    let blocks = slice.blocks.clone();
    let g = TransformSpectrum::new(f.clone(), slice.clone());
    let integral = spectral_integral(g.as_ref(), slice, quad, |_, _, t| {
        Ok(t.set
            .iter()
            .zip(&t.values)
            .map(|(al, v)| Complex64::new(v.norm_sqr() * dim_p_f64(&al.0, &blocks), 0.0))
            .collect())
    })?;
    let rhs = integral.value.re * c / two_pi_power(slice);
    let defect = if lhs == 0.0 { rhs.abs() } else { (lhs - rhs).abs() / lhs };
    Ok(PlancherelOutcome { lhs, rhs, defect })
}
