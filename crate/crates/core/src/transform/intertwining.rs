//! The operators `M±` against multiplied transforms, and `G_Δ`.
//!
//! With the multipliers evaluated at `x` (see [`Multiplier`]),
//! `M⁺ f̂ = ((γ/2 - it) f)^` and `M⁻ f̂ = -((γ/2 + it) f)^`.

use std::sync::Arc;

use super::*;
use crate::combinatorics::{d_minus_at, d_plus_at, MultiIndex};
use crate::heisenberg::BlockStructure;
use crate::spectrum::{m_ops, DLambda, MMode, SpectralGrid, SpectrumFunction};

use super::inversion::TransformSpectrum;

/// Sup-defects of the two intertwining identities over a grid, each
/// divided by `sup |f̂|` on the same grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntertwiningDefects {
    pub plus: f64,
    pub minus: f64,
    pub scale: f64,
}

fn require_invariant(f: &InvariantTestFunction) -> Result<()> {
    if f.is_invariant() {
        Ok(())
    } else {
        Err(Error::Invalid("expected an invariant test function".into()))
    }
}

fn sup_diff(a: &LambdaFunction, b: &LambdaFunction, sign: f64) -> f64 {
    a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y * sign).norm())
        .fold(0.0, f64::max)
}

fn sup_abs(a: &LambdaFunction) -> f64 {
    a.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

pub fn intertwining_defect(
    f: &InvariantTestFunction,
    slice: &SpectrumSlice,
    grid: &SpectralGrid,
    rule: DLambda,
) -> Result<IntertwiningDefects> {
    require_invariant(f)?;
    let g: Arc<dyn SpectrumFunction> = TransformSpectrum::new(f.clone(), slice.clone());
    let mp = m_ops(g.clone(), MMode::Plus, rule);
    let mm = m_ops(g.clone(), MMode::Minus, rule);
    let f_minus = f.multiplied(Multiplier::GammaHalfMinusIt)?;
    let f_plus = f.multiplied(Multiplier::GammaHalfPlusIt)?;
    let (mut plus, mut minus, mut scale) = (0.0f64, 0.0f64, 0.0f64);
    for &r in &grid.r_nodes {
        for &l in &grid.lambda_nodes {
            let t = grid.t;
            scale = scale.max(sup_abs(&g.table(r, l, t)?));
            plus = plus.max(sup_diff(&mp.table(r, l, t)?, &transform_table(&f_minus, slice, r, l, t)?, 1.0));
            minus = minus.max(sup_diff(&mm.table(r, l, t)?, &transform_table(&f_plus, slice, r, l, t)?, -1.0));
        }
    }
    if scale == 0.0 {
        return Ok(IntertwiningDefects { plus, minus, scale });
    }
    Ok(IntertwiningDefects {
        plus: plus / scale,
        minus: minus / scale,
        scale,
    })
}

/// `sup |((γ/2+it)f)^(r,α,λ) - conj(((γ/2-it)f)^(r,α,-λ))|`, relative to
/// the sup of the first; zero for `f` real and even in the central variable.
pub fn multiplier_symmetry_defect(f: &InvariantTestFunction, slice: &SpectrumSlice, grid: &SpectralGrid) -> Result<f64> {
    require_invariant(f)?;
    let fp = f.multiplied(Multiplier::GammaHalfPlusIt)?;
    let fm = f.multiplied(Multiplier::GammaHalfMinusIt)?;
    let (mut worst, mut scale) = (0.0f64, 0.0f64);
    for &r in &grid.r_nodes {
        for &l in &grid.lambda_nodes {
            let a = transform_table(&fp, slice, r, l, grid.t)?;
            let b = transform_table(&fm, slice, r, -l, grid.t)?;
            scale = scale.max(sup_abs(&a));
            for (x, y) in a.values.iter().zip(&b.values) {
                worst = worst.max((x - y.conj()).norm());
            }
        }
    }
    Ok(if scale == 0.0 { worst } else { worst / scale })
}

/// `G_Δ = -(|λ|/2)(D⁺ - D⁻)G - |λ|(2|α| + a)G`.
pub struct GDelta {
    inner: Arc<dyn SpectrumFunction>,
}

pub fn g_delta(g: Arc<dyn SpectrumFunction>) -> Arc<dyn SpectrumFunction> {
    Arc::new(GDelta { inner: g })
}

impl SpectrumFunction for GDelta {
    fn blocks(&self) -> &BlockStructure {
        self.inner.blocks()
    }

    fn table(&self, r: f64, lambda: f64, t: usize) -> Result<LambdaFunction> {
        let base = self.inner.table(r, lambda, t + 1)?;
        let blocks = self.blocks().clone();
        let a = blocks.a() as f64;
        let lookup = |beta: &[usize]| base.get_or_zero(&MultiIndex(beta.to_vec()));
        let l = lambda.abs();
        Ok(LambdaFunction::from_fn(&blocks, t, |al| {
            let dp = d_plus_at(lookup, &al.0, &blocks);
            let dm = d_minus_at(lookup, &al.0);
            let deg = al.degree() as f64;
            (dp - dm) * (-0.5 * l) - lookup(&al.0) * (l * (2.0 * deg + a))
        }))
    }
}

/// The integrand polynomial of `Σ_j μ̂_j⁻¹ Δ_{x^{(j)}} f`, the real Laplacian
/// in the coordinates `z` of `ψ2`, block by block. On `h(ρ) e^{-βρ}` in
/// `R^{2m}`, `Δ = 4ρ ∂²_ρ + 4m ∂_ρ`.
pub(crate) fn block_laplacian_poly(f: &InvariantTestFunction, slice: &SpectrumSlice) -> Poly {
    let p = integrand_poly(f, slice);
    let nv = p.nvars();
    let b = Complex64::new(f.beta_v, 0.0);
    let mut out = Poly::zero(nv);
    for (j, (&m, &mu)) in slice.blocks.mult.iter().zip(&slice.mu_hat).enumerate() {
        let d1 = p.derivative(j);
        let d2 = d1.derivative(j);
        let second = d2.add(&d1.scale(-2.0 * b)).add(&p.scale(b * b));
        let first = d1.add(&p.scale(-b));
        let lap = Poly::var(nv, j)
            .mul(&second)
            .scale(Complex64::new(4.0, 0.0))
            .add(&first.scale(Complex64::new(4.0 * m as f64, 0.0)));
        out = out.add(&lap.scale(Complex64::new(1.0 / mu, 0.0)));
    }
    out
}

/// Transform table of `Σ_j μ̂_j⁻¹ Δ_{x^{(j)}} f`.
pub fn laplacian_transform_table(
    f: &InvariantTestFunction,
    slice: &SpectrumSlice,
    r: f64,
    lambda: f64,
    t: usize,
) -> Result<LambdaFunction> {
    require_invariant(f)?;
    table_from_poly(&block_laplacian_poly(f, slice), (f.beta_v, f.beta_z), slice, r, lambda, t)
}

/// `sup |G_Δ - (Δf)^|` over the grid, relative to `sup |(Δf)^|`, with
/// `G = f̂` and `Δ` as in [`laplacian_transform_table`].
pub fn g_delta_check(f: &InvariantTestFunction, slice: &SpectrumSlice, grid: &SpectralGrid) -> Result<f64> {
    require_invariant(f)?;
    let gd = g_delta(TransformSpectrum::new(f.clone(), slice.clone()));
    let (mut worst, mut scale) = (0.0f64, 0.0f64);
    for &r in &grid.r_nodes {
        for &l in &grid.lambda_nodes {
            let lhs = gd.table(r, l, grid.t)?;
            let rhs = laplacian_transform_table(f, slice, r, l, grid.t)?;
            worst = worst.max(sup_diff(&lhs, &rhs, 1.0));
            scale = scale.max(sup_abs(&rhs));
        }
    }
    Ok(if scale == 0.0 { worst } else { worst / scale })
}
