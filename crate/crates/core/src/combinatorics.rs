//! Multi-indices, the dimensions `d_α`, generalized binomial coefficients and
//! the difference operators `D±` on functions of `α`.
//!
//! For `K = U(m_1) × … × U(m_{p1})` the polynomial space `P_α` is a tensor
//! product of the `U(m_j)`-irreducibles of degree `α_j`, so
//! `d_α = ∏_j binom(α_j + m_j - 1, α_j)` and the only nonzero generalized
//! binomials between adjacent degrees are `[α; α - e_j] = α_j`.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{check_len, Error, Result};
use crate::heisenberg::{omega_type1, BlockStructure, HeisenbergPoint};
use crate::quad::gamma;
use crate::special::laguerre_function_table;

/// A multi-index `α ∈ N^{p1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn zero(p1: usize) -> Self {
        Self(vec![0; p1])
    }

    pub fn degree(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn parts(&self) -> &[usize] {
        &self.0
    }

    pub fn raised(&self, j: usize) -> Self {
        let mut v = self.0.clone();
        v[j] += 1;
        Self(v)
    }

    pub fn lowered(&self, j: usize) -> Option<Self> {
        let mut v = self.0.clone();
        v[j] = v[j].checked_sub(1)?;
        Some(Self(v))
    }
}

/// All multi-indices of length `p1` and degree at most `T`, ordered by
/// degree and then lexicographically (descending in the first part).
#[derive(Debug, Clone)]
pub struct MultiIndexSet {
    pub p1: usize,
    pub max_degree: usize,
    indices: Vec<MultiIndex>,
    shell_start: Vec<usize>,
    lookup: HashMap<MultiIndex, usize>,
}

impl MultiIndexSet {
    pub fn new(p1: usize, max_degree: usize) -> Self {
        let mut indices = Vec::new();
        let mut shell_start = Vec::with_capacity(max_degree + 2);
        for m in 0..=max_degree {
            shell_start.push(indices.len());
            compositions(m, p1, &mut Vec::with_capacity(p1), &mut indices);
        }
        shell_start.push(indices.len());
        let lookup = indices.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
        Self {
            p1,
            max_degree,
            indices,
            shell_start,
            lookup,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &MultiIndex> {
        self.indices.iter()
    }

    pub fn index_of(&self, alpha: &MultiIndex) -> Option<usize> {
        self.lookup.get(alpha).copied()
    }

    pub fn get(&self, i: usize) -> &MultiIndex {
        &self.indices[i]
    }

    /// Positions of the indices of degree `m`.
    pub fn shell(&self, m: usize) -> std::ops::Range<usize> {
        self.shell_start[m]..self.shell_start[m + 1]
    }
}

fn compositions(m: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
    if parts == 0 {
        if m == 0 {
            out.push(MultiIndex(prefix.clone()));
        }
        return;
    }
    if parts == 1 {
        prefix.push(m);
        out.push(MultiIndex(prefix.clone()));
        prefix.pop();
        return;
    }
    for first in (0..=m).rev() {
        prefix.push(first);
        compositions(m - first, parts - 1, prefix, out);
        prefix.pop();
    }
}

/// A complex function on `{α : |α| ≤ T}`.
#[derive(Debug, Clone)]
pub struct LambdaFunction {
    pub blocks: BlockStructure,
    pub set: Arc<MultiIndexSet>,
    pub values: Vec<Complex64>,
}

impl LambdaFunction {
    pub fn from_fn(blocks: &BlockStructure, max_degree: usize, f: impl Fn(&MultiIndex) -> Complex64) -> Self {
        let set = Arc::new(MultiIndexSet::new(blocks.p1(), max_degree));
        let values = set.iter().map(f).collect();
        Self {
            blocks: blocks.clone(),
            set,
            values,
        }
    }

    pub fn max_degree(&self) -> usize {
        self.set.max_degree
    }

    pub fn get(&self, alpha: &MultiIndex) -> Option<Complex64> {
        self.set.index_of(alpha).map(|i| self.values[i])
    }

    /// Value with zero extension outside the table.
    pub fn get_or_zero(&self, alpha: &MultiIndex) -> Complex64 {
        self.get(alpha).unwrap_or_default()
    }

    /// Largest degree carrying a nonzero value.
    pub fn support_degree(&self) -> Option<usize> {
        self.set
            .iter()
            .zip(&self.values)
            .filter(|(_, v)| **v != Complex64::default())
            .map(|(a, _)| a.degree())
            .max()
    }
}

fn binomial_big(n: usize, k: usize) -> BigUint {
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// `d_α = ∏_j binom(α_j + m_j - 1, α_j)`, exactly.
pub fn dim_p(alpha: &MultiIndex, blocks: &BlockStructure) -> Result<BigUint> {
    check_len("multi-index", blocks.p1(), alpha.0.len())?;
    Ok(alpha
        .0
        .iter()
        .zip(&blocks.mult)
        .map(|(&k, &m)| binomial_big(k + m - 1, k))
        .product())
}

/// `d_α` as a float, for analysis code.
pub fn dim_p_f64(alpha: &[usize], blocks: &BlockStructure) -> f64 {
    alpha
        .iter()
        .zip(&blocks.mult)
        .map(|(&k, &m)| {
            let mut v = 1.0;
            for i in 0..k.min(m - 1) {
                v *= (k + m - 1 - i) as f64 / (i + 1) as f64;
            }
            v
        })
        .product()
}

/// Generalized binomial `[α; β]` for adjacent degrees.
///
/// With `|β| = |α| - 1` the value is `α_j` when `β = α - e_j` and zero
/// otherwise; with `|β| = |α| + 1` it is `[β; α]`, i.e. `β_j` when
/// `α = β - e_j`.
pub fn gen_binomial(alpha: &MultiIndex, beta: &MultiIndex, blocks: &BlockStructure) -> Result<BigRational> {
    check_len("multi-index", blocks.p1(), alpha.0.len())?;
    check_len("multi-index", blocks.p1(), beta.0.len())?;
    let (hi, lo) = match alpha.degree() as isize - beta.degree() as isize {
        1 => (alpha, beta),
        -1 => (beta, alpha),
        _ => {
            return Err(Error::Invalid(format!(
                "generalized binomial needs adjacent degrees, got {} and {}",
                alpha.degree(),
                beta.degree()
            )))
        }
    };
    let diff: Vec<usize> = (0..hi.0.len()).filter(|&j| hi.0[j] != lo.0[j]).collect();
    if diff.len() == 1 && hi.0[diff[0]] == lo.0[diff[0]] + 1 {
        Ok(BigRational::from_integer(hi.0[diff[0]].into()))
    } else {
        Ok(BigRational::zero())
    }
}

/// `Σ_{|β|=|α|-1} [α; β]`, exactly.
pub fn lower_binomial_sum(alpha: &MultiIndex, blocks: &BlockStructure) -> Result<BigRational> {
    let mut s = BigRational::zero();
    for j in 0..alpha.0.len() {
        if let Some(beta) = alpha.lowered(j) {
            s += gen_binomial(alpha, &beta, blocks)?;
        }
    }
    Ok(s)
}

/// `Σ_{|β|=|α|+1} (d_β / d_α) [β; α]`, exactly.
pub fn upper_binomial_sum(alpha: &MultiIndex, blocks: &BlockStructure) -> Result<BigRational> {
    let da = dim_p(alpha, blocks)?;
    let mut s = BigRational::zero();
    for j in 0..alpha.0.len() {
        let beta = alpha.raised(j);
        let db = dim_p(&beta, blocks)?;
        let ratio = BigRational::new(db.into(), da.clone().into());
        s += ratio * gen_binomial(&beta, alpha, blocks)?;
    }
    Ok(s)
}

/// Which difference operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Difference {
    Plus,
    Minus,
}

/// `D⁺g(α) = Σ_j (α_j + m_j)(g(α + e_j) - g(α))`.
pub fn d_plus_at<F>(g: F, alpha: &[usize], blocks: &BlockStructure) -> Complex64
where
    F: Fn(&[usize]) -> Complex64,
{
    let base = g(alpha);
    let mut acc = Complex64::default();
    let mut beta = alpha.to_vec();
    for j in 0..alpha.len() {
        beta[j] += 1;
        acc += (g(&beta) - base) * (alpha[j] + blocks.mult[j]) as f64;
        beta[j] -= 1;
    }
    acc
}

/// `D⁻g(α) = Σ_j α_j (g(α) - g(α - e_j))`, zero at the origin.
pub fn d_minus_at<F>(g: F, alpha: &[usize]) -> Complex64
where
    F: Fn(&[usize]) -> Complex64,
{
    let base = g(alpha);
    let mut acc = Complex64::default();
    let mut beta = alpha.to_vec();
    for j in 0..alpha.len() {
        if alpha[j] > 0 {
            beta[j] -= 1;
            acc += (base - g(&beta)) * alpha[j] as f64;
            beta[j] += 1;
        }
    }
    acc
}

/// Apply `D⁺` or `D⁻` to a table. `D⁺` loses the top degree.
pub fn difference_ops(g: &LambdaFunction, mode: Difference) -> Result<LambdaFunction> {
    let t = g.max_degree();
    let out_degree = match mode {
        Difference::Plus => t.checked_sub(1).ok_or_else(|| {
            Error::Truncation("D+ needs a table of degree at least 1".into())
        })?,
        Difference::Minus => t,
    };
    let lookup = |beta: &[usize]| g.get_or_zero(&MultiIndex(beta.to_vec()));
    Ok(LambdaFunction::from_fn(&g.blocks, out_degree, |alpha| match mode {
        Difference::Plus => d_plus_at(lookup, &alpha.0, &g.blocks),
        Difference::Minus => d_minus_at(lookup, &alpha.0),
    }))
}

/// Defects of the two summation-by-parts identities
/// `Σ d_α F D⁺G = -Σ d_α (D⁻ + a)F · G` and
/// `Σ d_α F D⁻G = -Σ d_α (D⁺ + a)F · G`, relative to `Σ d_α |F| |G|`.
pub fn summation_by_parts_check(f: &LambdaFunction, g: &LambdaFunction) -> Result<(f64, f64)> {
    if f.blocks != g.blocks {
        return Err(Error::Invalid("block structures differ".into()));
    }
    let t = g.max_degree();
    let Some(support) = f.support_degree() else {
        return Ok((0.0, 0.0));
    };
    if support + 2 > t {
        return Err(Error::Truncation(format!(
            "support degree {support} must be at most {} for truncation {t}",
            t.saturating_sub(2)
        )));
    }
    let blocks = &f.blocks;
    let a = blocks.a() as f64;
    let fz = |b: &[usize]| f.get_or_zero(&MultiIndex(b.to_vec()));
    let gz = |b: &[usize]| g.get_or_zero(&MultiIndex(b.to_vec()));
    let set = MultiIndexSet::new(blocks.p1(), t - 1);
    let (mut plus, mut minus, mut scale) = (Complex64::default(), Complex64::default(), 0.0);
    for alpha in set.iter() {
        let al = &alpha.0;
        let d = dim_p_f64(al, blocks);
        let (fa, ga) = (fz(al), gz(al));
        plus += d * (fa * d_plus_at(gz, al, blocks) + (d_minus_at(fz, al) + a * fa) * ga);
        minus += d * (fa * d_minus_at(gz, al) + (d_plus_at(fz, al, blocks) + a * fa) * ga);
        scale += d * fa.norm() * ga.norm();
    }
    let scale = scale.max(f64::MIN_POSITIVE);
    Ok((plus.norm() / scale, minus.norm() / scale))
}

/// Rapid-decrease constants for one exponent.
#[derive(Debug, Clone, Copy)]
pub struct DecayConstant {
    pub n: u32,
    /// `max_α |F(α)| (2|α| + a)^N` over the table.
    pub c_n: f64,
    pub lower_sup: f64,
    pub upper_sup: f64,
    pub pass: bool,
}

/// Relative growth allowed between the lower and upper halves of the table.
pub const STABILIZATION_FACTOR: f64 = 1.05;

/// The shell-stabilization test: the weighted sup over shells `T/2+1..=T`
/// must stay below `1.05` times the sup over shells `1..=T/2`.
pub fn shell_stabilization(shell_sup: &[f64]) -> (f64, f64, bool) {
    let t = shell_sup.len() - 1;
    let half = t / 2;
    let lower = shell_sup[1..=half.max(1)].iter().copied().fold(0.0, f64::max);
    let upper = shell_sup[half + 1..].iter().copied().fold(0.0, f64::max);
    let pass = upper.is_finite() && (upper == 0.0 || upper < STABILIZATION_FACTOR * lower);
    (lower, upper, pass)
}

/// Tabulated rapid-decrease test for `N = 0..=n_max`.
pub fn rapid_decrease_lambda(f: &LambdaFunction, n_max: u32) -> Vec<DecayConstant> {
    let a = f.blocks.a() as f64;
    let t = f.max_degree();
    (0..=n_max)
        .map(|n| {
            let shell_sup: Vec<f64> = (0..=t)
                .map(|m| {
                    let w = (2.0 * m as f64 + a).powi(n as i32);
                    f.set.shell(m).map(|i| f.values[i].norm() * w).fold(0.0, f64::max)
                })
                .collect();
            let c_n = shell_sup.iter().copied().fold(0.0, f64::max);
            let (lower_sup, upper_sup, pass) = shell_stabilization(&shell_sup);
            DecayConstant {
                n,
                c_n,
                lower_sup,
                upper_sup,
                pass,
            }
        })
        .collect()
}

/// Radial quadrature controls for [`v_coefficients`].
#[derive(Debug, Clone, Copy)]
pub struct RadialQuadrature {
    /// Exponential rate `c` of the Gauss–Laguerre weight `ρ^{m-1} e^{-cρ}`.
    pub rate: f64,
    pub start_order: usize,
    pub max_order: usize,
    pub tol: f64,
}

impl Default for RadialQuadrature {
    fn default() -> Self {
        Self {
            rate: 0.5,
            start_order: 16,
            max_order: 512,
            tol: 1e-10,
        }
    }
}

/// Coefficients `f̂(α) = d_α (2π)^{-a} ∫ f(z) φ°_α(z) dz` of a `K`-invariant
/// profile on `C^{p0}`, given as a function of the block radii `ρ_j = |z^{(j)}|²`.
///
/// Tensor Gauss–Laguerre in each `ρ_j`, doubling the order until two
/// successive tables agree to `tol` relative to their largest entry.
pub fn v_coefficients<F>(
    f: F,
    blocks: &BlockStructure,
    alpha_max: usize,
    quad: RadialQuadrature,
) -> Result<LambdaFunction>
where
    F: Fn(&[f64]) -> f64,
{
    let mut order = quad.start_order.max(alpha_max / 2 + 4);
    let mut prev: Option<Vec<Complex64>> = None;
    while order <= quad.max_order {
        let table = v_coefficients_at_order(&f, blocks, alpha_max, quad.rate, order);
        if let Some(p) = &prev {
            let scale = table.values.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
            let diff = table
                .values
                .iter()
                .zip(p)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            if diff <= quad.tol * scale || scale == 1e-300 {
                return Ok(table);
            }
        }
        prev = Some(table.values.clone());
        order *= 2;
    }
    Err(Error::Truncation(format!(
        "radial quadrature did not converge by order {}",
        quad.max_order
    )))
}

fn v_coefficients_at_order<F>(f: &F, blocks: &BlockStructure, alpha_max: usize, rate: f64, order: usize) -> LambdaFunction
where
    F: Fn(&[f64]) -> f64,
{
    let p1 = blocks.p1();
    // Per block: nodes, weights including e^{cρ} compensation and the block
    // measure π^m/Γ(m) ρ^{m-1} dρ, and the table ℓ_k(ρ/2) e^{-ρ/4}.
    type BlockRule = (Vec<f64>, Vec<f64>, Vec<Vec<f64>>);
    let per_block: Vec<BlockRule> = blocks
        .mult
        .iter()
        .map(|&m| {
            let rule = crate::quad::laguerre(order, (m - 1) as f64);
            let mf = m as f64;
            let meas = std::f64::consts::PI.powf(mf) / gamma(mf) / rate.powf(mf);
            let rho: Vec<f64> = rule.nodes.iter().map(|u| u / rate).collect();
            let w: Vec<f64> = rule.weights.iter().map(|w| w * meas).collect();
            let lag: Vec<Vec<f64>> = rho
                .iter()
                .zip(&rule.nodes)
                .map(|(&r, &u)| {
                    // e^{u} compensates the rule's weight; fold it into the exponent.
                    let mut t = laguerre_function_table(alpha_max, (m - 1) as f64, 0.5 * r, 0.5);
                    let scale = u.exp();
                    if scale.is_finite() {
                        t.iter_mut().for_each(|v| *v *= scale);
                    } else {
                        t.iter_mut().for_each(|v| *v = 0.0);
                    }
                    t
                })
                .collect();
            (rho, w, lag)
        })
        .collect();
    let a = blocks.a() as f64;
    let norm = (2.0 * std::f64::consts::PI).powf(a);
    let set = Arc::new(MultiIndexSet::new(p1, alpha_max));
    let mut values = vec![Complex64::default(); set.len()];
    let mut idx = vec![0usize; p1];
    let mut rho = vec![0.0; p1];
    loop {
        let mut w = 1.0;
        for j in 0..p1 {
            rho[j] = per_block[j].0[idx[j]];
            w *= per_block[j].1[idx[j]];
        }
        let fv = f(&rho) * w;
        if fv != 0.0 && fv.is_finite() {
            for (slot, alpha) in values.iter_mut().zip(set.iter()) {
                let mut prod = fv;
                for j in 0..p1 {
                    prod *= per_block[j].2[idx[j]][alpha.0[j]];
                }
                *slot += prod;
            }
        }
        let mut j = 0;
        loop {
            if j == p1 {
                let values = values
                    .iter()
                    .zip(set.iter())
                    .map(|(v, al)| v * dim_p_f64(&al.0, blocks) / norm)
                    .collect();
                return LambdaFunction {
                    blocks: blocks.clone(),
                    set,
                    values,
                };
            }
            idx[j] += 1;
            if idx[j] < order.max(2) {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

/// Absolute defects of the Laguerre-side derivative identities at one point.
#[derive(Debug, Clone, Copy)]
pub struct DerivativeDefects {
    /// `γ φ°_α = -(D⁺ - D⁻) φ°_α`.
    pub gamma_circ: f64,
    /// `γ φ_{α,λ} = -(1/|λ|)(D⁺ - D⁻) φ_{α,λ}`.
    pub gamma_lambda: f64,
    /// `∂_λ φ` against the `D⁻` form.
    pub d_lambda_minus: f64,
    /// `∂_λ φ` against the `D⁺` form.
    pub d_lambda_plus: f64,
    /// `(γ/2 + it) φ` in difference form.
    pub gamma_plus_it: f64,
    /// `(γ/2 - it) φ` in difference form.
    pub gamma_minus_it: f64,
}

impl DerivativeDefects {
    pub fn max(&self) -> f64 {
        [
            self.gamma_circ,
            self.gamma_lambda,
            self.d_lambda_minus,
            self.d_lambda_plus,
            self.gamma_plus_it,
            self.gamma_minus_it,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Evaluate the derivative identities with `∂_λ` by Richardson-extrapolated
/// central differences of absolute step `step`.
pub fn derivative_identity_check(
    alpha: &[usize],
    lambda: f64,
    blocks: &BlockStructure,
    h: &HeisenbergPoint,
    step: f64,
) -> Result<DerivativeDefects> {
    if step.is_nan() || step <= 0.0 || lambda.abs() < 10.0 * step {
        return Err(Error::StepTooLarge { h: step, lambda });
    }
    check_len("multi-index", blocks.p1(), alpha.len())?;
    let phi = |al: &[usize], lam: f64| omega_type1(al, lam, blocks, h).expect("validated inputs");
    let at_z0 = HeisenbergPoint::new(h.z.clone(), 0.0);
    let phi_circ0 = |al: &[usize]| omega_type1(al, 1.0, blocks, &at_z0).expect("validated inputs");
    let gamma = 0.5 * h.z.iter().map(|c| c.norm_sqr()).sum::<f64>();
    let gamma_circ = (phi_circ0(alpha) * gamma
        + d_plus_at(phi_circ0, alpha, blocks)
        - d_minus_at(phi_circ0, alpha))
    .norm();

    let val = phi(alpha, lambda);
    let dp = d_plus_at(|b| phi(b, lambda), alpha, blocks);
    let dm = d_minus_at(|b| phi(b, lambda), alpha);
    let gamma_lambda = (val * gamma + (dp - dm) / lambda.abs()).norm();

    let central = |s: f64| (phi(alpha, lambda + s) - phi(alpha, lambda - s)) / (2.0 * s);
    let dl = (central(0.5 * step) * 4.0 - central(step)) / 3.0;
    let it = Complex64::new(0.0, h.t);
    let sgn = lambda.signum();
    // ∂_λ φ = (1/λ) D⁻φ ∓ (γ/2) φ + itφ = (1/λ) D⁺φ ± (γ/2) φ + itφ,
    // upper signs for λ > 0.
    let d_lambda_minus = (dl - (dm / lambda - val * (sgn * gamma / 2.0) + it * val)).norm();
    let d_lambda_plus = (dl - (dp / lambda + val * (sgn * gamma / 2.0) + it * val)).norm();
    let (d_first, d_second) = if lambda > 0.0 { (dp, dm) } else { (dm, dp) };
    let gamma_plus_it = (val * (gamma / 2.0) + it * val - (dl - d_first / lambda)).norm();
    let gamma_minus_it = (val * (gamma / 2.0) - it * val + (dl - d_second / lambda)).norm();
    Ok(DerivativeDefects {
        gamma_circ,
        gamma_lambda,
        d_lambda_minus,
        d_lambda_plus,
        gamma_plus_it,
        gamma_minus_it,
    })
}
