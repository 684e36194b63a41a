//! The Heisenberg group `H_{p0}` and its bounded spherical functions for the
//! block unitary group `K = U(m_1) × … × U(m_{p1})`.

use nalgebra::{Complex, DMatrix, DVector};
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};
use crate::freegroup::ExpCoordinates;
use crate::haar::{haar_unitary, mc_mean};
use crate::special::{laguerre_function_table, sphere_bessel};

/// A point `(z, t)` of `H_{p0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeisenbergPoint {
    pub z: Vec<Complex64>,
    pub t: f64,
}

impl HeisenbergPoint {
    pub fn new(z: Vec<Complex64>, t: f64) -> Self {
        Self { z, t }
    }

    pub fn identity(p0: usize) -> Self {
        Self {
            z: vec![Complex64::new(0.0, 0.0); p0],
            t: 0.0,
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            z: self.z.iter().map(|v| -v).collect(),
            t: -self.t,
        }
    }
}

/// Block sizes `m_1, …, m_{p1}` of `K`, summing to `p0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockStructure {
    pub mult: Vec<usize>,
}

impl BlockStructure {
    pub fn new(mult: Vec<usize>) -> Result<Self> {
        if mult.is_empty() || mult.contains(&0) {
            return Err(Error::Invalid(format!(
                "block multiplicities must be positive, got {mult:?}"
            )));
        }
        Ok(Self { mult })
    }

    pub fn p0(&self) -> usize {
        self.mult.iter().sum()
    }

    pub fn p1(&self) -> usize {
        self.mult.len()
    }

    /// Heisenberg dimension symbol, equal to `p0`.
    pub fn a(&self) -> usize {
        self.p0()
    }

    /// Index ranges of the blocks inside `z`.
    pub fn ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0;
        self.mult
            .iter()
            .map(|&m| {
                let r = start..start + m;
                start += m;
                r
            })
            .collect()
    }

    /// `|z^{(j)}|²` for every block.
    pub fn block_norms_sqr(&self, z: &[Complex64]) -> Vec<f64> {
        self.ranges()
            .into_iter()
            .map(|r| z[r].iter().map(|c| c.norm_sqr()).sum())
            .collect()
    }
}

/// `(z, t)(z', t') = (z + z', t + t' + ½ Σ Im(z_i conj(z'_i)))`.
pub fn h_mul(h: &HeisenbergPoint, h2: &HeisenbergPoint) -> Result<HeisenbergPoint> {
    check_len("Heisenberg operand", h.z.len(), h2.z.len())?;
    let z = h.z.iter().zip(&h2.z).map(|(a, b)| a + b).collect();
    let sympl: f64 = h.z.iter().zip(&h2.z).map(|(a, b)| (a * b.conj()).im).sum();
    Ok(HeisenbergPoint {
        z,
        t: h.t + h2.t + 0.5 * sympl,
    })
}

/// `H_{p0}` as an exponential-coordinate group.
#[derive(Debug, Clone, Copy)]
pub struct HeisenbergGroup {
    pub p0: usize,
}

impl HeisenbergGroup {
    /// The `2 p0` real directions `X_j` (along `e_j`) and `Y_j` (along `i e_j`).
    pub fn real_directions(&self) -> Vec<HeisenbergPoint> {
        let mut out = Vec::with_capacity(2 * self.p0);
        for j in 0..self.p0 {
            for unit in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
                let mut d = HeisenbergPoint::identity(self.p0);
                d.z[j] = unit;
                out.push(d);
            }
        }
        out
    }
}

impl ExpCoordinates for HeisenbergGroup {
    type Point = HeisenbergPoint;

    fn exp(&self, dir: &HeisenbergPoint, s: f64) -> HeisenbergPoint {
        HeisenbergPoint {
            z: dir.z.iter().map(|v| v * s).collect(),
            t: dir.t * s,
        }
    }

    fn mul(&self, g: &HeisenbergPoint, h: &HeisenbergPoint) -> HeisenbergPoint {
        h_mul(g, h).expect("points of the same group")
    }
}

/// Radial part `∏_j ℓ_{α_j}^{(m_j-1)}(|λ| ρ_j / 2) e^{-|λ| ρ_j / 4}` with
/// `ρ_j = |z^{(j)}|²`.
pub fn laguerre_radial(alpha: &[usize], abs_lambda: f64, blocks: &BlockStructure, rho: &[f64]) -> f64 {
    alpha
        .iter()
        .zip(&blocks.mult)
        .zip(rho)
        .map(|((&k, &m), &r)| {
            let x = 0.5 * abs_lambda * r;
            laguerre_function_table(k, (m - 1) as f64, x, 0.5)[k]
        })
        .product()
}

/// Bounded spherical function of type 1,
/// `ω_{α,λ}(z, t) = e^{iλt} ∏_j ℓ_{α_j}^{(m_j-1)}(|λ||z^{(j)}|²/2) e^{-|λ||z|²/4}`.
pub fn omega_type1(
    alpha: &[usize],
    lambda: f64,
    blocks: &BlockStructure,
    h: &HeisenbergPoint,
) -> Result<Complex64> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::Invalid(format!(
            "type-1 spherical functions need a finite nonzero lambda, got {lambda}"
        )));
    }
    check_len("multi-index", blocks.p1(), alpha.len())?;
    check_len("Heisenberg point", blocks.p0(), h.z.len())?;
    let rho = blocks.block_norms_sqr(&h.z);
    let radial = laguerre_radial(alpha, lambda.abs(), blocks, &rho);
    Ok(Complex64::from_polar(radial, lambda * h.t))
}

/// Bounded spherical function of type 2: the product over blocks of the
/// `U(m_j)` average of `e^{i Re⟨ω^{(j)}, u z^{(j)}⟩}`, which is the sphere
/// average in `R^{2 m_j}` evaluated at `|ω^{(j)}| |z^{(j)}|`.
pub fn eta_type2(omega: &[Complex64], blocks: &BlockStructure, h: &HeisenbergPoint) -> Result<f64> {
    check_len("type-2 parameter", blocks.p0(), omega.len())?;
    check_len("Heisenberg point", blocks.p0(), h.z.len())?;
    let wn = blocks.block_norms_sqr(omega);
    let zn = blocks.block_norms_sqr(&h.z);
    Ok(blocks
        .mult
        .iter()
        .zip(wn.iter().zip(&zn))
        .map(|(&m, (w, z))| sphere_bessel(2 * m, (w * z).sqrt()))
        .product())
}

/// One Haar sample of `K`, one unitary per block.
pub fn sample_block_unitary(blocks: &BlockStructure, rng: &mut ChaCha8Rng) -> Vec<DMatrix<Complex<f64>>> {
    blocks.mult.iter().map(|&m| haar_unitary(m, rng)).collect()
}

/// Apply a block unitary to `z`.
pub fn apply_block_unitary(
    u: &[DMatrix<Complex<f64>>],
    blocks: &BlockStructure,
    z: &[Complex64],
) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(z.len());
    for (uj, r) in u.iter().zip(blocks.ranges()) {
        let v = uj * DVector::from_column_slice(&z[r]);
        out.extend(v.iter().copied());
    }
    out
}

/// Outcome of a functional-equation test.
#[derive(Debug, Clone, Copy)]
pub struct GelfandDefect {
    /// `|mean_k φ(x (k.y)) - φ(x) φ(y)|`.
    pub defect: f64,
    /// Standard error of the Monte Carlo mean.
    pub std_err: f64,
}

/// Monte Carlo test of `∫_K φ(x (k.y)) dk = φ(x) φ(y)`.
///
/// `act` draws a group element from its `rng` argument and returns `k.y`.
pub fn gelfand_check<P, F, S, M>(
    phi: F,
    x: &P,
    y: &P,
    act: S,
    mul: M,
    samples: usize,
    seed: u64,
) -> GelfandDefect
where
    P: Sync,
    F: Fn(&P) -> Complex64 + Sync,
    S: Fn(&mut ChaCha8Rng, &P) -> P + Sync,
    M: Fn(&P, &P) -> P + Sync,
{
    let est = mc_mean(samples, seed, |rng| {
        let ky = act(rng, y);
        phi(&mul(x, &ky))
    });
    GelfandDefect {
        defect: (est.mean - phi(x) * phi(y)).norm(),
        std_err: est.std_err,
    }
}
