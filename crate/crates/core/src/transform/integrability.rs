//! Integrability of spectrum functions over the regions
//! `A1 = {r ≤ K, |λ|(2|α|+a) ≤ 1}`, `A2 = {r ≤ K, |λ|(2|α|+a) > 1}`,
//! `A3 = {r > K, |λ|(2|α|+a) ≤ 1}`, `A4 = {r > K, |λ|(2|α|+a) > 1}`
//! with the measure `Σ_α d_α |λ|^a dλ dr` (both signs of λ).
//!
//! Every region is summed shell by shell in `m = |α|`. Unbounded directions
//! use graded panels `τ 2^j`; the contribution of one extra panel decides
//! whether the cutoff has been reached or the integral diverges.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use super::*;
use crate::combinatorics::{dim_p, dim_p_f64, MultiIndex};
use crate::quad::legendre;
use crate::spectrum::SpectrumFunction;

/// Resolution of the region integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrabilitySpec {
    /// Largest shell `|α|`.
    pub t: usize,
    pub lambda_order: usize,
    pub r_order: usize,
    /// Graded λ-panels `[τ 2^j, τ 2^{j+1}]`, `j < lambda_panels`, beyond `τ = 1/(2m+a)`.
    pub lambda_panels: usize,
    /// Graded r-panels `[K 2^j, K 2^{j+1}]`, `j < r_panels`.
    pub r_panels: usize,
    /// Largest relative contribution of the extra panel for a finite verdict.
    pub cutoff_tol: f64,
    /// Cauchy tolerance on the last shell increment.
    pub cauchy_tol: f64,
}

impl Default for IntegrabilitySpec {
    fn default() -> Self {
        Self {
            t: 60,
            lambda_order: 16,
            r_order: 8,
            lambda_panels: 16,
            r_panels: 8,
            cutoff_tol: 1e-6,
            cauchy_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    A1,
    A2,
    A3,
    A4,
}

impl Region {
    pub const ALL: [Region; 4] = [Region::A1, Region::A2, Region::A3, Region::A4];

    fn small_lambda(self) -> bool {
        matches!(self, Region::A1 | Region::A3)
    }

    fn small_r(self) -> bool {
        matches!(self, Region::A1 | Region::A2)
    }
}

/// Summary for one region.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionReport {
    pub region: Region,
    /// Increments `Σ_{|α|=m} d_α ∫ |G| |λ|^a dλ dr`, `m = 0..=T`.
    pub shells: Vec<f64>,
    /// Partial sums of `shells`.
    pub partial_sums: Vec<f64>,
    /// Partial sums of `Σ d_m (1/(2m+a))^{a+1}` with `d_m = C(m+n-1, m)`.
    pub comparison: Vec<f64>,
    /// Largest relative contribution of an extra cutoff panel over all shells.
    pub cutoff_growth: f64,
    /// The region has zero measure on this slice (`r` fixed at 0 and `r > K`).
    pub empty: bool,
    /// No divergence under cutoff extension.
    pub finite: bool,
    /// Last shell increment.
    pub cauchy_defect: f64,
    pub cauchy_pass: bool,
}

impl RegionReport {
    pub fn total(&self) -> f64 {
        self.partial_sums.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrabilityReport {
    pub regions: Vec<RegionReport>,
    /// Set when `N < a + 3`.
    pub warning: Option<String>,
}

impl IntegrabilityReport {
    pub fn all_finite(&self) -> bool {
        self.regions.iter().all(|r| r.finite)
    }

    pub fn all_cauchy(&self) -> bool {
        self.regions.iter().all(|r| r.cauchy_pass)
    }

    pub fn region(&self, region: Region) -> &RegionReport {
        self.regions.iter().find(|r| r.region == region).expect("all regions are reported")
    }
}

/// `d_m = C(m+n-1, m)`, the dimension of degree-`m` polynomials on `R^n`.
pub fn d_m(m: usize, n: usize) -> BigUint {
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for i in 1..=m {
        num *= BigUint::from(n - 1 + i);
        den *= BigUint::from(i);
    }
    num / den
}

/// First `m ≤ m_max` violating `d_m ≤ (m+n-1)^{n-1}` or
/// `Σ_{|α|=m} d_α ≤ d_m`, if any.
pub fn dm_growth_check(slice: &SpectrumSlice, m_max: usize) -> Result<Option<usize>> {
    let n = slice.n;
    let set = MultiIndexSet::new(slice.blocks.p1(), m_max);
    for m in 0..=m_max {
        let dm = d_m(m, n);
        let bound = BigUint::from(m + n - 1).pow((n - 1) as u32);
        let mut shell = BigUint::from(0u32);
        for i in set.shell(m) {
            shell += dim_p(set.get(i), &slice.blocks)?;
        }
        if dm > bound || shell > dm {
            return Ok(Some(m));
        }
    }
    Ok(None)
}

fn panel_nodes(lo: f64, hi: f64, order: usize) -> Vec<(f64, f64)> {
    let rule = legendre(order);
    let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    rule.nodes.iter().zip(&rule.weights).map(|(u, w)| (mid + half * u, half * w)).collect()
}

/// `Σ_{|α|=m} d_α |G(r, α, ±λ)|` summed over both signs.
fn shell_abs(g: &dyn SpectrumFunction, slice: &SpectrumSlice, r: f64, lambda: f64, m: usize) -> Result<f64> {
    let mut sum = 0.0;
    for l in [lambda, -lambda] {
        let table = g.table(r, l, m)?;
        for i in table.set.shell(m) {
            let al: &MultiIndex = table.set.get(i);
            sum += table.values[i].norm() * dim_p_f64(&al.0, &slice.blocks);
        }
    }
    Ok(sum)
}

/// Region integrals of `|G|` with shell partial sums.
pub fn integrability_report(
    g: &dyn SpectrumFunction,
    slice: &SpectrumSlice,
    n_decay: u32,
    k: f64,
    spec: &IntegrabilitySpec,
) -> Result<IntegrabilityReport> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Invalid(format!("K must be positive, got {k}")));
    }
    if g.blocks() != &slice.blocks {
        return Err(Error::Invalid("spectrum function and slice have different blocks".into()));
    }
    let a = slice.a();
    let warning = (n_decay < a as u32 + 3).then(|| {
        format!("N = {n_decay} is below a + 3 = {}; the integrability hypothesis does not hold", a + 3)
    });
    let af = a as f64;
    let comparison: Vec<f64> = (0..=spec.t)
        .scan(0.0, |acc, m| {
            *acc += d_m(m, slice.n).to_f64().unwrap_or(f64::INFINITY) * (2.0 * m as f64 + af).powf(-(af + 1.0));
            Some(*acc)
        })
        .collect();
    let r_free = slice.r_is_free();
    let mut regions = Vec::new();
    for region in Region::ALL {
        if !r_free && !region.small_r() {
            regions.push(RegionReport {
                region,
                shells: vec![0.0; spec.t + 1],
                partial_sums: vec![0.0; spec.t + 1],
                comparison: comparison.clone(),
                cutoff_growth: 0.0,
                empty: true,
                finite: true,
                cauchy_defect: 0.0,
                cauchy_pass: true,
            });
            continue;
        }
        // r panels: main part and the extra panel used as the divergence probe.
        type Nodes = Vec<(f64, f64)>;
        let (r_main, r_extra): (Nodes, Nodes) = if !r_free {
            (vec![(0.0, 1.0)], vec![])
        } else if region.small_r() {
            (panel_nodes(0.0, k, spec.r_order), vec![])
        } else {
            let mut main = Vec::new();
            for j in 0..spec.r_panels {
                let lo = k * 2f64.powi(j as i32);
                main.extend(panel_nodes(lo, 2.0 * lo, spec.r_order));
            }
            let lo = k * 2f64.powi(spec.r_panels as i32);
            (main, panel_nodes(lo, 2.0 * lo, spec.r_order))
        };
        let mut shells = Vec::with_capacity(spec.t + 1);
        let mut growth = 0.0f64;
        for m in 0..=spec.t {
            let tau = 1.0 / (2.0 * m as f64 + af);
            let (l_main, l_extra) = if region.small_lambda() {
                (panel_nodes(0.0, tau, spec.lambda_order), vec![])
            } else {
                let mut main = Vec::new();
                for j in 0..spec.lambda_panels {
                    let lo = tau * 2f64.powi(j as i32);
                    main.extend(panel_nodes(lo, 2.0 * lo, spec.lambda_order));
                }
                let lo = tau * 2f64.powi(spec.lambda_panels as i32);
                (main, panel_nodes(lo, 2.0 * lo, spec.lambda_order))
            };
            let integrate = |rs: &[(f64, f64)], ls: &[(f64, f64)]| -> Result<f64> {
                let mut s = 0.0;
                for &(r, wr) in rs {
                    for &(l, wl) in ls {
                        s += wr * wl * l.powi(a as i32) * shell_abs(g, slice, r, l, m)?;
                    }
                }
                Ok(s)
            };
            let main = integrate(&r_main, &l_main)?;
            let extra = integrate(&r_main, &l_extra)? + integrate(&r_extra, &l_main)? + integrate(&r_extra, &l_extra)?;
            if main > 0.0 {
                growth = growth.max(extra / main);
            } else if extra > 0.0 {
                growth = f64::INFINITY;
            }
            if !main.is_finite() {
                growth = f64::INFINITY;
            }
            shells.push(main);
        }
        let partial_sums: Vec<f64> = shells
            .iter()
            .scan(0.0, |acc, v| {
                *acc += v;
                Some(*acc)
            })
            .collect();
        let cauchy_defect = *shells.last().unwrap_or(&0.0);
        regions.push(RegionReport {
            region,
            shells,
            partial_sums,
            comparison: comparison.clone(),
            cutoff_growth: growth,
            empty: false,
            finite: growth <= spec.cutoff_tol,
            cauchy_defect,
            cauchy_pass: cauchy_defect <= spec.cauchy_tol,
        });
    }
    Ok(IntegrabilityReport { regions, warning })
}
