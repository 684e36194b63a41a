//! The named verification checks, one per acceptance criterion, and the
//! suites that group them.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use nilspherical::combinatorics::{
    derivative_identity_check, dim_p_f64, lower_binomial_sum, summation_by_parts_check, upper_binomial_sum, LambdaFunction,
    MultiIndexSet,
};
use nilspherical::freegroup::{act_orthogonal, group_mul, li_laplacian_fd, FreeGroup, GroupElement};
use nilspherical::haar::{haar_orthogonal, substream};
use nilspherical::heisenberg::{gelfand_check, h_mul, omega_type1, BlockStructure, HeisenbergGroup, HeisenbergPoint};
use nilspherical::quad;
use nilspherical::special::laguerre_normalized;
use nilspherical::spectrum::{
    decrease_certificate, eval_spherical, exp_minus_kappa, kappa, laplacian_bounds, laplacian_bounds_violation, psi2_coords,
    Averaging, DLambda, FnSpectrum, SpectralGrid, SpectrumFunction, SpectrumSlice, SphericalPoint,
};
use nilspherical::transform::{
    calibrate_c, dm_growth_check, g_delta_check, integrability_report, intertwining_defect, inverse_transform, plancherel_defect,
    IntegrabilitySpec, InvariantTestFunction, TransformSpectrum,
};
use nilspherical::Complex64;
use num_rational::BigRational;
use rand::Rng;

use crate::config::{ConfigError, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Warn,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Warn => "warn",
        }
    }
}

/// What a check measured.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub defect: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    fn within(defect: f64, tolerance: f64, detail: String) -> Self {
        Self {
            defect,
            tolerance,
            pass: defect <= tolerance,
            detail,
        }
    }
}

/// One executed check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub status: Status,
    pub defect: f64,
    pub tolerance: f64,
    pub seconds: f64,
    pub detail: String,
}

pub struct Context<'a> {
    pub config: &'a RunConfig,
    pub slice: SpectrumSlice,
}

impl Context<'_> {
    fn seed(&self) -> u64 {
        self.config.seed
    }

    fn invariant_catalog(&self) -> Vec<InvariantTestFunction> {
        self.config.functions().into_iter().filter(|f| f.is_invariant()).collect()
    }

    fn grid(&self) -> SpectralGrid {
        SpectralGrid {
            t: self.config.quadrature.truncation,
            ..SpectralGrid::default_for(&self.slice)
        }
    }
}

type Runner = fn(&Context) -> Result<Outcome, String>;

pub struct Check {
    pub name: &'static str,
    /// Acceptance criterion number.
    pub criterion: usize,
    run: Runner,
}

pub const CHECKS: &[Check] = &[
    Check { name: "combinatorial_identities", criterion: 1, run: combinatorial_identities },
    Check { name: "summation_by_parts", criterion: 2, run: summation_by_parts },
    Check { name: "orthogonality", criterion: 3, run: orthogonality },
    Check { name: "derivative_identities", criterion: 4, run: derivative_identities },
    Check { name: "heisenberg_eigenvalue", criterion: 5, run: heisenberg_eigenvalue },
    Check { name: "fn_eigenvalue", criterion: 6, run: fn_eigenvalue },
    Check { name: "functional_equation", criterion: 7, run: functional_equation },
    Check { name: "psi2_homomorphism", criterion: 8, run: psi2_homomorphism },
    Check { name: "inversion_round_trip", criterion: 9, run: inversion_round_trip },
    Check { name: "plancherel", criterion: 10, run: plancherel },
    Check { name: "rapid_decrease_certificate", criterion: 11, run: rapid_decrease_certificate },
    Check { name: "intertwining_g_delta", criterion: 12, run: intertwining_g_delta },
    Check { name: "integrability_regions", criterion: 13, run: integrability_regions },
    Check { name: "lemma_bounds", criterion: 14, run: lemma_bounds },
];

pub const SUITES: &[(&str, &[&str])] = &[
    (
        "combinatorics",
        &["combinatorial_identities", "summation_by_parts", "orthogonality", "derivative_identities", "lemma_bounds"],
    ),
    (
        "full-f2",
        &[
            "psi2_homomorphism",
            "inversion_round_trip",
            "plancherel",
            "rapid_decrease_certificate",
            "intertwining_g_delta",
        ],
    ),
    ("f3", &["fn_eigenvalue", "functional_equation", "integrability_regions"]),
];

/// Checks selected by a suite name, a comma-separated list of check names,
/// `acceptance` (all checks) or the empty string (none), in declaration order.
pub fn resolve_suite(name: &str) -> Result<Vec<&'static Check>, ConfigError> {
    let name = name.trim();
    if name.is_empty() {
        return Ok(vec![]);
    }
    if name == "acceptance" {
        return Ok(CHECKS.iter().collect());
    }
    let wanted: Vec<&str> = match SUITES.iter().find(|(s, _)| *s == name) {
        Some((_, list)) => list.to_vec(),
        None => name.split(',').map(str::trim).collect(),
    };
    for w in &wanted {
        if !CHECKS.iter().any(|c| c.name == *w) {
            let known: Vec<&str> = SUITES
                .iter()
                .map(|(s, _)| *s)
                .chain(["acceptance"])
                .chain(CHECKS.iter().map(|c| c.name))
                .collect();
            let hint = known
                .iter()
                .map(|k| (strsim::levenshtein(w, k), *k))
                .filter(|(d, _)| *d <= 3)
                .min_by_key(|(d, _)| *d)
                .map(|(_, k)| format!("; did you mean \"{k}\"?"))
                .unwrap_or_default();
            return Err(ConfigError(format!("key \"suite\": unknown suite or check \"{w}\"{hint}")));
        }
    }
    Ok(CHECKS.iter().filter(|c| wanted.contains(&c.name)).collect())
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = p.downcast_ref::<String>() {
        s.clone()
    } else {
        "panic".into()
    }
}

/// Run one check; errors and panics become `fail` rows with a diagnostic.
pub fn run_check(check: &Check, ctx: &Context) -> CheckResult {
    let start = Instant::now();
    let res = catch_unwind(AssertUnwindSafe(|| (check.run)(ctx)));
    let seconds = start.elapsed().as_secs_f64();
    let (status, defect, tolerance, detail) = match res {
        Ok(Ok(o)) => (if o.pass { Status::Pass } else { Status::Fail }, o.defect, o.tolerance, o.detail),
        Ok(Err(e)) => (Status::Fail, f64::NAN, f64::NAN, format!("error: {e}")),
        Err(p) => (Status::Fail, f64::NAN, f64::NAN, format!("crashed: {}", panic_message(p))),
    };
    CheckResult {
        name: check.name,
        status,
        defect,
        tolerance,
        seconds,
        detail,
    }
}

fn s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn sign(rng: &mut impl Rng) -> f64 {
    if rng.gen::<bool>() {
        1.0
    } else {
        -1.0
    }
}

fn slice4() -> SpectrumSlice {
    let s5 = 5f64.sqrt();
    SpectrumSlice::new(4, vec![1, 1], vec![2.0 / s5, 1.0 / s5], vec![]).expect("valid slice")
}

fn slice8() -> SpectrumSlice {
    SpectrumSlice::new(8, vec![2, 1], vec![0.6, (1.0 - 2.0 * 0.36f64).sqrt()], vec![0.6, -0.8]).expect("valid slice")
}

fn slice6() -> SpectrumSlice {
    SpectrumSlice::normalized(6, vec![1, 1, 1], vec![3.0, 2.0, 1.0], vec![]).expect("valid slice").0
}

fn f2() -> SpectrumSlice {
    SpectrumSlice::default_for(2).expect("valid slice")
}

fn f3() -> SpectrumSlice {
    SpectrumSlice::default_for(3).expect("valid slice")
}

// 1. Exact binomial sums for p1 ≤ 3, m_j ≤ 4, |α| ≤ 30.
fn combinatorial_identities(_: &Context) -> Result<Outcome, String> {
    let mut structures: Vec<Vec<usize>> = vec![vec![]];
    let mut all = Vec::new();
    for _ in 0..3 {
        structures = structures
            .iter()
            .flat_map(|m| (1..=4).map(move |k| [m.clone(), vec![k]].concat()))
            .collect();
        all.extend(structures.iter().cloned());
    }
    let (mut failures, mut visited) = (0usize, 0usize);
    for mult in &all {
        let b = BlockStructure::new(mult.clone()).map_err(s)?;
        let a = b.a();
        for alpha in MultiIndexSet::new(b.p1(), 30).iter() {
            let deg = alpha.degree();
            if deg > 0 && lower_binomial_sum(alpha, &b).map_err(s)? != BigRational::from_integer(deg.into()) {
                failures += 1;
            }
            if upper_binomial_sum(alpha, &b).map_err(s)? != BigRational::from_integer((deg + a).into()) {
                failures += 1;
            }
            visited += 1;
        }
    }
    Ok(Outcome::within(
        failures as f64,
        0.0,
        format!("{} block structures, {visited} indices, {failures} mismatches", all.len()),
    ))
}

// 2. Summation by parts on 100 random finitely supported F.
fn summation_by_parts(ctx: &Context) -> Result<Outcome, String> {
    let mut rng = substream(ctx.seed(), 2);
    let shapes = [vec![1], vec![2, 3], vec![1, 1, 1]];
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let b = BlockStructure::new(shapes[trial % shapes.len()].clone()).map_err(s)?;
        let zero = Complex64::new(0.0, 0.0);
        let mut f = LambdaFunction::from_fn(&b, 20, |_| zero);
        let mut g = f.clone();
        let set = f.set.clone();
        for (i, al) in set.iter().enumerate() {
            if al.degree() <= 8 {
                f.values[i] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            g.values[i] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        let (p, m) = summation_by_parts_check(&f, &g).map_err(s)?;
        worst = worst.max(p).max(m);
    }
    Ok(Outcome::within(worst, 1e-12, "100 random pairs at T = 20".into()))
}

// 3. Orthogonality of φ°_α on a = 2 blocks by Gauss–Laguerre quadrature.
fn orthogonality(_: &Context) -> Result<Outcome, String> {
    use std::f64::consts::PI;
    let order = 32;
    let mut worst = 0.0f64;
    let mut pairs = 0usize;
    for mult in [vec![2], vec![1, 1]] {
        let b = BlockStructure::new(mult.clone()).map_err(s)?;
        let a = b.a() as i32;
        let rules: Vec<_> = mult.iter().map(|&m| quad::laguerre(order, (m - 1) as f64)).collect();
        let set = MultiIndexSet::new(b.p1(), 12);
        // With ρ = 2u per block, ∫_{C^m} F(|z|²) dz = (2π)^m/(m-1)! ∫ u^{m-1} F(2u) du
        // and φ°_α φ°_β = ℓ_α ℓ_β e^{-u}.
        let block_integral = |j: usize, k: usize, l: usize| -> f64 {
            let m = mult[j];
            let rule = &rules[j];
            let sum: f64 = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(u, w)| w * laguerre_normalized(k, (m - 1) as f64, *u) * laguerre_normalized(l, (m - 1) as f64, *u))
                .sum();
            (2.0 * PI).powi(m as i32) / quad::gamma(m as f64) * sum
        };
        let norm = |al: &[usize]| (2.0 * PI).powi(a) / dim_p_f64(al, &b);
        for al in set.iter() {
            for be in set.iter() {
                let got: f64 = (0..mult.len()).map(|j| block_integral(j, al.0[j], be.0[j])).product();
                let want = if al == be { norm(&al.0) } else { 0.0 };
                let scale = (norm(&al.0) * norm(&be.0)).sqrt();
                worst = worst.max((got - want).abs() / scale);
                pairs += 1;
            }
        }
    }
    Ok(Outcome::within(worst, 1e-8, format!("{pairs} pairs on m = (2) and m = (1, 1), |α| ≤ 12")))
}

// 4. Derivative identities at 50 random points with |α| ≤ 4.
fn derivative_identities(ctx: &Context) -> Result<Outcome, String> {
    let b = BlockStructure::new(vec![2, 1]).map_err(s)?;
    let mut rng = substream(ctx.seed(), 4);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let a0 = rng.gen_range(0..=4);
        let alpha = [a0, rng.gen_range(0..=4 - a0)];
        let lam = rng.gen_range(0.3..2.5) * sign(&mut rng);
        let z = (0..3).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let h = HeisenbergPoint::new(z, rng.gen_range(-1.0..1.0));
        worst = worst.max(derivative_identity_check(&alpha, lam, &b, &h, 1e-4).map_err(s)?.max());
    }
    Ok(Outcome::within(worst, 1e-6, "50 points on m = (2, 1), six identities each".into()))
}

/// Draw points until `|f| ≥ floor` so relative eigenvalue errors are not
/// dominated by a nodal set.
fn away_from_zero<P>(mut draw: impl FnMut() -> P, f: impl Fn(&P) -> Complex64, floor: f64) -> Result<P, String> {
    for _ in 0..1000 {
        let p = draw();
        if f(&p).norm() >= floor {
            return Ok(p);
        }
    }
    Err("no sample point away from the nodal set".into())
}

// 5. Heisenberg sub-Laplacian eigenvalue, |α| ≤ 4.
fn heisenberg_eigenvalue(ctx: &Context) -> Result<Outcome, String> {
    let mut rng = substream(ctx.seed(), 5);
    let mut worst = 0.0f64;
    let mut count = 0usize;
    for mult in [vec![1], vec![2], vec![1, 2]] {
        let b = BlockStructure::new(mult).map_err(s)?;
        let g = HeisenbergGroup { p0: b.p0() };
        for alpha in MultiIndexSet::new(b.p1(), 4).iter() {
            let lam = rng.gen_range(0.3..2.5) * sign(&mut rng);
            let f = |p: &HeisenbergPoint| omega_type1(&alpha.0, lam, &b, p).expect("valid inputs");
            let h = away_from_zero(
                || {
                    let z = (0..b.p0()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
                    HeisenbergPoint::new(z, rng.gen_range(-1.0..1.0))
                },
                f,
                0.05,
            )?;
            let u = -li_laplacian_fd(&g, f, &h, &g.real_directions(), 1e-3).map_err(s)?;
            let expected = -lam.abs() * (2.0 * alpha.degree() as f64 + b.a() as f64);
            worst = worst.max((u / f(&h) / expected - 1.0).norm());
            count += 1;
        }
    }
    Ok(Outcome::within(worst, 1e-5, format!("{count} (α, λ) pairs on m = (1), (2), (1, 2)")))
}

fn random_element(n: usize, scale: f64, rng: &mut impl Rng) -> GroupElement {
    let x = (0..n).map(|_| rng.gen_range(-scale..scale)).collect();
    let a = (0..n * (n - 1) / 2).map(|_| rng.gen_range(-scale..scale)).collect();
    GroupElement::new(x, a).expect("consistent lengths")
}

// 6. Finite-difference sub-Laplacian on φ over F(2) and F(3).
fn fn_eigenvalue(ctx: &Context) -> Result<Outcome, String> {
    let mut rng = substream(ctx.seed(), 6);
    let mut worst = 0.0f64;
    for s_ in [f2(), f3()] {
        let grp = FreeGroup { n: s_.n };
        for _ in 0..10 {
            let p = SphericalPoint::Type1 {
                r: if s_.r_is_free() { rng.gen_range(0.0..1.5) } else { 0.0 },
                alpha: vec![rng.gen_range(0..4)],
                lambda: rng.gen_range(0.4..2.0) * sign(&mut rng),
            };
            let f = |h: &GroupElement| eval_spherical(&p, h, &s_, Averaging::ClosedForm).expect("valid point").value;
            let g = away_from_zero(|| random_element(s_.n, 0.8, &mut rng), f, 0.05)?;
            let lap: Complex64 = li_laplacian_fd(&grp, f, &g, &grp.generators(), 2e-2).map_err(s)?;
            let k = kappa(&p, &s_).map_err(s)?;
            worst = worst.max((lap / f(&g) / k - 1.0).norm());
        }
    }
    Ok(Outcome::within(worst, 1e-4, "10 points each on F(2) and F(3)".into()))
}

// 7. Functional equation by Monte Carlo over K, with a negative control.
fn functional_equation(ctx: &Context) -> Result<Outcome, String> {
    let samples = ctx.config.quadrature.mc_samples;
    let mut worst = 0.0f64;
    let mut control = f64::INFINITY;
    let mut stream = 0u64;
    let mut seed = || {
        stream += 1;
        ctx.seed().wrapping_mul(1_000).wrapping_add(700 + stream)
    };
    for s_ in [f2(), f3()] {
        let n = s_.n;
        let (x, y) = if n == 2 {
            (GroupElement::new(vec![0.9, -0.4], vec![0.3]), GroupElement::new(vec![-0.5, 1.1], vec![-0.2]))
        } else {
            (
                GroupElement::new(vec![0.5, -0.3, 0.2], vec![0.1, -0.2, 0.3]),
                GroupElement::new(vec![-0.2, 0.6, 0.4], vec![0.2, 0.1, -0.1]),
            )
        };
        let (x, y) = (x.map_err(s)?, y.map_err(s)?);
        let act = |rng: &mut rand_chacha::ChaCha8Rng, g: &GroupElement| act_orthogonal(&haar_orthogonal(n, rng), g).expect("same n");
        let mul = |a: &GroupElement, b: &GroupElement| group_mul(a, b).expect("same n");
        let r = if s_.r_is_free() { 0.9 } else { 0.0 };
        for p in [SphericalPoint::Type1 { r, alpha: vec![1], lambda: 1.2 }, SphericalPoint::Type2 { r: 1.3 }] {
            let phi = |g: &GroupElement| eval_spherical(&p, g, &s_, Averaging::ClosedForm).expect("valid point").value;
            worst = worst.max(gelfand_check(phi, &x, &y, act, mul, samples, seed()).defect);
        }
        // Not K-invariant: its K-average at x·k.y is x_1 itself.
        let neg = |g: &GroupElement| Complex64::new(g.x[0], 0.0);
        control = control.min(gelfand_check(neg, &x, &y, act, mul, samples, seed()).defect);
    }
    let tol = 5e-3;
    Ok(Outcome {
        defect: worst,
        tolerance: tol,
        pass: worst <= tol && control > 5e-2,
        detail: format!("{samples} samples; negative control defect {control:.3e} (must exceed 5e-2)"),
    })
}

// 8. ψ2 is a homomorphism on 1000 random pairs.
fn psi2_homomorphism(ctx: &Context) -> Result<Outcome, String> {
    let slices = [f2(), f3(), slice4(), slice8()];
    let mut rng = substream(ctx.seed(), 8);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let s_ = &slices[i % slices.len()];
        let g = random_element(s_.n, 2.0, &mut rng);
        let h = random_element(s_.n, 2.0, &mut rng);
        let lhs = psi2_coords(&group_mul(&g, &h).map_err(s)?, s_).map_err(s)?;
        let rhs = h_mul(&psi2_coords(&g, s_).map_err(s)?, &psi2_coords(&h, s_).map_err(s)?).map_err(s)?;
        worst = worst.max((lhs.t - rhs.t).abs());
        for (p, q) in lhs.z.iter().zip(&rhs.z) {
            worst = worst.max((p - q).norm());
        }
    }
    Ok(Outcome::within(worst, 1e-12, "1000 pairs over four slices".into()))
}

/// Fixed group points of F(2) for the round trip.
pub fn round_trip_points() -> Vec<GroupElement> {
    [
        ([0.0, 0.0], 0.0),
        ([0.3, 0.2], 0.1),
        ([-1.0, 0.5], -0.8),
        ([0.7, -0.7], 0.4),
        ([1.2, 0.1], 0.0),
        ([0.0, 0.9], 1.1),
        ([-0.4, -0.3], -0.3),
        ([0.5, 0.5], 0.9),
        ([-0.2, 1.1], 0.25),
        ([0.9, 0.6], -0.6),
    ]
    .into_iter()
    .map(|(x, a)| GroupElement::new(x.to_vec(), vec![a]).expect("F(2) point"))
    .collect()
}

fn f2_catalog(ctx: &Context) -> Result<Vec<InvariantTestFunction>, String> {
    let fs = ctx.invariant_catalog();
    if fs.is_empty() {
        return Err("the catalog has no invariant functions".into());
    }
    Ok(fs)
}

// 9. Inversion round trip on F(2) with calibrated c.
fn inversion_round_trip(ctx: &Context) -> Result<Outcome, String> {
    let s_ = f2();
    let q = ctx.config.quadrature_spec();
    let fs = f2_catalog(ctx)?;
    let c = calibrate_c(&fs[0], &s_, &q).map_err(s)?;
    let mut worst = 0.0f64;
    for f in &fs {
        let g = TransformSpectrum::new(f.clone(), s_.clone());
        let scale = f.value(&GroupElement::identity(2), &s_).map_err(s)?.norm();
        for x in round_trip_points() {
            let got = inverse_transform(g.as_ref(), &x, &s_, &q, c).map_err(s)?;
            worst = worst.max((got.value - f.value(&x, &s_).map_err(s)?).norm() / scale);
        }
    }
    Ok(Outcome::within(worst, 1e-3, format!("{} functions, 10 points, c = {c:.12}", fs.len())))
}

// 10. Plancherel defect and cross-function consistency of c on F(2).
fn plancherel(ctx: &Context) -> Result<Outcome, String> {
    let s_ = f2();
    let q = ctx.config.quadrature_spec();
    let fs = f2_catalog(ctx)?;
    let cs = fs.iter().map(|f| calibrate_c(f, &s_, &q)).collect::<Result<Vec<_>, _>>().map_err(s)?;
    let spread = cs.iter().map(|c| (c - cs[0]).abs() / cs[0]).fold(0.0, f64::max);
    let mut worst = 0.0f64;
    for f in &fs {
        worst = worst.max(plancherel_defect(f, &s_, &q, cs[0]).map_err(s)?.defect);
    }
    Ok(Outcome::within(
        worst.max(spread),
        1e-3,
        format!("Plancherel defect {worst:.3e}, c spread {spread:.3e}"),
    ))
}

// 11. Rapid-decrease certificates of f̂ and its M± words; G ≡ 1 must fail at N = 1.
fn rapid_decrease_certificate(ctx: &Context) -> Result<Outcome, String> {
    let s_ = &ctx.slice;
    let grid = ctx.grid();
    let mut failures = 0usize;
    let mut first = String::new();
    for f in f2_catalog(ctx)? {
        let g: Arc<dyn SpectrumFunction> = TransformSpectrum::new(f, s_.clone());
        let rep = decrease_certificate(g, s_, &grid, 2, 4, 2, DLambda::default()).map_err(s)?;
        failures += rep.entries.iter().filter(|e| !e.pass).count();
        if let (true, Some(e)) = (first.is_empty(), rep.first_failure()) {
            first = format!("; first failure {} m = {} N = {}", e.label, e.m, e.n);
        }
    }
    let one: Arc<dyn SpectrumFunction> = Arc::new(FnSpectrum::new(s_.blocks.clone(), |_: f64, _: &[usize], _: f64| {
        Complex64::new(1.0, 0.0)
    }));
    let rep = decrease_certificate(one, s_, &grid, 0, 1, 0, DLambda::default()).map_err(s)?;
    let control_ok = rep.entries.len() == 2 && rep.entries[0].pass && !rep.entries[1].pass;
    if !control_ok {
        failures += 1;
    }
    Ok(Outcome::within(
        failures as f64,
        0.0,
        format!("failing entries counted; G = 1 rejected at N = 1: {control_ok}{first}"),
    ))
}

// 12. M± intertwining and G_Δ on the default grid.
fn intertwining_g_delta(ctx: &Context) -> Result<Outcome, String> {
    let s_ = &ctx.slice;
    let grid = ctx.grid();
    let (mut inter, mut gd) = (0.0f64, 0.0f64);
    for f in f2_catalog(ctx)? {
        let d = intertwining_defect(&f, s_, &grid, DLambda::default()).map_err(s)?;
        inter = inter.max(d.plus).max(d.minus);
        gd = gd.max(g_delta_check(&f, s_, &grid).map_err(s)?);
    }
    Ok(Outcome::within(
        inter.max(gd),
        1e-2,
        format!("intertwining {inter:.3e}, G_Δ {gd:.3e} on F({})", s_.n),
    ))
}

// 13. Integrability of e^{-κ} over the four regions on F(3).
fn integrability_regions(_: &Context) -> Result<Outcome, String> {
    let s_ = f3();
    let g = exp_minus_kappa(&s_);
    let n_decay = s_.a() as u32 + 3;
    let rep = integrability_report(&g, &s_, n_decay, 1.0, &IntegrabilitySpec::default()).map_err(s)?;
    let growth = dm_growth_check(&s_, 200).map_err(s)?;
    let cauchy = rep.regions.iter().map(|r| r.cauchy_defect).fold(0.0, f64::max);
    let per_region: Vec<String> = rep
        .regions
        .iter()
        .map(|r| format!("{:?} total {:.4e} last shell {:.3e}", r.region, r.total(), r.cauchy_defect))
        .collect();
    Ok(Outcome {
        defect: cauchy,
        tolerance: IntegrabilitySpec::default().cauchy_tol,
        pass: rep.all_finite() && rep.all_cauchy() && growth.is_none(),
        detail: format!(
            "finite {}, d_m bound ok {}; {}",
            rep.all_finite(),
            growth.is_none(),
            per_region.join("; ")
        ),
    })
}

// 14. Two-sided eigenvalue bounds, exhaustive for |α| ≤ 200 on three slices.
fn lemma_bounds(_: &Context) -> Result<Outcome, String> {
    let mut worst = 0.0f64;
    let mut visited = 0usize;
    for s_ in [slice4(), slice6(), slice8()] {
        let rs: &[f64] = if s_.r_is_free() { &[0.0, 1.0] } else { &[0.0] };
        for &r in rs {
            let b = laplacian_bounds(&s_, r);
            let (w, count) = laplacian_bounds_violation(&s_, r, b, 200);
            let p1 = s_.blocks.p1();
            let expected = (1..=p1).fold(1usize, |acc, i| acc * (200 + i) / i);
            if count != expected {
                return Err(format!("visited {count} indices, expected {expected}"));
            }
            worst = worst.max(w);
            visited += count;
        }
    }
    Ok(Outcome::within(worst.max(0.0), 1e-14, format!("{visited} indices over three slices")))
}
