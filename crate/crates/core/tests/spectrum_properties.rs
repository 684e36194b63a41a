use std::sync::Arc;

use nalgebra::DMatrix;
use nilspherical::freegroup::{act_orthogonal, group_mul, li_laplacian_fd, pair_index, FreeGroup, GroupElement};
use nilspherical::haar::{haar_orthogonal, substream};
use nilspherical::heisenberg::{gelfand_check, h_mul};
use nilspherical::spectrum::*;
use nilspherical::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn random_element(n: usize, scale: f64, rng: &mut impl Rng) -> GroupElement {
    let x = (0..n).map(|_| rng.gen_range(-scale..scale)).collect();
    let a = (0..n * (n - 1) / 2).map(|_| rng.gen_range(-scale..scale)).collect();
    GroupElement::new(x, a).unwrap()
}

fn slices() -> Vec<SpectrumSlice> {
    let s5 = 5f64.sqrt();
    vec![
        SpectrumSlice::default_for(2).unwrap(),
        SpectrumSlice::default_for(3).unwrap(),
        SpectrumSlice::new(4, vec![1, 1], vec![2.0 / s5, 1.0 / s5], vec![]).unwrap(),
        SpectrumSlice::new(8, vec![2, 1], vec![0.6, (1.0 - 2.0 * 0.36f64).sqrt()], vec![0.6, -0.8]).unwrap(),
    ]
}

#[test]
fn slice_validation() {
    assert!(SpectrumSlice::new(2, vec![1], vec![2.0], vec![]).is_err());
    assert!(SpectrumSlice::new(3, vec![2], vec![0.5f64.sqrt()], vec![]).is_err());
    assert!(SpectrumSlice::new(4, vec![1, 1], vec![0.6, 0.8], vec![]).is_err());
    let (s, changed) = SpectrumSlice::normalized(4, vec![1, 1], vec![4.0, 2.0], vec![]).unwrap();
    assert!(changed);
    assert!((s.mu_hat[0] - 2.0 / 5f64.sqrt()).abs() < 1e-15);
    let (_, changed) = SpectrumSlice::normalized(2, vec![1], vec![1.0], vec![]).unwrap();
    assert!(!changed);
    let s2 = SpectrumSlice::default_for(2).unwrap();
    let p = SphericalPoint::Type1 { r: 0.5, alpha: vec![0], lambda: 1.0 };
    assert!(s2.validate_point(&p).is_err());
    let p = SphericalPoint::Type1 { r: 0.0, alpha: vec![0], lambda: 0.0 };
    assert!(s2.validate_point(&p).is_err());
}

#[test]
fn psi2_examples() {
    let s = SpectrumSlice::default_for(2).unwrap();
    let g = GroupElement::new(vec![0.3, -1.2], vec![0.7]).unwrap();
    let h = psi2_coords(&g, &s).unwrap();
    assert_eq!(h.z, vec![Complex64::new(0.3, -1.2)]);
    assert_eq!(h.t, -0.7);
    // Central direction orthogonal to D2: X_{13} on F(3).
    let s3 = SpectrumSlice::default_for(3).unwrap();
    let mut a = vec![0.0; 3];
    a[pair_index(3, 0, 2)] = 2.0;
    let h = psi2_coords(&GroupElement::new(vec![0.0; 3], a).unwrap(), &s3).unwrap();
    assert_eq!(h.z, vec![Complex64::new(0.0, 0.0)]);
    assert_eq!(h.t, 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn psi2_is_a_homomorphism(seed in 0u64..1_000_000, which in 0usize..4) {
        let s = &slices()[which];
        let mut rng = substream(seed, 0);
        let g = random_element(s.n, 2.0, &mut rng);
        let h = random_element(s.n, 2.0, &mut rng);
        let lhs = psi2_coords(&group_mul(&g, &h).unwrap(), s).unwrap();
        let rhs = h_mul(&psi2_coords(&g, s).unwrap(), &psi2_coords(&h, s).unwrap()).unwrap();
        prop_assert!((lhs.t - rhs.t).abs() <= 1e-12);
        for (p, q) in lhs.z.iter().zip(&rhs.z) {
            prop_assert!((p - q).norm() <= 1e-12);
        }
    }
}

#[test]
fn identity_gives_one() {
    for s in slices() {
        let e = GroupElement::identity(s.n);
        let alpha = vec![1; s.blocks.p1()];
        let r = if s.r_is_free() { 0.8 } else { 0.0 };
        let p1 = SphericalPoint::Type1 { r, alpha, lambda: -1.7 };
        let avg = if s.n <= 3 { Averaging::ClosedForm } else { Averaging::MonteCarlo { samples: 2000, seed: 1 } };
        let v = eval_spherical(&p1, &e, &s, avg).unwrap();
        assert!((v.value - 1.0).norm() < 1e-13, "n={}: {}", s.n, v.value);
        let v = eval_spherical(&SphericalPoint::Type2 { r: 1.3 }, &e, &s, Averaging::ClosedForm).unwrap();
        assert_eq!(v.value, Complex64::new(1.0, 0.0));
    }
}

#[test]
fn type2_on_f3_is_sinc() {
    let s = SpectrumSlice::default_for(3).unwrap();
    let g = GroupElement::new(vec![0.4, -0.9, 1.1], vec![0.3, 0.2, -0.5]).unwrap();
    let r = 1.7;
    let xn = (0.16f64 + 0.81 + 1.21).sqrt();
    let p = SphericalPoint::Type2 { r };
    let v = eval_spherical(&p, &g, &s, Averaging::ClosedForm).unwrap();
    assert!((v.value.re - (r * xn).sin() / (r * xn)).abs() < 1e-13);
    let mc = eval_spherical(&p, &g, &s, Averaging::MonteCarlo { samples: 50_000, seed: 4 }).unwrap();
    assert!((mc.value - v.value).norm() <= 3.5 * mc.std_err, "{mc:?} vs {v:?}");
}

#[test]
fn closed_forms_agree_with_haar_monte_carlo() {
    let mut rng = substream(8, 0);
    for s in [SpectrumSlice::default_for(2).unwrap(), SpectrumSlice::default_for(3).unwrap()] {
        for trial in 0..3 {
            let g = random_element(s.n, 1.0, &mut rng);
            let r = if s.r_is_free() { 1.1 } else { 0.0 };
            let p = SphericalPoint::Type1 { r, alpha: vec![trial], lambda: 1.3 - trial as f64 };
            let exact = eval_spherical(&p, &g, &s, Averaging::ClosedForm).unwrap();
            let mc = eval_spherical(&p, &g, &s, Averaging::MonteCarlo { samples: 40_000, seed: 10 + trial as u64 }).unwrap();
            assert!(exact.value.norm() <= 1.0 + 1e-12);
            assert!(
                (mc.value - exact.value).norm() <= 4.0 * mc.std_err + 1e-12,
                "n={} trial {trial}: {:?} vs {:?}",
                s.n,
                mc,
                exact
            );
        }
    }
}

#[test]
fn closed_form_is_k_invariant() {
    let s = SpectrumSlice::default_for(3).unwrap();
    let mut rng = substream(21, 0);
    let g = random_element(3, 1.0, &mut rng);
    let p = SphericalPoint::Type1 { r: 0.7, alpha: vec![2], lambda: -0.9 };
    let v = eval_spherical(&p, &g, &s, Averaging::ClosedForm).unwrap().value;
    for _ in 0..5 {
        let k = haar_orthogonal(3, &mut rng);
        let w = eval_spherical(&p, &act_orthogonal(&k, &g).unwrap(), &s, Averaging::ClosedForm).unwrap().value;
        assert!((v - w).norm() < 1e-12, "{v} vs {w}");
    }
}

fn fd_eigenvalue(p: &SphericalPoint, g: &GroupElement, s: &SpectrumSlice) -> f64 {
    let grp = FreeGroup { n: s.n };
    let f = |h: &GroupElement| eval_spherical(p, h, s, Averaging::ClosedForm).unwrap().value;
    let lap: Complex64 = li_laplacian_fd(&grp, f, g, &grp.generators(), 2e-2).unwrap();
    (lap / f(g)).re
}

#[test]
fn kappa_examples() {
    let s = SpectrumSlice::default_for(2).unwrap();
    let p = SphericalPoint::Type1 { r: 0.0, alpha: vec![2], lambda: 1.0 };
    assert_eq!(kappa(&p, &s).unwrap(), 5.0);
    let g = GroupElement::new(vec![0.3, 0.2], vec![0.1]).unwrap();
    let fd = fd_eigenvalue(&p, &g, &s);
    assert!((fd / 5.0 - 1.0).abs() < 1e-4, "{fd}");
    let s4 = &slices()[2];
    let p = SphericalPoint::Type1 { r: 0.0, alpha: vec![0, 0], lambda: -2.0 };
    let expected = 2.0 * (s4.mu_hat[0] + s4.mu_hat[1]);
    assert!((kappa(&p, s4).unwrap() - expected).abs() < 1e-15);
    assert!(kappa(&SphericalPoint::Type2 { r: 1.0 }, &s).is_err());
}

#[test]
fn kappa_matches_fd_eigenvalue_on_f3() {
    let s = SpectrumSlice::default_for(3).unwrap();
    let mut rng = substream(33, 0);
    for _ in 0..6 {
        let g = random_element(3, 0.8, &mut rng);
        let p = SphericalPoint::Type1 {
            r: rng.gen_range(0.0..1.5),
            alpha: vec![rng.gen_range(0..4)],
            lambda: rng.gen_range(0.4..2.0) * if rng.gen::<bool>() { 1.0 } else { -1.0 },
        };
        let fd = fd_eigenvalue(&p, &g, &s);
        let k = kappa(&p, &s).unwrap();
        assert!((fd / k - 1.0).abs() < 1e-4, "{p:?}: fd {fd} kappa {k}");
    }
}

#[test]
fn functional_equation_on_f3() {
    let s = SpectrumSlice::default_for(3).unwrap();
    let x = GroupElement::new(vec![0.5, -0.3, 0.2], vec![0.1, -0.2, 0.3]).unwrap();
    let y = GroupElement::new(vec![-0.2, 0.6, 0.4], vec![0.2, 0.1, -0.1]).unwrap();
    let act = |rng: &mut rand_chacha::ChaCha8Rng, g: &GroupElement| act_orthogonal(&haar_orthogonal(3, rng), g).unwrap();
    let mul = |a: &GroupElement, b: &GroupElement| group_mul(a, b).unwrap();
    let p = SphericalPoint::Type1 { r: 0.9, alpha: vec![1], lambda: 1.2 };
    let phi = |g: &GroupElement| eval_spherical(&p, g, &s, Averaging::ClosedForm).unwrap().value;
    let d = gelfand_check(phi, &x, &y, act, mul, 20_000, 5);
    assert!(d.defect <= 4.0 * d.std_err, "{d:?}");
    let neg = |g: &GroupElement| Complex64::new((-g.x[0] * g.x[0]).exp(), 0.0);
    let d = gelfand_check(neg, &x, &y, act, mul, 20_000, 6);
    assert!(d.defect > 10.0 * d.std_err, "{d:?}");
}

#[test]
fn laplacian_bounds_examples() {
    let s = SpectrumSlice::default_for(2).unwrap();
    assert_eq!(laplacian_bounds(&s, 0.0), (1.0, 1.0));
    let s4 = &slices()[2];
    let b = laplacian_bounds(s4, 0.0);
    let (worst, count) = laplacian_bounds_violation(s4, 0.0, b, 200);
    assert_eq!(count, 201 * 202 / 2);
    assert!(worst <= 1e-15, "{worst}");
    // Brute-force extrema approach the computed constants.
    let (lo, hi) = (b.0 * (1.0 + 1e-2), b.1 * (1.0 - 1e-2));
    assert!(laplacian_bounds_violation(s4, 0.0, (lo, hi), 200).0 > 0.0);
    let mut prev = laplacian_bounds(&slices()[3], 0.0).1;
    for r in [0.5, 1.0, 2.0, 4.0] {
        let b = laplacian_bounds(&slices()[3], r);
        assert!(b.1 >= prev - 1e-15);
        prev = b.1;
        assert!(laplacian_bounds_violation(&slices()[3], r, b, 60).0 <= 1e-15);
    }
}

#[test]
fn m_ops_on_simple_functions() {
    let s = SpectrumSlice::default_for(2).unwrap();
    let f: Arc<dyn SpectrumFunction> = Arc::new(FnSpectrum::new(s.blocks.clone(), |_, _, l| Complex64::new(l * l, 0.0)));
    for mode in [MMode::Plus, MMode::Minus] {
        let m = m_ops(f.clone(), mode, DLambda::default());
        for lam in [-1.5, 0.7] {
            let t = m.table(0.0, lam, 5).unwrap();
            assert!(t.values.iter().all(|v| (v - 2.0 * lam).norm() < 1e-9));
        }
    }
    let zero: Arc<dyn SpectrumFunction> = Arc::new(FnSpectrum::new(s.blocks.clone(), |_, _, _| Complex64::new(0.0, 0.0)));
    let m = m_ops(zero, MMode::Plus, DLambda::default());
    assert!(m.table(0.0, 1.0, 4).unwrap().values.iter().all(|v| *v == Complex64::new(0.0, 0.0)));
    let tight = m_ops(f, MMode::Plus, DLambda::FdAbsolute(0.1));
    assert!(matches!(tight.table(0.0, 0.5, 3), Err(nilspherical::Error::StepTooLarge { .. })));
}

#[test]
fn analytic_and_fd_derivatives_agree() {
    let s = &slices()[2];
    let g = exp_minus_kappa(s);
    for lam in [-2.0, 0.6] {
        for order in 1..=2 {
            let a = d_lambda(&g, 0.0, lam, 6, order, DLambda::Analytic).unwrap();
            let f = d_lambda(&g, 0.0, lam, 6, order, DLambda::FdRelative(1e-2)).unwrap();
            for (p, q) in a.values.iter().zip(&f.values) {
                assert!((p - q).norm() <= 1e-6 * p.norm().max(1e-3), "order {order}: {p} vs {q}");
            }
        }
    }
}

#[test]
fn m_ops_nearly_commute() {
    // M⁺ and M⁻ commute on smooth functions up to finite-difference error.
    let s = &slices()[2];
    let g: Arc<dyn SpectrumFunction> = Arc::new(exp_minus_kappa(s));
    let rule = DLambda::FdRelative(1e-3);
    let pm = m_ops(m_ops(g.clone(), MMode::Minus, rule), MMode::Plus, rule);
    let mp = m_ops(m_ops(g, MMode::Plus, rule), MMode::Minus, rule);
    for lam in [-1.0, 2.0] {
        let a = pm.table(0.0, lam, 6).unwrap();
        let b = mp.table(0.0, lam, 6).unwrap();
        let scale = a.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let diff = a.values.iter().zip(&b.values).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        assert!(diff <= 1e-5 * scale, "{diff} vs {scale}");
    }
}

#[test]
fn certificates() {
    let s = SpectrumSlice::default_for(2).unwrap();
    let grid = SpectralGrid::default_for(&s);
    let g: Arc<dyn SpectrumFunction> = Arc::new(exp_minus_kappa(&s));
    let rep = decrease_certificate(g, &s, &grid, 2, 4, 2, DLambda::Analytic).unwrap();
    assert!(rep.entries.iter().filter(|e| e.label == "G").all(|e| e.pass), "{:?}", rep.first_failure());
    let rep = decrease_certificate(exp_arc(&s), &s, &grid, 0, 4, 2, DLambda::FdRelative(1e-2)).unwrap();
    assert!(rep.pass(), "{:?}", rep.first_failure());
    let one: Arc<dyn SpectrumFunction> = Arc::new(FnSpectrum::new(s.blocks.clone(), |_, _, _| Complex64::new(1.0, 0.0)));
    let rep = decrease_certificate(one, &s, &grid, 0, 1, 0, DLambda::FdRelative(1e-2)).unwrap();
    assert!(rep.entries[0].pass && !rep.entries[1].pass);
}

fn exp_arc(s: &SpectrumSlice) -> Arc<dyn SpectrumFunction> {
    Arc::new(exp_minus_kappa(s))
}

#[test]
fn psi1_intertwines_and_multiplies() {
    let s = SpectrumSlice::new(6, vec![2, 1], vec![0.6, 0.28f64.sqrt()], vec![]).unwrap();
    let mut rng = substream(40, 0);
    // Commuting orthogonal maps: per pair-block, real forms of unitaries.
    let real_form = |rng: &mut rand_chacha::ChaCha8Rng| {
        let mut k = DMatrix::zeros(6, 6);
        for range in s.blocks.ranges() {
            let u = nilspherical::haar::haar_unitary(range.len(), rng);
            for i in 0..range.len() {
                for l in 0..range.len() {
                    let (p, q) = (2 * (range.start + i), 2 * (range.start + l));
                    let z = u[(i, l)];
                    k[(p, q)] = z.re;
                    k[(p, q + 1)] = -z.im;
                    k[(p + 1, q)] = z.im;
                    k[(p + 1, q + 1)] = z.re;
                }
            }
        }
        k
    };
    let psi_c = |x: &[f64]| -> Vec<Complex64> { (0..3).map(|j| Complex64::new(x[2 * j], x[2 * j + 1])).collect() };
    for _ in 0..10 {
        let k = real_form(&mut rng);
        let k2 = real_form(&mut rng);
        let u = psi1_complexify(&k, &s).unwrap();
        let x: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let kx = &k * nalgebra::DVector::from_column_slice(&x);
        let lhs = psi_c(kx.as_slice());
        let rhs = nilspherical::heisenberg::apply_block_unitary(&u, &s.blocks, &psi_c(&x));
        for (p, q) in lhs.iter().zip(&rhs) {
            assert!((p - q).norm() < 1e-13);
        }
        let prod = psi1_complexify(&(&k * &k2), &s).unwrap();
        let u2 = psi1_complexify(&k2, &s).unwrap();
        for ((p, a), b) in prod.iter().zip(&u).zip(&u2) {
            assert!((p - a * b).norm() < 1e-12);
        }
    }
    let id = psi1_complexify(&DMatrix::identity(6, 6), &s).unwrap();
    assert!(id.iter().all(|u| *u == DMatrix::identity(u.nrows(), u.nrows())));
    let mut swap = DMatrix::identity(6, 6);
    swap.swap_rows(0, 2);
    swap.swap_rows(1, 3);
    // Swapping pair 0 and pair 1 stays inside the first block and commutes.
    assert!(psi1_complexify(&swap, &s).is_ok());
    let mut bad = DMatrix::identity(6, 6);
    bad.swap_rows(0, 4);
    assert!(psi1_complexify(&bad, &s).is_err());
    // p0 = 1 rotation by θ in the (1,2)-plane maps to e^{iθ}.
    let s2 = SpectrumSlice::default_for(2).unwrap();
    let th = 0.7f64;
    let rot = DMatrix::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()]);
    let u = psi1_complexify(&rot, &s2).unwrap();
    assert!((u[0][(0, 0)] - Complex64::from_polar(1.0, th)).norm() < 1e-15);
}
