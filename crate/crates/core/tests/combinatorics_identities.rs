use nilspherical::combinatorics::*;
use nilspherical::haar::substream;
use nilspherical::heisenberg::{omega_type1, BlockStructure, HeisenbergPoint};
use nilspherical::quad::ln_gamma;
use nilspherical::Complex64;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::Rng;

fn blocks(m: &[usize]) -> BlockStructure {
    BlockStructure::new(m.to_vec()).unwrap()
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[test]
fn binomial_sum_identities_are_exact() {
    for m in [vec![1], vec![3], vec![2, 3], vec![1, 1, 2]] {
        let b = blocks(&m);
        let a = b.a();
        for alpha in MultiIndexSet::new(b.p1(), 12).iter() {
            let deg = alpha.degree();
            if deg > 0 {
                assert_eq!(lower_binomial_sum(alpha, &b).unwrap(), BigRational::from_integer(deg.into()));
            }
            assert_eq!(upper_binomial_sum(alpha, &b).unwrap(), BigRational::from_integer((deg + a).into()));
        }
    }
}

#[test]
fn difference_operators_on_degree() {
    let b = blocks(&[3]);
    let g = LambdaFunction::from_fn(&b, 10, |al| c(al.degree() as f64));
    let plus = difference_ops(&g, Difference::Plus).unwrap();
    let minus = difference_ops(&g, Difference::Minus).unwrap();
    for (al, v) in plus.set.iter().zip(&plus.values) {
        assert_eq!(*v, c((al.degree() + 3) as f64));
    }
    for (al, v) in minus.set.iter().zip(&minus.values) {
        assert_eq!(*v, c(al.degree() as f64));
    }
    let one = LambdaFunction::from_fn(&blocks(&[2, 1]), 6, |_| c(1.0));
    for mode in [Difference::Plus, Difference::Minus] {
        assert!(difference_ops(&one, mode).unwrap().values.iter().all(|v| *v == c(0.0)));
    }
    let empty = LambdaFunction::from_fn(&b, 0, |_| c(1.0));
    assert!(matches!(difference_ops(&empty, Difference::Plus), Err(nilspherical::Error::Truncation(_))));
}

#[test]
fn summation_by_parts_examples() {
    let b = blocks(&[2]);
    let f = LambdaFunction::from_fn(&b, 6, |al| c(if al.degree() == 0 { 1.0 } else { 0.0 }));
    let g = LambdaFunction::from_fn(&b, 6, |_| c(1.0));
    let (p, m) = summation_by_parts_check(&f, &g).unwrap();
    assert!(p <= 1e-15 && m <= 1e-15);
    let zero = LambdaFunction::from_fn(&b, 6, |_| c(0.0));
    assert_eq!(summation_by_parts_check(&zero, &g).unwrap(), (0.0, 0.0));
    let wide = LambdaFunction::from_fn(&b, 6, |al| c(if al.degree() <= 5 { 1.0 } else { 0.0 }));
    assert!(summation_by_parts_check(&wide, &g).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn summation_by_parts_random(seed in 0u64..100_000, shape in 0usize..3) {
        let m = [vec![1], vec![2, 3], vec![1, 1, 1]][shape].clone();
        let b = blocks(&m);
        let mut rng = substream(seed, 0);
        let fv: Vec<Complex64> = MultiIndexSet::new(b.p1(), 20)
            .iter()
            .map(|al| if al.degree() <= 8 { Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) } else { c(0.0) })
            .collect();
        let gv: Vec<Complex64> = MultiIndexSet::new(b.p1(), 20)
            .iter()
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mut f = LambdaFunction::from_fn(&b, 20, |_| c(0.0));
        f.values = fv;
        let mut g = f.clone();
        g.values = gv;
        let (p, mm) = summation_by_parts_check(&f, &g).unwrap();
        prop_assert!(p <= 1e-12 && mm <= 1e-12, "{} {}", p, mm);
    }
}

#[test]
fn rapid_decrease_examples() {
    let b = blocks(&[1]);
    let geo = LambdaFunction::from_fn(&b, 60, |al| c(0.5f64.powi(al.degree() as i32)));
    assert!(rapid_decrease_lambda(&geo, 5).iter().all(|d| d.pass));
    let inv = LambdaFunction::from_fn(&b, 60, |al| c(1.0 / (2.0 * al.degree() as f64 + 1.0)));
    let r = rapid_decrease_lambda(&inv, 2);
    assert!(r[1].pass && !r[2].pass);
    let one = LambdaFunction::from_fn(&b, 60, |_| c(1.0));
    assert!(!rapid_decrease_lambda(&one, 1)[1].pass);
}

fn phi_circ(alpha: &[usize], b: &BlockStructure, rho: &[f64]) -> f64 {
    // Put each block's radius on its first coordinate.
    let mut z = vec![Complex64::new(0.0, 0.0); b.p0()];
    for (r, range) in rho.iter().zip(b.ranges()) {
        z[range.start] = Complex64::new(r.sqrt(), 0.0);
    }
    omega_type1(alpha, 1.0, b, &HeisenbergPoint::new(z, 0.0)).unwrap().re
}

#[test]
fn orthogonality_of_laguerre_functions() {
    for m in [vec![1], vec![2], vec![1, 1], vec![2, 1]] {
        let b = blocks(&m);
        for beta in MultiIndexSet::new(b.p1(), 4).iter() {
            let coeffs = v_coefficients(|rho| phi_circ(&beta.0, &b, rho), &b, 6, RadialQuadrature::default()).unwrap();
            for (al, v) in coeffs.set.iter().zip(&coeffs.values) {
                let expected = if al == beta { 1.0 } else { 0.0 };
                assert!((v - c(expected)).norm() <= 1e-10, "m={m:?} beta={beta:?} alpha={al:?}: {v}");
            }
        }
    }
}

#[test]
fn gaussian_profile_against_closed_form() {
    // ∫ x^ν e^{-sx} L_k^{(ν)}(x) dx = Γ(k+ν+1)/k! (s-1)^k / s^{k+ν+1}, with
    // s = 3/2 for the profile e^{-|z|²/2}.
    for m in 1..4usize {
        let b = blocks(&[m]);
        let coeffs = v_coefficients(|rho| (-0.5 * rho[0]).exp(), &b, 30, RadialQuadrature::default()).unwrap();
        for (al, v) in coeffs.set.iter().zip(&coeffs.values) {
            let k = al.0[0] as f64;
            let mf = m as f64;
            let ln = ln_gamma(k + mf) - ln_gamma(mf) - ln_gamma(k + 1.0) - k * 3f64.ln() + mf * (2.0f64 / 3.0).ln();
            assert!((v.re - ln.exp()).abs() <= 1e-12, "m={m} k={k}: {} vs {}", v.re, ln.exp());
        }
        assert!(rapid_decrease_lambda(&coeffs, 5).iter().all(|d| d.pass));
    }
    let zero = v_coefficients(|_| 0.0, &blocks(&[1]), 5, RadialQuadrature::default()).unwrap();
    assert!(zero.values.iter().all(|v| *v == c(0.0)));
}

#[test]
fn reconstruction_from_coefficients() {
    let b = blocks(&[1, 2]);
    let f = |rho: &[f64]| (-0.5 * rho[0] - 0.3 * rho[1]).exp() * (1.0 + rho[1]);
    let quad = RadialQuadrature { rate: 0.55, ..Default::default() };
    let coeffs = v_coefficients(f, &b, 40, quad).map_err(|e| e.to_string()).unwrap();
    assert!(rapid_decrease_lambda(&coeffs, 5).iter().all(|d| d.pass));
    for rho in [[0.0, 0.0], [0.7, 1.3], [2.0, 0.4]] {
        let s: Complex64 = coeffs.set.iter().zip(&coeffs.values).map(|(al, v)| v * phi_circ(&al.0, &b, &rho)).sum();
        assert!((s.re - f(&rho)).abs() <= 1e-8, "{rho:?}: {} vs {}", s.re, f(&rho));
    }
}

#[test]
fn derivative_identities() {
    let one = blocks(&[1]);
    let h = HeisenbergPoint::new(vec![Complex64::new(0.6, -0.3)], 0.4);
    let d = derivative_identity_check(&[0], 1.0, &one, &h, 1e-4).unwrap();
    assert!(d.gamma_circ <= 1e-9 && d.gamma_lambda <= 1e-9, "{d:?}");
    let origin = HeisenbergPoint::identity(1);
    for lam in [0.8, -1.3] {
        let d = derivative_identity_check(&[0], lam, &one, &origin, 1e-4).unwrap();
        assert!(d.max() <= 1e-10, "{d:?}");
    }
    let b = blocks(&[2, 1]);
    let mut rng = substream(77, 0);
    for _ in 0..20 {
        let alpha = [rng.gen_range(0..3), rng.gen_range(0..2)];
        let lam = rng.gen_range(0.3..2.5) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let z = (0..3).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let h = HeisenbergPoint::new(z, rng.gen_range(-1.0..1.0));
        let d = derivative_identity_check(&alpha, lam, &b, &h, 1e-4).unwrap();
        assert!(d.max() <= 1e-6, "alpha={alpha:?} lambda={lam}: {d:?}");
    }
    assert!(matches!(
        derivative_identity_check(&[0], 1e-4, &one, &h, 1e-4),
        Err(nilspherical::Error::StepTooLarge { .. })
    ));
}
