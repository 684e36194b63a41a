use nilspherical::freegroup::GroupElement;
use nilspherical::spectrum::*;
use nilspherical::transform::*;
use nilspherical::Complex64;

fn f2() -> SpectrumSlice {
    SpectrumSlice::default_for(2).unwrap()
}

fn catalog() -> Vec<InvariantTestFunction> {
    vec![
        InvariantTestFunction::gaussian(1.0, 1.0).unwrap(),
        InvariantTestFunction::gaussian(0.7, 1.3).unwrap(),
        InvariantTestFunction::poly_gaussian(vec![vec![1.0, -0.5], vec![0.25, 0.0], vec![0.1]], 1.1, 0.9).unwrap(),
    ]
}

#[test]
fn f2_fast_path_matches_spherical_functions() {
    // The F(2) α-sum uses a closed form for φ; compare against eval_spherical.
    let s = f2();
    let f = &catalog()[2];
    let x = GroupElement::new(vec![0.4, -0.9], vec![0.35]).unwrap();
    for lambda in [-2.0, 0.3, 5.0] {
        let t = transform_table(f, &s, 0.0, lambda, 12).unwrap();
        let mut direct = Complex64::new(0.0, 0.0);
        for (al, v) in t.set.iter().zip(&t.values) {
            let p = SphericalPoint::Type1 { r: 0.0, alpha: al.0.clone(), lambda };
            direct += v * eval_spherical(&p, &x, &s, Averaging::ClosedForm).unwrap().value;
        }
        let fast: Complex64 = {
            let rho: f64 = x.x.iter().map(|v| v * v).sum();
            let ell = nilspherical::special::laguerre_function_table(12, 0.0, 0.5 * lambda.abs() * rho, 0.5);
            t.values.iter().zip(&ell).map(|(v, l)| v * (l * (lambda * x.a[0]).cos())).sum()
        };
        assert!((fast - direct).norm() <= 1e-13 * direct.norm().max(1e-3));
    }
}

fn sample_points() -> Vec<GroupElement> {
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
    .map(|(x, a)| GroupElement::new(x.to_vec(), vec![a]).unwrap())
    .collect()
}

#[test]
fn f2_calibration_matches_heisenberg_constant() {
    // F(2) is H_1 with Lebesgue measure preserved by ψ2, and the radial H_1
    // inversion carries (2π)^{-(a+1)}. With the (2π)^{a+2} prefactor this
    // forces c = 2π.
    let s = f2();
    let q = QuadratureSpec::default();
    let two_pi = 2.0 * std::f64::consts::PI;
    let cs: Vec<f64> = catalog().iter().map(|f| calibrate_c(f, &s, &q).unwrap()).collect();
    for c in &cs {
        assert!((c - two_pi).abs() <= 1e-3 * two_pi, "c = {c}");
        assert!((c - cs[0]).abs() <= 1e-3 * cs[0]);
    }
    let wide = QuadratureSpec { lambda_max: 32.0, ..q.clone() };
    let c_wide = calibrate_c(&catalog()[0], &s, &wide).unwrap();
    assert!((c_wide - cs[0]).abs() <= 1e-4 * cs[0]);
    let zero_at_e = InvariantTestFunction::poly_gaussian(vec![vec![0.0], vec![1.0]], 1.0, 1.0).unwrap();
    assert!(calibrate_c(&zero_at_e, &s, &q).is_err());
}

#[test]
fn f2_round_trip_over_sample_points() {
    let s = f2();
    let q = QuadratureSpec::default();
    let c = calibrate_c(&catalog()[0], &s, &q).unwrap();
    for f in [&catalog()[0], &catalog()[2]] {
        let g = TransformSpectrum::new(f.clone(), s.clone());
        let scale = f.value(&GroupElement::identity(2), &s).unwrap().norm();
        let mut worst: f64 = 0.0;
        for x in sample_points() {
            let got = inverse_transform(g.as_ref(), &x, &s, &q, c).unwrap();
            let want = f.value(&x, &s).unwrap();
            worst = worst.max((got.value - want).norm() / scale);
            assert!(got.tail <= 1e-6 && got.gap <= 1e-2);
        }
        assert!(worst <= 1e-3, "sup-relative round-trip error {worst}");
    }
}

#[test]
fn zero_spectrum_function_inverts_to_zero() {
    let s = f2();
    let zero = FnSpectrum::new(s.blocks.clone(), |_r: f64, _a: &[usize], _l: f64| Complex64::new(0.0, 0.0));
    let x = GroupElement::new(vec![0.2, 0.1], vec![0.3]).unwrap();
    let q = QuadratureSpec { truncation: 8, ..Default::default() };
    let v = inverse_transform(&zero, &x, &s, &q, 2.0 * std::f64::consts::PI).unwrap();
    assert_eq!(v.value, Complex64::new(0.0, 0.0));
}

#[test]
fn plancherel_on_f2() {
    let s = f2();
    let q = QuadratureSpec::default();
    let c = calibrate_c(&catalog()[0], &s, &q).unwrap();
    for f in catalog() {
        let p = plancherel_defect(&f, &s, &q, c).unwrap();
        assert!(p.defect <= 1e-3, "{p:?}");
        let p2 = plancherel_defect(&f.scaled(2.0), &s, &q, c).unwrap();
        assert!((p2.defect - p.defect).abs() <= 1e-12);
        assert!((p2.lhs - 4.0 * p.lhs).abs() <= 1e-12 * p2.lhs);
    }
    let zero = InvariantTestFunction::poly_gaussian(vec![vec![0.0]], 1.0, 1.0).unwrap();
    assert_eq!(plancherel_defect(&zero, &s, &q, c).unwrap().defect, 0.0);
}

#[test]
fn plancherel_defect_shrinks_with_order() {
    let s = f2();
    let f = &catalog()[1];
    let c = 2.0 * std::f64::consts::PI;
    let d: Vec<f64> = [4usize, 8, 16]
        .iter()
        .map(|&o| {
            let q = QuadratureSpec { lambda_order: o, ..Default::default() };
            plancherel_defect(f, &s, &q, c).unwrap().defect
        })
        .collect();
    // Order doubling: O(order^{-2}) means at least a factor 4 per step
    // until the gap term dominates.
    assert!(d[1] <= d[0] / 4.0 || d[1] <= 1e-6, "{d:?}");
    assert!(d[2] <= d[1] / 4.0 || d[2] <= 1e-6, "{d:?}");
}
