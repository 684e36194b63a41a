use nilspherical::spectrum::*;
use nilspherical::transform::*;
use nilspherical::Complex64;
use num_bigint::BigUint;

fn f3() -> SpectrumSlice {
    SpectrumSlice::default_for(3).unwrap()
}

#[test]
fn exp_minus_kappa_report() {
    let s = f3();
    let g = exp_minus_kappa(&s);
    let spec = IntegrabilitySpec::default();
    let rep = integrability_report(&g, &s, s.a() as u32 + 3, 1.0, &spec).unwrap();
    assert!(rep.warning.is_none());
    assert!(rep.all_finite(), "{:?}", rep.regions.iter().map(|r| r.cutoff_growth).collect::<Vec<_>>());
    for r in &rep.regions {
        eprintln!("{:?}: total {:e}, last increment {:e}", r.region, r.total(), r.cauchy_defect);
        // Shell increments are dominated by the comparison series up to a constant.
        let ratio: Vec<f64> = r
            .shells
            .iter()
            .zip(r.comparison.iter().scan(0.0, |prev, c| {
                let inc = c - *prev;
                *prev = *c;
                Some(inc)
            }))
            .map(|(s, c)| s / c)
            .collect();
        let head = ratio[..10].iter().cloned().fold(0.0, f64::max);
        assert!(ratio.iter().all(|v| *v <= 10.0 * head + 1e-300), "{:?}", r.region);
    }
    // Every region's increments decay like m^{-2}, far above 1e-10 at T = 60.
    assert!(!rep.all_cauchy());
}

#[test]
fn shell_increments_match_closed_form() {
    // On F(3) with G = e^{-κ}, κ = |λ|(2m+1) + r², each shell factorises:
    // 2 ∫ e^{-r²} dr · ∫ λ e^{-λ(2m+1)} dλ, and with u = λ(2m+1) the λ-part
    // is τ² ∫ u e^{-u} du, τ = 1/(2m+1), over u < 1 or u > 1.
    let s = f3();
    let g = exp_minus_kappa(&s);
    let k = 1.0;
    let rep = integrability_report(&g, &s, 4, k, &IntegrabilitySpec::default()).unwrap();
    let half_sqrt_pi = 0.5 * std::f64::consts::PI.sqrt();
    let r_inner = half_sqrt_pi * libm::erf(k);
    let r_outer = half_sqrt_pi * libm::erfc(k);
    let e = std::f64::consts::E;
    let (l_small, l_large) = (1.0 - 2.0 / e, 2.0 / e);
    for (region, rf, lf) in [
        (Region::A1, r_inner, l_small),
        (Region::A2, r_inner, l_large),
        (Region::A3, r_outer, l_small),
        (Region::A4, r_outer, l_large),
    ] {
        for (m, v) in rep.region(region).shells.iter().enumerate() {
            let tau = 1.0 / (2.0 * m as f64 + 1.0);
            let want = 2.0 * rf * lf * tau * tau;
            assert!((v - want).abs() <= 1e-10 * want, "{region:?} m = {m}: {v} vs {want}");
        }
    }
}

#[test]
fn constant_function_diverges() {
    let s = f3();
    let one = FnSpectrum::new(s.blocks.clone(), |_r: f64, _a: &[usize], _l: f64| Complex64::new(1.0, 0.0));
    let spec = IntegrabilitySpec { t: 10, ..Default::default() };
    let rep = integrability_report(&one, &s, 0, 1.0, &spec).unwrap();
    assert!(rep.warning.is_some());
    assert!(rep.region(Region::A1).finite);
    assert!(!rep.region(Region::A2).finite);
    assert!(!rep.region(Region::A4).finite);
}

#[test]
fn f2_has_no_large_r_regions() {
    let s = SpectrumSlice::default_for(2).unwrap();
    let g = exp_minus_kappa(&s);
    let rep = integrability_report(&g, &s, 4, 1.0, &IntegrabilitySpec { t: 20, ..Default::default() }).unwrap();
    assert!(rep.region(Region::A3).empty && rep.region(Region::A4).empty);
    assert!(rep.region(Region::A1).total() > 0.0);
}

#[test]
fn dimension_growth() {
    let s5 = 5f64.sqrt();
    for s in [
        SpectrumSlice::default_for(2).unwrap(),
        f3(),
        SpectrumSlice::new(4, vec![1, 1], vec![2.0 / s5, 1.0 / s5], vec![]).unwrap(),
    ] {
        assert_eq!(dm_growth_check(&s, 200).unwrap(), None);
    }
    assert_eq!(d_m(3, 3), BigUint::from(10u32));
    assert_eq!(d_m(0, 5), BigUint::from(1u32));
}

#[test]
fn invalid_cutoff_is_rejected() {
    let s = f3();
    let g = exp_minus_kappa(&s);
    assert!(integrability_report(&g, &s, 4, 0.0, &IntegrabilitySpec::default()).is_err());
}
