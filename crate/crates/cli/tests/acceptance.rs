//! One PASS/FAIL line per acceptance criterion, run in process on the
//! default configuration.
//!
//! Criterion 13 is known to fail: for `e^{-κ}` every region's shell
//! increment decays like `m^{-2}`, so the last shell at `T = 60` is of order
//! `1e-5`, far above the `1e-10` Cauchy tolerance. The test asserts that
//! outcome and the `m^{-2}` magnitude rather than hiding the row.

use nilspherical_cli::checks::{resolve_suite, run_check, Context, Status};
use nilspherical_cli::config::parse_config_str;

/// (criterion, check, tolerance, runtime limit in seconds).
const CRITERIA: [(usize, &str, f64, f64); 14] = [
    (1, "combinatorial_identities", 0.0, 10.0),
    (2, "summation_by_parts", 1e-12, 10.0),
    (3, "orthogonality", 1e-8, 10.0),
    (4, "derivative_identities", 1e-6, 10.0),
    (5, "heisenberg_eigenvalue", 1e-5, 10.0),
    (6, "fn_eigenvalue", 1e-4, 60.0),
    (7, "functional_equation", 5e-3, 120.0),
    (8, "psi2_homomorphism", 1e-12, 1.0),
    (9, "inversion_round_trip", 1e-3, 120.0),
    (10, "plancherel", 1e-3, 120.0),
    (11, "rapid_decrease_certificate", 0.0, 300.0),
    (12, "intertwining_g_delta", 1e-2, 300.0),
    (13, "integrability_regions", 1e-10, 60.0),
    (14, "lemma_bounds", 1e-14, 10.0),
];

const KNOWN_FAILING: [usize; 1] = [13];

fn main() {
    let config = parse_config_str("n = 2\nseed = 42\n", None).unwrap().config;
    let checks = resolve_suite("acceptance").unwrap();
    assert_eq!(checks.len(), CRITERIA.len());
    let ctx = Context {
        config: &config,
        slice: config.slice(),
    };
    let mut unexpected = Vec::new();
    for ((criterion, name, tol, limit), check) in CRITERIA.iter().zip(&checks) {
        assert_eq!((check.criterion, check.name), (*criterion, *name));
        let r = run_check(check, &ctx);
        let verdict = if r.status == Status::Pass { "PASS" } else { "FAIL" };
        println!(
            "{verdict} criterion {criterion:>2} {name}: defect {:.3e} tolerance {:.0e} ({:.1} s, limit {limit} s) {}",
            r.defect, r.tolerance, r.seconds, r.detail
        );
        assert_eq!(r.tolerance, *tol, "tolerance of {name}");
        if r.seconds > *limit {
            println!("     note: {name} exceeded its {limit} s budget in this build");
        }
        let expected_pass = !KNOWN_FAILING.contains(criterion);
        if (r.status == Status::Pass) != expected_pass {
            unexpected.push(format!("criterion {criterion} ({name}): {:?} {}", r.status, r.detail));
        }
        if *criterion == 13 {
            // Last shell of the largest region, A2: 2·(√π/2)·erf(1)·(2/e)·τ², τ = 1/121.
            let predicted = std::f64::consts::PI.sqrt() * erf(1.0) * (2.0 / std::f64::consts::E) / (121.0 * 121.0);
            assert!((r.defect - predicted).abs() <= 1e-8 * predicted, "{} vs {predicted}", r.defect);
        }
    }
    assert!(unexpected.is_empty(), "{unexpected:#?}");
}

/// erf by its Maclaurin series, enough for |x| ≤ 1.
fn erf(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    for n in 1..60 {
        term *= -x * x / n as f64;
        sum += term / (2 * n + 1) as f64;
    }
    2.0 / std::f64::consts::PI.sqrt() * sum
}
