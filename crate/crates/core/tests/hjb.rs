mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use sosdecomp::hjb::{
    check_noise_assumption, desirability_to_value, extract_policy, generator, hjb_residual, HjbError, NoiseStructure,
};
use sosdecomp::polynomial::{monomial_basis, Polynomial};

fn poly(nvars: usize, max_deg: u32) -> impl Strategy<Value = Polynomial> {
    let basis = monomial_basis(nvars, max_deg);
    prop::collection::vec(-1.0..1.0f64, basis.len())
        .prop_map(move |c| Polynomial::from_terms(nvars, basis.iter().cloned().zip(c)))
}

/// `fᵀ∇Ψ + ½ ΔΨ` of the planar example by central differences.
fn planar_generator_fd(psi: &Polynomial, x: f64, y: f64) -> f64 {
    let h = 1e-4;
    let p = |a: f64, b: f64| psi.eval(&[a, b]);
    let px = (p(x + h, y) - p(x - h, y)) / (2.0 * h);
    let py = (p(x, y + h) - p(x, y - h)) / (2.0 * h);
    let pxx = (p(x + h, y) - 2.0 * p(x, y) + p(x - h, y)) / (h * h);
    let pyy = (p(x, y + h) - 2.0 * p(x, y) + p(x, y - h)) / (h * h);
    let f1 = 0.1 * (-2.0 * x - x.powi(3) - 5.0 * y - y.powi(3));
    let f2 = 0.1 * (6.0 * x + x.powi(3) - 3.0 * y - y.powi(3));
    f1 * px + f2 * py + 0.5 * (pxx + pyy)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generator_matches_finite_differences(psi in poly(2, 6), x in -1.0..1.0f64, y in -1.0..1.0f64) {
        let prob = common::planar("1 - (y-1)^2");
        let sig = check_noise_assumption(&prob).unwrap();
        let l = generator(&psi, &prob.drift, &sig).unwrap();
        let want = planar_generator_fd(&psi, x, y);
        prop_assert!((l.eval(&[x, y]) - want).abs() < 1e-5 * (1.0 + want.abs()), "{} vs {}", l.eval(&[x, y]), want);
        // first exit residual q Ψ / λ − L(Ψ) with q = λ = 1
        let r = hjb_residual(&psi, &prob, &sig).unwrap();
        prop_assert!((r.eval(&[x, y]) - (psi.eval(&[x, y]) - l.eval(&[x, y]))).abs() < 1e-9);
    }

    #[test]
    fn generator_is_linear(p in poly(2, 5), q in poly(2, 5), a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let prob = common::planar("1");
        let sig = check_noise_assumption(&prob).unwrap();
        let lhs = generator(&(&p.scale(a) + &q.scale(b)), &prob.drift, &sig).unwrap();
        let rhs = &generator(&p, &prob.drift, &sig).unwrap().scale(a) + &generator(&q, &prob.drift, &sig).unwrap().scale(b);
        prop_assert!(lhs.max_coeff_diff(&rhs) < 1e-10);
    }

    #[test]
    fn noise_assumption_detects_perturbations(delta in prop_oneof![-0.5..-1e-6f64, 1e-6..0.5f64]) {
        let mut prob = common::planar("1");
        prob.control_penalty[(0, 0)] += delta;
        let err = check_noise_assumption(&prob).unwrap_err();
        prop_assert!(matches!(err, HjbError::NoiseAssumptionViolated(d) if d > 0.0));
    }

    #[test]
    fn noise_assumption_survives_joint_rescaling(c in 0.1..10.0f64) {
        // λ → cλ with R → cR leaves λ G R⁻¹ Gᵀ unchanged
        let mut prob = common::planar("1");
        prob.lambda *= c;
        prob.control_penalty *= c;
        let sig = check_noise_assumption(&prob).unwrap();
        prop_assert_eq!(sig, NoiseStructure::Constant(DMatrix::identity(2, 2)));
    }
}

#[test]
fn scalar_sigma_is_one() {
    let p = common::scalar("x^2", 1.0, "0", "0");
    assert_eq!(check_noise_assumption(&p).unwrap(), NoiseStructure::Constant(DMatrix::identity(1, 1)));
}

#[test]
fn value_and_policy_of_an_exponential_fit() {
    // Ψ = 1 + x: V = −ln(1 + x), u* = Ψ'/Ψ = 1 / (1 + x)
    let p = common::scalar("0", 1.0, "0", "0");
    let psi = &Polynomial::constant(1, 1.0) + &Polynomial::var(1, 0);
    for x in [-0.5, 0.0, 0.7] {
        let v = desirability_to_value(psi.eval(&[x]), 1.0).unwrap();
        assert!((v + (1.0 + x as f64).ln()).abs() < 1e-15);
        let u = extract_policy(&psi, &p, &[x]).unwrap();
        assert!((u[0] - 1.0 / (1.0 + x)).abs() < 1e-14);
    }
    assert!(desirability_to_value(0.0, 1.0).is_err());
}
