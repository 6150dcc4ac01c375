use proptest::prelude::*;
use sosdecomp::polynomial::{basis_len, monomial_basis, parse, MultiIndex, Polynomial};

const NAMES: [&str; 3] = ["x", "y", "z"];

fn poly(nvars: usize, max_deg: u32) -> impl Strategy<Value = Polynomial> {
    let basis = monomial_basis(nvars, max_deg);
    let k = basis.len();
    prop::collection::vec(prop_oneof![Just(0.0), -3.0..3.0f64], k)
        .prop_map(move |c| Polynomial::from_terms(nvars, basis.iter().cloned().zip(c)))
}

fn point(nvars: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.5..1.5f64, nvars)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn evaluation_is_a_ring_homomorphism(p in poly(2, 4), q in poly(2, 4), x in point(2)) {
        let (pv, qv) = (p.eval(&x), q.eval(&x));
        prop_assert!(close((&p + &q).eval(&x), pv + qv, 1e-12));
        prop_assert!(close((&p - &q).eval(&x), pv - qv, 1e-12));
        prop_assert!(close((&p * &q).eval(&x), pv * qv, 1e-10));
        prop_assert!(close(p.scale(-2.5).eval(&x), -2.5 * pv, 1e-12));
    }

    #[test]
    fn product_rule(p in poly(3, 3), q in poly(3, 3), var in 0usize..3) {
        let lhs = (&p * &q).differentiate(var).unwrap();
        let rhs = &(&p.differentiate(var).unwrap() * &q) + &(&p * &q.differentiate(var).unwrap());
        prop_assert!(lhs.max_coeff_diff(&rhs) < 1e-9);
    }

    #[test]
    fn gradient_matches_central_differences(p in poly(2, 5), x in point(2), var in 0usize..2) {
        let h = 1e-5;
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[var] += h;
        xm[var] -= h;
        let fd = (p.eval(&xp) - p.eval(&xm)) / (2.0 * h);
        let exact = p.differentiate(var).unwrap().eval(&x);
        prop_assert!((fd - exact).abs() <= 1e-5 * (1.0 + exact.abs()), "fd {} exact {}", fd, exact);
    }

    #[test]
    fn degree_of_product_adds(p in poly(2, 3), q in poly(2, 3)) {
        prop_assume!(!p.is_zero() && !q.is_zero());
        // leading forms of real polynomials never cancel in a product
        prop_assert_eq!((&p * &q).degree(), p.degree() + q.degree());
    }

    #[test]
    fn restriction_fixes_one_variable(p in poly(3, 4), x in point(3), var in 0usize..3) {
        let r = p.restrict(var, x[var]).unwrap();
        prop_assert_eq!(r.nvars(), 2);
        let rest: Vec<f64> = x.iter().enumerate().filter(|(i, _)| *i != var).map(|(_, v)| *v).collect();
        prop_assert!(close(r.eval(&rest), p.eval(&x), 1e-10));
    }

    #[test]
    fn affine_substitution_composes(p in poly(2, 4), x in point(2), off in point(2), sc in prop::collection::vec(0.2..2.0f64, 2)) {
        let s = p.affine_substitute(&off, &sc);
        let y: Vec<f64> = x.iter().zip(&off).zip(&sc).map(|((x, o), s)| o + s * x).collect();
        prop_assert!(close(s.eval(&x), p.eval(&y), 1e-9));
    }

    #[test]
    fn printed_expressions_parse_back(p in poly(3, 3)) {
        let text = p.to_expr(&NAMES);
        let q = parse(&text, &NAMES).unwrap();
        prop_assert!(q.max_coeff_diff(&p) <= 1e-12 * (1.0 + p.max_abs_coeff()), "{}", text);
    }

    #[test]
    fn no_zero_coefficients_are_stored(p in poly(2, 3)) {
        let c = &p - &p;
        prop_assert!(c.is_zero());
        prop_assert_eq!(c.len(), 0);
        prop_assert!(p.terms().all(|(_, c)| c != 0.0));
    }

    #[test]
    fn basis_is_graded_and_complete(n in 1usize..4, d in 0u32..6) {
        let b = monomial_basis(n, d);
        prop_assert_eq!(b.len(), basis_len(n, d));
        prop_assert!(b.windows(2).all(|w| w[0].degree() <= w[1].degree()));
        let mut sorted = b.clone();
        sorted.sort();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), b.len());
    }
}

#[test]
fn basis_counts() {
    assert_eq!(monomial_basis(1, 2).len(), 3);
    assert_eq!(monomial_basis(2, 8).len(), 45);
    let b = monomial_basis(2, 2);
    let want: Vec<MultiIndex> = [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]
        .iter()
        .map(|e| MultiIndex::new(e.to_vec()))
        .collect();
    assert_eq!(b, want);
}
