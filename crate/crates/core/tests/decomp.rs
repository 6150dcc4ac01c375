mod common;

use proptest::prelude::*;
use sosdecomp::decomp::{
    admm_solve, build_coupling, evaluate_stitched, is_two_block, make_grid_partition, CouplingVar, DecompOptions,
    Partition,
};
use sosdecomp::hjb::BoxRegion;
use sosdecomp::polynomial::{monomial_basis, Polynomial};
use sosdecomp::soscert::Direction;

const DEG: u32 = 4;

fn partition() -> Partition {
    make_grid_partition(&BoxRegion::new(vec![-1.0, -2.0], vec![3.0, 1.0]).unwrap(), &[2, 3]).unwrap()
}

fn poly(nvars: usize, max_deg: u32) -> impl Strategy<Value = Polynomial> {
    let basis = monomial_basis(nvars, max_deg);
    prop::collection::vec(-1.0..1.0f64, basis.len())
        .prop_map(move |c| Polynomial::from_terms(nvars, basis.iter().cloned().zip(c)))
}

/// Largest coupling-row residual of facet `fi` per derivative order, with
/// global-coordinate polynomials for its two regions.
fn row_residuals(p: &Partition, order: u32, fi: usize, lo: &Polynomial, hi: &Polynomial) -> Vec<f64> {
    let c = build_coupling(p, DEG, order).unwrap();
    let f = &p.facets[fi];
    let lo_local = p.regions[f.lower].poly_to_local(lo);
    let hi_local = p.regions[f.upper].poly_to_local(hi);
    let mut worst = vec![0.0f64; order as usize + 1];
    for row in &c[fi].rows {
        let Some(k) = row.order else { continue };
        let r: f64 = row
            .terms
            .iter()
            .map(|(reg, var, w)| {
                let CouplingVar::Psi(m) = var else { unreachable!() };
                let local = if *reg == f.lower { &lo_local } else { &hi_local };
                w * local.coeff(m)
            })
            .sum();
        worst[k as usize] = worst[k as usize].max(r.abs());
    }
    worst
}

fn power_of_normal(p: &Partition, fi: usize, k: u32) -> Polynomial {
    let f = &p.facets[fi];
    let t = &Polynomial::var(2, f.axis) - &Polynomial::constant(2, f.value);
    t.pow(k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn matching_restrictions_satisfy_rows(base in poly(2, DEG), extra in poly(2, 1), order in 0u32..3, fi in 0usize..7) {
        // hi − lo vanishes to order `order` across the facet
        let p = partition();
        let fi = fi % p.facets.len();
        let bump = &power_of_normal(&p, fi, order + 1) * &extra;
        let hi = &base + &bump;
        for r in row_residuals(&p, order, fi, &base, &hi) {
            prop_assert!(r < 1e-9, "{}", r);
        }
    }

    #[test]
    fn mismatched_derivatives_violate_rows(base in poly(2, DEG), k in 0u32..3, order in 0u32..3, fi in 0usize..7, c in 0.5..2.0f64) {
        prop_assume!(k <= order);
        let p = partition();
        let fi = fi % p.facets.len();
        // a jump in the k-th normal derivative only
        let hi = &base + &power_of_normal(&p, fi, k).scale(c);
        let res = row_residuals(&p, order, fi, &base, &hi);
        for (j, r) in res.iter().enumerate() {
            if j as u32 == k {
                prop_assert!(*r > 1e-3, "order {} residual {}", j, r);
            } else if (j as u32) < k {
                prop_assert!(*r < 1e-9, "order {} residual {}", j, r);
            }
        }
    }
}

#[test]
fn checkerboard_rows_are_two_block() {
    let p = partition();
    for order in 0..=2 {
        assert!(is_two_block(&p, &build_coupling(&p, DEG, order).unwrap()));
    }
    assert!(build_coupling(&p, 2, 3).is_err());
}

#[test]
fn trivial_problem_has_zero_slack() {
    // q = 0 and φ = 0: Ψ ≡ 1 is exact
    let p = common::scalar("x^2", 0.0, "0", "0");
    let part = make_grid_partition(&p.domain, &[2]).unwrap();
    for dir in [Direction::Upper, Direction::Lower] {
        let sol = admm_solve(&p, &part, &DecompOptions::new(4, dir, 1)).unwrap();
        assert!(sol.converged);
        assert!(sol.gamma_max.abs() <= 1e-6, "{}", sol.gamma_max);
        for x in [-1.0, -0.3, 0.0, 0.8] {
            assert!((evaluate_stitched(&sol, &[x]).unwrap() - 1.0).abs() < 1e-5);
        }
    }
}

#[test]
fn scalar_upper_bound_converges() {
    let p = common::scalar("x^2", 1.0, "0", "0");
    let part = make_grid_partition(&p.domain, &[2]).unwrap();
    let sol = admm_solve(&p, &part, &DecompOptions::new(6, Direction::Upper, 1)).unwrap();
    assert!(sol.converged);
    let last = sol.trace.last().unwrap();
    assert!(last.primal_residual <= 1e-5);
    assert!(sol.gamma_spread() <= 1e-4);
    // stitched value sits above the exact Ψ(0) estimated on a fine grid
    let g = sosdecomp::refgrid::solve_fd(&p, &sosdecomp::hjb::check_noise_assumption(&p).unwrap(), 201).unwrap();
    let mid = g.values[100];
    assert!(evaluate_stitched(&sol, &[0.0]).unwrap() >= mid - 1e-4);
    assert!(evaluate_stitched(&sol, &[2.0]).is_err());
}

#[test]
fn serial_and_parallel_sweeps_agree() {
    let p = common::scalar("x^2", 1.0, "0", "0");
    let part = make_grid_partition(&p.domain, &[3]).unwrap();
    let mut a = DecompOptions::new(4, Direction::Upper, 1);
    a.admm.max_outer = 15;
    let mut b = a.clone();
    b.admm.parallel = false;
    let sa = admm_solve(&p, &part, &a).unwrap();
    let sb = admm_solve(&p, &part, &b).unwrap();
    assert_eq!(sa, sb);
}
