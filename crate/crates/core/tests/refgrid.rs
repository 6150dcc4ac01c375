mod common;

use sosdecomp::hjb::check_noise_assumption;
use sosdecomp::refgrid::{solve_fd, FdError};

fn analytic_error(nodes: usize) -> f64 {
    let p = common::scalar("0", 1.0, "0", "0");
    let sig = check_noise_assumption(&p).unwrap();
    let g = solve_fd(&p, &sig, nodes).unwrap();
    let c = 2f64.sqrt().cosh();
    (0..g.len())
        .map(|k| {
            let x = g.node(k)[0];
            (g.values[k] - (2f64.sqrt() * x).cosh() / c).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn matches_cosh_solution() {
    let e = analytic_error(201);
    assert!(e <= 1e-4, "error {e:e}");
}

#[test]
fn second_order_refinement() {
    let ratio = analytic_error(101) / analytic_error(201);
    assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn maximum_principle_in_one_dimension() {
    let p = common::scalar("x^2", 1.0, "0.5", "0");
    let sig = check_noise_assumption(&p).unwrap();
    let g = solve_fd(&p, &sig, 201).unwrap();
    let top = g.values.iter().zip(&g.boundary).filter(|(_, b)| **b).map(|(v, _)| *v).fold(0.0, f64::max);
    for k in (0..g.len()).filter(|&k| !g.boundary[k]) {
        assert!(g.values[k] > 0.0 && g.values[k] <= top, "node {k}: {}", g.values[k]);
    }
}

#[test]
fn maximum_principle_in_two_dimensions() {
    let p = common::planar("1 - (y-1)^2");
    let sig = check_noise_assumption(&p).unwrap();
    let g = solve_fd(&p, &sig, 61).unwrap();
    assert!(g.corner_conflicts > 0);
    let top = g.values.iter().zip(&g.boundary).filter(|(_, b)| **b).map(|(v, _)| *v).fold(0.0, f64::max);
    for k in (0..g.len()).filter(|&k| !g.boundary[k]) {
        assert!(g.values[k] > 0.0 && g.values[k] <= top, "node {k}: {}", g.values[k]);
    }
    assert!(g.residual < 1e-9, "residual {:e}", g.residual);
}

#[test]
fn two_dimensional_self_convergence() {
    // smooth data: no corner conflicts
    let p = common::planar("1");
    let sig = check_noise_assumption(&p).unwrap();
    let coarse = solve_fd(&p, &sig, 21).unwrap();
    let mid = solve_fd(&p, &sig, 41).unwrap();
    let fine = solve_fd(&p, &sig, 81).unwrap();
    // shared nodes of the three grids
    let at = |g: &sosdecomp::refgrid::GridSolution, i: usize, j: usize, stride: usize| g.values[(j * stride) * g.axes[0].len() + i * stride];
    let (mut e1, mut e2) = (0.0f64, 0.0f64);
    for j in 0..21 {
        for i in 0..21 {
            let f = at(&fine, i, j, 4);
            e1 = e1.max((at(&coarse, i, j, 1) - f).abs());
            e2 = e2.max((at(&mid, i, j, 2) - f).abs());
        }
    }
    // Richardson: (e_h - e_{h/4}) / (e_{h/2} - e_{h/4}) = 5 for second order
    let ratio = e1 / e2;
    assert!((4.0..=6.0).contains(&ratio), "ratio {ratio} ({e1:e}, {e2:e})");
}

#[test]
fn csv_has_one_row_per_node() {
    let p = common::planar("1 - (y-1)^2");
    let sig = check_noise_assumption(&p).unwrap();
    let g = solve_fd(&p, &sig, 11).unwrap();
    let mut buf = Vec::new();
    g.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x1,x2,psi_fd"));
    assert_eq!(lines.count(), 121);
}

#[test]
fn rejects_unsupported_inputs() {
    let p = common::scalar("0", 1.0, "0", "0");
    let sig = check_noise_assumption(&p).unwrap();
    assert_eq!(solve_fd(&p, &sig, 5), Err(FdError::TooFewNodes(5)));
}
