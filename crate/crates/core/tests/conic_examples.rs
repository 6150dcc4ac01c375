mod common;

use common::conic::{kkt, random_program};
use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use sosdecomp::conic::svec::{smat, svec, svec_index};
use sosdecomp::conic::{
    choose_method, psd_project, solve, solve_quadratic_penalty, Cone, ConicProgram, Method,
    SolveStatus, SolverOptions, SparseMatrix,
};

fn psd_2x2_program() -> ConicProgram {
    // min x s.t. [[x,1],[1,x]] psd
    let mut a = SparseMatrix::new(3);
    a.push_row([(svec_index(2, 0, 0), 1.0), (svec_index(2, 1, 1), -1.0)]);
    a.push_row([(svec_index(2, 1, 0), 1.0 / std::f64::consts::SQRT_2)]);
    ConicProgram::new(
        vec![1.0, 0.0, 0.0],
        a,
        vec![0.0, 1.0],
        vec![Cone::Psd(2)],
        vec![],
    )
    .unwrap()
}

#[test]
fn psd_two_by_two() {
    let sol = solve(&psd_2x2_program(), &SolverOptions::default());
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.primal[0] - 1.0).abs() < 1e-8, "{sol:?}");
}

#[test]
fn lp_on_simplex() {
    let mut a = SparseMatrix::new(2);
    a.push_row([(0, 1.0), (1, 1.0)]);
    let prog =
        ConicProgram::new(vec![1.0, 1.0], a, vec![1.0], vec![Cone::Nonneg(2)], vec![]).unwrap();
    let sol = solve(&prog, &SolverOptions::default());
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.primal_objective - 1.0).abs() < 1e-8, "{sol:?}");
}

#[test]
fn random_instances_satisfy_kkt() {
    for seed in 0..30 {
        let prog = random_program(seed);
        let sol = solve(&prog, &SolverOptions::default());
        assert_eq!(sol.status, SolveStatus::Optimal, "seed {seed}: {sol:?}");
        let k = kkt(&prog, &sol);
        assert!(k.primal <= 1e-6, "seed {seed}: primal {}", k.primal);
        assert!(k.dual <= 1e-6, "seed {seed}: dual {}", k.dual);
        assert!(k.cone_x <= 1e-6, "seed {seed}: cone x {}", k.cone_x);
        assert!(k.cone_z <= 1e-6, "seed {seed}: cone z {}", k.cone_z);
        assert!(k.compl <= 1e-6, "seed {seed}: complementarity {}", k.compl);
        assert!(
            sol.primal_objective >= sol.dual_objective - 1e-8 * (1.0 + sol.primal_objective.abs())
        );
    }
}

#[test]
fn solves_are_deterministic() {
    let prog = random_program(7);
    let a = solve(&prog, &SolverOptions::default());
    let b = solve(&prog, &SolverOptions::default());
    assert_eq!(a, b);
}

#[test]
fn objective_scaling_keeps_argmin() {
    for seed in [3, 11, 19] {
        let prog = random_program(seed);
        let base = solve(&prog, &SolverOptions::default());
        let mut scaled = prog.clone();
        scaled.objective.iter_mut().for_each(|c| *c *= 7.5);
        let s = solve(&scaled, &SolverOptions::default());
        let diff = base
            .primal
            .iter()
            .zip(&s.primal)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        // argmin of a generic SDP is unique, so both runs land on it
        assert!(diff <= 1e-6, "seed {seed}: {diff}");
        let mut rhs = prog.clone();
        rhs.rhs.iter_mut().for_each(|b| *b *= 3.0);
        let r = solve(&rhs, &SolverOptions::default());
        let diff = base
            .primal
            .iter()
            .zip(&r.primal)
            .map(|(a, b)| (3.0 * a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff <= 1e-6, "seed {seed}: rhs scaling {diff}");
    }
}

#[test]
fn detects_primal_infeasibility() {
    // x >= 0, x0 + x1 = -1
    let mut a = SparseMatrix::new(2);
    a.push_row([(0, 1.0), (1, 1.0)]);
    let prog =
        ConicProgram::new(vec![1.0, 1.0], a, vec![-1.0], vec![Cone::Nonneg(2)], vec![]).unwrap();
    let sol = solve(&prog, &SolverOptions::default());
    assert_eq!(sol.status, SolveStatus::Infeasible, "{sol:?}");
    assert!((sol.dual_eq[0] * -1.0 - 1.0).abs() < 1e-9);
}

#[test]
fn detects_unboundedness() {
    // min -x0 s.t. x0 - x1 = 0, x >= 0
    let mut a = SparseMatrix::new(2);
    a.push_row([(0, 1.0), (1, -1.0)]);
    let prog =
        ConicProgram::new(vec![-1.0, 0.0], a, vec![0.0], vec![Cone::Nonneg(2)], vec![]).unwrap();
    let sol = solve(&prog, &SolverOptions::default());
    assert_eq!(sol.status, SolveStatus::Unbounded, "{sol:?}");
}

#[test]
fn penalty_examples() {
    let opts = SolverOptions::default();
    // free z, c = 0, (rho/2)(z-3)^2
    let prog = ConicProgram::new(
        vec![0.0],
        SparseMatrix::new(1),
        vec![],
        vec![Cone::Free(1)],
        vec![],
    )
    .unwrap();
    let mut p = SparseMatrix::new(1);
    p.push_row([(0, 1.0)]);
    let sol = solve_quadratic_penalty(&prog, &p, &[3.0], 1.0, &opts);
    assert_eq!(sol.status, SolveStatus::Optimal);
    // the epigraph form is flat to second order at the optimum, so the argmin
    // is accurate to about the solver tolerance rather than its square
    assert!((sol.primal[0] - 3.0).abs() < 1e-7, "{sol:?}");
    assert!(sol.primal_objective.abs() < 1e-7);
    // c = z, (1/2) z^2
    let prog = ConicProgram::new(
        vec![1.0],
        SparseMatrix::new(1),
        vec![],
        vec![Cone::Free(1)],
        vec![],
    )
    .unwrap();
    let sol = solve_quadratic_penalty(&prog, &p, &[0.0], 1.0, &opts);
    assert!((sol.primal[0] + 1.0).abs() < 1e-7, "{sol:?}");
    assert!((sol.primal_objective + 0.5).abs() < 1e-7);
}

#[test]
fn splitting_agrees_with_interior_point() {
    let prog = psd_2x2_program();
    let opts = SolverOptions {
        method: Method::Splitting,
        tol: 1e-7,
        ..Default::default()
    };
    let sol = solve(&prog, &opts);
    assert_eq!(sol.status, SolveStatus::Optimal, "{sol:?}");
    assert!((sol.primal[0] - 1.0).abs() < 1e-5);
}

#[test]
fn auto_switches_on_memory_budget() {
    let prog = psd_2x2_program();
    let opts = SolverOptions {
        memory_budget: 8,
        tol: 1e-7,
        ..Default::default()
    };
    assert_eq!(choose_method(&prog, &opts), Method::Splitting);
    assert_eq!(choose_method(&prog, &SolverOptions::default()), Method::InteriorPoint);
}

#[test]
fn psd_projection_matches_eigen_oracle() {
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..20 {
        let s = rng.gen_range(1..7);
        let g = DMatrix::from_fn(s, s, |_, _| rng.gen_range(-1.0..1.0));
        let m = (&g + g.transpose()) * 0.5;
        let p = psd_project(&m).unwrap();
        // oracle: Jacobi eigenvalue sweeps, independent of nalgebra's solver
        let (vals, vecs) = jacobi_eigen(&m);
        let mut oracle = DMatrix::zeros(s, s);
        for k in 0..s {
            let v = vecs.column(k);
            oracle += v * v.transpose() * vals[k].max(0.0);
        }
        assert!((&p - &oracle).amax() < 1e-9);
        let pp = psd_project(&p).unwrap();
        assert!((&pp - &p).amax() < 1e-12);
        assert!((smat(&svec(&p), s) - &p).amax() < 1e-15);
    }
}

fn jacobi_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = DMatrix::identity(n, n);
    for _ in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let mut j = DMatrix::identity(n, n);
                j[(p, p)] = c;
                j[(q, q)] = c;
                j[(p, q)] = s;
                j[(q, p)] = -s;
                a = j.transpose() * &a * &j;
                v = &v * &j;
            }
        }
    }
    ((0..n).map(|i| a[(i, i)]).collect(), v)
}
