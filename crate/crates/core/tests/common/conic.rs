//! Random conic programs with known optimal pairs, and a KKT checker that
//! uses nothing from the solver beyond the program data.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use sosdecomp::conic::svec::svec;
use sosdecomp::conic::{Cone, ConeSolution, ConicProgram, SparseMatrix};

pub fn min_eig(m: DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m).eigenvalues.min()
}

/// Most negative cone coordinate of `v`, computed without the solver's code.
pub fn cone_margin(cones: &[Cone], v: &[f64]) -> f64 {
    let mut off = 0;
    let mut worst = f64::INFINITY;
    for cone in cones {
        let d = cone.dim();
        let b = &v[off..off + d];
        let m = match *cone {
            Cone::Free(_) => f64::INFINITY,
            Cone::Nonneg(_) => b.iter().cloned().fold(f64::INFINITY, f64::min),
            Cone::SecondOrder(_) => b[0] - b[1..].iter().map(|t| t * t).sum::<f64>().sqrt(),
            Cone::Psd(s) => {
                let mut m = DMatrix::zeros(s, s);
                let mut k = 0;
                for j in 0..s {
                    for i in j..s {
                        let val = if i == j { b[k] } else { b[k] / 2f64.sqrt() };
                        m[(i, j)] = val;
                        m[(j, i)] = val;
                        k += 1;
                    }
                }
                min_eig(m)
            }
        };
        worst = worst.min(m);
        off += d;
    }
    worst
}

pub fn dual_free_violation(cones: &[Cone], z: &[f64]) -> f64 {
    let mut off = 0;
    let mut worst: f64 = 0.0;
    for cone in cones {
        if let Cone::Free(n) = *cone {
            worst = worst.max(z[off..off + n].iter().fold(0.0, |a: f64, t| a.max(t.abs())));
        }
        off += cone.dim();
    }
    worst
}

pub struct Kkt {
    pub primal: f64,
    pub dual: f64,
    pub cone_x: f64,
    pub cone_z: f64,
    pub compl: f64,
}

pub fn kkt(prog: &ConicProgram, sol: &ConeSolution) -> Kkt {
    let x = &sol.primal;
    let y = &sol.dual_eq;
    let z = &sol.dual_cone;
    let n = prog.num_vars();
    let mut ax = vec![0.0; prog.num_rows()];
    let mut aty = vec![0.0; n];
    for (r, row) in prog.constraints.rows().enumerate() {
        for &(c, v) in row {
            ax[r] += v * x[c];
            aty[c] += v * y[r];
        }
    }
    let primal = ax
        .iter()
        .zip(&prog.rhs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let dual = (0..n)
        .map(|j| (prog.objective[j] - aty[j] - z[j]).abs())
        .fold(0.0, f64::max);
    let compl = x.iter().zip(z).map(|(a, b)| a * b).sum::<f64>().abs();
    Kkt {
        primal,
        dual,
        cone_x: (-cone_margin(&prog.cones, x)).max(0.0),
        cone_z: (-cone_margin(&prog.cones, z))
            .max(0.0)
            .max(dual_free_violation(&prog.cones, z)),
        compl,
    }
}

pub fn random_interior(rng: &mut StdRng, cones: &[Cone]) -> Vec<f64> {
    let mut v = Vec::new();
    for cone in cones {
        match *cone {
            Cone::Free(n) => v.extend((0..n).map(|_| rng.gen_range(-1.0..1.0))),
            Cone::Nonneg(n) => v.extend((0..n).map(|_| rng.gen_range(0.1..2.0))),
            Cone::SecondOrder(n) => {
                let tail: Vec<f64> = (1..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let nt = tail.iter().map(|t| t * t).sum::<f64>().sqrt();
                v.push(nt + rng.gen_range(0.1..1.0));
                v.extend(tail);
            }
            Cone::Psd(s) => {
                let g = DMatrix::from_fn(s, s, |_, _| rng.gen_range(-1.0..1.0));
                let m = &g * g.transpose() + DMatrix::identity(s, s) * 0.1;
                v.extend(svec(&m));
            }
        }
    }
    v
}

pub fn random_program(seed: u64) -> ConicProgram {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut cones = vec![Cone::Psd(rng.gen_range(2..=8))];
    if rng.gen_bool(0.5) {
        cones.push(Cone::SecondOrder(rng.gen_range(2..6)));
    }
    if rng.gen_bool(0.5) {
        cones.push(Cone::Nonneg(rng.gen_range(1..4)));
    }
    if rng.gen_bool(0.3) {
        cones.push(Cone::Free(rng.gen_range(1..3)));
    }
    let n: usize = cones.iter().map(Cone::dim).sum();
    let free: usize = cones
        .iter()
        .map(|c| if let Cone::Free(k) = c { *k } else { 0 })
        .sum();
    let m = rng.gen_range(free.max(1)..=40.min(n - 1).max(free.max(1)));
    let mut a = SparseMatrix::new(n);
    let mut dense = DMatrix::zeros(m, n);
    for r in 0..m {
        let mut entries = Vec::new();
        for c in 0..n {
            if rng.gen_bool(0.4) {
                let v = rng.gen_range(-1.0..1.0);
                entries.push((c, v));
                dense[(r, c)] = v;
            }
        }
        a.push_row(entries);
    }
    // free columns get an identity-like pattern so Aᵀ on free vars has full rank
    let mut off = 0;
    for cone in &cones {
        if let Cone::Free(k) = *cone {
            for i in 0..k {
                let mut rows: Vec<Vec<(usize, f64)>> = a.rows().map(|r| r.to_vec()).collect();
                rows[i].push((off + i, 1.0));
                let mut na = SparseMatrix::new(n);
                for r in rows {
                    na.push_row(r);
                }
                a = na;
            }
        }
        off += cone.dim();
    }
    let x0 = random_interior(&mut rng, &cones);
    let mut z0 = random_interior(&mut rng, &cones);
    let mut off = 0;
    for cone in &cones {
        if let Cone::Free(k) = *cone {
            z0[off..off + k].iter_mut().for_each(|t| *t = 0.0);
        }
        off += cone.dim();
    }
    let y0: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let b = a.mul_vec(&x0);
    let aty = a.tmul_vec(&y0);
    let c: Vec<f64> = (0..n).map(|j| aty[j] + z0[j]).collect();
    ConicProgram::new(c, a, b, cones, vec![]).unwrap()
}
