//! First-order fallback for programs too large for the dense Newton system.
//!
//! ADMM on the split `x ∈ {Ax = b}`, `w ∈ K`, `x = w`:
//!
//! ```text
//! x ← Π_affine(w − λ − c/σ)
//! w ← Π_K(x + λ)
//! λ ← λ + x − w
//! ```
//!
//! The affine projection solves `(AAᵀ)μ = Av − b` by conjugate gradients,
//! warm-started from the previous `μ`, so memory stays linear in `nnz(A)`.
//! At a fixed point `z = −σλ` and `y = −σμ`.

use log::debug;
use nalgebra::DMatrix;

use super::svec::{smat, svec};
use super::{
    psd_project, Cone, ConeSolution, ConicProgram, SolveStatus, SolverOptions, SparseMatrix,
};

/// Iterate carried between calls.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmStart {
    pub w: Vec<f64>,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Euclidean projection onto the cone product.
pub fn project_cones(cones: &[Cone], v: &mut [f64]) {
    let mut off = 0;
    for cone in cones {
        let d = cone.dim();
        let blk = &mut v[off..off + d];
        match *cone {
            Cone::Free(_) => {}
            Cone::Nonneg(_) => blk.iter_mut().for_each(|t| *t = t.max(0.0)),
            Cone::SecondOrder(_) => {
                let t = blk[0];
                let nv = norm2(&blk[1..]);
                if nv <= t {
                } else if nv <= -t {
                    blk.iter_mut().for_each(|e| *e = 0.0);
                } else {
                    let a = 0.5 * (t + nv);
                    blk[0] = a;
                    for e in blk[1..].iter_mut() {
                        *e *= a / nv;
                    }
                }
            }
            Cone::Psd(side) => {
                let m: DMatrix<f64> = smat(blk, side);
                let p = psd_project(&m).expect("smat output is symmetric");
                blk.copy_from_slice(&svec(&p));
            }
        }
        off += d;
    }
}

struct Normal<'a> {
    a: &'a SparseMatrix,
    diag: Vec<f64>,
}

impl Normal<'_> {
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.a.mul_vec(&self.a.tmul_vec(v))
    }

    /// Jacobi-preconditioned CG; returns the iteration count.
    fn solve(&self, rhs: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> usize {
        let ax = self.apply(x);
        let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let mut zv: Vec<f64> = r.iter().zip(&self.diag).map(|(a, d)| a / d).collect();
        let mut p = zv.clone();
        let mut rz = dot(&r, &zv);
        let target = tol * norm2(rhs).max(1e-300);
        for k in 0..max_iter {
            if norm2(&r) <= target {
                return k;
            }
            let ap = self.apply(&p);
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                return k;
            }
            let alpha = rz / pap;
            for i in 0..x.len() {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            zv = r.iter().zip(&self.diag).map(|(a, d)| a / d).collect();
            let rz_new = dot(&r, &zv);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..p.len() {
                p[i] = zv[i] + beta * p[i];
            }
        }
        max_iter
    }
}

/// Solves `prog` by ADMM, optionally from a previous iterate.
pub fn solve_splitting(
    prog: &ConicProgram,
    opts: &SolverOptions,
    warm: Option<&WarmStart>,
) -> ConeSolution {
    solve_splitting_with_state(prog, opts, warm).0
}

/// As [`solve_splitting`], also returning the final iterate for warm starts.
pub fn solve_splitting_with_state(
    prog: &ConicProgram,
    opts: &SolverOptions,
    warm: Option<&WarmStart>,
) -> (ConeSolution, WarmStart) {
    let n = prog.num_vars();
    let m = prog.num_rows();
    let a = &prog.constraints;
    let b = &prog.rhs;
    let c = &prog.objective;
    let sigma = 1.0;
    let diag: Vec<f64> = a
        .rows()
        .map(|r| r.iter().map(|e| e.1 * e.1).sum::<f64>().max(1e-12))
        .collect();
    let normal = Normal { a, diag };

    let (mut w, mut lam, mut mu) = match warm {
        Some(ws) if ws.w.len() == n && ws.lambda.len() == n && ws.mu.len() == m => {
            (ws.w.clone(), ws.lambda.clone(), ws.mu.clone())
        }
        _ => (vec![0.0; n], vec![0.0; n], vec![0.0; m]),
    };
    let bnorm = norm2(b);
    let cnorm = norm2(c);
    let mut status = SolveStatus::MaxIter;
    let mut iters = 0;
    let mut x = vec![0.0; n];
    for k in 0..opts.splitting_max_iter {
        iters = k + 1;
        let v: Vec<f64> = (0..n).map(|i| w[i] - lam[i] - c[i] / sigma).collect();
        let av = a.mul_vec(&v);
        let rhs: Vec<f64> = av.iter().zip(b).map(|(p, q)| p - q).collect();
        normal.solve(&rhs, &mut mu, 1e-12, 10 * m.max(10));
        let atmu = a.tmul_vec(&mu);
        for i in 0..n {
            x[i] = v[i] - atmu[i];
        }
        let mut wn: Vec<f64> = (0..n).map(|i| x[i] + lam[i]).collect();
        project_cones(&prog.cones, &mut wn);
        for i in 0..n {
            lam[i] += x[i] - wn[i];
        }
        let dw: f64 = wn
            .iter()
            .zip(&w)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt();
        w = wn;
        if k % 10 == 9 {
            let pres = x
                .iter()
                .zip(&w)
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt();
            let aw = a.mul_vec(&w);
            let rp = aw
                .iter()
                .zip(b)
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt()
                / (1.0 + bnorm);
            let pobj = dot(c, &w);
            let dobj = -sigma * dot(b, &mu);
            let gap = (pobj - dobj).abs() / (1.0 + pobj.abs().min(dobj.abs()));
            if rp <= opts.tol
                && pres / (1.0 + norm2(&w)) <= opts.tol
                && sigma * dw / (1.0 + cnorm) <= opts.tol
                && gap <= opts.tol
            {
                status = SolveStatus::Optimal;
                break;
            }
        }
    }
    debug!("splitting finished after {iters} iterations: {status:?}");
    let y: Vec<f64> = mu.iter().map(|v| -sigma * v).collect();
    let z: Vec<f64> = lam.iter().map(|v| -sigma * v).collect();
    let aw = a.mul_vec(&w);
    let rp: Vec<f64> = aw.iter().zip(b).map(|(p, q)| p - q).collect();
    let aty = a.tmul_vec(&y);
    let rd: Vec<f64> = (0..n).map(|i| c[i] - aty[i] - z[i]).collect();
    let pobj = dot(c, &w);
    let dobj = dot(b, &y);
    let sol = ConeSolution {
        gap: (pobj - dobj).abs() / (1.0 + pobj.abs().min(dobj.abs())),
        primal_residual: norm2(&rp) / (1.0 + bnorm),
        dual_residual: norm2(&rd) / (1.0 + cnorm),
        primal: w.clone(),
        dual_eq: y,
        dual_cone: z,
        status,
        iterations: iters,
        primal_objective: pobj,
        dual_objective: dobj,
    };
    (sol, WarmStart { w, lambda: lam, mu })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soc_projection_cases() {
        let cones = [Cone::SecondOrder(3)];
        let mut v = vec![2.0, 1.0, 0.0];
        project_cones(&cones, &mut v);
        assert_eq!(v, vec![2.0, 1.0, 0.0]);
        let mut v = vec![-2.0, 1.0, 0.0];
        project_cones(&cones, &mut v);
        assert_eq!(v, vec![0.0, 0.0, 0.0]);
        let mut v = vec![0.0, 2.0, 0.0];
        project_cones(&cones, &mut v);
        assert!((v[0] - 1.0).abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn small_lp() {
        let mut a = SparseMatrix::new(2);
        a.push_row([(0, 1.0), (1, 1.0)]);
        let prog =
            ConicProgram::new(vec![1.0, 2.0], a, vec![1.0], vec![Cone::Nonneg(2)], vec![]).unwrap();
        let opts = SolverOptions {
            tol: 1e-7,
            ..Default::default()
        };
        let sol = solve_splitting(&prog, &opts, None);
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.primal[0] - 1.0).abs() < 1e-5);
        assert!((sol.primal_objective - 1.0).abs() < 1e-5);
    }
}
