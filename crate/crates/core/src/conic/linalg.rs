//! Dense LDLᵀ for the quasi-definite Newton system `[M  F; Fᵀ  0]`, and a
//! Jacobi SVD for the scaling updates.

use nalgebra::DMatrix;

/// Row-major dense symmetric matrix factored as `L D Lᵀ` without pivoting.
///
/// The first `npos` pivots are expected positive and the rest negative. A
/// pivot of the wrong sign or below `delta` in magnitude is replaced by
/// `±delta`; the caller recovers accuracy through iterative refinement
/// against the unregularized matrix.
pub(crate) struct Ldl {
    n: usize,
    l: Vec<f64>,
    d: Vec<f64>,
    pub(crate) bumped: usize,
}

impl Ldl {
    pub(crate) fn factor(k: &[f64], n: usize, npos: usize, delta: f64) -> Option<Ldl> {
        assert_eq!(k.len(), n * n);
        let mut l = vec![0.0; n * n];
        let mut d = vec![0.0; n];
        let mut w = vec![0.0; n];
        let mut bumped = 0;
        for j in 0..n {
            let mut dj = k[j * n + j];
            for t in 0..j {
                let ljt = l[j * n + t];
                w[t] = ljt * d[t];
                dj -= ljt * w[t];
            }
            let sign = if j < npos { 1.0 } else { -1.0 };
            if !dj.is_finite() {
                return None;
            }
            if sign * dj < delta {
                dj = sign * delta;
                bumped += 1;
            }
            d[j] = dj;
            l[j * n + j] = 1.0;
            for i in j + 1..n {
                let li = &l[i * n..i * n + j];
                let mut s = k[i * n + j];
                for t in 0..j {
                    s -= li[t] * w[t];
                }
                l[i * n + j] = s / dj;
            }
        }
        Some(Ldl { n, l, d, bumped })
    }

    pub(crate) fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let s: f64 = row.iter().zip(&b[..i]).map(|(a, x)| a * x).sum();
            b[i] -= s;
        }
        for i in 0..n {
            b[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let bi = b[i];
            if bi != 0.0 {
                let row = &self.l[i * n..i * n + i];
                for (t, a) in row.iter().enumerate() {
                    b[t] -= a * bi;
                }
            }
        }
    }
}

pub(crate) fn sym_matvec(k: &[f64], n: usize, x: &[f64], out: &mut [f64]) {
    for i in 0..n {
        let row = &k[i * n..(i + 1) * n];
        out[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
    }
}

/// Solves `K x = b` with the factorization of a regularized `K`, refining
/// against the exact `K`.
pub(crate) fn solve_refined(k: &[f64], n: usize, f: &Ldl, b: &[f64], steps: usize) -> Vec<f64> {
    let mut x = b.to_vec();
    f.solve_in_place(&mut x);
    let bnorm = b.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1e-300);
    let mut r = vec![0.0; n];
    for _ in 0..steps {
        sym_matvec(k, n, &x, &mut r);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            r[i] = b[i] - r[i];
            worst = worst.max(r[i].abs());
        }
        if worst <= 1e-15 * bnorm {
            break;
        }
        f.solve_in_place(&mut r);
        for i in 0..n {
            x[i] += r[i];
        }
    }
    x
}

/// One-sided Jacobi SVD of a square matrix: `a = U diag(σ) Vᵀ`.
///
/// Returns `None` if the sweeps do not converge or a singular value is zero.
pub(crate) fn jacobi_svd(a: &DMatrix<f64>) -> Option<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    let n = a.ncols();
    let mut u = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let mut converged = false;
    for _ in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (cp, cq) = (u.column(p), u.column(q));
                let alpha = cp.norm_squared();
                let beta = cq.norm_squared();
                let gamma = cp.dot(&cq);
                if gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for m in [&mut u, &mut v] {
                    for i in 0..m.nrows() {
                        let (x, y) = (m[(i, p)], m[(i, q)]);
                        m[(i, p)] = c * x - s * y;
                        m[(i, q)] = s * x + c * y;
                    }
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return None;
    }
    let mut sv = Vec::with_capacity(n);
    for j in 0..n {
        let s = u.column(j).norm();
        if !(s > 0.0) || !s.is_finite() {
            return None;
        }
        u.column_mut(j).scale_mut(1.0 / s);
        sv.push(s);
    }
    Some((u, sv, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_svd_reconstructs() {
        // entries from a fixed LCG, including a nearly rank-deficient pair
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for n in [1usize, 2, 7, 21] {
            let mut a = DMatrix::from_fn(n, n, |_, _| next());
            if n > 2 {
                let c0 = a.column(0).clone_owned();
                a.column_mut(1).copy_from(&(c0 * (1.0 + 1e-9)));
                a[(0, 1)] += 1e-7;
            }
            let (u, s, v) = jacobi_svd(&a).unwrap();
            let rec = &u * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(s)) * v.transpose();
            assert!((&rec - &a).amax() < 1e-13, "n={n}");
            assert!((u.transpose() * &u - DMatrix::identity(n, n)).amax() < 1e-10);
            assert!((v.transpose() * &v - DMatrix::identity(n, n)).amax() < 1e-13);
        }
    }

    #[test]
    fn quasi_definite_solve() {
        // [[4, 1, 1], [1, 3, 0], [1, 0, -2]]
        let k = vec![4.0, 1.0, 1.0, 1.0, 3.0, 0.0, 1.0, 0.0, -2.0];
        let f = Ldl::factor(&k, 3, 2, 1e-14).unwrap();
        assert_eq!(f.bumped, 0);
        let b = vec![1.0, 2.0, 3.0];
        let x = solve_refined(&k, 3, &f, &b, 2);
        let mut r = vec![0.0; 3];
        sym_matvec(&k, 3, &x, &mut r);
        for i in 0..3 {
            assert!((r[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_free_block_is_regularized() {
        // [[1, 1], [1, 0]] with a zero lower-right block
        let k = vec![2.0, 1.0, 1.0, 0.0];
        let f = Ldl::factor(&k, 2, 1, 1e-10).unwrap();
        let x = solve_refined(&k, 2, &f, &[3.0, 1.0], 3);
        assert!((2.0 * x[0] + x[1] - 3.0).abs() < 1e-8);
        assert!((x[0] - 1.0).abs() < 1e-8);
    }
}
