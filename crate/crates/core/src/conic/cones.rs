//! Per-cone Nesterov-Todd scaling state.
//!
//! For a primal/dual pair `(x, z)` in the interior, the scaling `W`
//! satisfies `W⁻ᵀx = Wz = λ`. Directions are moved into the scaled space to
//! take Jordan products and step lengths; `Θ = WᵀW` maps dual-space vectors
//! to primal space and appears in the Schur complement.

use nalgebra::{DMatrix, SymmetricEigen};

use super::linalg::jacobi_svd;

use super::svec::{smat, svec, svec_index, svec_len, svec_positions, SQRT2};

/// Sparse entries of one constraint row restricted to a cone block.
pub(crate) type BlockRow = (usize, Vec<(usize, f64)>);

#[derive(Debug, Clone)]
pub(crate) enum ConeState {
    Nonneg {
        x: Vec<f64>,
        z: Vec<f64>,
        w: Vec<f64>,
        lambda: Vec<f64>,
    },
    Soc {
        x: Vec<f64>,
        z: Vec<f64>,
        w: DMatrix<f64>,
        winv: DMatrix<f64>,
        theta: DMatrix<f64>,
        lambda: Vec<f64>,
    },
    Psd {
        side: usize,
        x: DMatrix<f64>,
        z: DMatrix<f64>,
        r: DMatrix<f64>,
        rti: DMatrix<f64>,
        s: DMatrix<f64>,
        lambda: Vec<f64>,
    },
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn soc_det(v: &[f64]) -> f64 {
    v[0] * v[0] - dot(&v[1..], &v[1..])
}

fn soc_scaling(
    x: &[f64],
    z: &[f64],
) -> Option<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, Vec<f64>)> {
    let n = x.len();
    let dx = soc_det(x);
    let dz = soc_det(z);
    if !(dx > 0.0 && dz > 0.0 && x[0] > 0.0 && z[0] > 0.0) {
        return None;
    }
    let aa = dx.sqrt();
    let bb = dz.sqrt();
    let xb: Vec<f64> = x.iter().map(|v| v / aa).collect();
    let zb: Vec<f64> = z.iter().map(|v| v / bb).collect();
    let gamma = ((1.0 + dot(&xb, &zb)) / 2.0).sqrt();
    let mut wb = vec![0.0; n];
    wb[0] = (xb[0] + zb[0]) / (2.0 * gamma);
    for i in 1..n {
        wb[i] = (xb[i] - zb[i]) / (2.0 * gamma);
    }
    let norm = (2.0 * (wb[0] + 1.0)).sqrt();
    let mut v = wb.clone();
    v[0] += 1.0;
    for vi in v.iter_mut() {
        *vi /= norm;
    }
    let beta = (aa / bb).sqrt();
    let mut w = DMatrix::zeros(n, n);
    let mut winv = DMatrix::zeros(n, n);
    let mut jv = v.clone();
    for vi in jv.iter_mut().skip(1) {
        *vi = -*vi;
    }
    for i in 0..n {
        for j in 0..n {
            let jij = if i != j {
                0.0
            } else if i == 0 {
                1.0
            } else {
                -1.0
            };
            w[(i, j)] = beta * (2.0 * v[i] * v[j] - jij);
            winv[(i, j)] = (2.0 * jv[i] * jv[j] - jij) / beta;
        }
    }
    let theta = &w * &w;
    let zv = nalgebra::DVector::from_column_slice(z);
    let lambda = (&w * zv).as_slice().to_vec();
    Some((w, winv, theta, lambda))
}

fn psd_identity(side: usize) -> Vec<f64> {
    let mut e = vec![0.0; svec_len(side)];
    for i in 0..side {
        e[svec_index(side, i, i)] = 1.0;
    }
    e
}

impl ConeState {
    pub(crate) fn nonneg(n: usize) -> Self {
        ConeState::Nonneg {
            x: vec![1.0; n],
            z: vec![1.0; n],
            w: vec![1.0; n],
            lambda: vec![1.0; n],
        }
    }

    pub(crate) fn soc(n: usize) -> Self {
        let mut e = vec![0.0; n];
        e[0] = 1.0;
        let (w, winv, theta, lambda) = soc_scaling(&e, &e).expect("identity is interior");
        ConeState::Soc {
            x: e.clone(),
            z: e,
            w,
            winv,
            theta,
            lambda,
        }
    }

    pub(crate) fn psd(side: usize) -> Self {
        ConeState::Psd {
            side,
            x: DMatrix::identity(side, side),
            z: DMatrix::identity(side, side),
            r: DMatrix::identity(side, side),
            rti: DMatrix::identity(side, side),
            s: DMatrix::identity(side, side),
            lambda: vec![1.0; side],
        }
    }

    pub(crate) fn dim(&self) -> usize {
        match self {
            ConeState::Nonneg { x, .. } | ConeState::Soc { x, .. } => x.len(),
            ConeState::Psd { side, .. } => svec_len(*side),
        }
    }

    pub(crate) fn degree(&self) -> usize {
        match self {
            ConeState::Nonneg { x, .. } => x.len(),
            ConeState::Soc { .. } => 1,
            ConeState::Psd { side, .. } => *side,
        }
    }

    pub(crate) fn primal(&self) -> Vec<f64> {
        match self {
            ConeState::Nonneg { x, .. } | ConeState::Soc { x, .. } => x.clone(),
            ConeState::Psd { x, .. } => svec(x),
        }
    }

    pub(crate) fn dual(&self) -> Vec<f64> {
        match self {
            ConeState::Nonneg { z, .. } | ConeState::Soc { z, .. } => z.clone(),
            ConeState::Psd { z, .. } => svec(z),
        }
    }

    /// `λ` in scaled coordinates.
    pub(crate) fn lambda(&self) -> Vec<f64> {
        match self {
            ConeState::Nonneg { lambda, .. } | ConeState::Soc { lambda, .. } => lambda.clone(),
            ConeState::Psd { side, lambda, .. } => {
                let mut out = vec![0.0; svec_len(*side)];
                for (i, &l) in lambda.iter().enumerate() {
                    out[svec_index(*side, i, i)] = l;
                }
                out
            }
        }
    }

    /// `xᵀz = ‖λ‖²`.
    pub(crate) fn gap(&self) -> f64 {
        match self {
            ConeState::Nonneg { lambda, .. } | ConeState::Soc { lambda, .. } => dot(lambda, lambda),
            ConeState::Psd { lambda, .. } => dot(lambda, lambda),
        }
    }

    pub(crate) fn identity(&self) -> Vec<f64> {
        match self {
            ConeState::Nonneg { x, .. } => vec![1.0; x.len()],
            ConeState::Soc { x, .. } => {
                let mut e = vec![0.0; x.len()];
                e[0] = 1.0;
                e
            }
            ConeState::Psd { side, .. } => psd_identity(*side),
        }
    }

    /// `W⁻ᵀ dx`.
    pub(crate) fn scale_primal(&self, dx: &[f64]) -> Vec<f64> {
        match self {
            ConeState::Nonneg { w, .. } => dx.iter().zip(w).map(|(a, b)| a / b).collect(),
            ConeState::Soc { winv, .. } => matvec(winv, dx),
            ConeState::Psd { side, rti, .. } => svec(&(rti.transpose() * smat(dx, *side) * rti)),
        }
    }

    /// `W dz`.
    pub(crate) fn scale_dual(&self, dz: &[f64]) -> Vec<f64> {
        match self {
            ConeState::Nonneg { w, .. } => dz.iter().zip(w).map(|(a, b)| a * b).collect(),
            ConeState::Soc { w, .. } => matvec(w, dz),
            ConeState::Psd { side, r, .. } => svec(&(r.transpose() * smat(dz, *side) * r)),
        }
    }

    /// `Wᵀ t`, mapping a scaled vector back to primal space.
    pub(crate) fn unscale_primal(&self, t: &[f64]) -> Vec<f64> {
        match self {
            ConeState::Nonneg { w, .. } => t.iter().zip(w).map(|(a, b)| a * b).collect(),
            ConeState::Soc { w, .. } => matvec(w, t),
            ConeState::Psd { side, r, .. } => svec(&(r * smat(t, *side) * r.transpose())),
        }
    }

    /// `Θ v = WᵀW v`.
    pub(crate) fn theta(&self, v: &[f64]) -> Vec<f64> {
        match self {
            ConeState::Nonneg { w, .. } => v.iter().zip(w).map(|(a, b)| a * b * b).collect(),
            ConeState::Soc { theta, .. } => matvec(theta, v),
            ConeState::Psd { side, s, .. } => svec(&(s * smat(v, *side) * s)),
        }
    }

    /// Jordan product in scaled coordinates.
    pub(crate) fn jordan(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        match self {
            ConeState::Nonneg { .. } => a.iter().zip(b).map(|(x, y)| x * y).collect(),
            ConeState::Soc { .. } => {
                let mut out = vec![0.0; a.len()];
                out[0] = dot(a, b);
                for i in 1..a.len() {
                    out[i] = a[0] * b[i] + b[0] * a[i];
                }
                out
            }
            ConeState::Psd { side, .. } => {
                let am = smat(a, *side);
                let bm = smat(b, *side);
                let p = &am * &bm;
                svec(&(0.5 * (&p + p.transpose())))
            }
        }
    }

    /// Solves `λ ∘ u = r` for `u`.
    pub(crate) fn jordan_div_lambda(&self, r: &[f64]) -> Vec<f64> {
        match self {
            ConeState::Nonneg { lambda, .. } => r.iter().zip(lambda).map(|(a, b)| a / b).collect(),
            ConeState::Soc { lambda, .. } => {
                let det = soc_det(lambda);
                let u0 = (lambda[0] * r[0] - dot(&lambda[1..], &r[1..])) / det;
                let mut out = vec![0.0; r.len()];
                out[0] = u0;
                for i in 1..r.len() {
                    out[i] = (r[i] - u0 * lambda[i]) / lambda[0];
                }
                out
            }
            ConeState::Psd { side, lambda, .. } => {
                let mut out = r.to_vec();
                for (k, &(i, j)) in svec_positions(*side).iter().enumerate() {
                    out[k] = 2.0 * r[k] / (lambda[i] + lambda[j]);
                }
                out
            }
        }
    }

    /// Largest `α` with `λ + α d` in the cone (may be infinite).
    pub(crate) fn max_step(&self, d: &[f64]) -> f64 {
        match self {
            ConeState::Nonneg { lambda, .. } => {
                let mut a = f64::INFINITY;
                for (l, di) in lambda.iter().zip(d) {
                    if *di < 0.0 {
                        a = a.min(-l / di);
                    }
                }
                a
            }
            ConeState::Soc { lambda, .. } => soc_max_step(lambda, d),
            ConeState::Psd { side, lambda, .. } => {
                let mut m = smat(d, *side);
                for i in 0..*side {
                    for j in 0..*side {
                        m[(i, j)] /= (lambda[i] * lambda[j]).sqrt();
                    }
                }
                let eig = SymmetricEigen::new(m);
                let mn = eig.eigenvalues.min();
                if mn >= 0.0 {
                    f64::INFINITY
                } else {
                    -1.0 / mn
                }
            }
        }
    }

    /// Moves to `x + α dx`, `z + α dz` and rescales. Returns `false`
    /// (leaving `self` untouched) if the new point is not strictly interior.
    pub(crate) fn step(&mut self, alpha: f64, dx: &[f64], dz: &[f64]) -> bool {
        match self {
            ConeState::Nonneg { x, z, w, lambda } => {
                let nx: Vec<f64> = x.iter().zip(dx).map(|(a, b)| a + alpha * b).collect();
                let nz: Vec<f64> = z.iter().zip(dz).map(|(a, b)| a + alpha * b).collect();
                if nx.iter().chain(&nz).any(|&v| !(v > 0.0)) {
                    return false;
                }
                *w = nx.iter().zip(&nz).map(|(a, b)| (a / b).sqrt()).collect();
                *lambda = nx.iter().zip(&nz).map(|(a, b)| (a * b).sqrt()).collect();
                *x = nx;
                *z = nz;
                true
            }
            ConeState::Soc {
                x,
                z,
                w,
                winv,
                theta,
                lambda,
            } => {
                let nx: Vec<f64> = x.iter().zip(dx).map(|(a, b)| a + alpha * b).collect();
                let nz: Vec<f64> = z.iter().zip(dz).map(|(a, b)| a + alpha * b).collect();
                match soc_scaling(&nx, &nz) {
                    Some((nw, nwinv, nth, nl)) => {
                        *w = nw;
                        *winv = nwinv;
                        *theta = nth;
                        *lambda = nl;
                        *x = nx;
                        *z = nz;
                        true
                    }
                    None => false,
                }
            }
            ConeState::Psd {
                side,
                x,
                z,
                r,
                rti,
                s,
                lambda,
            } => {
                let n = *side;
                let nx = &*x + smat(dx, n) * alpha;
                let nz = &*z + smat(dz, n) * alpha;
                let Some((nr, nrti, nl)) = psd_scaling(&nx, &nz) else {
                    return false;
                };
                *s = &nr * nr.transpose();
                *r = nr;
                *rti = nrti;
                *lambda = nl;
                *x = nx;
                *z = nz;
                true
            }
        }
    }

    /// Accumulates `A_b Θ A_bᵀ` into the row-major `m × m` matrix `out`
    /// (row stride `stride`), lower triangle only.
    pub(crate) fn add_schur(&self, rows: &[BlockRow], out: &mut [f64], stride: usize) {
        let dim = self.dim();
        let mut dense = vec![0.0; dim];
        for (a, (ra, ea)) in rows.iter().enumerate() {
            self.theta_sparse(ea, &mut dense);
            for (rb, eb) in &rows[..=a] {
                let v: f64 = eb.iter().map(|&(k, c)| c * dense[k]).sum();
                let (i, j) = if ra >= rb { (*ra, *rb) } else { (*rb, *ra) };
                out[i * stride + j] += v;
            }
        }
    }

    fn theta_sparse(&self, entries: &[(usize, f64)], out: &mut [f64]) {
        match self {
            ConeState::Nonneg { w, .. } => {
                out.iter_mut().for_each(|v| *v = 0.0);
                for &(k, c) in entries {
                    out[k] = c * w[k] * w[k];
                }
            }
            ConeState::Soc { theta, .. } => {
                let n = theta.nrows();
                for i in 0..n {
                    out[i] = entries.iter().map(|&(k, c)| theta[(i, k)] * c).sum();
                }
            }
            ConeState::Psd { side, s, .. } => {
                let n = *side;
                let pos = svec_positions(n);
                let mut acc = DMatrix::<f64>::zeros(n, n);
                for &(k, c) in entries {
                    let (p, q) = pos[k];
                    if p == q {
                        for j in 0..n {
                            let sj = c * s[(p, j)];
                            if sj == 0.0 {
                                continue;
                            }
                            for i in 0..n {
                                acc[(i, j)] += s[(i, p)] * sj;
                            }
                        }
                    } else {
                        let h = c / SQRT2;
                        for j in 0..n {
                            let a = h * s[(q, j)];
                            let b = h * s[(p, j)];
                            for i in 0..n {
                                acc[(i, j)] += s[(i, p)] * a + s[(i, q)] * b;
                            }
                        }
                    }
                }
                let v = svec(&acc);
                out.copy_from_slice(&v);
            }
        }
    }
}

/// NT scaling of a strictly feasible PSD pair: returns `(R, R⁻ᵀ, λ)` with
/// `x = R diag(λ) Rᵀ` and `z = R⁻ᵀ diag(λ) R⁻¹`.
fn psd_scaling(x: &DMatrix<f64>, z: &DMatrix<f64>) -> Option<(DMatrix<f64>, DMatrix<f64>, Vec<f64>)> {
    let l1 = x.clone().cholesky()?.l();
    let l2 = z.clone().cholesky()?.l();
    let prod = l2.transpose() * &l1;
    let (u, sv, v) = jacobi_svd(&prod)?;
    let inv_sqrt = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        sv.len(),
        sv.iter().map(|v| 1.0 / v.sqrt()),
    ));
    let r = l1 * v * &inv_sqrt;
    let rti = l2 * u * &inv_sqrt;
    Some((r, rti, sv))
}

fn matvec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    let n = m.nrows();
    (0..n)
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

fn soc_max_step(l: &[f64], d: &[f64]) -> f64 {
    // (l0 + a d0)^2 - |l1 + a d1|^2 >= 0 with l0 + a d0 >= 0
    let a = soc_det(d);
    let b = l[0] * d[0] - dot(&l[1..], &d[1..]);
    let c = soc_det(l);
    let mut best = f64::INFINITY;
    let mut consider = |t: f64| {
        if t > 0.0 && t < best {
            best = t;
        }
    };
    if a.abs() < 1e-300 {
        if b < 0.0 {
            consider(-c / (2.0 * b));
        }
    } else {
        let disc = b * b - a * c;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            // numerically stable roots of a t^2 + 2 b t + c
            let qv = -(b + b.signum() * sq);
            if qv != 0.0 {
                consider(c / qv);
                consider(qv / a);
            } else {
                consider(-b / a);
            }
        }
    }
    if d[0] < 0.0 {
        best = best.min(-l[0] / d[0]);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
    }

    #[test]
    fn soc_scaling_is_nesterov_todd() {
        let x = vec![3.0, 1.0, -0.5, 2.0];
        let z = vec![2.0, -0.3, 0.9, 0.4];
        let (w, winv, theta, lambda) = soc_scaling(&x, &z).unwrap();
        assert!(rel_close(&matvec(&winv, &x), &lambda, 1e-12));
        assert!(rel_close(&matvec(&theta, &z), &x, 1e-12));
        let id = &w * &winv;
        assert!((id - DMatrix::identity(4, 4)).amax() < 1e-12);
    }

    #[test]
    fn psd_update_keeps_nt_relation() {
        let mut st = ConeState::psd(3);
        let dxs = svec(&DMatrix::from_row_slice(
            3,
            3,
            &[0.5, 0.1, 0.0, 0.1, -0.2, 0.3, 0.0, 0.3, 0.4],
        ));
        let dzs = svec(&DMatrix::from_row_slice(
            3,
            3,
            &[-0.1, 0.2, 0.1, 0.2, 0.3, 0.0, 0.1, 0.0, -0.4],
        ));
        let x0 = st.primal();
        let z0 = st.dual();
        assert!(st.step(0.5, &dxs, &dzs));
        let x1: Vec<f64> = x0.iter().zip(&dxs).map(|(a, b)| a + 0.5 * b).collect();
        let z1: Vec<f64> = z0.iter().zip(&dzs).map(|(a, b)| a + 0.5 * b).collect();
        assert!(rel_close(&st.primal(), &x1, 1e-12));
        assert!(rel_close(&st.dual(), &z1, 1e-12));
        assert!(rel_close(&st.scale_primal(&x1), &st.lambda(), 1e-12));
        assert!(rel_close(&st.scale_dual(&z1), &st.lambda(), 1e-12));
        assert!(rel_close(&st.theta(&z1), &x1, 1e-12));
    }

    #[test]
    fn jordan_division_inverts_product() {
        for st in [ConeState::soc(3), ConeState::psd(2), ConeState::nonneg(2)] {
            let r: Vec<f64> = (0..st.dim()).map(|i| 0.3 + i as f64).collect();
            let u = st.jordan_div_lambda(&r);
            assert!(rel_close(&st.jordan(&st.lambda(), &u), &r, 1e-12));
        }
    }

    #[test]
    fn soc_step_to_boundary() {
        let l = [1.0, 0.0];
        assert!((soc_max_step(&l, &[-1.0, 0.0]) - 1.0).abs() < 1e-12);
        assert!((soc_max_step(&l, &[0.0, 1.0]) - 1.0).abs() < 1e-12);
        assert!(soc_max_step(&l, &[1.0, 0.5]).is_infinite());
    }

    #[test]
    fn schur_matches_dense_theta() {
        let mut st = ConeState::psd(2);
        let dxs = svec(&DMatrix::from_row_slice(2, 2, &[0.5, 0.2, 0.2, -0.3]));
        let dzs = svec(&DMatrix::from_row_slice(2, 2, &[0.1, -0.4, -0.4, 0.2]));
        assert!(st.step(0.7, &dxs, &dzs));
        let rows: Vec<BlockRow> = vec![
            (0, vec![(0, 1.0), (1, 2.0)]),
            (1, vec![(1, -1.0), (2, 3.0)]),
        ];
        let mut out = vec![0.0; 4];
        st.add_schur(&rows, &mut out, 2);
        let a0 = [1.0, 2.0, 0.0];
        let a1 = [0.0, -1.0, 3.0];
        let t1 = st.theta(&a1);
        let t0 = st.theta(&a0);
        assert!((out[0] - dot(&a0, &t0)).abs() < 1e-12);
        assert!((out[2] - dot(&a0, &t1)).abs() < 1e-12);
        assert!((out[3] - dot(&a1, &t1)).abs() < 1e-12);
    }
}
