//! Homogeneous self-dual interior-point method.
//!
//! The embedding variables are `(x, u, y, z, τ, κ)` with `x ∈ K` the cone
//! columns, `u` the free columns and `z` the dual slack of the cone columns.
//! Each iteration solves the reduced Newton system
//!
//! ```text
//! [ A Θ Aᵀ   A_f ] [dy]   [r₁]
//! [ A_fᵀ      0  ] [du] = [r₂]
//! ```
//!
//! twice (once for the right-hand side, once for the `dτ` column) and uses a
//! Mehrotra predictor-corrector step.

use log::{debug, trace};

use super::cones::{BlockRow, ConeState};
use super::linalg::{solve_refined, Ldl};
use super::{Cone, ConeSolution, ConicProgram, SolveStatus, SolverOptions};

struct Block {
    state: ConeState,
    offset: usize,
    rows: Vec<BlockRow>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Extra pure-centering steps taken once the tolerances are met. Iterates
/// near the cone boundary can sit `O(√μ)` away from the central path along
/// tangential directions (notably in epigraphs of quadratics); recentering
/// at fixed residuals pulls them back to `O(μ)`.
const POLISH_STEPS: usize = 8;

/// Iterations without a better merit value before giving up.
const STALL_ITERS: usize = 15;

type Snapshot = (Vec<ConeState>, Vec<f64>, Vec<f64>, f64, f64);

struct Direction {
    dx: Vec<f64>,
    dz: Vec<f64>,
    dy: Vec<f64>,
    dtau: f64,
    dkappa: f64,
    dxs: Vec<Vec<f64>>,
    dzs: Vec<Vec<f64>>,
}

struct Workspace {
    row_scale: Vec<f64>,
    a: super::SparseMatrix,
    b: Vec<f64>,
    c: Vec<f64>,
    blocks: Vec<Block>,
    free_cols: Vec<usize>,
    m: usize,
    n: usize,
}

impl Workspace {
    fn new(prog: &ConicProgram) -> Self {
        let m = prog.num_rows();
        let n = prog.num_vars();
        let mut row_scale = Vec::with_capacity(m);
        let mut a = super::SparseMatrix::new(n);
        let mut b = Vec::with_capacity(m);
        for (r, row) in prog.constraints.rows().enumerate() {
            let nr = row.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
            let s = if nr > 0.0 { 1.0 / nr } else { 1.0 };
            row_scale.push(s);
            a.push_row(row.iter().map(|&(c, v)| (c, v * s)));
            b.push(prog.rhs[r] * s);
        }
        let mut blocks = Vec::new();
        let mut free_cols = Vec::new();
        for (cone, off) in prog.cones.iter().zip(prog.block_offsets()) {
            let state = match *cone {
                Cone::Free(k) => {
                    free_cols.extend(off..off + k);
                    continue;
                }
                Cone::Nonneg(k) => ConeState::nonneg(k),
                Cone::SecondOrder(k) => ConeState::soc(k),
                Cone::Psd(s) => ConeState::psd(s),
            };
            blocks.push(Block {
                state,
                offset: off,
                rows: Vec::new(),
            });
        }
        // block lookup by column
        let mut owner = vec![usize::MAX; n];
        for (bi, blk) in blocks.iter().enumerate() {
            for o in owner.iter_mut().skip(blk.offset).take(blk.state.dim()) {
                *o = bi;
            }
        }
        for (r, row) in a.rows().enumerate() {
            let mut touched: Vec<(usize, Vec<(usize, f64)>)> = Vec::new();
            for &(col, v) in row {
                let bi = owner[col];
                if bi == usize::MAX {
                    continue;
                }
                let local = col - blocks[bi].offset;
                match touched.iter_mut().find(|t| t.0 == bi) {
                    Some(t) => t.1.push((local, v)),
                    None => touched.push((bi, vec![(local, v)])),
                }
            }
            for (bi, entries) in touched {
                blocks[bi].rows.push((r, entries));
            }
        }
        Workspace {
            row_scale,
            a,
            b,
            c: prog.objective.clone(),
            blocks,
            free_cols,
            m,
            n,
        }
    }

    fn degree(&self) -> usize {
        self.blocks.iter().map(|b| b.state.degree()).sum()
    }

    fn gather_x(&self, u: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for blk in &self.blocks {
            let p = blk.state.primal();
            x[blk.offset..blk.offset + p.len()].copy_from_slice(&p);
        }
        for (k, &col) in self.free_cols.iter().enumerate() {
            x[col] = u[k];
        }
        x
    }

    fn gather_z(&self) -> Vec<f64> {
        let mut z = vec![0.0; self.n];
        for blk in &self.blocks {
            let d = blk.state.dual();
            z[blk.offset..blk.offset + d.len()].copy_from_slice(&d);
        }
        z
    }

    /// Applies `Θ` blockwise to a full-length vector; free entries become 0.
    fn theta(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for blk in &self.blocks {
            let d = blk.state.dim();
            let t = blk.state.theta(&v[blk.offset..blk.offset + d]);
            out[blk.offset..blk.offset + d].copy_from_slice(&t);
        }
        out
    }

    fn build_kkt(&self) -> Vec<f64> {
        let m = self.m;
        let nf = self.free_cols.len();
        let nk = m + nf;
        let mut k = vec![0.0; nk * nk];
        for blk in &self.blocks {
            blk.state.add_schur(&blk.rows, &mut k, nk);
        }
        for i in 0..m {
            for j in 0..i {
                k[j * nk + i] = k[i * nk + j];
            }
        }
        let mut free_pos = vec![usize::MAX; self.n];
        for (kk, &col) in self.free_cols.iter().enumerate() {
            free_pos[col] = kk;
        }
        for (r, row) in self.a.rows().enumerate() {
            for &(col, v) in row {
                let f = free_pos[col];
                if f != usize::MAX {
                    k[r * nk + m + f] += v;
                    k[(m + f) * nk + r] += v;
                }
            }
        }
        k
    }

    fn split_free(&self, v: &[f64]) -> Vec<f64> {
        self.free_cols.iter().map(|&c| v[c]).collect()
    }
}

/// Solves `prog` with the interior-point method.
pub fn solve_interior_point(prog: &ConicProgram, opts: &SolverOptions) -> ConeSolution {
    let mut ws = Workspace::new(prog);
    let m = ws.m;
    let n = ws.n;
    let nf = ws.free_cols.len();
    let nk = m + nf;
    let deg = ws.degree() as f64 + 1.0;

    let mut u = vec![0.0; nf];
    let mut y = vec![0.0; m];
    let mut tau = 1.0_f64;
    let mut kappa = 1.0_f64;

    let bnorm = norm2(&prog.rhs);
    let cnorm = norm2(&prog.objective);
    let mut status = SolveStatus::MaxIter;
    let mut iterations = 0;
    let mut small_steps = 0;
    let mut best: Option<(f64, Vec<f64>, Vec<f64>, Vec<f64>, f64)> = None;
    let mut polish = 0;
    let mut best_it = 0;
    let mut snapshot: Option<Snapshot> = None;

    for it in 0..=opts.max_iter {
        iterations = it;
        let x = ws.gather_x(&u);
        let z = ws.gather_z();
        let ax = ws.a.mul_vec(&x);
        let aty = ws.a.tmul_vec(&y);
        let rp: Vec<f64> = (0..m).map(|r| ax[r] - ws.b[r] * tau).collect();
        let rd: Vec<f64> = (0..n).map(|j| aty[j] + z[j] - ws.c[j] * tau).collect();
        let cx = dot(&ws.c, &x);
        let by = dot(&ws.b, &y);
        let rg = cx - by + kappa;
        let xz: f64 = ws.blocks.iter().map(|b| b.state.gap()).sum();
        let mu = (xz + tau * kappa) / deg;

        // convergence measured in the caller's row units
        let rp_orig: Vec<f64> = rp.iter().zip(&ws.row_scale).map(|(r, s)| r / s).collect();
        let pres = norm2(&rp_orig) / tau / (1.0 + bnorm);
        let dres = norm2(&rd) / tau / (1.0 + cnorm);
        let pobj = cx / tau;
        let dobj = by / tau;
        let gap = (pobj - dobj).abs().max(xz / (tau * tau)) / (1.0 + pobj.abs().min(dobj.abs()));
        trace!(
            "ipm it {it}: pres {pres:.2e} dres {dres:.2e} gap {gap:.2e} tau {tau:.2e} kappa {kappa:.2e} mu {mu:.2e}"
        );
        let merit = pres.max(dres).max(gap);
        if best.as_ref().is_none_or(|b| merit < b.0) {
            best = Some((merit, x.clone(), y.clone(), z.clone(), tau));
            best_it = it;
        } else if status != SolveStatus::Optimal && it >= best_it + STALL_ITERS {
            debug!("ipm: no progress since iteration {best_it}");
            status = SolveStatus::NumericalFailure;
            break;
        }
        if pres <= opts.tol && dres <= opts.tol && gap <= opts.tol {
            status = SolveStatus::Optimal;
            if polish == POLISH_STEPS {
                break;
            }
            polish += 1;
            snapshot = Some((
                ws.blocks.iter().map(|b| b.state.clone()).collect(),
                u.clone(),
                y.clone(),
                tau,
                kappa,
            ));
        } else if let Some((states, su, sy, st, _)) = snapshot.take() {
            // a centering step lost accuracy; keep the last converged iterate
            for (blk, s) in ws.blocks.iter_mut().zip(states) {
                blk.state = s;
            }
            u = su;
            y = sy;
            tau = st;
            status = SolveStatus::Optimal;
            break;
        }
        // infeasibility certificates
        if by > 0.0 && kappa > tau {
            let cert = norm2(
                &rd.iter()
                    .zip(&ws.c)
                    .map(|(r, c)| r + c * tau)
                    .collect::<Vec<_>>(),
            ) / by;
            if cert <= opts.infeasibility_ratio.max(opts.tol)
                || tau <= opts.infeasibility_ratio * kappa
            {
                status = SolveStatus::Infeasible;
                break;
            }
        }
        if cx < 0.0 && kappa > tau {
            let ax_h: Vec<f64> = ax.iter().zip(&ws.row_scale).map(|(v, s)| v / s).collect();
            let cert = norm2(&ax_h) / (-cx);
            if cert <= opts.infeasibility_ratio.max(opts.tol)
                || tau <= opts.infeasibility_ratio * kappa
            {
                status = SolveStatus::Unbounded;
                break;
            }
        }
        if it == opts.max_iter {
            break;
        }

        let kexact = ws.build_kkt();
        let maxdiag = (0..m).map(|i| kexact[i * nk + i]).fold(1.0_f64, f64::max);
        let fact = [1e-14, 1e-11, 1e-8]
            .iter()
            .find_map(|r| Ldl::factor(&kexact, nk, m, r * maxdiag));
        let Some(fact) = fact else {
            debug!("ipm: factorization broke down at iteration {it}");
            // a converged iterate that cannot be polished further is kept
            if status != SolveStatus::Optimal {
                status = SolveStatus::NumericalFailure;
            }
            break;
        };
        if fact.bumped > 0 {
            trace!("ipm it {it}: {} pivots regularized", fact.bumped);
        }

        let theta_c = ws.theta(&ws.c);
        let at_theta_c = ws.a.mul_vec(&theta_c);
        let mut p = vec![0.0; nk];
        for r in 0..m {
            p[r] = at_theta_c[r] + ws.b[r];
        }
        for (k, &col) in ws.free_cols.iter().enumerate() {
            p[m + k] = ws.c[col];
        }
        let sol2 = solve_refined(&kexact, nk, &fact, &p, 10);
        let dy2 = &sol2[..m];
        let du2 = &sol2[m..];
        let aty2 = ws.a.tmul_vec(dy2);
        let mut w2 = aty2.clone();
        axpy(&mut w2, -1.0, &ws.c);
        let dx2 = ws.theta(&w2);
        let g2 = dot(&ws.c, &dx2) + dot(&ws.split_free(&ws.c), du2) - dot(&ws.b, dy2);

        let lambdas: Vec<Vec<f64>> = ws.blocks.iter().map(|b| b.state.lambda()).collect();

        let solve_dir = |eta: f64, rxz: &[Vec<f64>], rtk: f64| -> Direction {
            let ts: Vec<Vec<f64>> = ws
                .blocks
                .iter()
                .zip(rxz)
                .map(|(b, r)| b.state.jordan_div_lambda(r))
                .collect();
            let mut wt = vec![0.0; n];
            for (blk, t) in ws.blocks.iter().zip(&ts) {
                let v = blk.state.unscale_primal(t);
                wt[blk.offset..blk.offset + v.len()].copy_from_slice(&v);
            }
            let eta_rd: Vec<f64> = rd.iter().map(|v| eta * v).collect();
            let th_rd = ws.theta(&eta_rd);
            let a_th_rd = ws.a.mul_vec(&th_rd);
            let a_wt = ws.a.mul_vec(&wt);
            let mut rhs = vec![0.0; nk];
            for r in 0..m {
                rhs[r] = -eta * rp[r] - a_th_rd[r] - a_wt[r];
            }
            for (k, &col) in ws.free_cols.iter().enumerate() {
                rhs[m + k] = -eta * rd[col];
            }
            let sol1 = solve_refined(&kexact, nk, &fact, &rhs, 10);
            let dy1 = &sol1[..m];
            let du1 = &sol1[m..];
            let aty1 = ws.a.tmul_vec(dy1);
            let mut v1 = aty1.clone();
            axpy(&mut v1, 1.0, &eta_rd);
            let mut dx1 = ws.theta(&v1);
            axpy(&mut dx1, 1.0, &wt);
            let g1 = dot(&ws.c, &dx1) + dot(&ws.split_free(&ws.c), du1) - dot(&ws.b, dy1);
            let dtau = (-eta * rg - rtk / tau - g1) / (g2 - kappa / tau);
            let dkappa = (rtk - kappa * dtau) / tau;
            let mut dy = dy1.to_vec();
            axpy(&mut dy, dtau, dy2);
            let mut du = du1.to_vec();
            axpy(&mut du, dtau, du2);
            let mut dx = dx1;
            axpy(&mut dx, dtau, &dx2);
            for (k, &col) in ws.free_cols.iter().enumerate() {
                dx[col] = du[k];
            }
            let aty = ws.a.tmul_vec(&dy);
            let mut dz = vec![0.0; n];
            for j in 0..n {
                dz[j] = -eta * rd[j] - aty[j] + ws.c[j] * dtau;
            }
            for &col in &ws.free_cols {
                dz[col] = 0.0;
            }
            let mut dxs = Vec::with_capacity(ws.blocks.len());
            let mut dzs = Vec::with_capacity(ws.blocks.len());
            for blk in &ws.blocks {
                let d = blk.state.dim();
                dxs.push(blk.state.scale_primal(&dx[blk.offset..blk.offset + d]));
                dzs.push(blk.state.scale_dual(&dz[blk.offset..blk.offset + d]));
            }
            Direction {
                dx,
                dz,
                dy,
                dtau,
                dkappa,
                dxs,
                dzs,
            }
        };

        let max_alpha = |d: &Direction| -> f64 {
            let mut a = f64::INFINITY;
            for (i, blk) in ws.blocks.iter().enumerate() {
                a = a
                    .min(blk.state.max_step(&d.dxs[i]))
                    .min(blk.state.max_step(&d.dzs[i]));
            }
            if d.dtau < 0.0 {
                a = a.min(-tau / d.dtau);
            }
            if d.dkappa < 0.0 {
                a = a.min(-kappa / d.dkappa);
            }
            a
        };

        let dir = if polish > 0 {
            let rxz: Vec<Vec<f64>> = ws
                .blocks
                .iter()
                .zip(&lambdas)
                .map(|(b, l)| {
                    let ll = b.state.jordan(l, l);
                    let e = b.state.identity();
                    (0..ll.len()).map(|k| -ll[k] + mu * e[k]).collect()
                })
                .collect();
            solve_dir(0.0, &rxz, -tau * kappa + mu)
        } else {
            // predictor
            let rxz_aff: Vec<Vec<f64>> = ws
                .blocks
                .iter()
                .zip(&lambdas)
                .map(|(b, l)| b.state.jordan(l, l).iter().map(|v| -v).collect())
                .collect();
            let aff = solve_dir(1.0, &rxz_aff, -tau * kappa);
            let alpha_aff = max_alpha(&aff).min(1.0);
            let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

            // corrector
            let rxz: Vec<Vec<f64>> = ws
                .blocks
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    let ll = b.state.jordan(&lambdas[i], &lambdas[i]);
                    let cross = b.state.jordan(&aff.dxs[i], &aff.dzs[i]);
                    let e = b.state.identity();
                    (0..ll.len())
                        .map(|k| -ll[k] + sigma * mu * e[k] - cross[k])
                        .collect()
                })
                .collect();
            let rtk = -tau * kappa + sigma * mu - aff.dtau * aff.dkappa;
            solve_dir(1.0 - sigma, &rxz, rtk)
        };
        let mut alpha = (0.99 * max_alpha(&dir)).min(1.0);

        let saved: Vec<ConeState> = ws.blocks.iter().map(|b| b.state.clone()).collect();
        let mut ok = false;
        for _ in 0..30 {
            let mut all = true;
            for blk in ws.blocks.iter_mut() {
                let d = blk.state.dim();
                let o = blk.offset;
                if !blk.state.step(alpha, &dir.dx[o..o + d], &dir.dz[o..o + d]) {
                    all = false;
                    break;
                }
            }
            let nt = tau + alpha * dir.dtau;
            let nkap = kappa + alpha * dir.dkappa;
            if all && nt > 0.0 && nkap > 0.0 {
                ok = true;
                break;
            }
            for (blk, s) in ws.blocks.iter_mut().zip(&saved) {
                blk.state = s.clone();
            }
            alpha *= 0.5;
        }
        if !ok {
            debug!("ipm: no admissible step at iteration {it}");
            status = SolveStatus::NumericalFailure;
            break;
        }
        for (k, &col) in ws.free_cols.iter().enumerate() {
            u[k] += alpha * dir.dx[col];
        }
        axpy(&mut y, alpha, &dir.dy);
        tau += alpha * dir.dtau;
        kappa += alpha * dir.dkappa;
        if polish > 0 {
            let moved = dir.dx.iter().fold(0.0_f64, |a, v| a.max(v.abs())) * alpha;
            let size = ws.gather_x(&u).iter().fold(1.0_f64, |a, v| a.max(v.abs()));
            if moved <= 1e-3 * opts.tol * size * tau {
                polish = POLISH_STEPS;
            }
        }
        if alpha < 1e-8 {
            small_steps += 1;
            if small_steps >= 5 {
                debug!("ipm: stalled at iteration {it}");
                status = SolveStatus::NumericalFailure;
                break;
            }
        } else {
            small_steps = 0;
        }
    }

    let (x, y_s, z, tau) = match status {
        SolveStatus::Optimal | SolveStatus::Infeasible | SolveStatus::Unbounded => {
            (ws.gather_x(&u), y.clone(), ws.gather_z(), tau)
        }
        _ => {
            let b = best.expect("at least one iterate");
            (b.1, b.2, b.3, b.4)
        }
    };
    finish(prog, &ws.row_scale, status, iterations, x, y_s, z, tau)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    prog: &ConicProgram,
    row_scale: &[f64],
    status: SolveStatus,
    iterations: usize,
    x: Vec<f64>,
    y_scaled: Vec<f64>,
    z: Vec<f64>,
    tau: f64,
) -> ConeSolution {
    let y: Vec<f64> = y_scaled.iter().zip(row_scale).map(|(v, s)| v * s).collect();
    let (primal, dual_eq, dual_cone) = match status {
        SolveStatus::Infeasible => {
            let by = dot(&prog.rhs, &y);
            (
                vec![0.0; x.len()],
                y.iter().map(|v| v / by).collect(),
                z.iter().map(|v| v / by).collect(),
            )
        }
        SolveStatus::Unbounded => {
            let cx = -dot(&prog.objective, &x);
            (
                x.iter().map(|v| v / cx).collect(),
                vec![0.0; y.len()],
                vec![0.0; z.len()],
            )
        }
        _ => (
            x.iter().map(|v| v / tau).collect(),
            y.iter().map(|v| v / tau).collect(),
            z.iter().map(|v| v / tau).collect::<Vec<f64>>(),
        ),
    };
    let bnorm = norm2(&prog.rhs);
    let cnorm = norm2(&prog.objective);
    let ax = prog.constraints.mul_vec(&primal);
    let rp: Vec<f64> = ax.iter().zip(&prog.rhs).map(|(a, b)| a - b).collect();
    let aty = prog.constraints.tmul_vec(&dual_eq);
    let rd: Vec<f64> = (0..primal.len())
        .map(|j| prog.objective[j] - aty[j] - dual_cone[j])
        .collect();
    let pobj = dot(&prog.objective, &primal);
    let dobj = dot(&prog.rhs, &dual_eq);
    let comp = dot(&primal, &dual_cone);
    ConeSolution {
        gap: (pobj - dobj).abs().max(comp.abs()) / (1.0 + pobj.abs().min(dobj.abs())),
        primal_residual: norm2(&rp) / (1.0 + bnorm),
        dual_residual: norm2(&rd) / (1.0 + cnorm),
        primal,
        dual_eq,
        dual_cone,
        status,
        iterations,
        primal_objective: pobj,
        dual_objective: dobj,
    }
}
