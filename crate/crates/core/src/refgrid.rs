//! Finite-difference reference solution of `(1/λ) q Ψ = L(Ψ)` on a grid.
//!
//! Second-order central differences, switching a node's first-derivative
//! stencil to upwind when the cell Péclet number `|f_a| h_a / Σ_aa` exceeds
//! 2. Dirichlet data `exp(−φ/λ)` is sampled exactly. The banded system is
//! solved by Gaussian elimination with partial pivoting.

use std::io::{self, Write};

use crate::hjb::{ControlProblem, Facet, NoiseStructure};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FdError {
    #[error("finite differences support 1 or 2 dimensions, got {0}")]
    UnsupportedDimension(usize),
    #[error("at least 11 nodes per axis are required, got {0}")]
    TooFewNodes(usize),
    #[error("state-dependent noise is not supported")]
    StateDependentNoise,
    #[error("singular system at row {0}")]
    Singular(usize),
}

/// Node values on a tensor grid, first axis varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSolution {
    pub axes: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub boundary: Vec<bool>,
    /// Max-norm residual of the discrete system.
    pub residual: f64,
    /// Corners where adjacent facets disagreed and were averaged.
    pub corner_conflicts: usize,
}

impl GridSolution {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn node(&self, k: usize) -> Vec<f64> {
        let mut rest = k;
        self.axes
            .iter()
            .map(|ax| {
                let i = rest % ax.len();
                rest /= ax.len();
                ax[i]
            })
            .collect()
    }

    /// `x1,...,xn,psi_fd`, one row per node.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let n = self.axes.len();
        let header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        writeln!(w, "{},psi_fd", header.join(","))?;
        for (k, v) in self.values.iter().enumerate() {
            for c in self.node(k) {
                write!(w, "{c:.16e},")?;
            }
            writeln!(w, "{v:.16e}")?;
        }
        Ok(())
    }
}

/// Band matrix with per-row windows wide enough for pivoting fill-in.
struct Banded {
    n: usize,
    kl: usize,
    width: usize,
    /// Row `i` stores columns `i − kl .. i − kl + width`.
    data: Vec<f64>,
}

impl Banded {
    fn new(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Banded {
            n,
            kl,
            width,
            data: vec![0.0; n * width],
        }
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let off = (j + self.kl).checked_sub(i)?;
        (off < self.width).then_some(i * self.width + off)
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j).expect("entry inside band");
        self.data[s] += v;
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        if let Some(s) = self.slot(i, j) {
            self.data[s] = v;
        } else {
            debug_assert!(v == 0.0);
        }
    }

    fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.width - self.kl).min(self.n);
                (lo..hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// In-place LU with row pivoting within the band; returns the solution.
    fn solve(mut self, mut b: Vec<f64>) -> Result<Vec<f64>, FdError> {
        let n = self.n;
        let kl = self.kl;
        let ku_fill = self.width - kl - 1;
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let p = (k..=last)
                .max_by(|&a, &c| self.get(a, k).abs().total_cmp(&self.get(c, k).abs()))
                .expect("nonempty range");
            if self.get(p, k) == 0.0 {
                return Err(FdError::Singular(k));
            }
            let cols = k..(k + ku_fill + 1).min(n);
            if p != k {
                for j in cols.clone() {
                    let (a, c) = (self.get(k, j), self.get(p, j));
                    self.set(k, j, c);
                    self.set(p, j, a);
                }
                b.swap(k, p);
            }
            let piv = self.get(k, k);
            for i in k + 1..=last {
                let l = self.get(i, k) / piv;
                if l == 0.0 {
                    continue;
                }
                self.set(i, k, 0.0);
                for j in cols.clone().skip(1) {
                    let v = self.get(k, j);
                    if v != 0.0 {
                        let s = self.slot(i, j).expect("fill stays in band");
                        self.data[s] -= l * v;
                    }
                }
                b[i] -= l * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let hi = (k + ku_fill + 1).min(n);
            let s: f64 = (k + 1..hi).map(|j| self.get(k, j) * x[j]).sum();
            x[k] = (b[k] - s) / self.get(k, k);
        }
        Ok(x)
    }

    fn clone_band(&self) -> Banded {
        Banded {
            n: self.n,
            kl: self.kl,
            width: self.width,
            data: self.data.clone(),
        }
    }
}

/// Solves the first-exit desirability PDE on a uniform grid with
/// `nodes` points per axis (boundary included).
pub fn solve_fd(problem: &ControlProblem, sigma: &NoiseStructure, nodes: usize) -> Result<GridSolution, FdError> {
    let n = problem.nvars();
    if !(1..=2).contains(&n) {
        return Err(FdError::UnsupportedDimension(n));
    }
    if nodes < 11 {
        return Err(FdError::TooFewNodes(nodes));
    }
    let sig = sigma.constant().map_err(|_| FdError::StateDependentNoise)?;
    let dom = &problem.domain;
    let axes: Vec<Vec<f64>> = (0..n)
        .map(|a| {
            (0..nodes)
                .map(|i| {
                    if i == nodes - 1 {
                        dom.upper[a]
                    } else {
                        dom.lower[a] + (dom.upper[a] - dom.lower[a]) * i as f64 / (nodes - 1) as f64
                    }
                })
                .collect()
        })
        .collect();
    let h: Vec<f64> = (0..n).map(|a| (dom.upper[a] - dom.lower[a]) / (nodes - 1) as f64).collect();
    let total = nodes.pow(n as u32);
    let stride: Vec<usize> = (0..n).map(|a| nodes.pow(a as u32)).collect();
    let bw = stride[n - 1] + if n == 2 { 1 } else { 0 };
    let mut mat = Banded::new(total, bw, bw);
    let mut rhs = vec![0.0; total];
    let mut boundary = vec![false; total];
    let mut corner_conflicts = 0;
    let lambda = problem.lambda;

    for k in 0..total {
        let idx: Vec<usize> = (0..n).map(|a| (k / stride[a]) % nodes).collect();
        let x: Vec<f64> = (0..n).map(|a| axes[a][idx[a]]).collect();
        let on: Vec<Facet> = (0..n)
            .filter_map(|a| {
                if idx[a] == 0 {
                    Some(Facet { axis: a, upper: false })
                } else if idx[a] == nodes - 1 {
                    Some(Facet { axis: a, upper: true })
                } else {
                    None
                }
            })
            .collect();
        if !on.is_empty() {
            let vals: Vec<f64> = on
                .iter()
                .map(|f| (-problem.boundary_costs[f].eval(&x) / lambda).exp())
                .collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            if vals.iter().any(|v| (v - mean).abs() > 1e-12 * mean.abs().max(1.0)) {
                corner_conflicts += 1;
                log::warn!("corner {x:?}: facet data disagree {vals:?}, averaging");
            }
            mat.add(k, k, 1.0);
            rhs[k] = mean;
            boundary[k] = true;
            continue;
        }
        // (q/λ) Ψ − f·∇Ψ − ½ Σ_ab ∂_ab Ψ = 0
        mat.add(k, k, problem.state_cost.eval(&x) / lambda);
        for a in 0..n {
            let fa = problem.drift.get(a, 0).eval(&x);
            let saa = sig[(a, a)];
            let (up, dn) = (k + stride[a], k - stride[a]);
            let ha = h[a];
            // diffusion
            let d = 0.5 * saa / (ha * ha);
            mat.add(k, up, -d);
            mat.add(k, dn, -d);
            mat.add(k, k, 2.0 * d);
            // drift
            if saa <= 0.0 || fa.abs() * ha / saa > 2.0 {
                if fa > 0.0 {
                    mat.add(k, up, -fa / ha);
                    mat.add(k, k, fa / ha);
                } else {
                    mat.add(k, dn, fa / ha);
                    mat.add(k, k, -fa / ha);
                }
            } else {
                mat.add(k, up, -fa / (2.0 * ha));
                mat.add(k, dn, fa / (2.0 * ha));
            }
        }
        if n == 2 {
            let s01 = 0.5 * (sig[(0, 1)] + sig[(1, 0)]);
            if s01 != 0.0 {
                // ½ (Σ01 + Σ10) ∂01 Ψ with the 4-point stencil
                let c = -s01 / (4.0 * h[0] * h[1]);
                let (sx, sy) = (stride[0], stride[1]);
                mat.add(k, k + sx + sy, c);
                mat.add(k, k - sx - sy, c);
                mat.add(k, k + sx - sy, -c);
                mat.add(k, k - sx + sy, -c);
            }
        }
    }

    let original = mat.clone_band();
    let mut values = mat.solve(rhs.clone())?;
    let mut residual = max_residual(&original, &values, &rhs);
    for _ in 0..2 {
        if residual <= 1e-12 {
            break;
        }
        let r: Vec<f64> = rhs.iter().zip(original.matvec(&values)).map(|(b, ax)| b - ax).collect();
        let dx = original.clone_band().solve(r)?;
        for (v, d) in values.iter_mut().zip(dx) {
            *v += d;
        }
        residual = max_residual(&original, &values, &rhs);
    }
    Ok(GridSolution {
        axes,
        values,
        boundary,
        residual,
        corner_conflicts,
    })
}

fn max_residual(a: &Banded, x: &[f64], b: &[f64]) -> f64 {
    a.matvec(x).iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hjb::{check_noise_assumption, BoxRegion};
    use crate::polynomial::{PolyMatrix, Polynomial};
    use nalgebra::DMatrix;
    use std::collections::BTreeMap;

    fn harmonic(n: usize) -> ControlProblem {
        let dom = BoxRegion::unit(n);
        let bc: BTreeMap<_, _> = dom.facets().into_iter().map(|f| (f, Polynomial::zero(n))).collect();
        let eye: Vec<f64> = (0..n * n).map(|k| if k % (n + 1) == 0 { 1.0 } else { 0.0 }).collect();
        let id = PolyMatrix::from_constants(n, n, n, &eye);
        ControlProblem::new(
            (0..n).map(|i| format!("x{i}")).collect(),
            PolyMatrix::column(vec![Polynomial::zero(n); n]).unwrap(),
            id.clone(),
            id,
            DMatrix::identity(n, n),
            DMatrix::identity(n, n),
            1.0,
            Polynomial::zero(n),
            dom,
            bc,
        )
        .unwrap()
    }

    #[test]
    fn constant_boundary_gives_constant() {
        for n in [1, 2] {
            let p = harmonic(n);
            let s = check_noise_assumption(&p).unwrap();
            let g = solve_fd(&p, &s, 21).unwrap();
            assert!(g.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
            assert!(g.residual <= 1e-10);
        }
    }

    #[test]
    fn banded_solver_pivots() {
        // [[0,1],[1,0]] needs a row swap
        let mut m = Banded::new(2, 1, 1);
        m.add(0, 1, 1.0);
        m.add(1, 0, 1.0);
        let x = m.solve(vec![2.0, 3.0]).unwrap();
        assert_eq!(x, vec![3.0, 2.0]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = harmonic(1);
        let s = check_noise_assumption(&p).unwrap();
        assert_eq!(solve_fd(&p, &s, 5), Err(FdError::TooFewNodes(5)));
    }
}
