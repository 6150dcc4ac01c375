//! Small dense conic solver.
//!
//! Programs are in standard form
//!
//! ```text
//! minimize    cᵀx
//! subject to  A x = b,   x ∈ K₁ × K₂ × …
//! ```
//!
//! where each `Kᵢ` is a free block, the nonnegative orthant, a second-order
//! cone `{(t, v) : t ≥ ‖v‖}` or a PSD cone stored in the scaled svec layout
//! of [`svec`]. The dual is `maximize bᵀy s.t. c − Aᵀy = z, z ∈ K*` with
//! `z = 0` on free blocks.
//!
//! [`solve`] runs a primal-dual interior-point method on the homogeneous
//! self-dual embedding with Nesterov-Todd scaling. Programs whose Newton
//! system would not fit [`SolverOptions::memory_budget`] go to a first-order
//! splitting method instead (see [`splitting`]).

mod cones;
pub mod dump;
mod ipm;
mod linalg;
pub mod splitting;
pub mod svec;

use nalgebra::{DMatrix, SymmetricEigen};

pub use ipm::solve_interior_point;
pub use splitting::solve_splitting;

/// Errors from program construction and projection helpers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConicError {
    #[error("constraint matrix has {got} columns, cones cover {expected}")]
    ColumnMismatch { got: usize, expected: usize },
    #[error("constraint matrix has {got} rows, rhs has {expected}")]
    RowMismatch { got: usize, expected: usize },
    #[error("objective has length {got}, expected {expected}")]
    ObjectiveLength { got: usize, expected: usize },
    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("second-order cone blocks need dimension >= 1")]
    EmptySecondOrderCone,
}

/// One block of the cone product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    Free(usize),
    Nonneg(usize),
    SecondOrder(usize),
    /// PSD matrices of the given side, stored as svec.
    Psd(usize),
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Free(n) | Cone::Nonneg(n) | Cone::SecondOrder(n) => n,
            Cone::Psd(s) => svec::svec_len(s),
        }
    }

    /// Barrier degree contribution.
    pub fn degree(&self) -> usize {
        match *self {
            Cone::Free(_) => 0,
            Cone::Nonneg(n) => n,
            Cone::SecondOrder(_) => 1,
            Cone::Psd(s) => s,
        }
    }
}

/// Row-compressed sparse matrix.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseMatrix {
    ncols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    pub fn new(ncols: usize) -> Self {
        SparseMatrix {
            ncols,
            rows: Vec::new(),
        }
    }

    /// Appends a row, merging duplicate columns and dropping exact zeros.
    pub fn push_row<I: IntoIterator<Item = (usize, f64)>>(&mut self, entries: I) -> usize {
        let mut row: Vec<(usize, f64)> = entries.into_iter().collect();
        row.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
        for (c, v) in row {
            assert!(c < self.ncols, "column {c} out of range ({})", self.ncols);
            match merged.last_mut() {
                Some(last) if last.0 == c => last.1 += v,
                _ => merged.push((c, v)),
            }
        }
        merged.retain(|e| e.1 != 0.0);
        self.rows.push(merged);
        self.rows.len() - 1
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Widens the matrix with empty columns on the right.
    pub fn set_ncols(&mut self, ncols: usize) {
        assert!(ncols >= self.ncols);
        self.ncols = ncols;
    }

    pub fn row(&self, r: usize) -> &[(usize, f64)] {
        &self.rows[r]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[(usize, f64)]> {
        self.rows.iter().map(Vec::as_slice)
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(c, v)| v * x[c]).sum())
            .collect()
    }

    pub fn tmul_vec(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols];
        for (r, row) in self.rows.iter().enumerate() {
            if y[r] == 0.0 {
                continue;
            }
            for &(c, v) in row {
                out[c] += v * y[r];
            }
        }
        out
    }
}

/// Linear objective, affine equalities and a cone product.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicProgram {
    pub objective: Vec<f64>,
    pub constraints: SparseMatrix,
    pub rhs: Vec<f64>,
    pub cones: Vec<Cone>,
    /// One semantic label per cone block.
    pub labels: Vec<String>,
}

impl ConicProgram {
    pub fn new(
        objective: Vec<f64>,
        constraints: SparseMatrix,
        rhs: Vec<f64>,
        cones: Vec<Cone>,
        labels: Vec<String>,
    ) -> Result<Self, ConicError> {
        let n: usize = cones.iter().map(Cone::dim).sum();
        if constraints.ncols() != n {
            return Err(ConicError::ColumnMismatch {
                got: constraints.ncols(),
                expected: n,
            });
        }
        if constraints.nrows() != rhs.len() {
            return Err(ConicError::RowMismatch {
                got: constraints.nrows(),
                expected: rhs.len(),
            });
        }
        if objective.len() != n {
            return Err(ConicError::ObjectiveLength {
                got: objective.len(),
                expected: n,
            });
        }
        if cones.iter().any(|c| matches!(c, Cone::SecondOrder(0))) {
            return Err(ConicError::EmptySecondOrderCone);
        }
        let labels = if labels.len() == cones.len() {
            labels
        } else {
            (0..cones.len()).map(|i| format!("block{i}")).collect()
        };
        Ok(ConicProgram {
            objective,
            constraints,
            rhs,
            cones,
            labels,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    /// Column offset of each cone block.
    pub fn block_offsets(&self) -> Vec<usize> {
        let mut off = 0;
        self.cones
            .iter()
            .map(|c| {
                let o = off;
                off += c.dim();
                o
            })
            .collect()
    }

    /// Human-readable name for a column, e.g. `"gram s0 entry (2,1)"`.
    pub fn variable_name(&self, col: usize) -> Option<String> {
        let mut off = 0;
        for (cone, label) in self.cones.iter().zip(&self.labels) {
            let d = cone.dim();
            if col < off + d {
                let k = col - off;
                return Some(match cone {
                    Cone::Psd(side) => {
                        let (i, j) = svec::svec_positions(*side)[k];
                        format!("{label} entry ({i},{j})")
                    }
                    _ if d == 1 => label.clone(),
                    _ => format!("{label}[{k}]"),
                });
            }
            off += d;
        }
        None
    }

    /// Barrier degree of the cone product.
    pub fn degree(&self) -> usize {
        self.cones.iter().map(Cone::degree).sum()
    }

    /// Distance of `x` from each cone block: the most negative eigenvalue,
    /// SOC violation or entry, reported as a positive number (0 when inside).
    pub fn cone_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (cone, off) in self.cones.iter().zip(self.block_offsets()) {
            let v = &x[off..off + cone.dim()];
            let viol = match *cone {
                Cone::Free(_) => 0.0,
                Cone::Nonneg(_) => v.iter().fold(0.0_f64, |a, &t| a.max(-t)),
                Cone::SecondOrder(_) => {
                    let tail = v[1..].iter().map(|t| t * t).sum::<f64>().sqrt();
                    (tail - v[0]).max(0.0)
                }
                Cone::Psd(side) => {
                    let m = svec::smat(v, side);
                    let eig = SymmetricEigen::new(m);
                    (-eig.eigenvalues.min()).max(0.0)
                }
            };
            worst = worst.max(viol);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    InteriorPoint,
    Splitting,
    /// Interior point unless the Newton system exceeds the memory budget.
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub method: Method,
    /// Bytes allowed for the dense Newton system before switching to splitting.
    pub memory_budget: usize,
    pub splitting_max_iter: usize,
    /// τ/κ ratio below which an infeasibility certificate is accepted.
    pub infeasibility_ratio: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            max_iter: 200,
            method: Method::Auto,
            memory_budget: 512 << 20,
            splitting_max_iter: 50_000,
            infeasibility_ratio: 1e-7,
        }
    }
}

/// Result of a conic solve.
///
/// For `Infeasible`, `dual_eq`/`dual_cone` hold a normalized Farkas
/// certificate (`Aᵀy + z ≈ 0`, `z ∈ K*`, `bᵀy = 1`); for `Unbounded`,
/// `primal` holds a recession direction with `cᵀx = -1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeSolution {
    pub primal: Vec<f64>,
    pub dual_eq: Vec<f64>,
    pub dual_cone: Vec<f64>,
    pub status: SolveStatus,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
}

impl ConeSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// The method [`solve`] will use: `Auto` picks splitting when the dense
/// Newton system (`2k²` doubles for `k` rows plus free columns) exceeds
/// the memory budget.
pub fn choose_method(prog: &ConicProgram, opts: &SolverOptions) -> Method {
    match opts.method {
        Method::Auto => {
            let free: usize = prog
                .cones
                .iter()
                .filter_map(|c| match c {
                    Cone::Free(n) => Some(*n),
                    _ => None,
                })
                .sum();
            let k = prog.num_rows() + free;
            if 2 * k * k * std::mem::size_of::<f64>() > opts.memory_budget {
                Method::Splitting
            } else {
                Method::InteriorPoint
            }
        }
        m => m,
    }
}

/// Solves `prog` with the method chosen by `opts`.
pub fn solve(prog: &ConicProgram, opts: &SolverOptions) -> ConeSolution {
    match choose_method(prog, opts) {
        Method::Splitting => solve_splitting(prog, opts, None),
        _ => solve_interior_point(prog, opts),
    }
}

/// Minimizes `cᵀz + (ρ/2)‖P z − v‖²` over the feasible set of `prog`.
///
/// The quadratic term is moved into an epigraph variable `t ≥ ‖Pz − v‖²`,
/// written as the second-order cone `(t+1, t−1, 2(Pz − v))`, which is
/// appended to the program. The returned primal vector is truncated to the
/// original columns; `dual_eq` covers the original rows.
pub fn solve_quadratic_penalty(
    prog: &ConicProgram,
    penalty: &SparseMatrix,
    target: &[f64],
    rho: f64,
    opts: &SolverOptions,
) -> ConeSolution {
    let augmented = penalty_program(prog, penalty, target, rho);
    let mut sol = solve(&augmented, opts);
    let n = prog.num_vars();
    let m = prog.num_rows();
    let shift = 0.5 * rho;
    sol.primal.truncate(n);
    sol.dual_eq.truncate(m);
    sol.dual_cone.truncate(n);
    if sol.status == SolveStatus::Optimal || sol.status == SolveStatus::MaxIter {
        sol.primal_objective -= shift;
        sol.dual_objective -= shift;
    }
    sol
}

/// The epigraph reformulation used by [`solve_quadratic_penalty`].
pub fn penalty_program(
    prog: &ConicProgram,
    penalty: &SparseMatrix,
    target: &[f64],
    rho: f64,
) -> ConicProgram {
    assert_eq!(
        penalty.ncols(),
        prog.num_vars(),
        "penalty columns must match program"
    );
    assert_eq!(penalty.nrows(), target.len());
    assert!(rho > 0.0);
    let n = prog.num_vars();
    let k = penalty.nrows();
    let total = n + k + 2;
    let mut a = prog.constraints.clone();
    a.set_ncols(total);
    let mut rhs = prog.rhs.clone();
    // ξ0 - ξ1 = 2
    a.push_row([(n, 1.0), (n + 1, -1.0)]);
    rhs.push(2.0);
    for (r, row) in penalty.rows().enumerate() {
        let mut entries: Vec<(usize, f64)> = row.iter().map(|&(c, v)| (c, -2.0 * v)).collect();
        entries.push((n + 2 + r, 1.0));
        a.push_row(entries);
        rhs.push(-2.0 * target[r]);
    }
    let mut c = prog.objective.clone();
    c.resize(total, 0.0);
    c[n] = 0.5 * rho;
    let mut cones = prog.cones.clone();
    cones.push(Cone::SecondOrder(k + 2));
    let mut labels = prog.labels.clone();
    labels.push("penalty epigraph".into());
    ConicProgram::new(c, a, rhs, cones, labels).expect("augmented program is consistent")
}

/// Frobenius-nearest PSD matrix: eigenvalues clipped at zero.
pub fn psd_project(m: &DMatrix<f64>) -> Result<DMatrix<f64>, ConicError> {
    assert_eq!(m.nrows(), m.ncols(), "square matrix expected");
    let scale = m.amax().max(1.0);
    let asym = (m - m.transpose()).amax();
    if asym > 1e-12 * scale {
        return Err(ConicError::NotSymmetric(asym));
    }
    let sym = 0.5 * (m + m.transpose());
    let eig = SymmetricEigen::new(sym);
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let v = &eig.eigenvectors;
    let out = v * DMatrix::from_diagonal(&clipped) * v.transpose();
    Ok(0.5 * (&out + out.transpose()))
}
