//! Grid decomposition of the domain and the ADMM consensus loop.
//!
//! Neighbouring regions are coupled by matching the restrictions of their
//! desirability polynomials (and normal derivatives up to the continuity
//! order) to the shared facet, plus `γ_i = γ_j`. With a parity colouring of
//! the grid every coupling row joins one shaded and one unshaded region, so
//! each colour is one ADMM block whose regions solve independently.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::time::Instant;

use rayon::prelude::*;

use crate::conic::{self, ConeSolution, SolveStatus, SolverOptions, SparseMatrix};
use crate::hjb::{check_noise_assumption, fit_boundary_data, BoundaryFit, BoxRegion, ControlProblem, Facet, HjbError, FIT_SAMPLES};
use crate::polynomial::{monomial_basis, MultiIndex, Polynomial};
use crate::soscert::{assemble_region_subproblem, Direction, RegionOptions, RegionSubproblem, SosError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DecompError {
    #[error("region counts must be positive and match the domain dimension")]
    BadCounts,
    #[error("point is outside the domain")]
    OutsideDomain,
    #[error("continuity order {order} exceeds degree {degree}")]
    OrderTooLarge { order: u32, degree: u32 },
    #[error("region {region} at iteration {iteration}: solver returned {status:?}")]
    Subproblem { region: usize, iteration: usize, status: SolveStatus },
    #[error("time budget exhausted after {iterations} outer iterations")]
    TimeBudget { iterations: usize },
    #[error(transparent)]
    Sos(#[from] SosError),
    #[error(transparent)]
    Hjb(#[from] HjbError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Color {
    Unshaded,
    Shaded,
}

/// An interior facet `x_axis = value` between `lower` (below) and `upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedFacet {
    pub lower: usize,
    pub upper: usize,
    pub axis: usize,
    pub value: f64,
}

/// Uniform grid of boxes over the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub domain: BoxRegion,
    pub counts: Vec<usize>,
    /// Indexed with the first axis varying fastest.
    pub regions: Vec<BoxRegion>,
    pub grid_index: Vec<Vec<usize>>,
    pub facets: Vec<SharedFacet>,
    pub colors: Vec<Color>,
}

pub fn make_grid_partition(domain: &BoxRegion, counts: &[usize]) -> Result<Partition, DecompError> {
    let n = domain.dim();
    if counts.len() != n || counts.iter().any(|&c| c == 0) {
        return Err(DecompError::BadCounts);
    }
    let total: usize = counts.iter().product();
    let mut regions = Vec::with_capacity(total);
    let mut grid_index = Vec::with_capacity(total);
    let mut colors = Vec::with_capacity(total);
    let edge = |a: usize, k: usize| {
        let t = k as f64 / counts[a] as f64;
        if k == counts[a] {
            domain.upper[a]
        } else {
            domain.lower[a] + t * (domain.upper[a] - domain.lower[a])
        }
    };
    for flat in 0..total {
        let mut rest = flat;
        let idx: Vec<usize> = counts
            .iter()
            .map(|&c| {
                let k = rest % c;
                rest /= c;
                k
            })
            .collect();
        let lower = idx.iter().enumerate().map(|(a, &k)| edge(a, k)).collect();
        let upper = idx.iter().enumerate().map(|(a, &k)| edge(a, k + 1)).collect();
        regions.push(BoxRegion { lower, upper });
        colors.push(if idx.iter().sum::<usize>() % 2 == 0 { Color::Unshaded } else { Color::Shaded });
        grid_index.push(idx);
    }
    let mut facets = Vec::new();
    for (i, idx) in grid_index.iter().enumerate() {
        let mut stride = 1;
        for a in 0..n {
            if idx[a] + 1 < counts[a] {
                facets.push(SharedFacet {
                    lower: i,
                    upper: i + stride,
                    axis: a,
                    value: regions[i].upper[a],
                });
            }
            stride *= counts[a];
        }
    }
    Ok(Partition {
        domain: domain.clone(),
        counts: counts.to_vec(),
        regions,
        grid_index,
        facets,
        colors,
    })
}

impl Partition {
    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    /// Lowest-index region containing `x`.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        locate(&self.regions, x)
    }
}

/// A coefficient of one region's program that appears in a coupling row.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum CouplingVar {
    /// Local Ψ coefficient.
    Psi(MultiIndex),
    Gamma,
}

/// `Σ coeff · var = 0` over two regions.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingRow {
    pub terms: Vec<(usize, CouplingVar, f64)>,
    /// Normal derivative order, or `None` for the `γ_i = γ_j` row.
    pub order: Option<u32>,
}

/// All rows contributed by one shared facet.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingConstraint {
    pub facet: usize,
    pub order: u32,
    pub rows: Vec<CouplingRow>,
}

fn falling(e: u32, k: u32) -> f64 {
    (0..k).map(|t| (e - t) as f64).product()
}

/// Coefficient matching rows for each shared facet of `partition`: the
/// restrictions of `∂^k Ψ / ∂x_a^k`, `k ≤ order`, agree on `x_a = v`, written
/// in the regions' local coordinates. Tangential local coordinates of the
/// two regions coincide on a uniform grid.
pub fn build_coupling(partition: &Partition, degree: u32, order: u32) -> Result<Vec<CouplingConstraint>, DecompError> {
    if order > degree {
        return Err(DecompError::OrderTooLarge { order, degree });
    }
    let n = partition.domain.dim();
    let basis = monomial_basis(n, degree);
    let mut out = Vec::with_capacity(partition.facets.len());
    for (fi, f) in partition.facets.iter().enumerate() {
        let a = f.axis;
        let h_lo = partition.regions[f.lower].half_widths()[a];
        let h_hi = partition.regions[f.upper].half_widths()[a];
        let mut rows = Vec::new();
        for k in 0..=order {
            // row scaled so the lower region's derivative factor is 1
            let w_hi = (h_lo / h_hi).powi(k as i32);
            let tangential = monomial_basis(n - 1, degree - k);
            let mut by_t: BTreeMap<MultiIndex, Vec<(usize, CouplingVar, f64)>> =
                tangential.into_iter().map(|t| (t, Vec::new())).collect();
            for m in &basis {
                let e = m.get(a);
                if e < k {
                    continue;
                }
                let t = m.remove(a);
                let Some(row) = by_t.get_mut(&t) else { continue };
                let d = falling(e, k);
                // lower region sits at ξ_a = +1, upper at ξ_a = −1
                let sign_hi = if (e - k) % 2 == 0 { 1.0 } else { -1.0 };
                row.push((f.lower, CouplingVar::Psi(m.clone()), d));
                row.push((f.upper, CouplingVar::Psi(m.clone()), -d * sign_hi * w_hi));
            }
            rows.extend(by_t.into_values().map(|terms| CouplingRow { terms, order: Some(k) }));
        }
        rows.push(CouplingRow {
            terms: vec![(f.lower, CouplingVar::Gamma, 1.0), (f.upper, CouplingVar::Gamma, -1.0)],
            order: None,
        });
        out.push(CouplingConstraint { facet: fi, order, rows });
    }
    Ok(out)
}

/// True when every row touches exactly one region of each colour.
pub fn is_two_block(partition: &Partition, coupling: &[CouplingConstraint]) -> bool {
    coupling.iter().flat_map(|c| &c.rows).all(|row| {
        let mut regions: Vec<usize> = row.terms.iter().map(|t| t.0).collect();
        regions.sort_unstable();
        regions.dedup();
        regions.len() == 2 && partition.colors[regions[0]] != partition.colors[regions[1]]
    })
}

/// Coupling rows as per-region sparse blocks over each program's columns.
#[derive(Debug, Clone)]
struct CouplingSystem {
    nrows: usize,
    /// Global row index of each local row, per region.
    rows_of: Vec<Vec<usize>>,
    /// `A⁽ⁱ⁾` restricted to its rows.
    blocks: Vec<SparseMatrix>,
    /// The other region of each global row, per region-local row.
    partner: Vec<Vec<usize>>,
}

impl CouplingSystem {
    fn new(subs: &[RegionSubproblem], coupling: &[CouplingConstraint]) -> Self {
        let nreg = subs.len();
        let mut rows_of = vec![Vec::new(); nreg];
        let mut entries: Vec<Vec<Vec<(usize, f64)>>> = vec![Vec::new(); nreg];
        let mut partner = vec![Vec::new(); nreg];
        let mut r = 0;
        for row in coupling.iter().flat_map(|c| &c.rows) {
            let mut per: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
            for (reg, var, v) in &row.terms {
                let col = match var {
                    CouplingVar::Psi(m) => subs[*reg].psi_coeff_index[m],
                    CouplingVar::Gamma => subs[*reg].gamma_index,
                };
                per.entry(*reg).or_default().push((col, *v));
            }
            let regs: Vec<usize> = per.keys().copied().collect();
            for (reg, e) in per {
                rows_of[reg].push(r);
                entries[reg].push(e);
                partner[reg].push(regs.iter().copied().find(|&o| o != reg).unwrap_or(reg));
            }
            r += 1;
        }
        let blocks = entries
            .into_iter()
            .zip(subs)
            .map(|(rows, s)| {
                let mut a = SparseMatrix::new(s.program.num_vars());
                for e in rows {
                    a.push_row(e);
                }
                a
            })
            .collect();
        CouplingSystem {
            nrows: r,
            rows_of,
            blocks,
            partner,
        }
    }

    /// `A⁽ⁱ⁾ z_i` scattered into global rows.
    fn contribution(&self, i: usize, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows];
        for (k, v) in self.blocks[i].mul_vec(z).into_iter().enumerate() {
            out[self.rows_of[i][k]] += v;
        }
        out
    }
}

/// Options of the consensus loop.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmOptions {
    pub rho: f64,
    pub eps_pri: f64,
    pub eps_dual: f64,
    pub max_outer: usize,
    /// Solve regions of one colour concurrently.
    pub parallel: bool,
    /// Double or halve `ρ` when one residual exceeds the other tenfold.
    pub residual_balancing: bool,
    pub solver: SolverOptions,
    /// A subproblem that stops short of `solver.tol` is still used when its
    /// residuals and gap are below this.
    pub accept_tol: f64,
    /// Abandon the loop with [`DecompError::TimeBudget`] once this passes.
    pub deadline: Option<Instant>,
}

impl Default for AdmmOptions {
    fn default() -> Self {
        AdmmOptions {
            rho: 1.0,
            eps_pri: 1e-5,
            eps_dual: 1e-5,
            max_outer: 200,
            parallel: true,
            residual_balancing: false,
            solver: SolverOptions::default(),
            accept_tol: 1e-6,
            deadline: None,
        }
    }
}

/// Everything [`admm_solve`] needs besides the problem and partition.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompOptions {
    pub region: RegionOptions,
    /// Degree of the boundary data fit; defaults to the Ψ degree.
    pub fit_degree: Option<u32>,
    pub fit_samples: usize,
    /// Continuity order of the coupling, 0 to 2.
    pub order: u32,
    pub admm: AdmmOptions,
}

impl DecompOptions {
    pub fn new(degree: u32, direction: Direction, order: u32) -> Self {
        DecompOptions {
            region: RegionOptions::new(degree, direction),
            fit_degree: None,
            fit_samples: FIT_SAMPLES,
            order,
            admm: AdmmOptions::default(),
        }
    }
}

/// One outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gamma_max: f64,
    pub rho: f64,
    pub duals: Vec<f64>,
}

/// Mutable loop state, owned by the orchestrator.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub z: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub rho: f64,
    pub iteration: usize,
    pub trace: Vec<TraceRow>,
}

/// ADMM over compiled region subproblems.
pub struct Admm<'a> {
    subs: &'a [RegionSubproblem],
    colors: Vec<Color>,
    system: CouplingSystem,
    opts: AdmmOptions,
    pub state: AdmmState,
}

fn usable(sol: &ConeSolution, accept_tol: f64, region: usize, iteration: usize) -> Result<(), DecompError> {
    match sol.status {
        SolveStatus::Optimal => Ok(()),
        SolveStatus::MaxIter | SolveStatus::NumericalFailure
            if sol.primal_residual <= accept_tol && sol.dual_residual <= accept_tol && sol.gap <= accept_tol =>
        {
            log::warn!(
                "region {region} iteration {iteration}: {:?} accepted (pres {:.1e}, dres {:.1e}, gap {:.1e})",
                sol.status,
                sol.primal_residual,
                sol.dual_residual,
                sol.gap
            );
            Ok(())
        }
        status => {
            log::error!(
                "region {region} iteration {iteration}: {status:?} (pres {:.1e}, dres {:.1e}, gap {:.1e})",
                sol.primal_residual,
                sol.dual_residual,
                sol.gap
            );
            Err(DecompError::Subproblem { region, iteration, status })
        }
    }
}

fn solve_plain(sub: &RegionSubproblem, opts: &AdmmOptions) -> Result<Vec<f64>, DecompError> {
    let sol = conic::solve(&sub.program, &opts.solver);
    usable(&sol, opts.accept_tol, sub.region_id, 0)?;
    Ok(sol.primal)
}

impl<'a> Admm<'a> {
    /// Starts from each region's uncoupled optimum with zero duals.
    pub fn new(
        subs: &'a [RegionSubproblem],
        partition: &Partition,
        coupling: &[CouplingConstraint],
        opts: AdmmOptions,
    ) -> Result<Self, DecompError> {
        let system = CouplingSystem::new(subs, coupling);
        let z = if opts.parallel {
            subs.par_iter().map(|s| solve_plain(s, &opts)).collect::<Result<Vec<_>, _>>()?
        } else {
            subs.iter().map(|s| solve_plain(s, &opts)).collect::<Result<Vec<_>, _>>()?
        };
        let y = vec![0.0; system.nrows];
        let rho = opts.rho;
        Ok(Admm {
            subs,
            colors: partition.colors.clone(),
            system,
            opts,
            state: AdmmState {
                z,
                y,
                rho,
                iteration: 0,
                trace: Vec::new(),
            },
        })
    }

    pub fn num_rows(&self) -> usize {
        self.system.nrows
    }

    /// `Σ_i A⁽ⁱ⁾ z_i`.
    pub fn residual(&self) -> Vec<f64> {
        let mut r = vec![0.0; self.system.nrows];
        for (i, z) in self.state.z.iter().enumerate() {
            for (k, v) in self.system.blocks[i].mul_vec(z).into_iter().enumerate() {
                r[self.system.rows_of[i][k]] += v;
            }
        }
        r
    }

    fn update_region(&self, i: usize, contrib: &[Vec<f64>]) -> Result<Vec<f64>, DecompError> {
        let rho = self.state.rho;
        let target: Vec<f64> = self.system.rows_of[i]
            .iter()
            .zip(&self.system.partner[i])
            .map(|(&r, &j)| -contrib[j][r] - self.state.y[r] / rho)
            .collect();
        let sub = &self.subs[i];
        let sol = conic::solve_quadratic_penalty(&sub.program, &self.system.blocks[i], &target, rho, &self.opts.solver);
        usable(&sol, self.opts.accept_tol, sub.region_id, self.state.iteration + 1)?;
        Ok(sol.primal)
    }

    fn sweep(&mut self, color: Color) -> Result<(), DecompError> {
        let contrib: Vec<Vec<f64>> = (0..self.subs.len())
            .map(|i| self.system.contribution(i, &self.state.z[i]))
            .collect();
        let members: Vec<usize> = (0..self.subs.len()).filter(|&i| self.colors[i] == color).collect();
        let updates: Vec<(usize, Vec<f64>)> = if self.opts.parallel {
            members
                .par_iter()
                .map(|&i| self.update_region(i, &contrib).map(|z| (i, z)))
                .collect::<Result<_, _>>()?
        } else {
            members
                .iter()
                .map(|&i| self.update_region(i, &contrib).map(|z| (i, z)))
                .collect::<Result<_, _>>()?
        };
        for (i, z) in updates {
            self.state.z[i] = z;
        }
        Ok(())
    }

    /// One outer iteration: shaded sweep, unshaded sweep, dual update.
    pub fn step(&mut self) -> Result<&TraceRow, DecompError> {
        let before: Vec<Vec<f64>> = self.state.z.clone();
        self.sweep(Color::Shaded)?;
        self.sweep(Color::Unshaded)?;
        let r = self.residual();
        let rho = self.state.rho;
        for (y, v) in self.state.y.iter_mut().zip(&r) {
            *y += rho * v;
        }
        // ρ A_Sᵀ A_U (z_U⁺ − z_U)
        let mut du = vec![0.0; self.system.nrows];
        for i in 0..self.subs.len() {
            if self.colors[i] == Color::Unshaded {
                let diff: Vec<f64> = self.state.z[i].iter().zip(&before[i]).map(|(a, b)| a - b).collect();
                for (k, v) in self.system.contribution(i, &diff).into_iter().enumerate() {
                    du[k] += v;
                }
            }
        }
        let mut dual: f64 = 0.0;
        for i in 0..self.subs.len() {
            if self.colors[i] == Color::Shaded {
                let local: Vec<f64> = self.system.rows_of[i].iter().map(|&r| du[r]).collect();
                let s = self.system.blocks[i].tmul_vec(&local);
                dual = s.iter().fold(dual, |m, v| m.max(rho * v.abs()));
            }
        }
        let primal = r.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let gamma_max = self
            .subs
            .iter()
            .zip(&self.state.z)
            .map(|(s, z)| z[s.gamma_index])
            .fold(f64::NEG_INFINITY, f64::max);
        self.state.iteration += 1;
        self.state.trace.push(TraceRow {
            iteration: self.state.iteration,
            primal_residual: primal,
            dual_residual: dual,
            gamma_max,
            rho,
            duals: self.state.y.clone(),
        });
        if self.opts.residual_balancing {
            if primal > 10.0 * dual {
                self.state.rho *= 2.0;
            } else if dual > 10.0 * primal {
                self.state.rho /= 2.0;
            }
        }
        Ok(self.state.trace.last().expect("just pushed"))
    }

    pub fn converged(&self) -> bool {
        self.state
            .trace
            .last()
            .is_some_and(|t| t.primal_residual <= self.opts.eps_pri && t.dual_residual <= self.opts.eps_dual)
    }

    /// Iterates until both residuals are small or `max_outer` is reached.
    pub fn run(&mut self) -> Result<bool, DecompError> {
        while self.state.iteration < self.opts.max_outer {
            if self.opts.deadline.is_some_and(|d| Instant::now() >= d) {
                return Err(DecompError::TimeBudget {
                    iterations: self.state.iteration,
                });
            }
            let row = self.step()?;
            log::debug!(
                "admm {}: primal {:.3e} dual {:.3e} gamma_max {:.6}",
                row.iteration,
                row.primal_residual,
                row.dual_residual,
                row.gamma_max
            );
            if self.converged() {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// Converged (or last) iterate of [`admm_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct DecomposedSolution {
    pub regions: Vec<BoxRegion>,
    /// Ψ of each region in the problem's coordinates.
    pub psi: Vec<Polynomial>,
    pub gammas: Vec<f64>,
    pub gamma_max: f64,
    pub direction: Direction,
    pub degree: u32,
    pub order: u32,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
}

impl DecomposedSolution {
    pub fn gamma_spread(&self) -> f64 {
        let lo = self.gammas.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.gammas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }
}

/// Fits `exp(−φ/λ)` on every facet of the domain.
pub fn fit_all_boundaries(
    problem: &ControlProblem,
    degree: u32,
    samples: usize,
) -> Result<BTreeMap<Facet, BoundaryFit>, HjbError> {
    problem
        .domain
        .facets()
        .into_iter()
        .map(|f| {
            fit_boundary_data(&problem.boundary_costs[&f], problem.lambda, &problem.domain, f, degree, samples)
                .map(|fit| (f, fit))
        })
        .collect()
}

/// Compiles every region of `partition`.
pub fn compile_regions(
    problem: &ControlProblem,
    partition: &Partition,
    opts: &DecompOptions,
) -> Result<Vec<RegionSubproblem>, DecompError> {
    let sigma = check_noise_assumption(problem)?;
    let fits = fit_all_boundaries(problem, opts.fit_degree.unwrap_or(opts.region.degree), opts.fit_samples)?;
    partition
        .regions
        .par_iter()
        .enumerate()
        .map(|(i, r)| assemble_region_subproblem(i, problem, r, &sigma, &fits, &opts.region).map_err(DecompError::from))
        .collect()
}

/// Compiles, couples and solves the decomposed program.
pub fn admm_solve(problem: &ControlProblem, partition: &Partition, opts: &DecompOptions) -> Result<DecomposedSolution, DecompError> {
    let subs = compile_regions(problem, partition, opts)?;
    let coupling = build_coupling(partition, opts.region.degree, opts.order)?;
    let mut admm = Admm::new(&subs, partition, &coupling, opts.admm.clone())?;
    let converged = if admm.num_rows() == 0 {
        true
    } else {
        admm.run()?
    };
    if !converged {
        log::warn!("ADMM stopped after {} iterations without convergence", admm.state.iteration);
    }
    Ok(finish(&subs, partition, opts, &admm.state, converged))
}

fn finish(
    subs: &[RegionSubproblem],
    partition: &Partition,
    opts: &DecompOptions,
    state: &AdmmState,
    converged: bool,
) -> DecomposedSolution {
    let psi = subs.iter().zip(&state.z).map(|(s, z)| s.global_psi(z)).collect();
    let gammas: Vec<f64> = subs.iter().zip(&state.z).map(|(s, z)| z[s.gamma_index]).collect();
    DecomposedSolution {
        regions: partition.regions.clone(),
        psi,
        gamma_max: gammas.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        gammas,
        direction: opts.region.direction,
        degree: opts.region.degree,
        order: opts.order,
        converged,
        trace: state.trace.clone(),
    }
}

/// Ψ at `x`, taken from the lowest-index region containing it.
pub fn evaluate_stitched(sol: &DecomposedSolution, x: &[f64]) -> Result<f64, DecompError> {
    let i = locate(&sol.regions, x).ok_or(DecompError::OutsideDomain)?;
    Ok(sol.psi[i].eval(x))
}

/// Lowest-index region containing `x`.
pub fn locate(regions: &[BoxRegion], x: &[f64]) -> Option<usize> {
    regions.iter().position(|r| r.contains(x, 1e-12))
}

/// `iter,primal_res,dual_res,gamma_max,rho,y0,y1,...`
pub fn write_trace_csv<W: Write>(trace: &[TraceRow], mut w: W) -> io::Result<()> {
    let ny = trace.first().map_or(0, |t| t.duals.len());
    write!(w, "iter,primal_res,dual_res,gamma_max,rho")?;
    for k in 0..ny {
        write!(w, ",y{k}")?;
    }
    writeln!(w)?;
    for t in trace {
        write!(
            w,
            "{},{:.16e},{:.16e},{:.16e},{:.16e}",
            t.iteration, t.primal_residual, t.dual_residual, t.gamma_max, t.rho
        )?;
        for y in &t.duals {
            write!(w, ",{y:.16e}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_examples() {
        let p = make_grid_partition(&BoxRegion::unit(1), &[2]).unwrap();
        assert_eq!(p.regions[0], BoxRegion::new(vec![-1.0], vec![0.0]).unwrap());
        assert_eq!(p.regions[1], BoxRegion::new(vec![0.0], vec![1.0]).unwrap());
        assert_eq!(p.facets, vec![SharedFacet { lower: 0, upper: 1, axis: 0, value: 0.0 }]);
        let p = make_grid_partition(&BoxRegion::unit(2), &[4, 4]).unwrap();
        assert_eq!(p.len(), 16);
        assert_eq!(p.facets.len(), 24);
        assert_eq!(p.colors[0], Color::Unshaded);
        assert_eq!(p.colors[1], Color::Shaded);
        for f in &p.facets {
            assert_ne!(p.colors[f.lower], p.colors[f.upper]);
        }
        let p = make_grid_partition(&BoxRegion::unit(2), &[1, 1]).unwrap();
        assert_eq!(p.len(), 1);
        assert!(p.facets.is_empty());
        assert!(make_grid_partition(&BoxRegion::unit(2), &[0, 1]).is_err());
    }

    #[test]
    fn one_dimensional_rows() {
        let p = make_grid_partition(&BoxRegion::unit(1), &[2]).unwrap();
        let c = build_coupling(&p, 6, 0).unwrap();
        // one value row and the γ row
        assert_eq!(c[0].rows.len(), 2);
        let c = build_coupling(&p, 6, 1).unwrap();
        assert_eq!(c[0].rows.len(), 3);
        assert!(is_two_block(&p, &c));
    }
}
