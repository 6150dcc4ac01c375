//! The five subcommands. Each returns a report and leaves printing and exit
//! codes to the caller.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use sosdecomp::decomp::{admm_solve, fit_all_boundaries, make_grid_partition, write_trace_csv, DecomposedSolution};
use sosdecomp::hjb::{check_noise_assumption, desirability_to_value, ControlProblem, NoiseStructure, EPS_FLOOR};
use sosdecomp::record::SolutionRecord;
use sosdecomp::refgrid::{solve_fd, FdError};
use sosdecomp::soscert::{certify_nonneg_on_box, Direction};

use crate::config::SolveConfig;
use crate::error::CliError;

/// Floats in CSV and record output: 17 significant digits.
pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Five significant digits, fixed-point where that stays readable.
pub fn sig5(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v:.4}");
    }
    let mag = v.abs().log10().floor() as i32;
    if (-4..5).contains(&mag) {
        format!("{v:.*}", (4 - mag) as usize)
    } else {
        format!("{v:.4e}")
    }
}

fn fd_error(e: FdError) -> CliError {
    match e {
        FdError::UnsupportedDimension(_) => CliError::validation("OracleUnsupported", e.to_string()),
        FdError::TooFewNodes(_) => CliError::validation("TooFewNodes", e.to_string()),
        FdError::StateDependentNoise => CliError::validation("StateDependentNoise", e.to_string()),
        FdError::Singular(_) => CliError::Solver {
            reason: "OracleSingular",
            detail: e.to_string(),
        },
    }
}

// ---------------------------------------------------------------- check

#[derive(Debug, Clone, PartialEq)]
pub struct FacetFit {
    pub facet: String,
    pub degree: u32,
    pub max_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    /// `None` when the problem could not be built; see `failure`.
    pub sigma_t: Option<Vec<Vec<f64>>>,
    pub state_cost_certified: Option<bool>,
    pub fits: Vec<FacetFit>,
    /// First failing check as `(reason, detail)`.
    pub failure: Option<(&'static str, String)>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        if let Some(sig) = &self.sigma_t {
            let rows: Vec<String> = sig
                .iter()
                .map(|r| r.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(" "))
                .collect();
            let _ = writeln!(s, "noise_assumption ok sigma_t [{}]", rows.join("; "));
        }
        if let Some(ok) = self.state_cost_certified {
            let _ = writeln!(s, "state_cost_nonneg {}", if ok { "certified" } else { "not_certified" });
        }
        for f in &self.fits {
            let _ = writeln!(s, "boundary_fit {} degree {} max_error {}", f.facet, f.degree, real(f.max_error));
        }
        match &self.failure {
            None => {
                let _ = writeln!(s, "PASS");
            }
            Some((reason, detail)) => {
                let _ = writeln!(s, "FAIL {reason}: {detail}");
            }
        }
        s
    }
}

/// Validates the configuration: noise assumption, `q ≥ 0` on the domain,
/// and the boundary fit error on every facet.
pub fn cmd_check(cfg: &SolveConfig) -> CheckReport {
    let mut report = CheckReport {
        sigma_t: None,
        state_cost_certified: None,
        fits: Vec::new(),
        failure: None,
    };
    let fail = |r: &mut CheckReport, e: CliError| {
        r.failure = Some(match e {
            CliError::Validation { reason, detail } | CliError::Solver { reason, detail } => (reason, detail),
            other => ("Other", other.to_string()),
        });
    };
    let problem = match cfg.build_problem() {
        Ok(p) => p,
        Err(e) => {
            fail(&mut report, e);
            return report;
        }
    };
    let opts = match cfg.decomp_options() {
        Ok(o) => o,
        Err(e) => {
            fail(&mut report, e);
            return report;
        }
    };
    match check_noise_assumption(&problem) {
        Ok(NoiseStructure::Constant(m)) => {
            report.sigma_t = Some((0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect());
        }
        Ok(NoiseStructure::StateDependent(_)) => {
            fail(&mut report, CliError::from_hjb(sosdecomp::hjb::HjbError::StateDependentNoise));
            return report;
        }
        Err(e) => {
            fail(&mut report, CliError::from_hjb(e));
            return report;
        }
    }
    match certify_nonneg_on_box(&problem.state_cost, &problem.domain, &opts.admm.solver) {
        Ok(true) => report.state_cost_certified = Some(true),
        Ok(false) => {
            report.state_cost_certified = Some(false);
            fail(&mut report, CliError::validation("StateCostNegative", "no certificate of q >= 0 on the domain".into()));
            return report;
        }
        Err(e) => {
            fail(
                &mut report,
                CliError::Solver {
                    reason: "CertificateSolver",
                    detail: e.to_string(),
                },
            );
            return report;
        }
    }
    let degree = opts.fit_degree.unwrap_or(opts.region.degree);
    match fit_all_boundaries(&problem, degree, opts.fit_samples) {
        Ok(fits) => {
            report.fits = fits
                .iter()
                .map(|(f, fit)| FacetFit {
                    facet: f.name(&problem.variables),
                    degree: fit.degree,
                    max_error: fit.max_error,
                })
                .collect();
        }
        Err(e) => fail(&mut report, CliError::from_hjb(e)),
    }
    if report.failure.is_none() {
        if let Err(e) = cfg.region_counts().and_then(|c| {
            make_grid_partition(&problem.domain, &c).map_err(CliError::from_decomp)
        }) {
            fail(&mut report, e);
        }
    }
    report
}

// ---------------------------------------------------------------- solve

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub solution: DecomposedSolution,
    pub record: SolutionRecord,
    pub record_path: PathBuf,
    pub trace_path: PathBuf,
    pub summary_path: PathBuf,
    pub elapsed: Duration,
}

/// Runs the decomposed solve without writing anything.
pub fn run_solve(cfg: &SolveConfig, deadline: Option<Instant>) -> Result<(ControlProblem, DecomposedSolution), CliError> {
    let problem = cfg.build_problem()?;
    let mut opts = cfg.decomp_options()?;
    opts.admm.deadline = deadline;
    let partition = make_grid_partition(&problem.domain, &cfg.region_counts()?).map_err(CliError::from_decomp)?;
    let sol = admm_solve(&problem, &partition, &opts).map_err(CliError::from_decomp)?;
    Ok((problem, sol))
}

pub fn summary_text(cfg: &SolveConfig, sol: &DecomposedSolution, elapsed: Duration) -> String {
    let counts: Vec<String> = cfg.solver.regions.iter().map(usize::to_string).collect();
    let last = sol.trace.last();
    let mut s = String::new();
    let _ = writeln!(s, "gamma_max {}", sig5(sol.gamma_max));
    let _ = writeln!(s, "direction {}", sol.direction.as_str());
    let _ = writeln!(s, "degree {}", sol.degree);
    let _ = writeln!(s, "order {}", sol.order);
    let _ = writeln!(s, "regions {}", counts.join("x"));
    let _ = writeln!(s, "converged {}", sol.converged);
    let _ = writeln!(s, "iterations {}", last.map_or(0, |t| t.iteration));
    let _ = writeln!(s, "primal_residual {}", sig5(last.map_or(0.0, |t| t.primal_residual)));
    let _ = writeln!(s, "dual_residual {}", sig5(last.map_or(0.0, |t| t.dual_residual)));
    let _ = writeln!(s, "gamma_spread {}", sig5(sol.gamma_spread()));
    let _ = writeln!(s, "seconds {:.3}", elapsed.as_secs_f64());
    s
}

/// Solves and writes `solution.txt`, `trace.csv` and `summary.txt` into
/// `out_dir`. A non-converged run still writes its files; the caller turns
/// `solution.converged == false` into exit code 4.
pub fn cmd_solve(cfg: &SolveConfig, out_dir: &Path) -> Result<SolveOutcome, CliError> {
    let t0 = Instant::now();
    let (problem, sol) = run_solve(cfg, None)?;
    let elapsed = t0.elapsed();
    fs::create_dir_all(out_dir)?;
    let record = SolutionRecord::from_solution(&sol, &problem);
    let record_path = out_dir.join("solution.txt");
    fs::write(&record_path, record.to_text())?;
    let trace_path = out_dir.join("trace.csv");
    let mut w = BufWriter::new(File::create(&trace_path)?);
    write_trace_csv(&sol.trace, &mut w)?;
    w.flush()?;
    let summary_path = out_dir.join("summary.txt");
    fs::write(&summary_path, summary_text(cfg, &sol, elapsed))?;
    Ok(SolveOutcome {
        solution: sol,
        record,
        record_path,
        trace_path,
        summary_path,
        elapsed,
    })
}

// ---------------------------------------------------------------- eval

pub fn load_record(path: &Path) -> Result<SolutionRecord, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    SolutionRecord::parse(&text).map_err(|e| CliError::validation("MalformedRecord", e.to_string()))
}

/// Writes `vars...,psi,V,u1..um,below_floor` on a uniform grid with
/// `resolution` points per axis. Rows with `Ψ ≤ eps_floor` leave `V` and
/// `u*` empty and set `below_floor` to 1. Returns the row count.
pub fn cmd_eval<W: Write>(record: &SolutionRecord, resolution: usize, eps_floor: f64, mut out: W) -> Result<usize, CliError> {
    if resolution < 2 {
        return Err(CliError::validation("BadResolution", format!("resolution {resolution} < 2")));
    }
    let floor = eps_floor.max(EPS_FLOOR);
    let m = record.gain.rows();
    let mut header: Vec<String> = record.variables.clone();
    header.push("psi".into());
    header.push("V".into());
    header.extend((1..=m).map(|i| format!("u{i}")));
    header.push("below_floor".into());
    writeln!(out, "{}", header.join(","))?;
    let mut rows = 0;
    for x in record.domain.grid(resolution) {
        let psi = record.psi(&x).map_err(|e| CliError::validation("MalformedRecord", e.to_string()))?;
        let mut line: Vec<String> = x.iter().map(|v| real(*v)).collect();
        line.push(real(psi));
        if psi > floor {
            let v = desirability_to_value(psi, record.lambda).map_err(CliError::from_hjb)?;
            let u = record.policy(&x).map_err(|e| CliError::validation("MalformedRecord", e.to_string()))?;
            line.push(real(v));
            line.extend(u.iter().map(|v| real(*v)));
            line.push("0".into());
        } else {
            line.extend(std::iter::repeat_n(String::new(), m + 1));
            line.push("1".into());
        }
        writeln!(out, "{}", line.join(","))?;
        rows += 1;
    }
    Ok(rows)
}

// ---------------------------------------------------------------- compare

#[derive(Debug, Clone, PartialEq)]
pub struct GapStats {
    pub direction: Direction,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
    /// Nodes with a signed gap below `-VIOLATION_TOL`.
    pub violations: usize,
}

pub const VIOLATION_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub nodes: usize,
    pub fd_residual: f64,
    pub gaps: Vec<GapStats>,
    /// Largest `Ψ_upper − Ψ_lower` when both directions were given.
    pub sandwich_width: Option<f64>,
}

impl CompareReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "fd_nodes {} fd_residual {}", self.nodes, real(self.fd_residual));
        for g in &self.gaps {
            let _ = writeln!(
                s,
                "{} gap_min {} gap_mean {} gap_max {} violations {}",
                g.direction.as_str(),
                real(g.min),
                real(g.mean),
                real(g.max),
                g.violations
            );
        }
        if let Some(w) = self.sandwich_width {
            let _ = writeln!(s, "sandwich_width_max {}", real(w));
        }
        s
    }
}

/// Compares records against the finite-difference solution with `nodes`
/// points per axis. Gaps are signed so that a valid bound is nonnegative:
/// `Ψ_upper − Ψ_fd` and `Ψ_fd − Ψ_lower`.
pub fn cmd_compare(cfg: &SolveConfig, records: &[SolutionRecord], nodes: usize) -> Result<CompareReport, CliError> {
    let problem = cfg.build_problem()?;
    for r in records {
        if r.domain != problem.domain || r.variables != problem.variables {
            return Err(CliError::validation("DomainMismatch", "record and config domains differ".into()));
        }
    }
    let sigma = check_noise_assumption(&problem).map_err(CliError::from_hjb)?;
    let grid = solve_fd(&problem, &sigma, nodes).map_err(fd_error)?;
    let mut gaps = Vec::new();
    let mut values: Vec<(Direction, Vec<f64>)> = Vec::new();
    for r in records {
        let mut vals = Vec::with_capacity(grid.len());
        let mut st = GapStats {
            direction: r.direction,
            min: f64::INFINITY,
            mean: 0.0,
            max: f64::NEG_INFINITY,
            violations: 0,
        };
        for k in 0..grid.len() {
            let v = r.psi(&grid.node(k)).map_err(|e| CliError::validation("MalformedRecord", e.to_string()))?;
            let gap = r.direction.sign() * (v - grid.values[k]);
            st.min = st.min.min(gap);
            st.max = st.max.max(gap);
            st.mean += gap;
            if gap < -VIOLATION_TOL {
                st.violations += 1;
            }
            vals.push(v);
        }
        st.mean /= grid.len() as f64;
        gaps.push(st);
        values.push((r.direction, vals));
    }
    let upper = values.iter().find(|(d, _)| *d == Direction::Upper);
    let lower = values.iter().find(|(d, _)| *d == Direction::Lower);
    let sandwich_width = match (upper, lower) {
        (Some((_, u)), Some((_, l))) => Some(u.iter().zip(l).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max)),
        _ => None,
    };
    Ok(CompareReport {
        nodes: grid.len(),
        fd_residual: grid.residual,
        gaps,
        sandwich_width,
    })
}

// ---------------------------------------------------------------- table

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellStatus {
    Ok,
    NotConverged,
    Skipped,
    Failed,
}

impl CellStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::NotConverged => "not_converged",
            CellStatus::Skipped => "skipped",
            CellStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableCell {
    pub degree: u32,
    pub regions: usize,
    pub status: CellStatus,
    pub gamma_max: Option<f64>,
    pub iterations: usize,
    pub seconds: f64,
    pub detail: String,
}

/// Solves every `(d, n_r)` combination in parallel. A cell whose ADMM loop
/// is still running after `budget` is marked skipped; the budget is checked
/// between outer iterations.
pub fn cmd_table(cfg: &SolveConfig, degrees: &[u32], regions: &[usize], budget: Option<Duration>) -> Vec<TableCell> {
    let cells: Vec<(u32, usize)> = regions.iter().flat_map(|&r| degrees.iter().map(move |&d| (d, r))).collect();
    cells
        .par_iter()
        .map(|&(d, nr)| {
            let mut c = cfg.clone();
            c.solver.degree = d;
            c.solver.regions = vec![nr];
            let t0 = Instant::now();
            let res = run_solve(&c, budget.map(|b| t0 + b));
            let seconds = t0.elapsed().as_secs_f64();
            let mut cell = TableCell {
                degree: d,
                regions: nr,
                status: CellStatus::Failed,
                gamma_max: None,
                iterations: 0,
                seconds,
                detail: String::new(),
            };
            match res {
                Ok((_, sol)) => {
                    cell.status = if sol.converged { CellStatus::Ok } else { CellStatus::NotConverged };
                    cell.gamma_max = Some(sol.gamma_max);
                    cell.iterations = sol.trace.last().map_or(0, |t| t.iteration);
                }
                Err(CliError::Solver {
                    reason: "TimeBudget",
                    detail,
                }) => {
                    cell.status = CellStatus::Skipped;
                    cell.detail = detail;
                }
                Err(e) => {
                    log::error!("cell d={d} n_r={nr}: {e}");
                    cell.detail = e.to_string();
                }
            }
            cell
        })
        .collect()
}

/// `degree,regions,status,gamma_max,gamma_max_5sf,iterations,seconds`.
pub fn write_table_csv<W: Write>(cells: &[TableCell], mut w: W) -> std::io::Result<()> {
    writeln!(w, "degree,regions,status,gamma_max,gamma_max_5sf,iterations,seconds")?;
    for c in cells {
        let (g, g5) = c.gamma_max.map_or((String::new(), String::new()), |g| (real(g), sig5(g)));
        writeln!(
            w,
            "{},{},{},{},{},{},{:.3}",
            c.degree,
            c.regions,
            c.status.as_str(),
            g,
            g5,
            c.iterations,
            c.seconds
        )?;
    }
    Ok(())
}

/// Rows `n_r`, columns `d`, as in the slack table layout.
pub fn render_table(cells: &[TableCell], degrees: &[u32], regions: &[usize]) -> String {
    let mut s = String::from("n_r\\d");
    for d in degrees {
        let _ = write!(s, "\t{d}");
    }
    s.push('\n');
    for &r in regions {
        let _ = write!(s, "{r}");
        for &d in degrees {
            let text = cells
                .iter()
                .find(|c| c.degree == d && c.regions == r)
                .map_or("-".to_string(), |c| match (c.status, c.gamma_max) {
                    (CellStatus::Ok, Some(g)) => sig5(g),
                    (CellStatus::NotConverged, Some(g)) => format!("{}*", sig5(g)),
                    (st, _) => st.as_str().to_string(),
                });
            let _ = write!(s, "\t{text}");
        }
        s.push('\n');
    }
    s
}
