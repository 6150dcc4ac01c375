//! Sum-of-squares certificates compiled to conic programs.
//!
//! A polynomial `p` is certified nonnegative on `{g_i ≥ 0, h_j = 0}` by
//! `p = s₀ + Σ s_i g_i + Σ t_j h_j` with SOS `s_i` and free `t_j`. Each SOS
//! multiplier is a Gram matrix over a monomial basis, stored as a PSD block
//! in svec layout.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::conic::svec::{smat, svec_index, svec_len, SQRT2};
use crate::conic::{self, Cone, ConicProgram, SolveStatus, SolverOptions, SparseMatrix};
use crate::hjb::{hjb_residual_affine, BoundaryFit, BoxRegion, ControlProblem, Facet, HjbError, NoiseStructure};
use crate::polynomial::{monomial_basis, AffinePoly, LinExpr, MultiIndex, Polynomial};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SosError {
    #[error("odd degree {0}: a sum of squares has even degree")]
    OddDegree(u32),
    #[error("certificate degree {given} is too small, at least {required} is needed")]
    DegreeTooSmall { given: u32, required: u32 },
    #[error("SOS multiplier degree {0} is odd")]
    OddMultiplierDegree(u32),
    #[error("template has {got} multipliers, set has {expected} constraints")]
    TemplateMismatch { got: usize, expected: usize },
    #[error("variable count mismatch: {0} vs {1}")]
    NvarsMismatch(usize, usize),
    #[error("solver returned {0:?}")]
    Solver(SolveStatus),
    #[error("region is not inside the domain")]
    RegionOutsideDomain,
    #[error("no boundary fit for facet {0}")]
    MissingBoundaryFit(Facet),
    #[error(transparent)]
    Hjb(#[from] HjbError),
}

/// `{x : g_i(x) ≥ 0, h_j(x) = 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SemialgebraicSet {
    nvars: usize,
    pub inequalities: Vec<Polynomial>,
    pub equalities: Vec<Polynomial>,
}

impl SemialgebraicSet {
    pub fn new(nvars: usize, inequalities: Vec<Polynomial>, equalities: Vec<Polynomial>) -> Result<Self, SosError> {
        for p in inequalities.iter().chain(&equalities) {
            if p.nvars() != nvars {
                return Err(SosError::NvarsMismatch(p.nvars(), nvars));
            }
        }
        Ok(SemialgebraicSet {
            nvars,
            inequalities,
            equalities,
        })
    }

    pub fn whole_space(nvars: usize) -> Self {
        SemialgebraicSet {
            nvars,
            inequalities: Vec::new(),
            equalities: Vec::new(),
        }
    }

    /// `(u_i − x_i) ≥ 0`, `(x_i − l_i) ≥ 0` for each axis.
    pub fn from_box(b: &BoxRegion) -> Self {
        let n = b.dim();
        let mut ineq = Vec::with_capacity(2 * n);
        for i in 0..n {
            let x = Polynomial::var(n, i);
            ineq.push(&Polynomial::constant(n, b.upper[i]) - &x);
            ineq.push(&x - &Polynomial::constant(n, b.lower[i]));
        }
        SemialgebraicSet::whole_space(n).with_inequalities(ineq)
    }

    /// `[-1, 1]^n` as `(1 − ξ_i) ≥ 0`, `(ξ_i + 1) ≥ 0`.
    pub fn unit_box(n: usize) -> Self {
        SemialgebraicSet::from_box(&BoxRegion::unit(n))
    }

    fn with_inequalities(mut self, ineq: Vec<Polynomial>) -> Self {
        self.inequalities = ineq;
        self
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.inequalities.iter().all(|g| g.eval(x) >= -tol)
            && self.equalities.iter().all(|h| h.eval(x).abs() <= tol)
    }
}

/// Degrees of the certificate multipliers. `None` drops a multiplier
/// (its product would exceed the certificate degree).
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateTemplate {
    pub s0_degree: u32,
    pub sos_multiplier_degrees: Vec<Option<u32>>,
    pub free_multiplier_degrees: Vec<Option<u32>>,
}

impl CertificateTemplate {
    /// Certificate of total degree `degree`: `s₀` of degree `2⌈D/2⌉`,
    /// `deg s_i` the even floor of `D − deg g_i`, `deg t_j = D − deg h_j`.
    pub fn default_for(set: &SemialgebraicSet, degree: u32) -> Self {
        let d = degree + degree % 2;
        let sos = set
            .inequalities
            .iter()
            .map(|g| d.checked_sub(g.degree()).map(|k| k - k % 2))
            .collect();
        let free = set.equalities.iter().map(|h| d.checked_sub(h.degree())).collect();
        CertificateTemplate {
            s0_degree: d,
            sos_multiplier_degrees: sos,
            free_multiplier_degrees: free,
        }
    }

    fn validate(&self, set: &SemialgebraicSet, target_degree: u32) -> Result<(), SosError> {
        let required = target_degree + target_degree % 2;
        if self.s0_degree < required {
            return Err(SosError::DegreeTooSmall {
                given: self.s0_degree,
                required,
            });
        }
        if self.s0_degree % 2 == 1 {
            return Err(SosError::OddMultiplierDegree(self.s0_degree));
        }
        if self.sos_multiplier_degrees.len() != set.inequalities.len() {
            return Err(SosError::TemplateMismatch {
                got: self.sos_multiplier_degrees.len(),
                expected: set.inequalities.len(),
            });
        }
        if self.free_multiplier_degrees.len() != set.equalities.len() {
            return Err(SosError::TemplateMismatch {
                got: self.free_multiplier_degrees.len(),
                expected: set.equalities.len(),
            });
        }
        if let Some(d) = self.sos_multiplier_degrees.iter().flatten().find(|d| *d % 2 == 1) {
            return Err(SosError::OddMultiplierDegree(*d));
        }
        Ok(())
    }
}

/// Incrementally assembled [`ConicProgram`].
#[derive(Debug, Clone, Default)]
pub struct ProgramBuilder {
    cones: Vec<Cone>,
    labels: Vec<String>,
    ncols: usize,
    rows: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    objective: BTreeMap<usize, f64>,
}

impl ProgramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn push_block(&mut self, cone: Cone, label: impl Into<String>) -> usize {
        let off = self.ncols;
        self.ncols += cone.dim();
        self.cones.push(cone);
        self.labels.push(label.into());
        off
    }

    /// Returns the first column of the new block.
    pub fn add_free(&mut self, dim: usize, label: impl Into<String>) -> usize {
        self.push_block(Cone::Free(dim), label)
    }

    pub fn add_nonneg(&mut self, dim: usize, label: impl Into<String>) -> usize {
        self.push_block(Cone::Nonneg(dim), label)
    }

    pub fn add_psd(&mut self, side: usize, label: impl Into<String>) -> usize {
        self.push_block(Cone::Psd(side), label)
    }

    /// `Σ coeff·z[col] = rhs`.
    pub fn add_row(&mut self, entries: Vec<(usize, f64)>, rhs: f64) {
        self.rows.push(entries);
        self.rhs.push(rhs);
    }

    /// `expr = 0`.
    pub fn add_zero_row(&mut self, expr: &LinExpr) {
        self.add_row(expr.terms.iter().map(|(&c, &v)| (c, v)).collect(), -expr.constant);
    }

    pub fn set_objective(&mut self, col: usize, value: f64) {
        self.objective.insert(col, value);
    }

    pub fn num_cols(&self) -> usize {
        self.ncols
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn build(&self) -> ConicProgram {
        let mut a = SparseMatrix::new(self.ncols);
        for row in &self.rows {
            a.push_row(row.iter().copied());
        }
        let mut c = vec![0.0; self.ncols];
        for (&k, &v) in &self.objective {
            c[k] = v;
        }
        ConicProgram::new(c, a, self.rhs.clone(), self.cones.clone(), self.labels.clone())
            .expect("builder keeps dimensions consistent")
    }
}

/// Gram parameterization of degree-`degree` polynomials in `nvars` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMap {
    pub basis: Vec<MultiIndex>,
    /// For each svec position, the monomial `b_i b_j` it contributes to and
    /// the weight (1 on the diagonal, √2 off it).
    pub entries: Vec<(MultiIndex, f64)>,
}

impl GramMap {
    pub fn side(&self) -> usize {
        self.basis.len()
    }

    /// Coefficients of `mᵀ Q m` from `svec(Q)`.
    pub fn apply(&self, sv: &[f64]) -> Polynomial {
        let nvars = self.basis.first().map_or(0, MultiIndex::nvars);
        Polynomial::from_terms(nvars, self.entries.iter().zip(sv).map(|((m, w), v)| (m.clone(), w * v)))
    }
}

/// Basis `monomial_basis(nvars, degree / 2)` and the linear map from
/// `svec(Q)` to the coefficients of `mᵀ Q m`.
pub fn gram_parameterize(degree: u32, nvars: usize) -> Result<GramMap, SosError> {
    if degree % 2 == 1 {
        return Err(SosError::OddDegree(degree));
    }
    let basis = monomial_basis(nvars, degree / 2);
    let side = basis.len();
    let mut entries = vec![(MultiIndex::zero(nvars), 0.0); svec_len(side)];
    for j in 0..side {
        for i in j..side {
            let w = if i == j { 1.0 } else { SQRT2 };
            entries[svec_index(side, i, j)] = (basis[i].product(&basis[j]), w);
        }
    }
    Ok(GramMap { basis, entries })
}

/// Columns of one multiplier in a compiled certificate.
#[derive(Debug, Clone, PartialEq)]
pub enum MultiplierBlock {
    Sos { offset: usize, gram: GramMap },
    Free { offset: usize, basis: Vec<MultiIndex> },
}

impl MultiplierBlock {
    /// The multiplier polynomial at primal point `z`.
    pub fn polynomial(&self, z: &[f64], nvars: usize) -> Polynomial {
        match self {
            MultiplierBlock::Sos { offset, gram } => gram.apply(&z[*offset..*offset + gram.entries.len()]),
            MultiplierBlock::Free { offset, basis } => {
                Polynomial::from_terms(nvars, basis.iter().cloned().zip(z[*offset..].iter().copied()))
            }
        }
    }
}

/// Multiplier blocks of one compiled certificate, in set order.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateBlocks {
    pub s0: MultiplierBlock,
    pub inequality_multipliers: Vec<Option<MultiplierBlock>>,
    pub equality_multipliers: Vec<Option<MultiplierBlock>>,
    /// Rows `[first, last)` holding the coefficient matching equalities.
    pub rows: (usize, usize),
}

fn add_times(acc: &mut BTreeMap<MultiIndex, LinExpr>, m: &MultiIndex, g: &Polynomial, col: usize, w: f64) {
    for (gm, gc) in g.terms() {
        acc.entry(m.product(gm)).or_default().add_var(col, -w * gc);
    }
}

/// Appends Gram blocks and coefficient-matching rows certifying
/// `p(z) ≥ 0` on `set`.
pub fn compile_nonneg_on_set(
    builder: &mut ProgramBuilder,
    p: &AffinePoly,
    set: &SemialgebraicSet,
    cert: &CertificateTemplate,
    label: &str,
) -> Result<CertificateBlocks, SosError> {
    let n = set.nvars();
    if p.nvars() != n {
        return Err(SosError::NvarsMismatch(p.nvars(), n));
    }
    cert.validate(set, p.degree())?;
    let mut acc: BTreeMap<MultiIndex, LinExpr> = p.terms().map(|(m, e)| (m.clone(), e.clone())).collect();
    let one = Polynomial::constant(n, 1.0);

    let sos_block = |builder: &mut ProgramBuilder, acc: &mut BTreeMap<MultiIndex, LinExpr>, deg: u32, g: &Polynomial, name: String| {
        let gram = gram_parameterize(deg, n).expect("even degree validated");
        let off = builder.add_psd(gram.side(), name);
        for (k, (m, w)) in gram.entries.iter().enumerate() {
            add_times(acc, m, g, off + k, *w);
        }
        MultiplierBlock::Sos { offset: off, gram }
    };

    // The top form of s₀ can only cancel against terms of equal degree.
    let reach = cert
        .sos_multiplier_degrees
        .iter()
        .zip(&set.inequalities)
        .chain(cert.free_multiplier_degrees.iter().zip(&set.equalities))
        .filter_map(|(d, g)| d.map(|d| d + g.degree()))
        .fold(p.degree(), u32::max);
    let s0_degree = cert.s0_degree.min(reach - reach % 2);
    let s0 = sos_block(builder, &mut acc, s0_degree, &one, format!("{label} s0"));
    let mut ineq = Vec::with_capacity(set.inequalities.len());
    for (i, (g, deg)) in set.inequalities.iter().zip(&cert.sos_multiplier_degrees).enumerate() {
        ineq.push(deg.map(|d| sos_block(builder, &mut acc, d, g, format!("{label} s{}", i + 1))));
    }
    let mut eq = Vec::with_capacity(set.equalities.len());
    for (j, (h, deg)) in set.equalities.iter().zip(&cert.free_multiplier_degrees).enumerate() {
        eq.push(deg.map(|d| {
            let basis = monomial_basis(n, d);
            let off = builder.add_free(basis.len(), format!("{label} t{}", j + 1));
            for (k, m) in basis.iter().enumerate() {
                add_times(&mut acc, m, h, off + k, 1.0);
            }
            MultiplierBlock::Free { offset: off, basis }
        }));
    }
    let first = builder.num_rows();
    for expr in acc.values() {
        if !expr.terms.is_empty() || expr.constant != 0.0 {
            builder.add_zero_row(expr);
        }
    }
    Ok(CertificateBlocks {
        s0,
        inequality_multipliers: ineq,
        equality_multipliers: eq,
        rows: (first, builder.num_rows()),
    })
}

/// Outcome of [`check_sos`].
#[derive(Debug, Clone, PartialEq)]
pub enum SosCheck {
    Sos { gram: DMatrix<f64>, basis: Vec<MultiIndex> },
    /// Farkas certificate for the coefficient-matching rows.
    NotSos { certificate: Vec<f64> },
}

/// Searches for a PSD Gram matrix of `p`.
pub fn check_sos(p: &Polynomial, tol: f64, opts: &SolverOptions) -> Result<SosCheck, SosError> {
    let deg = p.degree();
    if deg % 2 == 1 {
        return Err(SosError::OddDegree(deg));
    }
    let n = p.nvars();
    let set = SemialgebraicSet::whole_space(n);
    let cert = CertificateTemplate::default_for(&set, deg);
    let mut b = ProgramBuilder::new();
    let blocks = compile_nonneg_on_set(&mut b, &AffinePoly::from_polynomial(p), &set, &cert, "gram")?;
    let prog = b.build();
    let sol = conic::solve(&prog, opts);
    match sol.status {
        SolveStatus::Optimal => {
            let MultiplierBlock::Sos { gram, .. } = &blocks.s0 else {
                unreachable!("s0 is an SOS block")
            };
            let recovered = gram.apply(&sol.primal);
            let err = recovered.max_coeff_diff(p);
            if err > tol {
                log::warn!("Gram recovery error {err:.3e} exceeds tolerance {tol:.3e}");
                return Err(SosError::Solver(SolveStatus::NumericalFailure));
            }
            Ok(SosCheck::Sos {
                gram: smat(&sol.primal, gram.side()),
                basis: gram.basis.clone(),
            })
        }
        SolveStatus::Infeasible => Ok(SosCheck::NotSos {
            certificate: sol.dual_eq,
        }),
        s => Err(SosError::Solver(s)),
    }
}

/// Certifies `p ≥ 0` on a box by a Putinar certificate in local
/// coordinates. Returns the solver status of the feasibility problem.
pub fn certify_nonneg_on_box(p: &Polynomial, region: &BoxRegion, opts: &SolverOptions) -> Result<bool, SosError> {
    let n = region.dim();
    if p.nvars() != n {
        return Err(SosError::NvarsMismatch(p.nvars(), n));
    }
    let local = region.poly_to_local(p);
    let set = SemialgebraicSet::unit_box(n);
    // one degree above p so the linear facet constraints get quadratic multipliers
    let cert = CertificateTemplate::default_for(&set, local.degree().max(2) + 1);
    let mut b = ProgramBuilder::new();
    compile_nonneg_on_set(&mut b, &AffinePoly::from_polynomial(&local), &set, &cert, "q")?;
    let sol = conic::solve(&b.build(), opts);
    match sol.status {
        SolveStatus::Optimal => Ok(true),
        SolveStatus::Infeasible => Ok(false),
        s => Err(SosError::Solver(s)),
    }
}

/// Which side of the exact desirability the polynomial should bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Upper,
    Lower,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Upper => 1.0,
            Direction::Lower => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Upper => "upper",
            Direction::Lower => "lower",
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "upper" => Ok(Direction::Upper),
            "lower" => Ok(Direction::Lower),
            other => Err(format!("unknown direction `{other}`")),
        }
    }
}

/// Settings for [`assemble_region_subproblem`].
#[derive(Debug, Clone, PartialEq)]
pub struct RegionOptions {
    /// Degree of Ψ; must be even.
    pub degree: u32,
    /// Lower bound on each certificate's degree. Without it, one more than
    /// the certified polynomial's degree is used, so that multipliers of the
    /// linear box constraints reach its leading terms.
    pub cert_degree: Option<u32>,
    pub direction: Direction,
    pub eps_floor: f64,
}

impl RegionOptions {
    pub fn new(degree: u32, direction: Direction) -> Self {
        RegionOptions {
            degree,
            cert_degree: None,
            direction,
            eps_floor: crate::hjb::EPS_FLOOR,
        }
    }
}

/// One region's compiled program, in the region's local coordinates
/// `ξ = (x − center) / half_width ∈ [-1, 1]^n`.
#[derive(Debug, Clone)]
pub struct RegionSubproblem {
    pub region_id: usize,
    pub region: BoxRegion,
    pub program: ConicProgram,
    /// Column of each local Ψ coefficient.
    pub psi_coeff_index: BTreeMap<MultiIndex, usize>,
    pub gamma_index: usize,
    pub direction: Direction,
    pub degree: u32,
}

impl RegionSubproblem {
    /// Ψ in local coordinates at primal point `z`.
    pub fn local_psi(&self, z: &[f64]) -> Polynomial {
        let n = self.region.dim();
        Polynomial::from_terms(n, self.psi_coeff_index.iter().map(|(m, &c)| (m.clone(), z[c])))
    }

    /// Ψ in the problem's coordinates at primal point `z`.
    pub fn global_psi(&self, z: &[f64]) -> Polynomial {
        self.region.poly_to_global(&self.local_psi(z))
    }
}

/// Compiles program (a)–(d) for one region: minimize `γ` subject to
/// `r ≥ 0`, `γ − r ≥ 0` on the region, `Ψ − ψ ≥ 0`, `γ − (Ψ − ψ) ≥ 0` on
/// the region's facets lying on the domain boundary (signs flipped for
/// [`Direction::Lower`]), and `Ψ − ε_floor ≥ 0` on the region, where `r`
/// is the HJB residual. `boundary` holds the fitted boundary data per
/// domain facet; its fit error is added in the conservative direction.
pub fn assemble_region_subproblem(
    region_id: usize,
    problem: &ControlProblem,
    region: &BoxRegion,
    sigma: &NoiseStructure,
    boundary: &BTreeMap<Facet, BoundaryFit>,
    opts: &RegionOptions,
) -> Result<RegionSubproblem, SosError> {
    let n = problem.nvars();
    if opts.degree % 2 == 1 {
        return Err(SosError::OddDegree(opts.degree));
    }
    if region.dim() != n
        || !problem.domain.contains(&region.lower, 1e-12)
        || !problem.domain.contains(&region.upper, 1e-12)
    {
        return Err(SosError::RegionOutsideDomain);
    }
    let sigma = sigma.constant()?;
    let h = region.half_widths();
    let drift: Vec<Polynomial> = (0..n)
        .map(|a| region.poly_to_local(problem.drift.get(a, 0)).scale(1.0 / h[a]))
        .collect();
    let sig = DMatrix::from_fn(n, n, |a, b| sigma[(a, b)] / (h[a] * h[b]));
    let q = region.poly_to_local(&problem.state_cost);

    let mut b = ProgramBuilder::new();
    let basis = monomial_basis(n, opts.degree);
    let psi_off = b.add_free(basis.len(), "psi");
    let gamma = b.add_free(1, "gamma");
    b.set_objective(gamma, 1.0);
    let monomials: Vec<Polynomial> = basis.iter().map(|m| Polynomial::monomial(m.clone(), 1.0)).collect();
    let psi = AffinePoly::from_columns(n, monomials.iter().enumerate().map(|(k, p)| (psi_off + k, p)));
    let gamma_poly = |nv: usize| AffinePoly::scalar_var(nv, gamma);
    let s = opts.direction.sign();

    let cert_for = |set: &SemialgebraicSet, p: &AffinePoly| {
        let d = opts.cert_degree.unwrap_or(0).max(p.degree() + 1);
        CertificateTemplate::default_for(set, d)
    };
    let nonneg = |b: &mut ProgramBuilder, p: &AffinePoly, set: &SemialgebraicSet, label: &str| {
        compile_nonneg_on_set(b, p, set, &cert_for(set, p), label).map(|_| ())
    };

    let region_set = SemialgebraicSet::unit_box(n);
    let residual = hjb_residual_affine(&psi, &drift, &q, &sig, problem.lambda).scale(s);
    nonneg(&mut b, &residual, &region_set, "residual")?;
    nonneg(&mut b, &gamma_poly(n).sub(&residual), &region_set, "residual slack")?;

    for facet in region.facets() {
        let value = region.facet_value(facet);
        if (value - problem.domain.facet_value(facet)).abs() > 1e-12 {
            continue;
        }
        let fit = boundary.get(&facet).ok_or(SosError::MissingBoundaryFit(facet))?;
        let fbox = region.facet_box(facet);
        let target = fbox.poly_to_local(&fit.fit).try_add(&Polynomial::constant(n - 1, s * fit.max_error)).expect("same nvars");
        let xi = if facet.upper { 1.0 } else { -1.0 };
        let on_facet = psi.restrict(facet.axis, xi).add_polynomial(&target, -1.0).scale(s);
        let fset = SemialgebraicSet::unit_box(n - 1);
        let name = facet.name(&problem.variables);
        nonneg(&mut b, &on_facet, &fset, &format!("boundary {name}"))?;
        nonneg(&mut b, &gamma_poly(n - 1).sub(&on_facet), &fset, &format!("boundary slack {name}"))?;
    }

    let positive = psi.add_polynomial(&Polynomial::constant(n, opts.eps_floor), -1.0);
    nonneg(&mut b, &positive, &region_set, "positivity")?;

    let psi_coeff_index = basis.into_iter().enumerate().map(|(k, m)| (m, psi_off + k)).collect();
    Ok(RegionSubproblem {
        region_id,
        region: region.clone(),
        program: b.build(),
        psi_coeff_index,
        gamma_index: gamma,
        direction: opts.direction,
        degree: opts.degree,
    })
}


#[cfg(test)]
mod region_tests {
    use super::*;
    use crate::hjb::FIT_SAMPLES;
    use crate::polynomial::PolyMatrix;

    pub(crate) fn trivial_problem(n: usize) -> ControlProblem {
        let dom = BoxRegion::unit(n);
        let bc = dom.facets().into_iter().map(|f| (f, Polynomial::zero(n))).collect();
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
    fn trivial_region_is_exact() {
        for n in [1, 2] {
            for dir in [Direction::Upper, Direction::Lower] {
                let p = trivial_problem(n);
                let sigma = crate::hjb::check_noise_assumption(&p).unwrap();
                let fits = p
                    .domain
                    .facets()
                    .into_iter()
                    .map(|f| (f, crate::hjb::fit_boundary_data(&p.boundary_costs[&f], 1.0, &p.domain, f, 2, FIT_SAMPLES).unwrap()))
                    .collect();
                let sub = assemble_region_subproblem(0, &p, &p.domain, &sigma, &fits, &RegionOptions::new(2, dir)).unwrap();
                let sol = conic::solve(&sub.program, &SolverOptions::default());
                assert_eq!(sol.status, SolveStatus::Optimal, "n={n} {dir:?}");
                assert!(sol.primal[sub.gamma_index].abs() < 1e-6);
                let psi = sub.global_psi(&sol.primal);
                assert!(psi.max_coeff_diff(&Polynomial::constant(n, 1.0)) < 1e-5, "{psi:?}");
            }
        }
    }
}
