//! Linearly-solvable first-exit control problems.
//!
//! With dynamics `dx = (f + G u) dt + B dω`, running cost `q(x) + ½uᵀRu`
//! and terminal cost `φ` on the exit facet, the substitution
//! `Ψ = exp(−V/λ)` turns the HJB equation into the linear PDE
//!
//! ```text
//! (1/λ) q Ψ = L(Ψ) = fᵀ∇Ψ + ½ Tr(∇²Ψ Σ_t),   Ψ = exp(−φ/λ) on ∂S
//! ```
//!
//! provided `λ G R⁻¹ Gᵀ = B Σ_ε Bᵀ = Σ_t`.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::polynomial::{monomial_basis, AffinePoly, PolyMatrix, Polynomial};

/// Desirability values at or below this are treated as non-positive.
pub const EPS_FLOOR: f64 = 1e-6;

/// Coefficient tolerance of the noise-assumption check.
pub const NOISE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HjbError {
    #[error("noise assumption violated: max coefficient discrepancy {0:.3e}")]
    NoiseAssumptionViolated(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("lambda must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("control penalty R is not positive definite")]
    ControlPenaltyNotPd,
    #[error("noise covariance is not positive semidefinite (min eigenvalue {0:.3e})")]
    NoiseCovarianceNotPsd(f64),
    #[error("{0} is not symmetric")]
    NotSymmetric(&'static str),
    #[error("empty box: lower {lower} >= upper {upper} on axis {axis}")]
    EmptyBox { axis: usize, lower: f64, upper: f64 },
    #[error("no terminal cost for facet {0}")]
    MissingBoundaryCost(String),
    #[error("desirability {0:.3e} is not above the positivity floor")]
    NonPositiveDesirability(f64),
    #[error("state-dependent noise is not supported by the compiler")]
    StateDependentNoise,
    #[error("boundary fit failed at every degree down to 0")]
    FitFailed,
}

/// Axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxRegion {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, HjbError> {
        if lower.len() != upper.len() {
            return Err(HjbError::Dimension(format!(
                "box bounds have lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (axis, (&l, &u)) in lower.iter().zip(&upper).enumerate() {
            if !(l < u) {
                return Err(HjbError::EmptyBox {
                    axis,
                    lower: l,
                    upper: u,
                });
            }
        }
        Ok(BoxRegion { lower, upper })
    }

    /// `[-1, 1]^n`.
    pub fn unit(n: usize) -> Self {
        BoxRegion {
            lower: vec![-1.0; n],
            upper: vec![1.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect()
    }

    pub fn half_widths(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (u - l))
            .collect()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol)
    }

    pub fn facets(&self) -> Vec<Facet> {
        (0..self.dim())
            .flat_map(|axis| [Facet { axis, upper: false }, Facet { axis, upper: true }])
            .collect()
    }

    /// Coordinate of the hyperplane carrying `facet`.
    pub fn facet_value(&self, facet: Facet) -> f64 {
        if facet.upper {
            self.upper[facet.axis]
        } else {
            self.lower[facet.axis]
        }
    }

    /// The facet as a box in the remaining `n - 1` coordinates.
    pub fn facet_box(&self, facet: Facet) -> BoxRegion {
        let mut lower = self.lower.clone();
        let mut upper = self.upper.clone();
        lower.remove(facet.axis);
        upper.remove(facet.axis);
        BoxRegion { lower, upper }
    }

    /// Global point of local coordinates `ξ ∈ [-1, 1]^n`.
    pub fn to_global(&self, xi: &[f64]) -> Vec<f64> {
        let c = self.center();
        let h = self.half_widths();
        xi.iter().zip(c.iter().zip(&h)).map(|(x, (c, h))| c + h * x).collect()
    }

    pub fn to_local(&self, x: &[f64]) -> Vec<f64> {
        let c = self.center();
        let h = self.half_widths();
        x.iter().zip(c.iter().zip(&h)).map(|(x, (c, h))| (x - c) / h).collect()
    }

    /// `p(x)` rewritten in local coordinates: `p(c + h ξ)`.
    pub fn poly_to_local(&self, p: &Polynomial) -> Polynomial {
        p.affine_substitute(&self.center(), &self.half_widths())
    }

    /// Inverse of [`BoxRegion::poly_to_local`].
    pub fn poly_to_global(&self, p: &Polynomial) -> Polynomial {
        let c = self.center();
        let h = self.half_widths();
        let offset: Vec<f64> = c.iter().zip(&h).map(|(c, h)| -c / h).collect();
        let scale: Vec<f64> = h.iter().map(|h| 1.0 / h).collect();
        p.affine_substitute(&offset, &scale)
    }

    /// Uniform tensor grid with `per_axis` points per axis (endpoints included).
    pub fn grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut out = vec![Vec::with_capacity(n)];
        for a in 0..n {
            let mut next = Vec::with_capacity(out.len() * per_axis);
            for p in &out {
                for k in 0..per_axis {
                    let t = if per_axis == 1 {
                        0.5
                    } else {
                        k as f64 / (per_axis - 1) as f64
                    };
                    let mut q = p.clone();
                    q.push(self.lower[a] + t * (self.upper[a] - self.lower[a]));
                    next.push(q);
                }
            }
            out = next;
        }
        out
    }
}

/// One face of a box: `x_axis = lower` or `x_axis = upper`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Facet {
    pub axis: usize,
    pub upper: bool,
}

impl Facet {
    /// `"x-"` / `"x+"` style name.
    pub fn name(&self, vars: &[String]) -> String {
        format!("{}{}", vars[self.axis], if self.upper { '+' } else { '-' })
    }

    pub fn parse(name: &str, vars: &[String]) -> Option<Facet> {
        let (var, sign) = name.split_at(name.len().checked_sub(1)?);
        let upper = match sign {
            "+" => true,
            "-" => false,
            _ => return None,
        };
        let axis = vars.iter().position(|v| v == var)?;
        Some(Facet { axis, upper })
    }
}

impl fmt::Display for Facet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}{}", self.axis + 1, if self.upper { '+' } else { '-' })
    }
}

/// A first-exit control problem on a box.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlProblem {
    pub variables: Vec<String>,
    /// `n x 1`.
    pub drift: PolyMatrix,
    /// `n x m`.
    pub input: PolyMatrix,
    /// `n x k`.
    pub noise: PolyMatrix,
    pub control_penalty: DMatrix<f64>,
    pub noise_covariance: DMatrix<f64>,
    pub lambda: f64,
    pub state_cost: Polynomial,
    pub domain: BoxRegion,
    /// Terminal cost `φ` per facet, as polynomials in all `n` variables.
    pub boundary_costs: BTreeMap<Facet, Polynomial>,
}

fn check_symmetric(m: &DMatrix<f64>, what: &'static str) -> Result<(), HjbError> {
    if !m.is_square() || (m - m.transpose()).amax() > 1e-12 * m.amax().max(1.0) {
        return Err(HjbError::NotSymmetric(what));
    }
    Ok(())
}

impl ControlProblem {
    /// Validates dimensions and the structural invariants. Nonnegativity of
    /// `q` is checked separately by [`crate::soscert::certify_nonneg_on_box`].
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        variables: Vec<String>,
        drift: PolyMatrix,
        input: PolyMatrix,
        noise: PolyMatrix,
        control_penalty: DMatrix<f64>,
        noise_covariance: DMatrix<f64>,
        lambda: f64,
        state_cost: Polynomial,
        domain: BoxRegion,
        boundary_costs: BTreeMap<Facet, Polynomial>,
    ) -> Result<Self, HjbError> {
        let n = variables.len();
        let dim = |msg: String| Err(HjbError::Dimension(msg));
        if drift.rows() != n || drift.cols() != 1 {
            return dim(format!("drift is {}x{}, expected {n}x1", drift.rows(), drift.cols()));
        }
        if input.rows() != n {
            return dim(format!("input matrix has {} rows, expected {n}", input.rows()));
        }
        if noise.rows() != n {
            return dim(format!("noise matrix has {} rows, expected {n}", noise.rows()));
        }
        for (what, m) in [("drift", &drift), ("input matrix", &input), ("noise matrix", &noise)] {
            if m.nvars() != n && !m.entries().is_empty() {
                return dim(format!("{what} uses {} variables, expected {n}", m.nvars()));
            }
        }
        if state_cost.nvars() != n {
            return dim(format!("state cost uses {} variables, expected {n}", state_cost.nvars()));
        }
        if domain.dim() != n {
            return dim(format!("domain has dimension {}, expected {n}", domain.dim()));
        }
        if control_penalty.nrows() != input.cols() {
            return dim(format!(
                "R is {}x{}, input has {} columns",
                control_penalty.nrows(),
                control_penalty.ncols(),
                input.cols()
            ));
        }
        if noise_covariance.nrows() != noise.cols() {
            return dim(format!(
                "noise covariance is {}x{}, noise matrix has {} columns",
                noise_covariance.nrows(),
                noise_covariance.ncols(),
                noise.cols()
            ));
        }
        if !(lambda > 0.0) {
            return Err(HjbError::NonPositiveLambda(lambda));
        }
        check_symmetric(&control_penalty, "R")?;
        check_symmetric(&noise_covariance, "noise covariance")?;
        if control_penalty.clone().cholesky().is_none() {
            return Err(HjbError::ControlPenaltyNotPd);
        }
        if noise_covariance.nrows() > 0 {
            let mn = SymmetricEigen::new(noise_covariance.clone()).eigenvalues.min();
            if mn < -1e-12 {
                return Err(HjbError::NoiseCovarianceNotPsd(mn));
            }
        }
        for facet in domain.facets() {
            match boundary_costs.get(&facet) {
                Some(p) if p.nvars() == n => {}
                Some(p) => {
                    return dim(format!(
                        "terminal cost on {} uses {} variables",
                        facet.name(&variables),
                        p.nvars()
                    ))
                }
                None => return Err(HjbError::MissingBoundaryCost(facet.name(&variables))),
            }
        }
        Ok(ControlProblem {
            variables,
            drift,
            input,
            noise,
            control_penalty,
            noise_covariance,
            lambda,
            state_cost,
            domain,
            boundary_costs,
        })
    }

    pub fn nvars(&self) -> usize {
        self.variables.len()
    }

    pub fn var_names(&self) -> Vec<&str> {
        self.variables.iter().map(String::as_str).collect()
    }

    /// `λ R⁻¹ Gᵀ` as a polynomial matrix (`m x n`).
    pub fn policy_gain(&self) -> PolyMatrix {
        let rinv = self
            .control_penalty
            .clone()
            .try_inverse()
            .expect("R validated positive definite");
        let m = rinv.nrows();
        let vals: Vec<f64> = (0..m)
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .map(|(i, j)| rinv[(i, j)] * self.lambda)
            .collect();
        let rin = PolyMatrix::from_constants(self.nvars(), m, m, &vals);
        rin.matmul(&self.input.transpose()).expect("same nvars")
    }
}

/// `Σ_t` from the noise assumption.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseStructure {
    Constant(DMatrix<f64>),
    StateDependent(PolyMatrix),
}

impl NoiseStructure {
    pub fn constant(&self) -> Result<&DMatrix<f64>, HjbError> {
        match self {
            NoiseStructure::Constant(m) => Ok(m),
            NoiseStructure::StateDependent(_) => Err(HjbError::StateDependentNoise),
        }
    }

    fn entry(&self, nvars: usize, i: usize, j: usize) -> Polynomial {
        match self {
            NoiseStructure::Constant(m) => Polynomial::constant(nvars, m[(i, j)]),
            NoiseStructure::StateDependent(p) => p.get(i, j).clone(),
        }
    }

    fn dim(&self) -> usize {
        match self {
            NoiseStructure::Constant(m) => m.nrows(),
            NoiseStructure::StateDependent(p) => p.rows(),
        }
    }
}

fn const_matrix(nvars: usize, m: &DMatrix<f64>) -> PolyMatrix {
    let vals: Vec<f64> = (0..m.nrows())
        .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
        .map(|(i, j)| m[(i, j)])
        .collect();
    PolyMatrix::from_constants(nvars, m.nrows(), m.ncols(), &vals)
}

/// Checks `λ G R⁻¹ Gᵀ = B Σ_ε Bᵀ` coefficientwise and returns `Σ_t`.
pub fn check_noise_assumption(problem: &ControlProblem) -> Result<NoiseStructure, HjbError> {
    let n = problem.nvars();
    let rinv = problem
        .control_penalty
        .clone()
        .try_inverse()
        .ok_or(HjbError::ControlPenaltyNotPd)?;
    let g = &problem.input;
    let lhs = g
        .matmul(&const_matrix(n, &rinv))
        .and_then(|m| m.matmul(&g.transpose()))
        .map_err(|e| HjbError::Dimension(e.to_string()))?
        .scale(problem.lambda);
    let b = &problem.noise;
    let rhs = b
        .matmul(&const_matrix(n, &problem.noise_covariance))
        .and_then(|m| m.matmul(&b.transpose()))
        .map_err(|e| HjbError::Dimension(e.to_string()))?;
    let disc = lhs.max_coeff_diff(&rhs);
    if disc > NOISE_TOL {
        return Err(HjbError::NoiseAssumptionViolated(disc));
    }
    if rhs.is_constant() {
        let vals = rhs.constant_values();
        Ok(NoiseStructure::Constant(DMatrix::from_row_slice(n, n, &vals)))
    } else {
        Ok(NoiseStructure::StateDependent(rhs))
    }
}

/// `L(Ψ) = fᵀ∇Ψ + ½ Tr(∇²Ψ Σ_t)`.
pub fn generator(psi: &Polynomial, f: &PolyMatrix, sigma: &NoiseStructure) -> Result<Polynomial, HjbError> {
    let n = psi.nvars();
    if f.rows() != n || f.cols() != 1 || sigma.dim() != n {
        return Err(HjbError::Dimension(format!(
            "Ψ has {n} variables, drift is {}x{}, Σ_t is {}x{}",
            f.rows(),
            f.cols(),
            sigma.dim(),
            sigma.dim()
        )));
    }
    if f.nvars() != n {
        return Err(HjbError::Dimension(format!("drift uses {} variables, Ψ {n}", f.nvars())));
    }
    let mut out = Polynomial::zero(n);
    for a in 0..n {
        let da = psi.differentiate(a).expect("index in range");
        out = &out + &(f.get(a, 0) * &da);
        for b in 0..n {
            let s = sigma.entry(n, a, b);
            if s.is_zero() {
                continue;
            }
            let dab = da.differentiate(b).expect("index in range");
            out = &out + &(&dab * &s).scale(0.5);
        }
    }
    Ok(out)
}

/// `(1/λ) q Ψ − L(Ψ)`; nonnegative on the domain for a super-solution.
pub fn hjb_residual(psi: &Polynomial, problem: &ControlProblem, sigma: &NoiseStructure) -> Result<Polynomial, HjbError> {
    let l = generator(psi, &problem.drift, sigma)?;
    let qpsi = (&problem.state_cost * psi).scale(1.0 / problem.lambda);
    Ok(&qpsi - &l)
}

/// [`hjb_residual`] for a decision-dependent `Ψ`, with the drift, cost and
/// constant `Σ_t` already expressed in the same coordinates as `psi`.
pub fn hjb_residual_affine(
    psi: &AffinePoly,
    drift: &[Polynomial],
    state_cost: &Polynomial,
    sigma: &DMatrix<f64>,
    lambda: f64,
) -> AffinePoly {
    let n = psi.nvars();
    let mut out = psi.mul_polynomial(state_cost).scale(1.0 / lambda);
    for a in 0..n {
        let da = psi.differentiate(a);
        out = out.sub(&da.mul_polynomial(&drift[a]));
        for b in 0..n {
            let s = sigma[(a, b)];
            if s != 0.0 {
                out = out.sub(&da.differentiate(b).scale(0.5 * s));
            }
        }
    }
    out
}

/// Least-squares polynomial fit of `exp(−φ/λ)` on one facet.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFit {
    pub facet: Facet,
    /// In the facet's `n − 1` remaining variables, global coordinates.
    pub fit: Polynomial,
    /// Largest deviation from `exp(−φ/λ)` over the check grid.
    pub max_error: f64,
    pub degree: u32,
}

/// Default number of least-squares samples per facet dimension.
pub const FIT_SAMPLES: usize = 64;

/// Fits `exp(−φ/λ)` restricted to `facet` of `domain` by least squares on
/// a uniform grid of `samples` points per facet dimension. The error is
/// measured on a grid four times finer. Rank-deficient normal equations
/// drop the degree by one until the fit succeeds.
pub fn fit_boundary_data(
    phi: &Polynomial,
    lambda: f64,
    domain: &BoxRegion,
    facet: Facet,
    fit_degree: u32,
    samples: usize,
) -> Result<BoundaryFit, HjbError> {
    let n = domain.dim();
    if phi.nvars() != n {
        return Err(HjbError::Dimension(format!("φ uses {} variables, domain {n}", phi.nvars())));
    }
    let value = domain.facet_value(facet);
    let restricted = phi.restrict(facet.axis, value).expect("axis in range");
    let fbox = domain.facet_box(facet);
    let target = |p: &[f64]| (-restricted.eval(p) / lambda).exp();
    let pts = fbox.grid(samples.max(2));
    let local: Vec<Vec<f64>> = pts.iter().map(|p| fbox.to_local(p)).collect();
    let ys: Vec<f64> = pts.iter().map(|p| target(p)).collect();
    let check = fbox.grid((4 * samples).max(8));

    let mut deg = fit_degree;
    loop {
        let basis = monomial_basis(n - 1, deg);
        let k = basis.len();
        let mut ata = DMatrix::<f64>::zeros(k, k);
        let mut aty = DVector::<f64>::zeros(k);
        let mut row = vec![0.0; k];
        for (xi, &y) in local.iter().zip(&ys) {
            for (r, m) in row.iter_mut().zip(&basis) {
                *r = m.eval(xi);
            }
            for i in 0..k {
                aty[i] += row[i] * y;
                for j in 0..k {
                    ata[(i, j)] += row[i] * row[j];
                }
            }
        }
        let eig = SymmetricEigen::new(ata.clone());
        let (mn, mx) = (eig.eigenvalues.min(), eig.eigenvalues.max());
        let solved = if mn > 1e-12 * mx { ata.cholesky().map(|c| c.solve(&aty)) } else { None };
        match solved {
            Some(coef) => {
                let local_fit = Polynomial::from_terms(n - 1, basis.iter().cloned().zip(coef.iter().copied()));
                let fit = fbox.poly_to_global(&local_fit);
                let max_error = check
                    .iter()
                    .map(|p| (fit.eval(p) - target(p)).abs())
                    .fold(0.0, f64::max);
                return Ok(BoundaryFit {
                    facet,
                    fit,
                    max_error,
                    degree: deg,
                });
            }
            None if deg > 0 => {
                log::warn!("boundary fit on {facet}: rank-deficient at degree {deg}, retrying at {}", deg - 1);
                deg -= 1;
            }
            None => return Err(HjbError::FitFailed),
        }
    }
}

/// `V = −λ ln Ψ`.
pub fn desirability_to_value(psi: f64, lambda: f64) -> Result<f64, HjbError> {
    if !(psi > EPS_FLOOR) {
        return Err(HjbError::NonPositiveDesirability(psi));
    }
    Ok(-lambda * psi.ln())
}

/// `u* = λ R⁻¹ Gᵀ ∇Ψ / Ψ` at `x`.
pub fn extract_policy(psi: &Polynomial, problem: &ControlProblem, x: &[f64]) -> Result<Vec<f64>, HjbError> {
    let gain = problem.policy_gain();
    policy_from_gain(psi, &gain, x)
}

/// [`extract_policy`] with a precomputed gain `λ R⁻¹ Gᵀ`.
pub fn policy_from_gain(psi: &Polynomial, gain: &PolyMatrix, x: &[f64]) -> Result<Vec<f64>, HjbError> {
    let n = psi.nvars();
    if x.len() != n || gain.cols() != n {
        return Err(HjbError::Dimension(format!(
            "point has {} coordinates, Ψ {n} variables, gain {} columns",
            x.len(),
            gain.cols()
        )));
    }
    let v = psi.eval(x);
    if !(v > EPS_FLOOR) {
        return Err(HjbError::NonPositiveDesirability(v));
    }
    let grad: Vec<f64> = (0..n)
        .map(|a| psi.differentiate(a).expect("index in range").eval(x))
        .collect();
    Ok((0..gain.rows())
        .map(|i| (0..n).map(|a| gain.get(i, a).eval(x) * grad[a]).sum::<f64>() / v)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomial::parse;

    fn scalar_problem(r: f64) -> ControlProblem {
        let v = ["x"];
        let mut bc = BTreeMap::new();
        bc.insert(Facet { axis: 0, upper: false }, Polynomial::zero(1));
        bc.insert(Facet { axis: 0, upper: true }, Polynomial::zero(1));
        ControlProblem::new(
            vec!["x".into()],
            PolyMatrix::column(vec![parse("x^2", &v).unwrap()]).unwrap(),
            PolyMatrix::from_constants(1, 1, 1, &[1.0]),
            PolyMatrix::from_constants(1, 1, 1, &[1.0]),
            DMatrix::from_element(1, 1, r),
            DMatrix::from_element(1, 1, 1.0),
            1.0,
            Polynomial::constant(1, 1.0),
            BoxRegion::unit(1),
            bc,
        )
        .unwrap()
    }

    #[test]
    fn noise_assumption_examples() {
        let s = check_noise_assumption(&scalar_problem(1.0)).unwrap();
        assert_eq!(s, NoiseStructure::Constant(DMatrix::from_element(1, 1, 1.0)));
        assert!(matches!(
            check_noise_assumption(&scalar_problem(2.0)),
            Err(HjbError::NoiseAssumptionViolated(d)) if (d - 0.5).abs() < 1e-12
        ));
    }

    #[test]
    fn generator_examples() {
        let v = ["x"];
        let f = PolyMatrix::column(vec![parse("x^2", &v).unwrap()]).unwrap();
        let s = NoiseStructure::Constant(DMatrix::from_element(1, 1, 1.0));
        let l = generator(&parse("x^2", &v).unwrap(), &f, &s).unwrap();
        assert_eq!(l, parse("2*x^3 + 1", &v).unwrap());
        assert!(generator(&Polynomial::constant(1, 4.0), &f, &s).unwrap().is_zero());
        let p = scalar_problem(1.0);
        let r = hjb_residual(&parse("x^2", &v).unwrap(), &p, &s).unwrap();
        assert_eq!(r, parse("x^2 - 2*x^3 - 1", &v).unwrap());
        let r1 = hjb_residual(&Polynomial::constant(1, 1.0), &p, &s).unwrap();
        assert_eq!(r1, Polynomial::constant(1, 1.0));
    }

    #[test]
    fn constant_fits() {
        let d = BoxRegion::unit(2);
        let f = Facet { axis: 0, upper: true };
        let fit = fit_boundary_data(&Polynomial::zero(2), 1.0, &d, f, 4, FIT_SAMPLES).unwrap();
        assert!(fit.fit.max_coeff_diff(&Polynomial::constant(1, 1.0)) < 1e-12);
        assert!(fit.max_error < 1e-12);
        let fit = fit_boundary_data(&Polynomial::constant(2, 1.0), 1.0, &d, f, 4, FIT_SAMPLES).unwrap();
        assert!((fit.fit.coeff(&crate::polynomial::MultiIndex::zero(1)) - (-1.0f64).exp()).abs() < 1e-12);
        assert!(fit.max_error < 1e-12);
    }

    #[test]
    fn value_and_policy() {
        assert!(desirability_to_value(1.0, 1.0).unwrap().abs() < 1e-15);
        assert!(matches!(desirability_to_value(0.0, 1.0), Err(HjbError::NonPositiveDesirability(_))));
        let p = scalar_problem(1.0);
        assert_eq!(extract_policy(&Polynomial::constant(1, 3.0), &p, &[0.2]).unwrap(), vec![0.0]);
        // Ψ(0) = 2, Ψ'(0) = 1
        let psi = parse("2 + x + 0.25*x^2", &["x"]).unwrap();
        let u = extract_policy(&psi, &p, &[0.0]).unwrap();
        assert!((u[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn facet_names() {
        let vars = vec!["x".to_string(), "y".to_string()];
        let f = Facet::parse("y+", &vars).unwrap();
        assert_eq!(f, Facet { axis: 1, upper: true });
        assert_eq!(f.name(&vars), "y+");
        assert!(Facet::parse("z-", &vars).is_none());
        assert!(Facet::parse("x", &vars).is_none());
    }

    #[test]
    fn local_maps_invert() {
        let b = BoxRegion::new(vec![-1.0, 0.5], vec![0.0, 2.0]).unwrap();
        let p = parse("x^2*y - 3*y + 1", &["x", "y"]).unwrap();
        let back = b.poly_to_global(&b.poly_to_local(&p));
        assert!(back.max_coeff_diff(&p) < 1e-12);
        let x = [-0.3, 1.1];
        let xi = b.to_local(&x);
        assert!((b.poly_to_local(&p).eval(&xi) - p.eval(&x)).abs() < 1e-12);
    }
}
