//! Sparse multivariate polynomials over `f64`.
//!
//! Terms are stored in a map keyed by [`MultiIndex`], which orders monomials
//! graded-lexicographically: lower total degree first, and within one degree
//! the larger exponent of the earlier variable first (`1, x, y, x², xy, y²`).

mod affine;
mod parse;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

pub use affine::{AffinePoly, LinExpr};
pub use parse::{parse, ParseError, ParseErrorKind};

/// Coefficients with magnitude at or below this are dropped after arithmetic.
pub const DROP_TOL: f64 = 1e-12;

/// Errors raised by polynomial arithmetic.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolyError {
    #[error("variable count mismatch: {left} vs {right}")]
    NvarsMismatch { left: usize, right: usize },
    #[error("variable index {index} out of range for {nvars} variables")]
    IndexOutOfRange { index: usize, nvars: usize },
    #[error("point has {got} coordinates, polynomial has {nvars} variables")]
    PointLength { got: usize, nvars: usize },
}

/// Exponent vector of a monomial.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(nvars: usize) -> Self {
        MultiIndex(vec![0; nvars])
    }

    /// `x_var` as a multi-index.
    pub fn unit(nvars: usize, var: usize) -> Self {
        let mut e = vec![0; nvars];
        e[var] = 1;
        MultiIndex(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn get(&self, var: usize) -> u32 {
        self.0[var]
    }

    /// Exponent-wise sum (monomial product).
    pub fn product(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.0.len(), other.0.len());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Exponent-wise difference, `None` if `other` does not divide `self`.
    pub fn quotient(&self, other: &MultiIndex) -> Option<MultiIndex> {
        let mut out = Vec::with_capacity(self.0.len());
        for (a, b) in self.0.iter().zip(&other.0) {
            if b > a {
                return None;
            }
            out.push(a - b);
        }
        Some(MultiIndex(out))
    }

    /// Drops the exponent of `var`.
    pub fn remove(&self, var: usize) -> MultiIndex {
        let mut e = self.0.clone();
        e.remove(var);
        MultiIndex(e)
    }

    /// Inserts an exponent for a new variable at position `var`.
    pub fn insert(&self, var: usize, exp: u32) -> MultiIndex {
        let mut e = self.0.clone();
        e.insert(var, exp);
        MultiIndex(e)
    }

    pub fn with(&self, var: usize, exp: u32) -> MultiIndex {
        let mut e = self.0.clone();
        e[var] = exp;
        MultiIndex(e)
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(point)
            .map(|(&e, &x)| x.powi(e as i32))
            .product()
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All multi-indices in `nvars` variables of total degree at most `max_deg`,
/// in graded lexicographic order.
pub fn monomial_basis(nvars: usize, max_deg: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for deg in 0..=max_deg {
        let mut cur = vec![0u32; nvars];
        push_compositions(&mut out, &mut cur, 0, deg);
    }
    out
}

// Exponent tuples of one total degree, earliest variable taking the most first.
fn push_compositions(out: &mut Vec<MultiIndex>, cur: &mut Vec<u32>, var: usize, remaining: u32) {
    if var + 1 == cur.len() {
        cur[var] = remaining;
        out.push(MultiIndex(cur.clone()));
        return;
    }
    if cur.is_empty() {
        if remaining == 0 {
            out.push(MultiIndex(Vec::new()));
        }
        return;
    }
    for e in (0..=remaining).rev() {
        cur[var] = e;
        push_compositions(out, cur, var + 1, remaining - e);
    }
    cur[var] = 0;
}

/// Number of monomials of degree at most `max_deg` in `nvars` variables.
pub fn basis_len(nvars: usize, max_deg: u32) -> usize {
    let (n, d) = (nvars as u128, max_deg as u128);
    let mut num: u128 = 1;
    for i in 1..=d {
        num = num * (n + i) / i;
    }
    num as usize
}

/// A sparse polynomial in `nvars` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        Self::monomial(MultiIndex::zero(nvars), c)
    }

    /// The polynomial `x_var`.
    pub fn var(nvars: usize, var: usize) -> Self {
        Self::monomial(MultiIndex::unit(nvars, var), 1.0)
    }

    pub fn monomial(index: MultiIndex, coeff: f64) -> Self {
        let nvars = index.nvars();
        let mut p = Polynomial::zero(nvars);
        p.add_term(index, coeff);
        p.prune();
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs, summing repeats.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (MultiIndex, f64)>,
    {
        let mut p = Polynomial::zero(nvars);
        for (m, c) in terms {
            assert_eq!(m.nvars(), nvars, "multi-index length must equal nvars");
            p.add_term(m, c);
        }
        p.prune();
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Maximum total degree over stored terms; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(MultiIndex::degree).max().unwrap_or(0)
    }

    /// Degree in a single variable.
    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|m| m.get(var)).max().unwrap_or(0)
    }

    pub fn coeff(&self, m: &MultiIndex) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |a, c| a.max(c.abs()))
    }

    fn add_term(&mut self, m: MultiIndex, c: f64) {
        if c == 0.0 {
            return;
        }
        *self.terms.entry(m).or_insert(0.0) += c;
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| c.abs() > DROP_TOL);
    }

    fn check_nvars(&self, other: &Polynomial) -> Result<(), PolyError> {
        if self.nvars != other.nvars {
            return Err(PolyError::NvarsMismatch {
                left: self.nvars,
                right: other.nvars,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_nvars(other)?;
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            out.add_term(m.clone(), c);
        }
        out.prune();
        Ok(out)
    }

    pub fn try_sub(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_nvars(other)?;
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            out.add_term(m.clone(), -c);
        }
        out.prune();
        Ok(out)
    }

    pub fn try_mul(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_nvars(other)?;
        let mut out = Polynomial::zero(self.nvars);
        for (ma, &ca) in &self.terms {
            for (mb, &cb) in &other.terms {
                out.add_term(ma.product(mb), ca * cb);
            }
        }
        out.prune();
        Ok(out)
    }

    pub fn scale(&self, c: f64) -> Polynomial {
        let mut out = Polynomial::zero(self.nvars);
        for (m, &v) in &self.terms {
            out.add_term(m.clone(), v * c);
        }
        out.prune();
        out
    }

    pub fn pow(&self, exp: u32) -> Polynomial {
        let mut acc = Polynomial::constant(self.nvars, 1.0);
        for _ in 0..exp {
            acc = &acc * self;
        }
        acc
    }

    /// Formal partial derivative with respect to `var`.
    pub fn differentiate(&self, var: usize) -> Result<Polynomial, PolyError> {
        if var >= self.nvars {
            return Err(PolyError::IndexOutOfRange {
                index: var,
                nvars: self.nvars,
            });
        }
        let mut out = Polynomial::zero(self.nvars);
        for (m, &c) in &self.terms {
            let e = m.get(var);
            if e > 0 {
                out.add_term(m.with(var, e - 1), c * e as f64);
            }
        }
        out.prune();
        Ok(out)
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<f64, PolyError> {
        if point.len() != self.nvars {
            return Err(PolyError::PointLength {
                got: point.len(),
                nvars: self.nvars,
            });
        }
        Ok(self.eval(point))
    }

    /// Evaluation without the length check.
    pub fn eval(&self, point: &[f64]) -> f64 {
        self.terms.iter().map(|(m, &c)| c * m.eval(point)).sum()
    }

    /// Substitutes `x_var = value`, returning a polynomial in the remaining
    /// `nvars - 1` variables.
    pub fn restrict(&self, var: usize, value: f64) -> Result<Polynomial, PolyError> {
        if var >= self.nvars {
            return Err(PolyError::IndexOutOfRange {
                index: var,
                nvars: self.nvars,
            });
        }
        let mut out = Polynomial::zero(self.nvars - 1);
        for (m, &c) in &self.terms {
            out.add_term(m.remove(var), c * value.powi(m.get(var) as i32));
        }
        out.prune();
        Ok(out)
    }

    /// Re-embeds a polynomial into `nvars + 1` variables, the new variable
    /// sitting at position `var` with exponent zero everywhere.
    pub fn lift(&self, var: usize) -> Polynomial {
        let mut out = Polynomial::zero(self.nvars + 1);
        for (m, &c) in &self.terms {
            out.add_term(m.insert(var, 0), c);
        }
        out
    }

    /// Composition with a per-variable affine map `x_i -> offset_i + scale_i * x_i`.
    pub fn affine_substitute(&self, offset: &[f64], scale: &[f64]) -> Polynomial {
        assert_eq!(offset.len(), self.nvars);
        assert_eq!(scale.len(), self.nvars);
        let lin: Vec<Polynomial> = (0..self.nvars)
            .map(|i| {
                let mut p = Polynomial::var(self.nvars, i).scale(scale[i]);
                p.add_term(MultiIndex::zero(self.nvars), offset[i]);
                p.prune();
                p
            })
            .collect();
        // cache powers per variable
        let mut powers: Vec<Vec<Polynomial>> = lin
            .iter()
            .map(|_| vec![Polynomial::constant(self.nvars, 1.0)])
            .collect();
        let mut out = Polynomial::zero(self.nvars);
        for (m, &c) in &self.terms {
            let mut term = Polynomial::constant(self.nvars, c);
            for (i, &e) in m.exponents().iter().enumerate() {
                while powers[i].len() <= e as usize {
                    let next = &powers[i][powers[i].len() - 1] * &lin[i];
                    powers[i].push(next);
                }
                if e > 0 {
                    term = &term * &powers[i][e as usize];
                }
            }
            for (mm, cc) in term.terms {
                out.add_term(mm, cc);
            }
        }
        out.prune();
        out
    }

    /// Largest absolute coefficient difference against `other`.
    pub fn max_coeff_diff(&self, other: &Polynomial) -> f64 {
        let mut worst: f64 = 0.0;
        for (m, &c) in &self.terms {
            worst = worst.max((c - other.coeff(m)).abs());
        }
        for (m, &c) in &other.terms {
            if !self.terms.contains_key(m) {
                worst = worst.max(c.abs());
            }
        }
        worst
    }

    /// Renders the polynomial as an expression over `names`, re-parseable by [`parse`].
    pub fn to_expr(&self, names: &[&str]) -> String {
        parse::render(self, names)
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.try_add(rhs).expect("polynomial add: nvars mismatch")
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.try_sub(rhs).expect("polynomial sub: nvars mismatch")
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.try_mul(rhs).expect("polynomial mul: nvars mismatch")
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..self.nvars).map(|i| format!("x{}", i + 1)).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        f.write_str(&self.to_expr(&refs))
    }
}

/// Rectangular matrix of polynomials sharing one variable count.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyMatrix {
    rows: usize,
    cols: usize,
    nvars: usize,
    entries: Vec<Polynomial>,
}

impl PolyMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Polynomial>) -> Result<Self, PolyError> {
        assert_eq!(
            entries.len(),
            rows * cols,
            "entry count must be rows * cols"
        );
        let nvars = entries.first().map(Polynomial::nvars).unwrap_or(0);
        for e in &entries {
            if e.nvars() != nvars {
                return Err(PolyError::NvarsMismatch {
                    left: nvars,
                    right: e.nvars(),
                });
            }
        }
        Ok(PolyMatrix {
            rows,
            cols,
            nvars,
            entries,
        })
    }

    /// Constant matrix from row-major values.
    pub fn from_constants(nvars: usize, rows: usize, cols: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), rows * cols);
        PolyMatrix {
            rows,
            cols,
            nvars,
            entries: values
                .iter()
                .map(|&v| Polynomial::constant(nvars, v))
                .collect(),
        }
    }

    pub fn column(entries: Vec<Polynomial>) -> Result<Self, PolyError> {
        let n = entries.len();
        Self::new(n, 1, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn get(&self, r: usize, c: usize) -> &Polynomial {
        &self.entries[r * self.cols + c]
    }

    pub fn is_constant(&self) -> bool {
        self.entries.iter().all(|p| p.degree() == 0)
    }

    /// Constant part of each entry, row-major.
    pub fn constant_values(&self) -> Vec<f64> {
        let z = MultiIndex::zero(self.nvars);
        self.entries.iter().map(|p| p.coeff(&z)).collect()
    }

    pub fn transpose(&self) -> PolyMatrix {
        let mut entries = Vec::with_capacity(self.entries.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                entries.push(self.get(r, c).clone());
            }
        }
        PolyMatrix {
            rows: self.cols,
            cols: self.rows,
            nvars: self.nvars,
            entries,
        }
    }

    pub fn matmul(&self, other: &PolyMatrix) -> Result<PolyMatrix, PolyError> {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        if self.nvars != other.nvars {
            return Err(PolyError::NvarsMismatch {
                left: self.nvars,
                right: other.nvars,
            });
        }
        let mut entries = Vec::with_capacity(self.rows * other.cols);
        for r in 0..self.rows {
            for c in 0..other.cols {
                let mut acc = Polynomial::zero(self.nvars);
                for k in 0..self.cols {
                    acc = &acc + &(self.get(r, k) * other.get(k, c));
                }
                entries.push(acc);
            }
        }
        Ok(PolyMatrix {
            rows: self.rows,
            cols: other.cols,
            nvars: self.nvars,
            entries,
        })
    }

    /// Right-multiplication by a constant row-major matrix of shape `cols x k`.
    pub fn mul_constant(&self, values: &[f64], k: usize) -> PolyMatrix {
        assert_eq!(values.len(), self.cols * k);
        let rhs = PolyMatrix::from_constants(self.nvars, self.cols, k, values);
        self.matmul(&rhs).expect("same nvars")
    }

    pub fn scale(&self, c: f64) -> PolyMatrix {
        PolyMatrix {
            rows: self.rows,
            cols: self.cols,
            nvars: self.nvars,
            entries: self.entries.iter().map(|p| p.scale(c)).collect(),
        }
    }

    pub fn entries(&self) -> &[Polynomial] {
        &self.entries
    }

    /// Largest coefficient difference over all entries.
    pub fn max_coeff_diff(&self, other: &PolyMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.max_coeff_diff(b))
            .fold(0.0, f64::max)
    }
}
