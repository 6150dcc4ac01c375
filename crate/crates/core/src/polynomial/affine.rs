//! Polynomials whose coefficients are affine in a vector of decision variables.

use std::collections::BTreeMap;

use super::{MultiIndex, Polynomial, DROP_TOL};

/// `constant + Σ coeff * z[col]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: BTreeMap<usize, f64>,
    pub constant: f64,
}

impl LinExpr {
    pub fn constant(c: f64) -> Self {
        LinExpr {
            terms: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn var(col: usize, coeff: f64) -> Self {
        let mut e = LinExpr::default();
        e.add_var(col, coeff);
        e
    }

    pub fn add_var(&mut self, col: usize, coeff: f64) {
        if coeff != 0.0 {
            *self.terms.entry(col).or_insert(0.0) += coeff;
        }
    }

    pub fn add_scaled(&mut self, other: &LinExpr, s: f64) {
        for (&c, &v) in &other.terms {
            self.add_var(c, v * s);
        }
        self.constant += other.constant * s;
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.terms.is_empty()
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(&c, &v)| v * z[c]).sum::<f64>()
    }

    fn prune(&mut self) {
        self.terms.retain(|_, v| v.abs() > DROP_TOL);
        if self.constant.abs() <= DROP_TOL {
            self.constant = 0.0;
        }
    }
}

/// A polynomial in `nvars` variables with [`LinExpr`] coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePoly {
    nvars: usize,
    terms: BTreeMap<MultiIndex, LinExpr>,
}

impl AffinePoly {
    pub fn zero(nvars: usize) -> Self {
        AffinePoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    /// A fixed polynomial with no decision dependence.
    pub fn from_polynomial(p: &Polynomial) -> Self {
        let mut out = AffinePoly::zero(p.nvars());
        for (m, c) in p.terms() {
            out.entry(m.clone()).constant += c;
        }
        out.prune();
        out
    }

    /// `Σ z[col] * poly` over the given pairs.
    pub fn from_columns<'a, I>(nvars: usize, cols: I) -> Self
    where
        I: IntoIterator<Item = (usize, &'a Polynomial)>,
    {
        let mut out = AffinePoly::zero(nvars);
        for (col, p) in cols {
            assert_eq!(p.nvars(), nvars);
            for (m, c) in p.terms() {
                out.entry(m.clone()).add_var(col, c);
            }
        }
        out.prune();
        out
    }

    /// A single decision variable times the constant polynomial 1.
    pub fn scalar_var(nvars: usize, col: usize) -> Self {
        let mut out = AffinePoly::zero(nvars);
        out.entry(MultiIndex::zero(nvars)).add_var(col, 1.0);
        out
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(MultiIndex::degree).max().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &LinExpr)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &MultiIndex) -> Option<&LinExpr> {
        self.terms.get(m)
    }

    fn entry(&mut self, m: MultiIndex) -> &mut LinExpr {
        self.terms.entry(m).or_default()
    }

    fn prune(&mut self) {
        for e in self.terms.values_mut() {
            e.prune();
        }
        self.terms.retain(|_, e| !e.is_zero());
    }

    pub fn add(&self, other: &AffinePoly) -> AffinePoly {
        self.add_scaled(other, 1.0)
    }

    pub fn sub(&self, other: &AffinePoly) -> AffinePoly {
        self.add_scaled(other, -1.0)
    }

    fn add_scaled(&self, other: &AffinePoly, s: f64) -> AffinePoly {
        assert_eq!(self.nvars, other.nvars, "nvars mismatch");
        let mut out = self.clone();
        for (m, e) in &other.terms {
            out.entry(m.clone()).add_scaled(e, s);
        }
        out.prune();
        out
    }

    pub fn scale(&self, s: f64) -> AffinePoly {
        AffinePoly::zero(self.nvars).add_scaled(self, s)
    }

    pub fn add_polynomial(&self, p: &Polynomial, s: f64) -> AffinePoly {
        self.add_scaled(&AffinePoly::from_polynomial(p), s)
    }

    pub fn mul_polynomial(&self, p: &Polynomial) -> AffinePoly {
        assert_eq!(self.nvars, p.nvars(), "nvars mismatch");
        let mut out = AffinePoly::zero(self.nvars);
        for (m, e) in &self.terms {
            for (pm, pc) in p.terms() {
                out.entry(m.product(pm)).add_scaled(e, pc);
            }
        }
        out.prune();
        out
    }

    pub fn differentiate(&self, var: usize) -> AffinePoly {
        assert!(var < self.nvars);
        let mut out = AffinePoly::zero(self.nvars);
        for (m, e) in &self.terms {
            let k = m.get(var);
            if k > 0 {
                out.entry(m.with(var, k - 1)).add_scaled(e, k as f64);
            }
        }
        out.prune();
        out
    }

    pub fn restrict(&self, var: usize, value: f64) -> AffinePoly {
        assert!(var < self.nvars);
        let mut out = AffinePoly::zero(self.nvars - 1);
        for (m, e) in &self.terms {
            out.entry(m.remove(var))
                .add_scaled(e, value.powi(m.get(var) as i32));
        }
        out.prune();
        out
    }

    /// Substitutes decision values, giving an ordinary polynomial.
    pub fn evaluate_at(&self, z: &[f64]) -> Polynomial {
        Polynomial::from_terms(
            self.nvars,
            self.terms.iter().map(|(m, e)| (m.clone(), e.eval(z))),
        )
    }
}
