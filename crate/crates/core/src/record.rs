//! Plain-text solution records.
//!
//! ```text
//! sosdecomp-solution 1
//! variables x y
//! direction upper
//! degree 8
//! order 1
//! lambda 1.0000000000000000e0
//! gamma_max ...
//! converged true
//! iterations 42
//! primal_residual ...
//! domain <lower...> <upper...>
//! gain <rows> <cols>
//! entry <i> <j> <nterms>
//! <exponents...> <coefficient>
//! regions <count>
//! region <id> <lower...> <upper...> <gamma> <nterms>
//! <exponents...> <coefficient>
//! end
//! ```
//!
//! Reals are printed with 17 significant digits, which round-trips `f64`.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::decomp::{locate, DecomposedSolution};
use crate::hjb::{policy_from_gain, BoxRegion, ControlProblem, HjbError};
use crate::polynomial::{MultiIndex, PolyMatrix, Polynomial};
use crate::soscert::Direction;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "sosdecomp-solution";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RecordError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported record version {0}")]
    Version(u32),
    #[error("point is outside every region")]
    OutsideDomain,
    #[error(transparent)]
    Hjb(#[from] HjbError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionRecord {
    pub region: BoxRegion,
    pub gamma: f64,
    pub psi: Polynomial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionRecord {
    pub variables: Vec<String>,
    pub direction: Direction,
    pub degree: u32,
    pub order: u32,
    pub lambda: f64,
    pub gamma_max: f64,
    pub converged: bool,
    pub iterations: usize,
    pub primal_residual: f64,
    pub domain: BoxRegion,
    /// `λ R⁻¹ Gᵀ`, so that `u* = gain ∇Ψ / Ψ`.
    pub gain: PolyMatrix,
    pub regions: Vec<RegionRecord>,
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_terms(out: &mut String, p: &Polynomial) {
    for (m, c) in p.terms() {
        for e in m.exponents() {
            let _ = write!(out, "{e} ");
        }
        let _ = writeln!(out, "{}", real(c));
    }
}

impl SolutionRecord {
    pub fn from_solution(sol: &DecomposedSolution, problem: &ControlProblem) -> Self {
        let last = sol.trace.last();
        SolutionRecord {
            variables: problem.variables.clone(),
            direction: sol.direction,
            degree: sol.degree,
            order: sol.order,
            lambda: problem.lambda,
            gamma_max: sol.gamma_max,
            converged: sol.converged,
            iterations: last.map_or(0, |t| t.iteration),
            primal_residual: last.map_or(0.0, |t| t.primal_residual),
            domain: problem.domain.clone(),
            gain: problem.policy_gain(),
            regions: sol
                .regions
                .iter()
                .zip(&sol.psi)
                .zip(&sol.gammas)
                .map(|((r, p), &g)| RegionRecord {
                    region: r.clone(),
                    gamma: g,
                    psi: p.clone(),
                })
                .collect(),
        }
    }

    pub fn nvars(&self) -> usize {
        self.variables.len()
    }

    /// Index of the region used for `x` (lowest index on shared facets).
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        regions_locate(&self.regions, x)
    }

    pub fn psi(&self, x: &[f64]) -> Result<f64, RecordError> {
        let i = self.locate(x).ok_or(RecordError::OutsideDomain)?;
        Ok(self.regions[i].psi.eval(x))
    }

    pub fn policy(&self, x: &[f64]) -> Result<Vec<f64>, RecordError> {
        let i = self.locate(x).ok_or(RecordError::OutsideDomain)?;
        Ok(policy_from_gain(&self.regions[i].psi, &self.gain, x)?)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{MAGIC} {FORMAT_VERSION}");
        let _ = writeln!(s, "variables {}", self.variables.join(" "));
        let _ = writeln!(s, "direction {}", self.direction.as_str());
        let _ = writeln!(s, "degree {}", self.degree);
        let _ = writeln!(s, "order {}", self.order);
        let _ = writeln!(s, "lambda {}", real(self.lambda));
        let _ = writeln!(s, "gamma_max {}", real(self.gamma_max));
        let _ = writeln!(s, "converged {}", self.converged);
        let _ = writeln!(s, "iterations {}", self.iterations);
        let _ = writeln!(s, "primal_residual {}", real(self.primal_residual));
        let _ = writeln!(s, "domain {}", box_fields(&self.domain).join(" "));
        let _ = writeln!(s, "gain {} {}", self.gain.rows(), self.gain.cols());
        for i in 0..self.gain.rows() {
            for j in 0..self.gain.cols() {
                let p = self.gain.get(i, j);
                let _ = writeln!(s, "entry {i} {j} {}", p.len());
                write_terms(&mut s, p);
            }
        }
        let _ = writeln!(s, "regions {}", self.regions.len());
        for (k, r) in self.regions.iter().enumerate() {
            let _ = writeln!(
                s,
                "region {k} {} {} {}",
                box_fields(&r.region).join(" "),
                real(r.gamma),
                r.psi.len()
            );
            write_terms(&mut s, &r.psi);
        }
        s.push_str("end\n");
        s
    }

    pub fn parse(text: &str) -> Result<Self, RecordError> {
        let mut lines = Lines {
            inner: text.lines().enumerate(),
            line: 0,
        };
        let head = lines.fields()?;
        if head.first() != Some(&MAGIC) || head.len() != 2 {
            return Err(lines.err("missing record header"));
        }
        let version: u32 = lines.num(head[1])?;
        if version != FORMAT_VERSION {
            return Err(RecordError::Version(version));
        }
        let variables: Vec<String> = lines.keyed("variables")?.iter().map(|s| s.to_string()).collect();
        let n = variables.len();
        if n == 0 {
            return Err(lines.err("no variables"));
        }
        let direction = {
            let f = lines.keyed_one("direction")?;
            Direction::from_str(&f).map_err(|e| lines.err(&e))?
        };
        let degree = lines.keyed_num("degree")?;
        let order = lines.keyed_num("order")?;
        let lambda = lines.keyed_num("lambda")?;
        let gamma_max = lines.keyed_num("gamma_max")?;
        let converged = lines.keyed_num("converged")?;
        let iterations = lines.keyed_num("iterations")?;
        let primal_residual = lines.keyed_num("primal_residual")?;
        let domain = {
            let f = lines.keyed("domain")?;
            lines.boxed(&f, n)?
        };
        let gf = lines.keyed("gain")?;
        if gf.len() != 2 {
            return Err(lines.err("gain needs rows and cols"));
        }
        let (rows, cols): (usize, usize) = (lines.num(gf[0])?, lines.num(gf[1])?);
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let f = lines.keyed("entry")?;
                if f.len() != 3 || lines.num::<usize>(f[0])? != i || lines.num::<usize>(f[1])? != j {
                    return Err(lines.err(&format!("expected entry {i} {j}")));
                }
                let count = lines.num(f[2])?;
                entries.push(lines.terms(n, count)?);
            }
        }
        let gain = PolyMatrix::new(rows, cols, entries).map_err(|e| lines.err(&e.to_string()))?;
        let count: usize = lines.keyed_num("regions")?;
        let mut regions = Vec::with_capacity(count);
        for k in 0..count {
            let f = lines.keyed("region")?;
            if f.len() != 2 * n + 3 || lines.num::<usize>(f[0])? != k {
                return Err(lines.err(&format!("malformed region {k}")));
            }
            let region = lines.boxed(&f[1..=2 * n], n)?;
            let gamma = lines.num(f[2 * n + 1])?;
            let nterms = lines.num(f[2 * n + 2])?;
            let psi = lines.terms(n, nterms)?;
            regions.push(RegionRecord { region, gamma, psi });
        }
        if lines.fields()? != ["end"] {
            return Err(lines.err("expected end"));
        }
        Ok(SolutionRecord {
            variables,
            direction,
            degree,
            order,
            lambda,
            gamma_max,
            converged,
            iterations,
            primal_residual,
            domain,
            gain,
            regions,
        })
    }
}

fn regions_locate(regions: &[RegionRecord], x: &[f64]) -> Option<usize> {
    let boxes: Vec<BoxRegion> = regions.iter().map(|r| r.region.clone()).collect();
    locate(&boxes, x)
}

fn box_fields(b: &BoxRegion) -> Vec<String> {
    b.lower.iter().chain(&b.upper).map(|&v| real(v)).collect()
}

struct Lines<'a, I: Iterator<Item = (usize, &'a str)>> {
    inner: I,
    line: usize,
}

impl<'a, I: Iterator<Item = (usize, &'a str)>> Lines<'a, I> {
    fn err(&self, msg: &str) -> RecordError {
        RecordError::Parse {
            line: self.line,
            msg: msg.to_string(),
        }
    }

    fn fields(&mut self) -> Result<Vec<&'a str>, RecordError> {
        for (k, l) in self.inner.by_ref() {
            self.line = k + 1;
            let f: Vec<&str> = l.split_whitespace().collect();
            if !f.is_empty() {
                return Ok(f);
            }
        }
        Err(self.err("unexpected end of record"))
    }

    fn keyed(&mut self, key: &str) -> Result<Vec<&'a str>, RecordError> {
        let f = self.fields()?;
        if f[0] != key {
            return Err(self.err(&format!("expected '{key}', found '{}'", f[0])));
        }
        Ok(f[1..].to_vec())
    }

    fn keyed_one(&mut self, key: &str) -> Result<String, RecordError> {
        let f = self.keyed(key)?;
        if f.len() != 1 {
            return Err(self.err(&format!("'{key}' takes one value")));
        }
        Ok(f[0].to_string())
    }

    fn keyed_num<T: FromStr>(&mut self, key: &str) -> Result<T, RecordError> {
        let v = self.keyed_one(key)?;
        self.num(&v)
    }

    fn num<T: FromStr>(&self, s: &str) -> Result<T, RecordError> {
        s.parse().map_err(|_| self.err(&format!("bad value '{s}'")))
    }

    fn boxed(&self, f: &[&str], n: usize) -> Result<BoxRegion, RecordError> {
        if f.len() != 2 * n {
            return Err(self.err("box needs lower and upper bounds"));
        }
        let v: Vec<f64> = f.iter().map(|s| self.num(s)).collect::<Result<_, _>>()?;
        BoxRegion::new(v[..n].to_vec(), v[n..].to_vec()).map_err(|e| self.err(&e.to_string()))
    }

    fn terms(&mut self, n: usize, count: usize) -> Result<Polynomial, RecordError> {
        let mut terms = Vec::with_capacity(count);
        for _ in 0..count {
            let f = self.fields()?;
            if f.len() != n + 1 {
                return Err(self.err(&format!("term needs {n} exponents and a coefficient")));
            }
            let exps: Vec<u32> = f[..n].iter().map(|s| self.num(s)).collect::<Result<_, _>>()?;
            let c: f64 = self.num(f[n])?;
            terms.push((MultiIndex::new(exps), c));
        }
        Ok(Polynomial::from_terms(n, terms))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SolutionRecord {
        let psi = Polynomial::from_terms(
            1,
            [
                (MultiIndex::new(vec![0]), 0.1 + 0.2),
                (MultiIndex::new(vec![2]), -1.0 / 3.0),
            ],
        );
        SolutionRecord {
            variables: vec!["x".into()],
            direction: Direction::Lower,
            degree: 2,
            order: 1,
            lambda: 1.0,
            gamma_max: std::f64::consts::PI * 1e-7,
            converged: true,
            iterations: 3,
            primal_residual: 1e-9,
            domain: BoxRegion::unit(1),
            gain: PolyMatrix::from_constants(1, 1, 1, &[1.0]),
            regions: vec![
                RegionRecord {
                    region: BoxRegion::new(vec![-1.0], vec![0.0]).unwrap(),
                    gamma: 1e-300,
                    psi: psi.clone(),
                },
                RegionRecord {
                    region: BoxRegion::new(vec![0.0], vec![1.0]).unwrap(),
                    gamma: 2.0,
                    psi: psi.scale(2.0),
                },
            ],
        }
    }

    #[test]
    fn round_trip_is_bitwise() {
        let r = sample();
        let back = SolutionRecord::parse(&r.to_text()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_text(), r.to_text());
    }

    #[test]
    fn shared_facet_uses_lowest_index() {
        let r = sample();
        assert_eq!(r.locate(&[0.0]), Some(0));
        assert_eq!(r.psi(&[0.0]).unwrap(), 0.1 + 0.2);
        assert!(matches!(r.psi(&[1.5]), Err(RecordError::OutsideDomain)));
    }

    #[test]
    fn rejects_bad_input() {
        let text = sample().to_text();
        assert!(matches!(
            SolutionRecord::parse(&text.replace("solution 1", "solution 9")),
            Err(RecordError::Version(9))
        ));
        let truncated: String = text.lines().take(12).collect::<Vec<_>>().join("\n");
        assert!(matches!(SolutionRecord::parse(&truncated), Err(RecordError::Parse { .. })));
        assert!(SolutionRecord::parse(&text.replace("direction lower", "direction sideways")).is_err());
    }
}
