//! TOML solve configuration and `--set` overrides.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use sosdecomp::decomp::DecompOptions;
use sosdecomp::hjb::{BoxRegion, ControlProblem, Facet};
use sosdecomp::polynomial::{parse, PolyMatrix, Polynomial};
use sosdecomp::soscert::Direction;

use crate::error::CliError;

pub const SCALAR_SEC6: &str = include_str!("../configs/scalar_sec6.toml");
pub const CARTESIAN_SEC7: &str = include_str!("../configs/cartesian_sec7.toml");

/// Bundled configurations by name.
pub fn bundled(name: &str) -> Option<&'static str> {
    match name {
        "scalar_sec6" => Some(SCALAR_SEC6),
        "cartesian_sec7" => Some(CARTESIAN_SEC7),
        _ => None,
    }
}

/// A polynomial entry written either as a number or an expression string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Expr {
    Number(f64),
    Text(String),
}

impl Expr {
    fn to_poly(&self, vars: &[&str], what: &str) -> Result<Polynomial, CliError> {
        match self {
            Expr::Number(v) => Ok(Polynomial::constant(vars.len(), *v)),
            Expr::Text(s) => parse(s, vars).map_err(|e| CliError::validation("ParseError", format!("{what}: '{s}': {e}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub variables: Vec<String>,
    /// `f`, one expression per state.
    pub drift: Vec<Expr>,
    /// `G`, row-major `n x m`.
    pub input: Vec<Vec<Expr>>,
    /// `B`, row-major `n x k`.
    pub noise: Vec<Vec<Expr>>,
    pub control_penalty: Vec<Vec<f64>>,
    pub noise_covariance: Vec<Vec<f64>>,
    pub lambda: f64,
    pub state_cost: Expr,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Terminal cost per facet, keyed `x-`, `x+`, `y-`, ...
    pub boundary: BTreeMap<String, Expr>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub degree: u32,
    /// Putinar certificate degree; defaults to one above the residual degree.
    pub cert_degree: Option<u32>,
    pub order: u32,
    pub direction: String,
    /// Regions per dimension; a single entry applies to every axis.
    pub regions: Vec<usize>,
    pub rho: f64,
    pub eps_pri: f64,
    pub eps_dual: f64,
    pub max_outer: usize,
    pub fit_degree: Option<u32>,
    pub fit_samples: usize,
    pub eps_floor: f64,
    pub parallel: bool,
    pub residual_balancing: bool,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            degree: 6,
            cert_degree: None,
            order: 1,
            direction: "upper".into(),
            regions: vec![1],
            rho: 1.0,
            eps_pri: 1e-5,
            eps_dual: 1e-5,
            max_outer: 200,
            fit_degree: None,
            fit_samples: 64,
            eps_floor: 1e-6,
            parallel: true,
            residual_balancing: false,
            tol: 1e-8,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Points per axis for `eval`.
    pub resolution: usize,
    pub directory: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            resolution: 101,
            directory: "out".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn parse_value(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

/// Applies `a.b.c=value` to a TOML tree, creating tables as needed.
pub fn apply_override(root: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::validation("BadOverride", format!("'{assignment}' is not key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::validation("BadOverride", format!("bad key path '{path}'")));
    }
    let mut table = root;
    for k in &keys[..keys.len() - 1] {
        let entry = table
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| CliError::validation("BadOverride", format!("'{k}' in '{path}' is not a table")))?;
    }
    table.insert(keys[keys.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

impl SolveConfig {
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut root: toml::Table =
            toml::from_str(text).map_err(|e| CliError::validation("ConfigSyntax", e.to_string()))?;
        for o in overrides {
            apply_override(&mut root, o)?;
        }
        SolveConfig::deserialize(toml::Value::Table(root)).map_err(|e| CliError::validation("ConfigSchema", e.to_string()))
    }

    /// Reads a file, or a bundled config when `source` names one.
    pub fn load(source: &str, overrides: &[String]) -> Result<Self, CliError> {
        let path = Path::new(source);
        let text = if path.exists() {
            std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{source}: {e}")))?
        } else if let Some(t) = bundled(source) {
            t.to_string()
        } else {
            return Err(CliError::validation("ConfigNotFound", format!("no file or bundled config '{source}'")));
        };
        Self::from_toml(&text, overrides)
    }

    pub fn direction(&self) -> Result<Direction, CliError> {
        self.solver
            .direction
            .parse()
            .map_err(|e: String| CliError::validation("ConfigSchema", e))
    }

    pub fn region_counts(&self) -> Result<Vec<usize>, CliError> {
        let n = self.problem.variables.len();
        match self.solver.regions.len() {
            1 => Ok(vec![self.solver.regions[0]; n]),
            k if k == n => Ok(self.solver.regions.clone()),
            k => Err(CliError::validation(
                "ConfigSchema",
                format!("solver.regions has {k} entries for {n} variables"),
            )),
        }
    }

    pub fn build_problem(&self) -> Result<ControlProblem, CliError> {
        let p = &self.problem;
        let n = p.variables.len();
        let vars: Vec<&str> = p.variables.iter().map(String::as_str).collect();
        if p.drift.len() != n {
            return Err(CliError::validation(
                "Dimension",
                format!("drift has {} entries for {n} variables", p.drift.len()),
            ));
        }
        let drift = p
            .drift
            .iter()
            .map(|e| e.to_poly(&vars, "drift"))
            .collect::<Result<Vec<_>, _>>()?;
        let drift = PolyMatrix::column(drift).map_err(|e| CliError::validation("Dimension", e.to_string()))?;
        let input = poly_matrix(&p.input, &vars, "input")?;
        let noise = poly_matrix(&p.noise, &vars, "noise")?;
        let r = real_matrix(&p.control_penalty, "control_penalty")?;
        let sig = real_matrix(&p.noise_covariance, "noise_covariance")?;
        let q = p.state_cost.to_poly(&vars, "state_cost")?;
        let domain = BoxRegion::new(p.lower.clone(), p.upper.clone()).map_err(CliError::from_hjb)?;
        let mut costs = BTreeMap::new();
        for (name, e) in &p.boundary {
            let f = Facet::parse(name, &p.variables)
                .ok_or_else(|| CliError::validation("UnknownFacet", format!("'{name}' is not a facet of the domain")))?;
            costs.insert(f, e.to_poly(&vars, name)?);
        }
        ControlProblem::new(
            p.variables.clone(),
            drift,
            input,
            noise,
            r,
            sig,
            p.lambda,
            q,
            domain,
            costs,
        )
        .map_err(CliError::from_hjb)
    }

    pub fn decomp_options(&self) -> Result<DecompOptions, CliError> {
        let s = &self.solver;
        if s.degree % 2 != 0 {
            return Err(CliError::validation("OddDegree", format!("degree {} must be even", s.degree)));
        }
        if s.order > 2 || s.order > s.degree {
            return Err(CliError::validation(
                "OrderTooLarge",
                format!("continuity order {} with degree {}", s.order, s.degree),
            ));
        }
        if !(s.rho > 0.0) {
            return Err(CliError::validation("ConfigSchema", "rho must be positive".into()));
        }
        let mut o = DecompOptions::new(s.degree, self.direction()?, s.order);
        o.region.cert_degree = s.cert_degree;
        o.region.eps_floor = s.eps_floor;
        o.fit_degree = s.fit_degree;
        o.fit_samples = s.fit_samples;
        o.admm.rho = s.rho;
        o.admm.eps_pri = s.eps_pri;
        o.admm.eps_dual = s.eps_dual;
        o.admm.max_outer = s.max_outer;
        o.admm.parallel = s.parallel;
        o.admm.residual_balancing = s.residual_balancing;
        o.admm.solver.tol = s.tol;
        o.admm.solver.max_iter = s.max_iter;
        Ok(o)
    }
}

fn poly_matrix(rows: &[Vec<Expr>], vars: &[&str], what: &str) -> Result<PolyMatrix, CliError> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(CliError::validation("Dimension", format!("{what} must be a nonempty rectangular matrix")));
    }
    let entries = rows
        .iter()
        .flatten()
        .map(|e| e.to_poly(vars, what))
        .collect::<Result<Vec<_>, _>>()?;
    PolyMatrix::new(rows.len(), cols, entries).map_err(|e| CliError::validation("Dimension", e.to_string()))
}

fn real_matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, CliError> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(CliError::validation("Dimension", format!("{what} must be a nonempty rectangular matrix")));
    }
    Ok(DMatrix::from_row_iterator(rows.len(), cols, rows.iter().flatten().copied()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_reach_nested_keys() {
        let mut t: toml::Table = toml::from_str("[solver]\ndegree = 4\n").unwrap();
        apply_override(&mut t, "solver.degree=8").unwrap();
        apply_override(&mut t, "solver.direction=lower").unwrap();
        apply_override(&mut t, "output.directory = \"a b\"").unwrap();
        assert_eq!(t["solver"]["degree"].as_integer(), Some(8));
        assert_eq!(t["solver"]["direction"].as_str(), Some("lower"));
        assert_eq!(t["output"]["directory"].as_str(), Some("a b"));
        assert!(apply_override(&mut t, "solver.degree").is_err());
        assert!(apply_override(&mut t, "solver.degree.x=1").is_err());
    }

    #[test]
    fn bundled_configs_validate() {
        for name in ["scalar_sec6", "cartesian_sec7"] {
            let c = SolveConfig::load(name, &[]).unwrap();
            c.build_problem().unwrap();
            c.decomp_options().unwrap();
        }
    }
}
