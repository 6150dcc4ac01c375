#![allow(dead_code)]

pub mod conic;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use sosdecomp::hjb::{BoxRegion, ControlProblem};
use sosdecomp::polynomial::{parse, PolyMatrix, Polynomial};

/// Scalar problem with unit input, noise and control cost on [-1, 1].
pub fn scalar(drift: &str, q: f64, phi_lo: &str, phi_hi: &str) -> ControlProblem {
    let v = ["x"];
    let dom = BoxRegion::unit(1);
    let mut bc = BTreeMap::new();
    for (f, e) in dom.facets().into_iter().zip([phi_lo, phi_hi]) {
        bc.insert(f, parse(e, &v).unwrap());
    }
    let one = PolyMatrix::from_constants(1, 1, 1, &[1.0]);
    ControlProblem::new(
        vec!["x".into()],
        PolyMatrix::column(vec![parse(drift, &v).unwrap()]).unwrap(),
        one.clone(),
        one,
        DMatrix::identity(1, 1),
        DMatrix::identity(1, 1),
        1.0,
        Polynomial::constant(1, q),
        dom,
        bc,
    )
    .unwrap()
}

/// The planar nonlinear example; `reward` is the cost on `x = 1`.
pub fn planar(reward: &str) -> ControlProblem {
    let v = ["x", "y"];
    let drift = PolyMatrix::column(vec![
        parse("0.1*(-2*x - x^3 - 5*y - y^3)", &v).unwrap(),
        parse("0.1*(6*x + x^3 - 3*y - y^3)", &v).unwrap(),
    ])
    .unwrap();
    let id = PolyMatrix::from_constants(2, 2, 2, &[1.0, 0.0, 0.0, 1.0]);
    let dom = BoxRegion::unit(2);
    let mut bc = BTreeMap::new();
    for f in dom.facets() {
        let e = if f.axis == 0 && f.upper { reward } else { "1" };
        bc.insert(f, parse(e, &v).unwrap());
    }
    ControlProblem::new(
        vec!["x".into(), "y".into()],
        drift,
        id.clone(),
        id,
        DMatrix::identity(2, 2),
        DMatrix::identity(2, 2),
        1.0,
        Polynomial::constant(2, 1.0),
        dom,
        bc,
    )
    .unwrap()
}
