//! Plain-text sparse triplet dump of a [`ConicProgram`].
//!
//! ```text
//! conic-dump 1
//! vars <n> rows <m>
//! cone free|nonneg|soc|psd <dim-or-side> <label>
//! c <col> <value>
//! a <row> <col> <value>
//! b <row> <value>
//! end
//! ```
//!
//! Zero entries of `c` and `b` are omitted. Values use `{:.16e}`. Columns
//! follow the cone order; PSD blocks use the svec layout of [`super::svec`].

use std::fmt::Write as _;

use super::{Cone, ConicProgram, SparseMatrix};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DumpError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("inconsistent program: {0}")]
    Program(#[from] super::ConicError),
}

pub fn write_dump(prog: &ConicProgram) -> String {
    let mut s = String::new();
    s.push_str("conic-dump 1\n");
    let _ = writeln!(s, "vars {} rows {}", prog.num_vars(), prog.num_rows());
    for (cone, label) in prog.cones.iter().zip(&prog.labels) {
        let (kind, d) = match *cone {
            Cone::Free(n) => ("free", n),
            Cone::Nonneg(n) => ("nonneg", n),
            Cone::SecondOrder(n) => ("soc", n),
            Cone::Psd(n) => ("psd", n),
        };
        let _ = writeln!(
            s,
            "cone {kind} {d} {}",
            label.replace(char::is_whitespace, "_")
        );
    }
    for (j, &v) in prog.objective.iter().enumerate() {
        if v != 0.0 {
            let _ = writeln!(s, "c {j} {v:.16e}");
        }
    }
    for (r, row) in prog.constraints.rows().enumerate() {
        for &(col, v) in row {
            let _ = writeln!(s, "a {r} {col} {v:.16e}");
        }
    }
    for (r, &v) in prog.rhs.iter().enumerate() {
        if v != 0.0 {
            let _ = writeln!(s, "b {r} {v:.16e}");
        }
    }
    s.push_str("end\n");
    s
}

pub fn read_dump(text: &str) -> Result<ConicProgram, DumpError> {
    let err = |line: usize, msg: &str| DumpError::Parse {
        line,
        msg: msg.to_string(),
    };
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, l)) if l.trim() == "conic-dump 1" => {}
        Some((i, _)) => return Err(err(i + 1, "expected header `conic-dump 1`")),
        None => return Err(err(0, "empty input")),
    }
    let (n, m) = match lines.next() {
        Some((i, l)) => {
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 4 || f[0] != "vars" || f[2] != "rows" {
                return Err(err(i + 1, "expected `vars <n> rows <m>`"));
            }
            let n = f[1].parse().map_err(|_| err(i + 1, "bad variable count"))?;
            let m = f[3].parse().map_err(|_| err(i + 1, "bad row count"))?;
            (n, m)
        }
        None => return Err(err(0, "missing size line")),
    };
    let mut cones = Vec::new();
    let mut labels = Vec::new();
    let mut c = vec![0.0; n];
    let mut b = vec![0.0; m];
    let mut triplets: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    let mut ended = false;
    for (i, l) in lines {
        let ln = i + 1;
        let f: Vec<&str> = l.split_whitespace().collect();
        let num = |s: &str| s.parse::<f64>().map_err(|_| err(ln, "bad number"));
        let idx = |s: &str, bound: usize| match s.parse::<usize>() {
            Ok(v) if v < bound => Ok(v),
            _ => Err(err(ln, "index out of range")),
        };
        match f.first().copied() {
            Some("cone") if f.len() >= 3 => {
                let d: usize = f[2].parse().map_err(|_| err(ln, "bad cone size"))?;
                cones.push(match f[1] {
                    "free" => Cone::Free(d),
                    "nonneg" => Cone::Nonneg(d),
                    "soc" => Cone::SecondOrder(d),
                    "psd" => Cone::Psd(d),
                    _ => return Err(err(ln, "unknown cone kind")),
                });
                labels.push(f.get(3).map(|s| s.to_string()).unwrap_or_default());
            }
            Some("c") if f.len() == 3 => c[idx(f[1], n)?] = num(f[2])?,
            Some("b") if f.len() == 3 => b[idx(f[1], m)?] = num(f[2])?,
            Some("a") if f.len() == 4 => {
                let r = idx(f[1], m)?;
                triplets[r].push((idx(f[2], n)?, num(f[3])?));
            }
            Some("end") => {
                ended = true;
                break;
            }
            _ => return Err(err(ln, "unrecognized line")),
        }
    }
    if !ended {
        return Err(err(0, "missing `end`"));
    }
    let mut a = SparseMatrix::new(n);
    for row in triplets {
        a.push_row(row);
    }
    Ok(ConicProgram::new(c, a, b, cones, labels)?)
}
