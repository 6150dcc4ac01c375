//! Symmetric-matrix vectorization shared by the solver and the SOS compiler.
//!
//! Layout: lower triangle, column-major, off-diagonal entries scaled by √2.
//! For side `n` the entry `(i, j)` with `i >= j` sits at
//! `j*n - j*(j-1)/2 + (i - j)`, so `<svec(X), svec(Y)> = trace(X Y)`.

use nalgebra::DMatrix;

pub const SQRT2: f64 = std::f64::consts::SQRT_2;

pub fn svec_len(side: usize) -> usize {
    side * (side + 1) / 2
}

/// Position of `(i, j)` (either order) in the svec layout.
pub fn svec_index(side: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i >= j { (i, j) } else { (j, i) };
    j * (2 * side - j + 1) / 2 + (i - j)
}

/// `(i, j)` pairs in svec order.
pub fn svec_positions(side: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(svec_len(side));
    for j in 0..side {
        for i in j..side {
            out.push((i, j));
        }
    }
    out
}

pub fn svec(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(svec_len(n));
    for j in 0..n {
        out.push(m[(j, j)]);
        for i in j + 1..n {
            out.push(0.5 * (m[(i, j)] + m[(j, i)]) * SQRT2);
        }
    }
    out
}

pub fn smat(v: &[f64], side: usize) -> DMatrix<f64> {
    debug_assert_eq!(v.len(), svec_len(side));
    let mut m = DMatrix::zeros(side, side);
    let mut k = 0;
    for j in 0..side {
        m[(j, j)] = v[k];
        k += 1;
        for i in j + 1..side {
            let val = v[k] / SQRT2;
            m[(i, j)] = val;
            m[(j, i)] = val;
            k += 1;
        }
    }
    m
}

/// Side length for an svec of length `len`, if it is triangular.
pub fn side_from_len(len: usize) -> Option<usize> {
    let side = ((((8 * len + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
    (svec_len(side) == len).then_some(side)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_matches_positions() {
        for side in 1..7 {
            for (k, &(i, j)) in svec_positions(side).iter().enumerate() {
                assert_eq!(svec_index(side, i, j), k);
                assert_eq!(svec_index(side, j, i), k);
            }
        }
    }

    #[test]
    fn inner_product_is_trace() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, -1.0, 1.0, 3.0, 0.5, -1.0, 0.5, 1.0]);
        let b = DMatrix::from_row_slice(3, 3, &[1.0, -2.0, 0.0, -2.0, 4.0, 1.0, 0.0, 1.0, -3.0]);
        let dot: f64 = svec(&a).iter().zip(svec(&b)).map(|(x, y)| x * y).sum();
        assert!((dot - (&a * &b).trace()).abs() < 1e-12);
        assert_eq!(smat(&svec(&a), 3), a);
        assert_eq!(side_from_len(6), Some(3));
        assert_eq!(side_from_len(7), None);
    }
}
