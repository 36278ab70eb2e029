//! Determinants and ranks for small dense matrices.

use num_traits::{Signed, Zero};

use crate::algebra::poly::Rational;

/// Determinant of the matrix whose columns are `vectors`.
pub fn wedge_det(vectors: &[Vec<Rational>]) -> Rational {
    let n = vectors.len();
    assert!(vectors.iter().all(|v| v.len() == n), "need n vectors of length n");
    // rows = columns transposed; determinant is transpose invariant
    let mut m: Vec<Vec<Rational>> = vectors.to_vec();
    let mut det = Rational::from_integer(1.into());
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return Rational::zero();
        };
        if p != col {
            m.swap(p, col);
            det = -det;
        }
        let pivot = m[col][col].clone();
        det *= &pivot;
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] / &pivot;
            for c in col..n {
                let delta = &factor * &m[col][c];
                m[r][c] -= delta;
            }
        }
    }
    det
}

/// Determinant with partial pivoting.
pub fn wedge_det_f64(vectors: &[Vec<f64>]) -> f64 {
    let n = vectors.len();
    assert!(vectors.iter().all(|v| v.len() == n), "need n vectors of length n");
    let mut m: Vec<Vec<f64>> = vectors.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let p = (col..n)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        if m[p][col] == 0.0 {
            return 0.0;
        }
        if p != col {
            m.swap(p, col);
            det = -det;
        }
        let pivot = m[col][col];
        det *= pivot;
        for r in col + 1..n {
            let factor = m[r][col] / pivot;
            for c in col..n {
                m[r][c] -= factor * m[col][c];
            }
        }
    }
    det
}

/// Exact rank of a list of vectors.
pub fn rank(vectors: &[Vec<Rational>]) -> usize {
    let mut m: Vec<Vec<Rational>> = vectors.to_vec();
    let cols = m.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(p, r);
        let pivot = m[r][c].clone();
        for i in r + 1..m.len() {
            if m[i][c].is_zero() {
                continue;
            }
            let factor = &m[i][c] / &pivot;
            for k in c..cols {
                let delta = &factor * &m[r][k];
                m[i][k] -= delta;
            }
        }
        r += 1;
        if r == m.len() {
            break;
        }
    }
    r
}

/// Numerical rank: pivots below `tol * max|entry|` count as zero.
pub fn rank_f64(vectors: &[Vec<f64>], tol: f64) -> usize {
    let mut m: Vec<Vec<f64>> = vectors.to_vec();
    let cols = m.first().map_or(0, Vec::len);
    let scale = m
        .iter()
        .flatten()
        .fold(0.0f64, |a, &b| a.max(b.abs()));
    if scale == 0.0 {
        return 0;
    }
    let mut r = 0;
    for c in 0..cols {
        if r == m.len() {
            break;
        }
        let p = (r..m.len())
            .max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))
            .unwrap();
        if m[p][c].abs() <= tol * scale {
            continue;
        }
        m.swap(p, r);
        for i in r + 1..m.len() {
            let factor = m[i][c] / m[r][c];
            for k in c..cols {
                m[i][k] -= factor * m[r][k];
            }
        }
        r += 1;
    }
    r
}

/// Largest absolute entry; used to scale relative tolerances.
pub fn max_abs(v: &[Rational]) -> Rational {
    v.iter().map(|x| x.abs()).fold(Rational::zero(), |a, b| if b > a { b } else { a })
}
