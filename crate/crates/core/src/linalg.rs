//! Small dense matrices of jets.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::jet::Jet;

pub type JetMatrix = Vec<Vec<Jet>>;

pub fn values(a: &JetMatrix) -> DMatrix<f64> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows, cols, |i, j| a[i][j].value())
}

pub fn transpose(a: &JetMatrix) -> JetMatrix {
    let cols = a.first().map_or(0, Vec::len);
    (0..cols).map(|j| a.iter().map(|row| row[j].clone()).collect()).collect()
}

pub fn mul(a: &JetMatrix, b: &JetMatrix) -> JetMatrix {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| {
                    let mut acc = &row[0] * &b[0][j];
                    for k in 1..inner {
                        acc = acc + &row[k] * &b[k][j];
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

pub fn mul_vec(a: &JetMatrix, x: &[Jet]) -> Vec<Jet> {
    a.iter()
        .map(|row| {
            let mut acc = &row[0] * &x[0];
            for k in 1..x.len() {
                acc = acc + &row[k] * &x[k];
            }
            acc
        })
        .collect()
}

/// Gauss–Jordan inverse with partial pivoting on the value parts.
pub fn inverse(a: &JetMatrix, what: &str) -> Result<JetMatrix> {
    let n = a.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |m, j| m.max(j.value().abs()))
        .max(f64::MIN_POSITIVE);
    let mut m: JetMatrix = a.to_vec();
    let mut inv: JetMatrix = (0..n)
        .map(|i| (0..n).map(|j| a[0][0].constant_like(if i == j { 1.0 } else { 0.0 })).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| m[r][col].value().abs().total_cmp(&m[s][col].value().abs()))
            .expect("non-empty pivot range");
        if m[pivot][col].value().abs() < 1e-13 * scale {
            return Err(Error::SingularMatrix(format!("{what} is singular at column {col}")));
        }
        m.swap(col, pivot);
        inv.swap(col, pivot);
        let r = m[col][col].recip()?;
        for j in 0..n {
            m[col][j] = &m[col][j] * &r;
            inv[col][j] = &inv[col][j] * &r;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = m[row][col].clone();
            if factor.taylor_coeffs().iter().all(|&c| c == 0.0) {
                continue;
            }
            let (pivot_m, pivot_inv) = (m[col].clone(), inv[col].clone());
            for j in 0..n {
                m[row][j].sub_product(&factor, &pivot_m[j]);
                inv[row][j].sub_product(&factor, &pivot_inv[j]);
            }
        }
    }
    Ok(inv)
}

/// Smallest eigenvalue of the symmetric value part.
pub fn min_eigenvalue(a: &JetMatrix) -> f64 {
    let v = values(a);
    let sym = (&v + v.transpose()) * 0.5;
    sym.symmetric_eigenvalues().iter().fold(f64::INFINITY, |m, &x| m.min(x))
}

/// Numerical rank by singular values relative to the largest one.
pub fn numerical_rank(columns: &[Vec<f64>], rel_tol: f64) -> (usize, Vec<f64>) {
    if columns.is_empty() {
        return (0, Vec::new());
    }
    let n = columns[0].len();
    let m = DMatrix::from_fn(n, columns.len(), |i, j| columns[j][i]);
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let top = sv.first().copied().unwrap_or(0.0);
    let rank = if top == 0.0 { 0 } else { sv.iter().filter(|&&s| s > rel_tol * top).count() };
    (rank, sv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::JetSpace;

    #[test]
    fn inverse_of_jet_matrix() {
        let space = JetSpace::new(&[0.4, -0.2], 2);
        let x = space.variable(0).unwrap();
        let y = space.variable(1).unwrap();
        let a = vec![
            vec![x.cos(), &x * &y],
            vec![y.sin(), space.constant(2.0) + &x],
        ];
        let inv = inverse(&a, "test").unwrap();
        let id = mul(&a, &inv);
        for i in 0..2 {
            for j in 0..2 {
                let e = space.constant(if i == j { 1.0 } else { 0.0 });
                assert!(id[i][j].max_abs_diff(&e) < 1e-14);
            }
        }
    }

    #[test]
    fn singular_matrix_detected() {
        let space = JetSpace::new(&[1.0], 1);
        let x = space.variable(0).unwrap();
        let a = vec![vec![x.clone(), x.clone()], vec![x.clone(), x.clone()]];
        assert!(matches!(inverse(&a, "a"), Err(Error::SingularMatrix(_))));
    }

    #[test]
    fn rank_of_columns() {
        let cols = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![1.0, 1.0, 0.0]];
        assert_eq!(numerical_rank(&cols, 1e-8).0, 2);
    }
}
