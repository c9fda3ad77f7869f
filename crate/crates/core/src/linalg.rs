//! Small dense linear algebra for the Newton, Levenberg–Marquardt and
//! continuation solvers. Systems here are at most 5×5.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::sqrt;
use crate::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Appends `row` at the bottom, returning a matrix with one more row.
    pub fn with_row(&self, row: &[f64]) -> Matrix {
        assert_eq!(row.len(), self.cols);
        let mut data = self.data.clone();
        data.extend_from_slice(row);
        Matrix { rows: self.rows + 1, cols: self.cols, data }
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Solves the square system `a · x = b` by Gaussian elimination with
/// partial pivoting.
pub fn solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows;
    if a.cols != n {
        return Err(Error::Dimension { expected: n, got: a.cols });
    }
    if b.len() != n {
        return Err(Error::Dimension { expected: n, got: b.len() });
    }
    let scale = a.max_abs();
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::SingularJacobian);
    }
    let mut m = a.data.clone();
    let mut x = b.to_vec();
    for col in 0..n {
        let (piv, pval) = (col..n)
            .map(|r| (r, m[r * n + col].abs()))
            .fold((col, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
        if pval <= 1e-14 * scale {
            return Err(Error::SingularJacobian);
        }
        if piv != col {
            for j in 0..n {
                m.swap(col * n + j, piv * n + j);
            }
            x.swap(col, piv);
        }
        let d = m[col * n + col];
        for r in col + 1..n {
            let f = m[r * n + col] / d;
            if f != 0.0 {
                for j in col..n {
                    m[r * n + j] -= f * m[col * n + j];
                }
                x[r] -= f * x[col];
            }
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for j in col + 1..n {
            s -= m[col * n + j] * x[j];
        }
        x[col] = s / m[col * n + col];
    }
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::SingularJacobian)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Projects `v` onto the null space of `a` (the orthogonal complement of
/// its row space). Rank-deficient `a` is handled: rows that are dependent
/// on earlier ones are dropped by modified Gram–Schmidt.
pub fn project_onto_null_space(a: &Matrix, v: &[f64]) -> Vec<f64> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(a.rows);
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for i in 0..a.rows {
        let mut q = a.row(i).to_vec();
        // two passes for numerical orthogonality
        for _ in 0..2 {
            for b in &basis {
                let p = dot(&q, b);
                q.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
        }
        let n = norm(&q);
        if n > 1e-10 * scale {
            q.iter_mut().for_each(|x| *x /= n);
            basis.push(q);
        }
    }
    let mut out = v.to_vec();
    for _ in 0..2 {
        for b in &basis {
            let p = dot(&out, b);
            out.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_pivoting_system() {
        let a = Matrix::from_rows(3, 3, vec![0.0, 2.0, 1.0, 1.0, 1.0, 1.0, 2.0, 1.0, 0.0]);
        let x = solve(&a, &[7.0, 6.0, 4.0]).unwrap();
        // x = (1, 2, 3)
        for (got, want) in x.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_is_reported() {
        let a = Matrix::from_rows(2, 2, vec![1.0, 2.0, 2.0, 4.0]);
        assert_eq!(solve(&a, &[1.0, 2.0]), Err(Error::SingularJacobian));
    }

    #[test]
    fn null_space_projection_of_rank_deficient_rows() {
        // second row duplicates the first
        let a = Matrix::from_rows(2, 3, vec![1.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
        let p = project_onto_null_space(&a, &[1.0, 1.0, 1.0]);
        assert!(p[0].abs() < 1e-15);
        assert!((p[1] - 1.0).abs() < 1e-15 && (p[2] - 1.0).abs() < 1e-15);
    }
}
