//! Small dense linear algebra used by the Newton chain solver, the rate-equation
//! steady state and the least-squares normal equations. Matrices are at most a
//! few hundred rows, so plain partial-pivoting elimination is adequate.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                let row = &self.data[i * self.n..(i + 1) * self.n];
                row.iter().zip(v).fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Solves `self * x = rhs` by Gaussian elimination with partial pivoting.
    ///
    /// A pivot smaller than `n * eps * max|a_ij|` is treated as singular and
    /// reported with the column index at which elimination broke down.
    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>> {
        let (lu, perm) = self.lu().map_err(|_| Error::Singular)?;
        Ok(lu_substitute(&lu, &perm, rhs))
    }

    /// Inverse by LU factorisation; the error carries the first degenerate column.
    pub fn inverse(&self) -> std::result::Result<Self, usize> {
        let (lu, perm) = self.lu()?;
        let n = self.n;
        let mut inv = Self::zeros(n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = T::zero());
            e[j] = T::one();
            let col = lu_substitute(&lu, &perm, &e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }

    fn lu(&self) -> std::result::Result<(Self, Vec<usize>), usize> {
        let n = self.n;
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = self.data.iter().fold(T::zero(), |m, x| m.max(x.abs()));
        let tiny = T::from_usize_lossy(n.max(1)) * T::epsilon() * scale;
        for col in 0..n {
            let (piv, pmax) = (col..n).map(|r| (r, a[(r, col)].abs())).fold((col, T::zero()), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            });
            if pmax <= tiny || pmax == T::zero() {
                return Err(col);
            }
            if piv != col {
                for j in 0..n {
                    a.data.swap(col * n + j, piv * n + j);
                }
                perm.swap(col, piv);
            }
            let d = a[(col, col)];
            for r in col + 1..n {
                let f = a[(r, col)] / d;
                a[(r, col)] = f;
                if f == T::zero() {
                    continue;
                }
                for j in col + 1..n {
                    a[(r, j)] = a[(r, j)] - f * a[(col, j)];
                }
            }
        }
        Ok((a, perm))
    }
}

fn lu_substitute<T: Real>(lu: &Matrix<T>, perm: &[usize], rhs: &[T]) -> Vec<T> {
    let n = lu.n;
    let mut x: Vec<T> = perm.iter().map(|&p| rhs[p]).collect();
    for i in 0..n {
        for j in 0..i {
            x[i] = x[i] - lu[(i, j)] * x[j];
        }
    }
    for i in (0..n).rev() {
        for j in i + 1..n {
            x[i] = x[i] - lu[(i, j)] * x[j];
        }
        x[i] = x[i] / lu[(i, i)];
    }
    x
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_with_pivoting() {
        let mut m = Matrix::<f64>::zeros(3);
        let rows = [[0.0, 2.0, 1.0], [1.0, 1.0, 0.0], [3.0, 0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                m[(i, j)] = rows[i][j];
            }
        }
        let x = m.solve(&[5.0, 3.0, 6.0]).unwrap();
        let back = m.mul_vec(&x);
        for (b, r) in back.iter().zip([5.0, 3.0, 6.0]) {
            assert!((b - r).abs() < 1e-12);
        }
        let inv = m.inverse().unwrap();
        let id = m.mul(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_reports_column() {
        let mut m = Matrix::<f64>::zeros(2);
        m[(0, 0)] = 1.0;
        m[(1, 0)] = 2.0;
        assert_eq!(m.inverse().unwrap_err(), 1);
        assert_eq!(m.solve(&[1.0, 1.0]), Err(Error::Singular));
    }
}
