//! Small dense square matrices (n ≤ 3) for diffusion coefficients and Hessians.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    m: [[f64; MAX_DIM]; MAX_DIM],
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(
            (1..=MAX_DIM).contains(&n),
            "matrix dimension {n} out of range"
        );
        Self {
            n,
            m: [[0.0; MAX_DIM]; MAX_DIM],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut out = Self::zeros(n);
        for i in 0..n {
            out.m[i][i] = 1.0;
        }
        out
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let mut out = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "non-square row data");
            out.m[i][..n].copy_from_slice(row);
        }
        out
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut out = Self::zeros(values.len());
        for (i, v) in values.iter().enumerate() {
            out.m[i][i] = *v;
        }
        out
    }

    /// `v ⊗ v`
    pub fn outer(v: &[f64]) -> Self {
        let mut out = Self::zeros(v.len());
        for i in 0..v.len() {
            for j in 0..v.len() {
                out.m[i][j] = v[i] * v[j];
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.n && j < self.n);
        self.m[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n && j < self.n);
        self.m[i][j] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.m[i][i]).sum()
    }

    /// `vᵀ M v`
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                acc += v[i] * self.m[i][j] * v[j];
            }
        }
        acc
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                out.m[i][j] *= s;
            }
        }
        out
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut out = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                out.m[i][j] += other.m[i][j];
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut out = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out.m[i][j] = (0..self.n).map(|k| self.m[i][k] * other.m[k][j]).sum();
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Self {
        let mut out = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                out.m[i][j] = self.m[j][i];
            }
        }
        out
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| (self.m[i][j] - self.m[j][i]).abs() <= tol))
    }

    pub fn max_abs(&self) -> f64 {
        let mut acc: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                acc = acc.max(self.m[i][j].abs());
            }
        }
        acc
    }

    fn to_dmatrix(self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.m[i][j])
    }

    /// Eigenvalues (ascending) of the symmetric part, by a general eigensolve.
    pub fn sym_eigenvalues(&self) -> Vec<f64> {
        let sym = self.add(&self.transpose()).expect("same dim").scale(0.5);
        let eig = sym.to_dmatrix().symmetric_eigen();
        let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        let sv = self.to_dmatrix().singular_values();
        sv.iter().copied().fold(0.0, f64::max)
    }
}
