//! Dense LU factorization with partial pivoting plus a 1-norm condition
//! estimator, shared by all block solvers.
//!
//! The factorization is kept separate from nalgebra's so that one read-only
//! factor can serve many right-hand sides across threads and so that the
//! Hager/Higham condition estimator gets the transpose solves it needs.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is singular to working precision (zero pivot at step {step})")]
    SingularPivot { step: usize },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
}

/// LU factors of a square matrix, PA = LU with row pivoting.
///
/// Storage is column-major (L below the unit diagonal, U on and above it),
/// `piv[k]` being the row swapped into position k at elimination step k.
#[derive(Debug)]
pub struct LuFactors {
    n: usize,
    lu: Vec<f64>,
    piv: Vec<usize>,
    norm1: f64,
}

impl LuFactors {
    /// Factor `a` (consumed) with partial pivoting.
    pub fn factor(a: DMatrix<f64>) -> Result<Self, LinalgError> {
        let (rows, cols) = a.shape();
        if rows != cols {
            return Err(LinalgError::NotSquare { rows, cols });
        }
        let n = rows;
        let norm1 = one_norm(&a);
        let mut lu: Vec<f64> = a.data.into();
        let mut piv = vec![0usize; n];
        factor_in_place(&mut lu, &mut piv, n)?;
        Ok(Self { n, lu, piv, norm1 })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// 1-norm of the original matrix (kept for the condition estimate).
    pub fn norm1(&self) -> f64 {
        self.norm1
    }

    /// Solve A x = b in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        for k in 0..n {
            b.swap(k, self.piv[k]);
        }
        // L y = Pb (unit lower triangular)
        for k in 0..n {
            let bk = b[k];
            if bk != 0.0 {
                let col = &self.lu[k * n..(k + 1) * n];
                for i in k + 1..n {
                    b[i] -= col[i] * bk;
                }
            }
        }
        // U x = y
        for k in (0..n).rev() {
            let col = &self.lu[k * n..(k + 1) * n];
            b[k] /= col[k];
            let bk = b[k];
            if bk != 0.0 {
                for i in 0..k {
                    b[i] -= col[i] * bk;
                }
            }
        }
    }

    /// Solve Aᵀ x = b in place.
    pub fn solve_transpose_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        // Uᵀ y = b (lower triangular with U's diagonal)
        for k in 0..n {
            let col = &self.lu[k * n..(k + 1) * n];
            let mut s = b[k];
            for i in 0..k {
                s -= col[i] * b[i];
            }
            b[k] = s / col[k];
        }
        // Lᵀ v = y (unit upper triangular)
        for k in (0..n).rev() {
            let col = &self.lu[k * n..(k + 1) * n];
            let mut s = b[k];
            for i in k + 1..n {
                s -= col[i] * b[i];
            }
            b[k] = s;
        }
        // x = Pᵀ v: undo the swaps in reverse order
        for k in (0..n).rev() {
            b.swap(k, self.piv[k]);
        }
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = b.clone();
        self.solve_in_place(x.as_mut_slice());
        x
    }

    /// Solve A X = B column by column, in place.
    pub fn solve_matrix_in_place(&self, b: &mut DMatrix<f64>) {
        assert_eq!(b.nrows(), self.n);
        for mut col in b.column_iter_mut() {
            self.solve_in_place(col.as_mut_slice());
        }
    }

    /// Hager/Higham estimate of ‖A⁻¹‖₁ using at most five solve pairs.
    pub fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.n;
        let mut x = vec![1.0 / n as f64; n];
        let mut est = 0.0f64;
        for _ in 0..5 {
            let mut y = x.clone();
            self.solve_in_place(&mut y);
            est = est.max(y.iter().map(|v| v.abs()).sum());
            let mut z: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
            self.solve_transpose_in_place(&mut z);
            let (jmax, zmax) = z
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |(ja, za), (j, v)| if v.abs() > za { (j, v.abs()) } else { (ja, za) });
            let zx: f64 = z.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
            if zmax <= zx.abs() {
                break;
            }
            x = vec![0.0; n];
            x[jmax] = 1.0;
        }
        est
    }

    /// Estimated 1-norm condition number κ₁(A).
    pub fn condition_estimate(&self) -> f64 {
        self.norm1 * self.inverse_norm1_estimate()
    }
}

/// 1-norm (max column sum) of a dense matrix.
pub fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn factor_in_place(lu: &mut [f64], piv: &mut [usize], n: usize) -> Result<(), LinalgError> {
    for k in 0..n {
        // pivot search in column k, rows k..n
        let col_k = k * n;
        let mut p = k;
        let mut pmax = lu[col_k + k].abs();
        for i in k + 1..n {
            let v = lu[col_k + i].abs();
            if v > pmax {
                pmax = v;
                p = i;
            }
        }
        if pmax == 0.0 {
            return Err(LinalgError::SingularPivot { step: k });
        }
        piv[k] = p;
        if p != k {
            for j in 0..n {
                lu.swap(j * n + k, j * n + p);
            }
        }
        let pivot = lu[col_k + k];
        for i in k + 1..n {
            lu[col_k + i] /= pivot;
        }
        // trailing update: column j gets an axpy with column k's multipliers
        let (head, tail) = lu.split_at_mut((k + 1) * n);
        let lcol = &head[col_k + k + 1..col_k + n];
        for j in k + 1..n {
            let cj = &mut tail[(j - k - 1) * n..(j - k) * n];
            let m = cj[k];
            if m != 0.0 {
                for (i, l) in lcol.iter().enumerate() {
                    cj[k + 1 + i] -= m * l;
                }
            }
        }
    }
    Ok(())
}
