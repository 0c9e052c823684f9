//! Dense symmetric positive-definite solves via Cholesky factorization.
//!
//! The receiver repeatedly solves systems against `sigma2*I + A*A^T`, which
//! is SPD for any `sigma2 > 0`, so a Cholesky factorization is all the
//! linear algebra this crate needs.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

/// Lower-triangular Cholesky factor `L` of an SPD matrix `M = L * L^T`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Array2<f64>,
    n: usize,
}

impl Cholesky {
    /// Factors an SPD matrix. Returns `None` when a non-positive pivot is
    /// encountered (matrix not positive definite to working precision).
    pub fn factor(m: ArrayView2<'_, f64>) -> Option<Self> {
        let n = m.nrows();
        assert_eq!(n, m.ncols(), "Cholesky requires a square matrix");
        let mut l = Array2::<f64>::zeros((n, n));
        for j in 0..n {
            let mut diag = m[(j, j)];
            for k in 0..j {
                diag -= l[(j, k)] * l[(j, k)];
            }
            if diag <= 0.0 || !diag.is_finite() {
                return None;
            }
            let ljj = diag.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut sum = m[(i, j)];
                for k in 0..j {
                    sum -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = sum / ljj;
            }
        }
        Some(Self { l, n })
    }

    /// Dimension of the factored matrix.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `M x = b` for a single right-hand side.
    pub fn solve_vec(&self, b: ArrayView1<'_, f64>) -> Array1<f64> {
        assert_eq!(b.len(), self.n);
        let mut x = b.to_owned();
        self.solve_in_place(x.as_slice_mut().expect("contiguous"));
        x
    }

    /// Solves `M X = B` column by column.
    pub fn solve_mat(&self, b: ArrayView2<'_, f64>) -> Array2<f64> {
        assert_eq!(b.nrows(), self.n);
        let mut x = b.to_owned();
        let mut col = vec![0.0; self.n];
        for j in 0..x.ncols() {
            for i in 0..self.n {
                col[i] = x[(i, j)];
            }
            self.solve_in_place(&mut col);
            for i in 0..self.n {
                x[(i, j)] = col[i];
            }
        }
        x
    }

    /// Materializes the inverse `M^{-1}`, symmetrized against roundoff.
    pub fn inverse(&self) -> Array2<f64> {
        let mut inv = self.solve_mat(Array2::eye(self.n).view());
        for i in 0..self.n {
            for j in 0..i {
                let avg = 0.5 * (inv[(i, j)] + inv[(j, i)]);
                inv[(i, j)] = avg;
                inv[(j, i)] = avg;
            }
        }
        inv
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let l = &self.l;
        let n = self.n;
        // forward: L y = b
        for i in 0..n {
            let mut sum = x[i];
            for k in 0..i {
                sum -= l[(i, k)] * x[k];
            }
            x[i] = sum / l[(i, i)];
        }
        // backward: L^T x = y
        for i in (0..n).rev() {
            let mut sum = x[i];
            for k in (i + 1)..n {
                sum -= l[(k, i)] * x[k];
            }
            x[i] = sum / l[(i, i)];
        }
    }
}
