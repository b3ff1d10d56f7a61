use std::ops::{Index, IndexMut};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Dense row-major matrix.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DenseMat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds from row-major data. Panics if the length is inconsistent.
    pub fn from_row_slice(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data length");
        Self {
            rows,
            cols,
            data: data.to_vec(),
        }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "mul_vec dimension");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `selfᵀ · x`.
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "tr_mul_vec dimension");
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                for (o, &a) in out.iter_mut().zip(self.row(i)) {
                    *o += a * xi;
                }
            }
        }
        out
    }

    pub fn matmul(&self, o: &DenseMat) -> DenseMat {
        assert_eq!(self.cols, o.rows, "matmul dimension");
        let mut out = DenseMat::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = o.row(k);
                for (dst, &b) in out.row_mut(i).iter_mut().zip(orow) {
                    *dst += a * b;
                }
            }
        }
        out
    }

    /// `self · oᵀ`, both row-major; handy for `J · Yᵀ` products.
    pub fn matmul_tr(&self, o: &DenseMat) -> DenseMat {
        assert_eq!(self.cols, o.cols, "matmul_tr dimension");
        DenseMat::from_fn(self.rows, o.rows, |i, j| dot(self.row(i), o.row(j)))
    }

    pub fn add(&self, o: &DenseMat) -> DenseMat {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        DenseMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, o: &DenseMat) -> DenseMat {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        DenseMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add_diagonal(&mut self, d: &[f64]) {
        for (i, &v) in d.iter().enumerate() {
            self[(i, i)] += v;
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    /// Replaces the matrix with `(A + Aᵀ)/2`.
    pub fn symmetrize(&mut self) {
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = v;
                self[(j, i)] = v;
            }
        }
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// Submatrix picking the given rows and columns.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> DenseMat {
        DenseMat::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    pub fn cholesky(&self) -> Result<Cholesky, LinalgError> {
        Cholesky::factor(self)
    }
}

impl Index<(usize, usize)> for DenseMat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lower-triangular Cholesky factor `L` with `A = L·Lᵀ`.
///
/// Holding one of these is the proof that the source matrix was SPD.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: DenseMat,
}

impl Cholesky {
    /// Relative pivot floor below which the matrix is rejected.
    const PIVOT_TOL: f64 = 1e-14;

    pub fn factor(a: &DenseMat) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::DimensionMismatch {
                expected: a.nrows(),
                got: a.ncols(),
            });
        }
        let n = a.nrows();
        let scale = a.diag().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let mut l = DenseMat::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > Self::PIVOT_TOL * scale) {
                return Err(LinalgError::NotPositiveDefinite { row: j, pivot: d });
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn factor_l(&self) -> &DenseMat {
        &self.l
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.dim();
        assert_eq!(x.len(), n, "cholesky solve dimension");
        for i in 0..n {
            let mut s = x[i];
            let row = self.l.row(i);
            for k in 0..i {
                s -= row[k] * x[k];
            }
            x[i] = s / row[i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Solves for every row of `b` treated as a right-hand side; returns
    /// the solutions as rows (i.e. `(A⁻¹·bᵀ)ᵀ`).
    pub fn solve_rows(&self, b: &DenseMat) -> DenseMat {
        let mut out = b.clone();
        for i in 0..out.nrows() {
            self.solve_in_place(out.row_mut(i));
        }
        out
    }
}

/// Solves `M·x = rhs` for symmetric positive-definite `M`.
pub fn solve_spd(m: &DenseMat, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
    if rhs.len() != m.nrows() {
        return Err(LinalgError::DimensionMismatch {
            expected: m.nrows(),
            got: rhs.len(),
        });
    }
    Ok(m.cholesky()?.solve(rhs))
}
