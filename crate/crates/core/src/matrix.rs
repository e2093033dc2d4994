//! Dense row-major matrices and the small linear-algebra kernels everything
//! else is built on: dot products, symmetric (Cholesky) factorization and
//! solves. All storage is 64-bit floats; nothing here is sparse.

use crate::error::{Error, Result};

/// Dot product with four independent accumulators so the loop vectorizes.
/// The summation order is fixed, so results are reproducible run to run.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n4 = a.len() - a.len() % 4;
    let mut acc = [0.0f64; 4];
    for (ca, cb) in a[..n4].chunks_exact(4).zip(b[..n4].chunks_exact(4)) {
        acc[0] += ca[0] * cb[0];
        acc[1] += ca[1] * cb[1];
        acc[2] += ca[2] * cb[2];
        acc[3] += ca[3] * cb[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in n4..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// `y += alpha * x`, elementwise.
#[inline]
pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x.iter()) {
        *yi += alpha * *xi;
    }
}

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dim(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        Ok(Mat { rows, cols, data })
    }

    /// Build from a closure over (row, col).
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    /// `self * other`, ikj loop order so the inner updates run over
    /// contiguous rows.
    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = out.row_mut(i);
            for (k, &aik) in a_row.iter().enumerate() {
                if aik != 0.0 {
                    axpy(out_row, aik, other.row(k));
                }
            }
        }
        out
    }

    /// `self * v` for a column vector `v`.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "matvec dimension mismatch");
        (0..self.rows).map(|r| dot(self.row(r), v)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    /// max |self - other| over all entries.
    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(other.data.iter())
            .fold(0.0f64, |m, (&a, &b)| m.max((a - b).abs()))
    }
}

/// Symmetric matrix, stored as a full dense square so both row and column
/// slices are cheap. Construction checks exact symmetry; internal builders
/// that fill both triangles from one computation use `from_parts_unchecked`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Dim(format!(
                "symmetric order-{n} matrix needs {} entries, got {}",
                n * n,
                data.len()
            )));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if data[i * n + j] != data[j * n + i] {
                    return Err(Error::Dim(format!(
                        "entry ({i},{j}) = {} != ({j},{i}) = {}; matrix is not symmetric",
                        data[i * n + j],
                        data[j * n + i]
                    )));
                }
            }
        }
        Ok(SymMatrix { n, data })
    }

    /// Caller guarantees `data` is exactly symmetric.
    pub(crate) fn from_parts_unchecked(n: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * n);
        SymMatrix { n, data }
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = d[i];
        }
        m
    }

    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn to_mat(&self) -> Mat {
        Mat {
            rows: self.n,
            cols: self.n,
            data: self.data.clone(),
        }
    }

    /// Extract the square submatrix over `idx` x `idx`.
    pub fn submatrix(&self, idx: &[usize]) -> Mat {
        let k = idx.len();
        let mut out = Mat::zeros(k, k);
        for (r, &ir) in idx.iter().enumerate() {
            let src = self.row(ir);
            let dst = out.row_mut(r);
            for (c, &ic) in idx.iter().enumerate() {
                dst[c] = src[ic];
            }
        }
        out
    }

    /// Swap index `a` with index `b`: rows a,b and columns a,b exchange.
    /// Symmetry is preserved exactly.
    pub fn swap_index(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let n = self.n;
        for j in 0..n {
            self.data.swap(a * n + j, b * n + j);
        }
        for i in 0..n {
            self.data.swap(i * n + a, i * n + b);
        }
    }

    /// Reorder both rows and columns by `perm` (entry i of the result is
    /// entry perm[i] of the original).
    pub fn permuted(&self, perm: &[usize]) -> SymMatrix {
        assert_eq!(perm.len(), self.n);
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for (i, &pi) in perm.iter().enumerate() {
            let src = self.row(pi);
            let dst = &mut data[i * n..(i + 1) * n];
            for (j, &pj) in perm.iter().enumerate() {
                dst[j] = src[pj];
            }
        }
        SymMatrix { n, data }
    }
}

/// Rectangular cross-moment matrix (input dim x target dim).
#[derive(Clone, Debug, PartialEq)]
pub struct CrossMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CrossMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dim(format!(
                "{}x{} cross matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        Ok(CrossMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        CrossMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Reinterpret a symmetric matrix as the cross moments for z = x.
    pub fn from_sym(m: &SymMatrix) -> Self {
        CrossMatrix {
            rows: m.order(),
            cols: m.order(),
            data: m.as_slice().to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_mat(&self) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.clone(),
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let c = self.cols;
        for j in 0..c {
            self.data.swap(a * c + j, b * c + j);
        }
    }

    pub fn permuted_rows(&self, perm: &[usize]) -> CrossMatrix {
        assert_eq!(perm.len(), self.rows);
        let mut data = Vec::with_capacity(self.data.len());
        for &p in perm {
            data.extend_from_slice(self.row(p));
        }
        CrossMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// Extract the rows listed in `idx`.
    pub fn select_rows(&self, idx: &[usize]) -> Mat {
        let mut out = Mat::zeros(idx.len(), self.cols);
        for (r, &ir) in idx.iter().enumerate() {
            out.row_mut(r).copy_from_slice(self.row(ir));
        }
        out
    }
}

/// Cholesky factorization A = L L^T of a symmetric positive-definite matrix.
/// `context` names the matrix in the error when a pivot fails.
pub fn cholesky(a: &Mat, context: &str) -> Result<Mat> {
    assert_eq!(a.rows(), a.cols(), "cholesky needs a square matrix");
    let n = a.rows();
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s = dot(&l.row(i)[..j], &l.row(j)[..j]);
            if i == j {
                let d = a.get(i, i) - s;
                if d <= 0.0 || !d.is_finite() {
                    return Err(Error::SingularGram {
                        context: format!("{context} (pivot {i} = {d:e})"),
                    });
                }
                l.set(i, j, d.sqrt());
            } else {
                l.set(i, j, (a.get(i, j) - s) / l.get(j, j));
            }
        }
    }
    Ok(l)
}

/// Solve A X = B given the Cholesky factor L of A; B is overwritten with X.
pub fn chol_solve_in_place(l: &Mat, b: &mut Mat) {
    let n = l.rows();
    let m = b.cols();
    assert_eq!(b.rows(), n);
    let data = &mut b.data;
    // forward: L Y = B
    for i in 0..n {
        let (solved, rest) = data.split_at_mut(i * m);
        let row_i = &mut rest[..m];
        for j in 0..i {
            let lij = l.get(i, j);
            if lij != 0.0 {
                axpy(row_i, -lij, &solved[j * m..(j + 1) * m]);
            }
        }
        let inv = 1.0 / l.get(i, i);
        for v in row_i.iter_mut() {
            *v *= inv;
        }
    }
    // backward: L^T X = Y
    for i in (0..n).rev() {
        let (head, solved) = data.split_at_mut((i + 1) * m);
        let row_i = &mut head[i * m..];
        for j in (i + 1)..n {
            let lji = l.get(j, i);
            if lji != 0.0 {
                let off = (j - i - 1) * m;
                axpy(row_i, -lji, &solved[off..off + m]);
            }
        }
        let inv = 1.0 / l.get(i, i);
        for v in row_i.iter_mut() {
            *v *= inv;
        }
    }
}

/// Solve A x = b for a single right-hand side.
pub fn chol_solve_vec(l: &Mat, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    assert_eq!(b.len(), n);
    let mut x = b.to_vec();
    for i in 0..n {
        let s = dot(&l.row(i)[..i], &x[..i]);
        x[i] = (x[i] - s) / l.get(i, i);
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in (i + 1)..n {
            s -= l.get(j, i) * x[j];
        }
        x[i] = s / l.get(i, i);
    }
    x
}

/// Explicit inverse of a symmetric positive-definite matrix via its
/// Cholesky factor. Result is symmetrized so downstream symmetry
/// assumptions hold exactly.
pub fn spd_inverse(a: &Mat, context: &str) -> Result<Mat> {
    let n = a.rows();
    let l = cholesky(a, context)?;
    let mut inv = Mat::identity(n);
    chol_solve_in_place(&l, &mut inv);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (inv.get(i, j) + inv.get(j, i));
            inv.set(i, j, v);
            inv.set(j, i, v);
        }
    }
    Ok(inv)
}
