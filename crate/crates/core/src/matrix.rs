//! Dense matrices over an exact field, with Gauss-Jordan elimination.

use std::fmt;

use crate::error::{Error, Result};
use crate::field::Field;

#[derive(Clone, PartialEq, Eq)]
pub struct Matrix<F: Field> {
    field: F,
    rows: usize,
    cols: usize,
    data: Vec<F::Elem>,
}

/// Output of [`Matrix::rref`]: `transform * input == reduced`, `transform`
/// invertible, and `reduced` in fully reduced row echelon form.
#[derive(Clone, Debug)]
pub struct Rref<F: Field> {
    pub reduced: Matrix<F>,
    pub pivots: Vec<usize>,
    pub transform: Matrix<F>,
}

impl<F: Field> Rref<F> {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

impl<F: Field> Matrix<F> {
    pub fn zeros(field: &F, rows: usize, cols: usize) -> Self {
        Matrix { field: field.clone(), rows, cols, data: vec![field.zero(); rows * cols] }
    }

    pub fn identity(field: &F, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = field.one();
        }
        m
    }

    pub fn from_fn(field: &F, rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> F::Elem) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { field: field.clone(), rows, cols, data }
    }

    pub fn from_vec(field: &F, rows: usize, cols: usize, data: Vec<F::Elem>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { field: field.clone(), rows, cols, data })
    }

    pub fn from_rows(field: &F, rows: &[Vec<F::Elem>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        Self::from_vec(field, r, c, rows.concat())
    }

    /// Convenience constructor from small integers.
    pub fn from_i64(field: &F, rows: &[&[i64]]) -> Result<Self> {
        let rows: Vec<Vec<F::Elem>> =
            rows.iter().map(|r| r.iter().map(|&v| field.from_i64(v)).collect()).collect();
        Self::from_rows(field, &rows)
    }

    /// `n x n` matrix with `diag` on the diagonal.
    pub fn diagonal(field: &F, diag: &[F::Elem]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(field, n, n);
        for (i, d) in diag.iter().enumerate() {
            m.data[i * n + i] = d.clone();
        }
        m
    }

    /// Matrix whose `t`-th row is the unit vector `e_{sel[t]}` in `F^n`.
    pub fn selection(field: &F, sel: &[usize], n: usize) -> Self {
        let mut m = Self::zeros(field, sel.len(), n);
        for (t, &s) in sel.iter().enumerate() {
            m.data[t * n + s] = field.one();
        }
        m
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[F::Elem] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &F::Elem {
        &self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: F::Elem) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[F::Elem] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| self.field.is_zero(x))
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn nnz(&self) -> usize {
        self.data.iter().filter(|x| !self.field.is_zero(x)).count()
    }

    fn check_field(&self, other: &Self) -> Result<()> {
        self.field.check_same(&other.field)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(&self.field, self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_field(other)?;
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let f = &self.field;
        let mut out = Self::zeros(f, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if f.is_zero(a) {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    f.mul_add_assign(d, a, b);
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |f, a, b| f.add(a, b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |f, a, b| f.sub(a, b))
    }

    fn zip_with(&self, other: &Self, op: impl Fn(&F, &F::Elem, &F::Elem) -> F::Elem) -> Result<Self> {
        self.check_field(other)?;
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", self.shape(), other.shape())));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| op(&self.field, a, b)).collect();
        Ok(Matrix { field: self.field.clone(), rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, c: &F::Elem) -> Self {
        let data = self.data.iter().map(|a| self.field.mul(a, c)).collect();
        Matrix { field: self.field.clone(), rows: self.rows, cols: self.cols, data }
    }

    /// `self += c * other`, shapes assumed equal.
    pub fn axpy(&mut self, c: &F::Elem, other: &Self) {
        debug_assert_eq!(self.shape(), other.shape());
        if self.field.is_zero(c) {
            return;
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            self.field.mul_add_assign(a, c, b);
        }
    }

    /// Linear combination `sum_t coeffs[t] * mats[t]` of equally shaped matrices.
    pub fn combination(field: &F, rows: usize, cols: usize, mats: &[Self], coeffs: &[F::Elem]) -> Self {
        let mut out = Self::zeros(field, rows, cols);
        for (m, c) in mats.iter().zip(coeffs) {
            out.axpy(c, m);
        }
        out
    }

    /// Kronecker product; row `(i, a)` of the result is `i * other.rows + a`.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        self.check_field(other)?;
        let f = &self.field;
        let (r2, c2) = other.shape();
        Ok(Self::from_fn(f, self.rows * r2, self.cols * c2, |i, j| {
            f.mul(self.get(i / r2, j / c2), other.get(i % r2, j % c2))
        }))
    }

    /// Horizontal concatenation `[M_1 | M_2 | ...]`.
    pub fn concat_cols(field: &F, mats: &[Self], rows: usize) -> Result<Self> {
        if mats.iter().any(|m| m.rows != rows) {
            return Err(Error::ShapeMismatch("row counts differ in horizontal concatenation".into()));
        }
        let cols: usize = mats.iter().map(|m| m.cols).sum();
        let mut out = Self::zeros(field, rows, cols);
        let mut off = 0;
        for m in mats {
            m.field.check_same(field)?;
            for i in 0..rows {
                for j in 0..m.cols {
                    out.set(i, off + j, m.get(i, j).clone());
                }
            }
            off += m.cols;
        }
        Ok(out)
    }

    /// Vertical concatenation.
    pub fn concat_rows(field: &F, mats: &[Self], cols: usize) -> Result<Self> {
        if mats.iter().any(|m| m.cols != cols) {
            return Err(Error::ShapeMismatch("column counts differ in vertical concatenation".into()));
        }
        let rows: usize = mats.iter().map(|m| m.rows).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for m in mats {
            m.field.check_same(field)?;
            data.extend_from_slice(&m.data);
        }
        Self::from_vec(field, rows, cols, data)
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(&self.field, rows.len(), cols.len(), |i, j| self.get(rows[i], cols[j]).clone())
    }

    /// First `k` columns.
    pub fn col_prefix(&self, k: usize) -> Result<Self> {
        if k > self.cols {
            return Err(Error::IndexOutOfRange(format!("prefix of {k} columns from {}", self.cols)));
        }
        let cols: Vec<usize> = (0..k).collect();
        let rows: Vec<usize> = (0..self.rows).collect();
        Ok(self.submatrix(&rows, &cols))
    }

    /// Row-major vectorization as a `1 x (rows*cols)` matrix.
    pub fn vectorize(&self) -> Self {
        Matrix { field: self.field.clone(), rows: 1, cols: self.data.len(), data: self.data.clone() }
    }

    /// Block diagonal `self ⊕ other`.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let (r1, c1) = self.shape();
        let mut out = Self::zeros(&self.field, r1 + other.rows, c1 + other.cols);
        for i in 0..r1 {
            for j in 0..c1 {
                out.set(i, j, self.get(i, j).clone());
            }
        }
        for i in 0..other.rows {
            for j in 0..other.cols {
                out.set(r1 + i, c1 + j, other.get(i, j).clone());
            }
        }
        out
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// `row[dst] += c * row[src]`.
    pub fn row_axpy(&mut self, dst: usize, src: usize, c: &F::Elem) {
        if self.field.is_zero(c) {
            return;
        }
        for j in 0..self.cols {
            let s = self.data[src * self.cols + j].clone();
            self.field.mul_add_assign(&mut self.data[dst * self.cols + j], c, &s);
        }
    }

    /// `col[dst] += c * col[src]`.
    pub fn col_axpy(&mut self, dst: usize, src: usize, c: &F::Elem) {
        if self.field.is_zero(c) {
            return;
        }
        for i in 0..self.rows {
            let s = self.data[i * self.cols + src].clone();
            self.field.mul_add_assign(&mut self.data[i * self.cols + dst], c, &s);
        }
    }

    pub fn scale_row(&mut self, i: usize, c: &F::Elem) {
        for j in 0..self.cols {
            let v = self.field.mul(&self.data[i * self.cols + j], c);
            self.data[i * self.cols + j] = v;
        }
    }

    pub fn remove_row(&mut self, i: usize) {
        self.data.drain(i * self.cols..(i + 1) * self.cols);
        self.rows -= 1;
    }

    pub fn remove_col(&mut self, j: usize) {
        let keep: Vec<usize> = (0..self.cols).filter(|&c| c != j).collect();
        let rows: Vec<usize> = (0..self.rows).collect();
        *self = self.submatrix(&rows, &keep);
    }

    /// In-place elimination; returns pivot columns. `companion` receives the
    /// same row operations when present.
    fn eliminate(&mut self, mut companion: Option<&mut Self>, full: bool) -> Vec<usize> {
        let f = self.field.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !f.is_zero(self.get(i, c))) else {
                continue;
            };
            self.swap_rows(r, p);
            if let Some(t) = companion.as_deref_mut() {
                t.swap_rows(r, p);
            }
            let inv = f.inv(self.get(r, c)).expect("pivot is nonzero");
            self.scale_row(r, &inv);
            if let Some(t) = companion.as_deref_mut() {
                t.scale_row(r, &inv);
            }
            let start = if full { 0 } else { r + 1 };
            for i in start..self.rows {
                if i == r {
                    continue;
                }
                let x = self.get(i, c).clone();
                if f.is_zero(&x) {
                    continue;
                }
                let nx = f.neg(&x);
                self.row_axpy(i, r, &nx);
                if let Some(t) = companion.as_deref_mut() {
                    t.row_axpy(i, r, &nx);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    /// Fully reduced row echelon form with the accumulated row transform.
    /// Pivots are chosen by scanning columns left to right and taking the
    /// topmost nonzero entry.
    pub fn rref(&self) -> Rref<F> {
        let mut reduced = self.clone();
        let mut transform = Self::identity(&self.field, self.rows);
        let pivots = reduced.eliminate(Some(&mut transform), true);
        Rref { reduced, pivots, transform }
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.eliminate(None, false).len()
    }

    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::ShapeMismatch("inverse of a non-square matrix".into()));
        }
        let r = self.rref();
        if r.rank() < self.rows {
            return Err(Error::PreconditionFailed("matrix is singular".into()));
        }
        Ok(r.transform)
    }

    pub fn is_invertible(&self) -> bool {
        self.is_square() && self.rank() == self.rows
    }

    /// Some `X` with `self * X == rhs`, or `None` if the system is inconsistent.
    pub fn solve(&self, rhs: &Self) -> Result<Option<Self>> {
        self.check_field(rhs)?;
        if rhs.rows != self.rows {
            return Err(Error::ShapeMismatch("right-hand side has the wrong number of rows".into()));
        }
        let aug = Self::concat_cols(&self.field, &[self.clone(), rhs.clone()], self.rows)?;
        let r = aug.rref();
        if r.pivots.iter().any(|&p| p >= self.cols) {
            return Ok(None);
        }
        let mut x = Self::zeros(&self.field, self.cols, rhs.cols);
        for (row, &p) in r.pivots.iter().enumerate() {
            for j in 0..rhs.cols {
                x.set(p, j, r.reduced.get(row, self.cols + j).clone());
            }
        }
        Ok(Some(x))
    }

    /// Rows form a basis of the right kernel `{x : self * x = 0}`.
    pub fn kernel(&self) -> Self {
        let r = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !r.pivots.contains(c)).collect();
        let f = &self.field;
        let mut out = Self::zeros(f, free.len(), self.cols);
        for (t, &fc) in free.iter().enumerate() {
            out.set(t, fc, f.one());
            for (row, &p) in r.pivots.iter().enumerate() {
                out.set(t, p, f.neg(r.reduced.get(row, fc)));
            }
        }
        out
    }

    /// Indices of a maximal linearly independent set of rows, chosen greedily
    /// from the top.
    pub fn independent_rows(&self) -> Vec<usize> {
        self.transpose().rref().pivots
    }

    /// Invertible `P`, `Q` and `k = rank` with `P * self * Q = [[I_k, 0], [0, 0]]`.
    pub fn equivalence_form(&self) -> (Self, Self, usize) {
        let r = self.rref();
        let p = r.transform;
        let n = r.reduced.transpose().rref();
        (p, n.transform.transpose(), r.pivots.len())
    }
}

impl<F: Field> fmt::Debug for Matrix<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix[{}x{} over {}]", self.rows, self.cols, self.field.spec())?;
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|x| self.field.format_elem(x)).collect();
            write!(f, "\n  [{}]", row.join(" "))?;
        }
        Ok(())
    }
}

/// Stack `vectorize(M_t)` as rows.
pub fn vectorize_all<F: Field>(field: &F, mats: &[Matrix<F>], len: usize) -> Result<Matrix<F>> {
    let rows: Vec<Matrix<F>> = mats.iter().map(|m| m.vectorize()).collect();
    Matrix::concat_rows(field, &rows, len)
}
