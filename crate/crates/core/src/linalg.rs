//! Dense exact linear algebra over GF(p^s).
//!
//! Vectors are rows and matrices act on them from the right: the image of the
//! row vector `v` under `g` is `v * g`. A subspace is stable under `g` when
//! every basis row times `g` stays in the row space.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use thiserror::Error;

use crate::gf::{Field, FieldElem};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("matrix is {rows}x{cols}, expected a square matrix")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("matrix is singular")]
    Singular,
    #[error("malformed matrix data: {0}")]
    Malformed(String),
}

/// `dst += c * src` elementwise.
#[inline]
pub(crate) fn axpy(field: &Field, dst: &mut [FieldElem], c: FieldElem, src: &[FieldElem]) {
    if c.is_zero() {
        return;
    }
    if field.is_prime_field() {
        let p = field.p();
        let c = c.0;
        for (d, s) in dst.iter_mut().zip(src) {
            if s.0 != 0 {
                d.0 = (d.0 + c * s.0) % p;
            }
        }
    } else {
        for (d, s) in dst.iter_mut().zip(src) {
            if !s.is_zero() {
                *d = field.add(*d, field.mul(c, *s));
            }
        }
    }
}

/// Scale a row in place.
#[inline]
pub(crate) fn scale_row(field: &Field, row: &mut [FieldElem], c: FieldElem) {
    for x in row.iter_mut() {
        *x = field.mul(*x, c);
    }
}

/// Reduced row-echelon form of a row-major `rows x cols` block, in place.
/// Returns the pivot column of each nonzero row; nonzero rows end up first.
pub(crate) fn rref_in_place(field: &Field, data: &mut [FieldElem], rows: usize, cols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(pr) = (r..rows).find(|&i| !data[i * cols + c].is_zero()) else {
            continue;
        };
        if pr != r {
            for j in 0..cols {
                data.swap(pr * cols + j, r * cols + j);
            }
        }
        let inv = field.inv(data[r * cols + c]).unwrap();
        scale_row(field, &mut data[r * cols..(r + 1) * cols], inv);
        let (before, rest) = data.split_at_mut(r * cols);
        let (prow, after) = rest.split_at_mut(cols);
        for i in 0..r {
            let f = before[i * cols + c];
            if !f.is_zero() {
                axpy(field, &mut before[i * cols..(i + 1) * cols], field.neg(f), prow);
            }
        }
        for i in 0..rows - r - 1 {
            let f = after[i * cols + c];
            if !f.is_zero() {
                axpy(field, &mut after[i * cols..(i + 1) * cols], field.neg(f), prow);
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// A dense matrix over a finite field.
#[derive(Clone)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<FieldElem>,
    field: Field,
}

impl PartialEq for Matrix {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.data == other.data
    }
}

impl Eq for Matrix {}

impl Hash for Matrix {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rows.hash(state);
        self.cols.hash(state);
        self.data.hash(state);
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            let row: Vec<String> = self.row(i).iter().map(|&x| self.field.fmt_elem(x)).collect();
            write!(f, "{}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn from_data(field: &Field, rows: usize, cols: usize, data: Vec<FieldElem>) -> Matrix {
        assert_eq!(data.len(), rows * cols, "data length does not match dimensions");
        Matrix { rows, cols, data, field: field.clone() }
    }

    pub fn zeros(field: &Field, rows: usize, cols: usize) -> Matrix {
        Self::from_data(field, rows, cols, vec![field.zero(); rows * cols])
    }

    pub fn identity(field: &Field, n: usize) -> Matrix {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = field.one();
        }
        m
    }

    pub fn from_rows(field: &Field, rows: &[Vec<FieldElem>]) -> Matrix {
        let cols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self::from_data(field, rows.len(), cols, rows.concat())
    }

    /// Build from integer rows, reducing entries into the prime field.
    pub fn from_ints(field: &Field, rows: &[&[i64]]) -> Matrix {
        let rows: Vec<Vec<FieldElem>> =
            rows.iter().map(|r| r.iter().map(|&x| field.from_int(x)).collect()).collect();
        Self::from_rows(field, &rows)
    }

    /// The elementary matrix `I + c * E_ij` (0-based indices).
    pub fn elementary(field: &Field, n: usize, i: usize, j: usize, c: FieldElem) -> Matrix {
        let mut m = Self::identity(field, n);
        let cur = m.get(i, j);
        m.set(i, j, field.add(cur, c));
        m
    }

    pub fn diagonal(field: &Field, diag: &[FieldElem]) -> Matrix {
        let mut m = Self::zeros(field, diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> FieldElem {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: FieldElem) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[FieldElem] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vec(&self, i: usize) -> Vec<FieldElem> {
        self.row(i).to_vec()
    }

    pub fn data(&self) -> &[FieldElem] {
        &self.data
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matrix product dimension mismatch");
        let f = &self.field;
        let mut out = Matrix::zeros(f, self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                axpy(f, orow, self.data[i * self.cols + k], other.row(k));
            }
        }
        out
    }

    /// Row vector times matrix.
    pub fn vec_mul(&self, v: &[FieldElem]) -> Vec<FieldElem> {
        assert_eq!(v.len(), self.rows, "vector length mismatch");
        let mut out = vec![self.field.zero(); self.cols];
        for (k, &c) in v.iter().enumerate() {
            axpy(&self.field, &mut out, c, self.row(k));
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let f = &self.field;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f.add(a, b)).collect();
        Matrix::from_data(f, self.rows, self.cols, data)
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let f = &self.field;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f.sub(a, b)).collect();
        Matrix::from_data(f, self.rows, self.cols, data)
    }

    pub fn scale(&self, c: FieldElem) -> Matrix {
        let f = &self.field;
        Matrix::from_data(f, self.rows, self.cols, self.data.iter().map(|&a| f.mul(a, c)).collect())
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(&self.field, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    /// `self - I`.
    pub fn minus_identity(&self) -> Matrix {
        self.sub(&Matrix::identity(&self.field, self.rows))
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    let x = self.get(i, j);
                    if i == j {
                        x == self.field.one()
                    } else {
                        x.is_zero()
                    }
                })
            })
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    /// Contiguous block of rows `r0..r1` and columns `c0..c1`.
    pub fn submatrix(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Matrix {
        let mut data = Vec::with_capacity((r1 - r0) * (c1 - c0));
        for i in r0..r1 {
            data.extend_from_slice(&self.row(i)[c0..c1]);
        }
        Matrix::from_data(&self.field, r1 - r0, c1 - c0, data)
    }

    /// Reduced row-echelon form and rank.
    pub fn rref(&self) -> (Matrix, usize) {
        let (m, piv) = self.rref_with_pivots();
        (m, piv.len())
    }

    /// Reduced row-echelon form together with the pivot columns.
    pub fn rref_with_pivots(&self) -> (Matrix, Vec<usize>) {
        let mut out = self.clone();
        let piv = rref_in_place(&self.field, &mut out.data, self.rows, self.cols);
        (out, piv)
    }

    pub fn rank(&self) -> usize {
        self.rref().1
    }

    /// Determinant by elimination.
    pub fn det(&self) -> Result<FieldElem, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare { rows: self.rows, cols: self.cols });
        }
        let f = &self.field;
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = f.one();
        for c in 0..n {
            let Some(pr) = (c..n).find(|&i| !a[i * n + c].is_zero()) else {
                return Ok(f.zero());
            };
            if pr != c {
                for j in 0..n {
                    a.swap(pr * n + j, c * n + j);
                }
                det = f.neg(det);
            }
            let piv = a[c * n + c];
            det = f.mul(det, piv);
            let inv = f.inv(piv).unwrap();
            let prow: Vec<FieldElem> = a[c * n..(c + 1) * n].to_vec();
            for i in c + 1..n {
                let x = a[i * n + c];
                if !x.is_zero() {
                    axpy(f, &mut a[i * n..(i + 1) * n], f.neg(f.mul(x, inv)), &prow);
                }
            }
        }
        Ok(det)
    }

    /// Determinant by cofactor expansion along the first row (small matrices only).
    pub fn det_cofactor(&self) -> Result<FieldElem, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare { rows: self.rows, cols: self.cols });
        }
        let f = &self.field;
        let n = self.rows;
        if n == 0 {
            return Ok(f.one());
        }
        let mut acc = f.zero();
        for j in 0..n {
            let mut minor = Vec::with_capacity((n - 1) * (n - 1));
            for i in 1..n {
                for k in 0..n {
                    if k != j {
                        minor.push(self.get(i, k));
                    }
                }
            }
            let m = Matrix::from_data(f, n - 1, n - 1, minor).det_cofactor()?;
            let term = f.mul(self.get(0, j), m);
            acc = if j % 2 == 0 { f.add(acc, term) } else { f.sub(acc, term) };
        }
        Ok(acc)
    }

    pub fn inverse(&self) -> Option<Matrix> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let f = &self.field;
        let mut aug = Vec::with_capacity(2 * n * n);
        for i in 0..n {
            aug.extend_from_slice(self.row(i));
            for j in 0..n {
                aug.push(if i == j { f.one() } else { f.zero() });
            }
        }
        let piv = rref_in_place(f, &mut aug, n, 2 * n);
        if piv.len() < n || piv[n - 1] >= n {
            return None;
        }
        let mut out = Matrix::zeros(f, n, n);
        for i in 0..n {
            out.data[i * n..(i + 1) * n].copy_from_slice(&aug[i * 2 * n + n..(i + 1) * 2 * n]);
        }
        Some(out)
    }

    pub fn pow(&self, mut k: u64) -> Matrix {
        let mut base = self.clone();
        let mut acc = Matrix::identity(&self.field, self.rows);
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        acc
    }

    /// Right null space `{v : self * v^T = 0}`.
    pub fn kernel(&self) -> Subspace {
        let f = &self.field;
        let (r, piv) = self.rref_with_pivots();
        let free: Vec<usize> = (0..self.cols).filter(|c| !piv.contains(c)).collect();
        let mut vecs = Vec::with_capacity(free.len());
        for &fc in &free {
            let mut v = vec![f.zero(); self.cols];
            v[fc] = f.one();
            for (i, &pc) in piv.iter().enumerate() {
                v[pc] = f.neg(r.get(i, fc));
            }
            vecs.push(v);
        }
        Subspace::from_vectors(f, self.cols, &vecs)
    }

    /// Left null space `{v : v * self = 0}`.
    pub fn left_kernel(&self) -> Subspace {
        self.transpose().kernel()
    }

    /// Row space as a canonical subspace.
    pub fn row_space(&self) -> Subspace {
        Subspace::from_matrix(self)
    }

    /// Nested integer lists (coefficient lists when s > 1).
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            (0..self.rows)
                .map(|i| {
                    serde_json::Value::Array(self.row(i).iter().map(|&x| self.field.to_json(x)).collect())
                })
                .collect(),
        )
    }

    pub fn from_json(field: &Field, v: &serde_json::Value) -> Result<Matrix, LinalgError> {
        let rows = v.as_array().ok_or_else(|| LinalgError::Malformed("expected a list of rows".into()))?;
        let mut out = Vec::with_capacity(rows.len());
        for r in rows {
            let entries = r.as_array().ok_or_else(|| LinalgError::Malformed("expected a row list".into()))?;
            let mut row = Vec::with_capacity(entries.len());
            for e in entries {
                row.push(field.from_json(e).map_err(|e| LinalgError::Malformed(e.to_string()))?);
            }
            out.push(row);
        }
        if out.is_empty() || out.iter().any(|r| r.len() != out[0].len()) {
            return Err(LinalgError::Malformed("empty or ragged matrix".into()));
        }
        Ok(Matrix::from_rows(field, &out))
    }
}

/// A subspace of F^n stored by its reduced row-echelon basis (canonical).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Subspace {
    ambient: usize,
    basis: Matrix,
    pivots: Vec<usize>,
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "span{:?}", self.basis)
    }
}

impl Subspace {
    pub fn from_matrix(m: &Matrix) -> Subspace {
        let (r, piv) = m.rref_with_pivots();
        let basis = r.submatrix(0, piv.len(), 0, m.cols());
        Subspace { ambient: m.cols(), basis, pivots: piv }
    }

    pub fn from_vectors(field: &Field, ambient: usize, vecs: &[Vec<FieldElem>]) -> Subspace {
        if vecs.is_empty() {
            return Self::zero(field, ambient);
        }
        Self::from_matrix(&Matrix::from_rows(field, vecs))
    }

    pub fn zero(field: &Field, ambient: usize) -> Subspace {
        Subspace { ambient, basis: Matrix::zeros(field, 0, ambient), pivots: vec![] }
    }

    pub fn full(field: &Field, ambient: usize) -> Subspace {
        Self::from_matrix(&Matrix::identity(field, ambient))
    }

    pub fn field(&self) -> &Field {
        self.basis.field()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    /// Canonical basis rows.
    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn basis_vectors(&self) -> Vec<Vec<FieldElem>> {
        (0..self.dim()).map(|i| self.basis.row_vec(i)).collect()
    }

    /// Coordinates of `v` in the canonical basis, or `None` if `v` is outside.
    pub fn coords(&self, v: &[FieldElem]) -> Option<Vec<FieldElem>> {
        let f = self.field();
        let c: Vec<FieldElem> = self.pivots.iter().map(|&p| v[p]).collect();
        let mut recon = vec![f.zero(); self.ambient];
        for (i, &ci) in c.iter().enumerate() {
            axpy(f, &mut recon, ci, self.basis.row(i));
        }
        (recon == v).then_some(c)
    }

    pub fn contains(&self, v: &[FieldElem]) -> bool {
        self.coords(v).is_some()
    }

    pub fn contains_subspace(&self, other: &Subspace) -> bool {
        (0..other.dim()).all(|i| self.contains(other.basis.row(i)))
    }

    /// Stability under the right action of `g`.
    pub fn is_stable(&self, g: &Matrix) -> bool {
        (0..self.dim()).all(|i| self.contains(&g.vec_mul(self.basis.row(i))))
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        let mut rows = self.basis_vectors();
        rows.extend(other.basis_vectors());
        Subspace::from_vectors(self.field(), self.ambient, &rows)
    }

    pub fn intersection(&self, other: &Subspace) -> Subspace {
        // v = a*B1 = b*B2  <=>  (a, -b) in the left kernel of [B1; B2]
        let f = self.field();
        if self.dim() == 0 || other.dim() == 0 {
            return Subspace::zero(f, self.ambient);
        }
        let mut rows = self.basis_vectors();
        rows.extend(other.basis_vectors());
        let stacked = Matrix::from_rows(f, &rows);
        let lk = stacked.left_kernel();
        let vecs: Vec<Vec<FieldElem>> =
            lk.basis_vectors().iter().map(|a| self.basis.vec_mul(&a[..self.dim()])).collect();
        Subspace::from_vectors(f, self.ambient, &vecs)
    }

    /// Matrix of `g` restricted to this (stable) subspace, in the canonical basis.
    pub fn restrict(&self, g: &Matrix) -> Option<Matrix> {
        if self.dim() == 0 {
            return Some(Matrix::zeros(self.field(), 0, 0));
        }
        let rows: Option<Vec<Vec<FieldElem>>> =
            (0..self.dim()).map(|i| self.coords(&g.vec_mul(self.basis.row(i)))).collect();
        Some(Matrix::from_rows(self.field(), &rows?))
    }

    /// Annihilator in the dual space: `{c : sum_i c_i v_i = 0 for all v in self}`.
    pub fn perp(&self) -> Subspace {
        if self.dim() == 0 {
            return Subspace::full(self.field(), self.ambient);
        }
        self.basis.kernel()
    }

    /// Standard basis vectors (smallest indices first) completing a basis of this subspace.
    pub fn standard_complement(&self) -> Vec<Vec<FieldElem>> {
        let f = self.field();
        let mut cur = self.clone();
        let mut out = Vec::new();
        for i in 0..self.ambient {
            let mut e = vec![f.zero(); self.ambient];
            e[i] = f.one();
            if !cur.contains(&e) {
                cur = cur.sum(&Subspace::from_vectors(f, self.ambient, &[e.clone()]));
                out.push(e);
            }
        }
        out
    }

    /// Total order used for reproducible tie-breaking between witnesses.
    pub fn canonical_cmp(&self, other: &Subspace) -> Ordering {
        self.dim().cmp(&other.dim()).then_with(|| self.basis.data().cmp(other.basis.data()))
    }

    pub fn to_json(&self) -> serde_json::Value {
        self.basis.to_json()
    }
}
