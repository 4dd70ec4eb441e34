//! Dense complex tensors, row-major matrices and truncated SVD.
//!
//! Everything downstream (influence tensors, boundary chains, superoperators)
//! is stored in the two types defined here. Storage is always row-major and
//! complex double precision.

use std::fmt;
use std::ops::{Index, IndexMut};

use faer::linalg::matmul::matmul;
use faer::{Accum, MatMut, MatRef, Par};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Sets the thread policy of the dense linear-algebra backend.
///
/// `threads <= 1` selects purely sequential kernels, which also makes every
/// result bit-reproducible across runs.
pub fn set_linalg_threads(threads: usize) {
    let par = if threads <= 1 {
        Par::Seq
    } else {
        Par::rayon(threads)
    };
    faer::set_global_parallelism(par);
}

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from nested rows; all rows must share one length.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension("ragged matrix rows".into()));
        }
        Ok(Matrix {
            rows: n,
            cols: m,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn diag(values: &[C64]) -> Self {
        let n = values.len();
        let mut m = Matrix::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn data(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn adjoint(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other)?;
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other)?;
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    fn check_same_shape(&self, other: &Matrix) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        gemm(
            &mut out.data,
            &self.data,
            &other.data,
            self.rows,
            self.cols,
            other.cols,
        );
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols, "vector length must equal column count");
        self.data
            .chunks_exact(self.cols.max(1))
            .take(self.rows)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Matrix) -> Matrix {
        let (r2, c2) = (other.rows, other.cols);
        Matrix::from_fn(self.rows * r2, self.cols * c2, |i, j| {
            self[(i / r2, j / c2)] * other[(i % r2, j % c2)]
        })
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest elementwise modulus of `self - other`; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn as_faer(&self) -> MatRef<'_, C64> {
        MatRef::from_row_major_slice(&self.data, self.rows, self.cols)
    }

    pub fn from_faer(m: MatRef<'_, C64>) -> Matrix {
        Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// `out = a (m×k) · b (k×n)`, all row-major.
pub fn gemm(out: &mut [C64], a: &[C64], b: &[C64], m: usize, k: usize, n: usize) {
    debug_assert_eq!(out.len(), m * n);
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        out.fill(ZERO);
        return;
    }
    let lhs = MatRef::from_row_major_slice(a, m, k);
    let rhs = MatRef::from_row_major_slice(b, k, n);
    let dst = MatMut::from_row_major_slice_mut(out, m, n);
    matmul(dst, Accum::Replace, lhs, rhs, ONE, Par::Seq);
}

/// Result of a singular value decomposition truncated at a relative cutoff.
#[derive(Clone, Debug)]
pub struct TruncatedSvd {
    /// Isometry with orthonormal columns, `rows × rank`.
    pub u: Matrix,
    /// Kept singular values, descending.
    pub singular_values: Vec<f64>,
    /// Isometry with orthonormal rows, `rank × cols`.
    pub v_dag: Matrix,
    /// Sum of squares of the dropped singular values.
    pub discarded_weight: f64,
    /// Sum of squares of all singular values (squared Frobenius norm).
    pub total_weight: f64,
}

impl TruncatedSvd {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// Dropped weight as a fraction of the total, the quantity bounded by
    /// `lambda_c²`.
    pub fn relative_discarded_weight(&self) -> f64 {
        if self.total_weight > 0.0 {
            self.discarded_weight / self.total_weight
        } else {
            0.0
        }
    }

    /// `U · diag(σ) · V†`.
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        scale_columns(&mut us, &self.singular_values);
        us.matmul(&self.v_dag)
            .expect("factor shapes are consistent")
    }
}

/// Number of leading singular values kept under the relative cutoff.
///
/// Drops trailing values while `sqrt(discarded / total) <= lambda_c`; a
/// degenerate multiplet straddling the cut is kept whole. At least one value
/// survives. `lambda_c == 0` keeps everything.
pub fn truncation_rank(singular_values: &[f64], lambda_c: f64) -> usize {
    let n = singular_values.len();
    if n == 0 {
        return 0;
    }
    if lambda_c <= 0.0 {
        return n;
    }
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    if total == 0.0 {
        return 1;
    }
    let budget = lambda_c * lambda_c * total;
    let mut discarded = 0.0;
    let mut rank = n;
    while rank > 1 {
        let s = singular_values[rank - 1];
        if discarded + s * s > budget {
            break;
        }
        discarded += s * s;
        rank -= 1;
    }
    // ties across the cut stay together
    let scale = singular_values[0];
    while rank < n && (singular_values[rank - 1] - singular_values[rank]).abs() <= 1e-13 * scale {
        rank += 1;
    }
    rank
}

/// Thin SVD of `m`, truncated under the relative-weight cutoff `lambda_c`.
pub fn svd_truncate(m: &Matrix, lambda_c: f64) -> Result<TruncatedSvd> {
    if !(lambda_c >= 0.0) {
        return Err(Error::Domain(format!(
            "cutoff must be >= 0, got {lambda_c}"
        )));
    }
    if !m.is_finite() {
        return Err(Error::Numeric(
            "non-finite entry in matrix passed to SVD".into(),
        ));
    }
    if m.rows() == 0 || m.cols() == 0 {
        return Err(Error::Dimension("SVD of an empty matrix".into()));
    }
    let svd = m
        .as_faer()
        .thin_svd()
        .map_err(|e| Error::Numeric(format!("SVD did not converge: {e:?}")))?;
    let s = svd.S().column_vector();
    let sigma: Vec<f64> = (0..s.nrows()).map(|i| s[i].re.max(0.0)).collect();
    if sigma.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("non-finite singular value".into()));
    }
    let rank = truncation_rank(&sigma, lambda_c);
    let total_weight: f64 = sigma.iter().map(|x| x * x).sum();
    let discarded_weight: f64 = sigma[rank..].iter().map(|x| x * x).sum();

    let u = svd.U();
    let v = svd.V();
    let u = Matrix::from_fn(m.rows(), rank, |i, j| u[(i, j)]);
    let v_dag = Matrix::from_fn(rank, m.cols(), |i, j| v[(j, i)].conj());
    Ok(TruncatedSvd {
        u,
        singular_values: sigma[..rank].to_vec(),
        v_dag,
        discarded_weight,
        total_weight,
    })
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a
/// Hermitian matrix. Only the lower triangle is read.
pub fn hermitian_eigen(m: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "eigen of {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_finite() {
        return Err(Error::Numeric(
            "non-finite entry in matrix passed to eigensolver".into(),
        ));
    }
    let evd = m
        .as_faer()
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Numeric(format!("eigensolver did not converge: {e:?}")))?;
    let s = evd.S().column_vector();
    let values = (0..s.nrows()).map(|i| s[i].re).collect();
    let u = evd.U();
    Ok((
        values,
        Matrix::from_fn(m.rows(), m.cols(), |i, j| u[(i, j)]),
    ))
}

pub(crate) fn scale_columns(m: &mut Matrix, s: &[f64]) {
    let cols = m.cols();
    for row in m.data_mut().chunks_exact_mut(cols.max(1)) {
        for (z, &x) in row.iter_mut().zip(s) {
            *z *= x;
        }
    }
}

pub(crate) fn scale_rows(m: &mut Matrix, s: &[f64]) {
    let cols = m.cols();
    for (row, &x) in m.data_mut().chunks_exact_mut(cols.max(1)).zip(s) {
        for z in row {
            *z *= x;
        }
    }
}

/// Dense multi-index tensor with row-major storage and optional index labels.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<C64>,
    labels: Option<Vec<String>>,
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<C64>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::Dimension(format!("zero extent in shape {shape:?}")));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::Dimension(format!(
                "shape {shape:?} holds {n} values, got {}",
                data.len()
            )));
        }
        Ok(DenseTensor {
            shape,
            data,
            labels: None,
        })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        DenseTensor {
            shape,
            data: vec![ZERO; n],
            labels: None,
        }
    }

    pub fn scalar(v: C64) -> Self {
        DenseTensor {
            shape: vec![],
            data: vec![v],
            labels: None,
        }
    }

    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> C64) -> Self {
        let n: usize = shape.iter().product();
        let mut idx = vec![0usize; shape.len()];
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(f(&idx));
            increment(&mut idx, &shape);
        }
        DenseTensor {
            shape,
            data,
            labels: None,
        }
    }

    pub fn with_labels<S: Into<String>>(mut self, labels: Vec<S>) -> Result<Self> {
        if labels.len() != self.shape.len() {
            return Err(Error::Dimension(format!(
                "{} labels for a rank-{} tensor",
                labels.len(),
                self.shape.len()
            )));
        }
        self.labels = Some(labels.into_iter().map(Into::into).collect());
        Ok(self)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn strides(&self) -> Vec<usize> {
        row_major_strides(&self.shape)
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        idx.iter()
            .zip(&self.shape)
            .rev()
            .fold((0usize, 1usize), |(off, stride), (&i, &e)| {
                debug_assert!(i < e);
                (off + i * stride, stride * e)
            })
            .0
    }

    pub fn get(&self, idx: &[usize]) -> C64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: C64) {
        let off = self.offset(idx);
        self.data[off] = v;
    }

    /// Reinterprets the data under a new shape; linear order is untouched.
    /// Labels are dropped.
    pub fn reshape(self, shape: Vec<usize>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != self.data.len() || shape.contains(&0) {
            return Err(Error::Dimension(format!(
                "cannot reshape {:?} into {shape:?}",
                self.shape
            )));
        }
        Ok(DenseTensor {
            shape,
            data: self.data,
            labels: None,
        })
    }

    /// Reorders axes: axis `a` of the result is axis `perm[a]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let r = self.rank();
        let mut seen = vec![false; r];
        if perm.len() != r
            || perm
                .iter()
                .any(|&p| p >= r || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::Dimension(format!(
                "invalid permutation {perm:?} for rank {r}"
            )));
        }
        let new_shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let old_strides = self.strides();
        let strides: Vec<usize> = perm.iter().map(|&p| old_strides[p]).collect();
        let mut idx = vec![0usize; r];
        let mut data = Vec::with_capacity(self.data.len());
        for _ in 0..self.data.len() {
            let off: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
            data.push(self.data[off]);
            increment(&mut idx, &new_shape);
        }
        let labels = self
            .labels
            .as_ref()
            .map(|l| perm.iter().map(|&p| l[p].clone()).collect());
        Ok(DenseTensor {
            shape: new_shape,
            data,
            labels,
        })
    }

    pub fn conj(&self) -> Self {
        DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|z| z.conj()).collect(),
            labels: self.labels.clone(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Groups the first `row_axes` axes into rows and the rest into columns.
    pub fn matricize(&self, row_axes: usize) -> Result<Matrix> {
        if row_axes > self.rank() {
            return Err(Error::Dimension(format!(
                "cannot split rank {} at {row_axes}",
                self.rank()
            )));
        }
        let rows: usize = self.shape[..row_axes].iter().product();
        let cols: usize = self.shape[row_axes..].iter().product();
        Matrix::from_vec(rows, cols, self.data.clone())
    }

    /// Sums over the paired axes `(axis of self, axis of other)`. The result
    /// carries the free axes of `self` followed by those of `other`, each in
    /// original order.
    pub fn contract(&self, other: &DenseTensor, pairs: &[(usize, usize)]) -> Result<DenseTensor> {
        for &(a, b) in pairs {
            if a >= self.rank() || b >= other.rank() {
                return Err(Error::Dimension(format!(
                    "contraction axis ({a},{b}) out of range"
                )));
            }
            if self.shape[a] != other.shape[b] {
                return Err(Error::Dimension(format!(
                    "axis {a} has extent {} but paired axis {b} has extent {}",
                    self.shape[a], other.shape[b]
                )));
            }
        }
        let ca: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let cb: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        if has_duplicates(&ca) || has_duplicates(&cb) {
            return Err(Error::Dimension("axis paired twice".into()));
        }
        let free_a: Vec<usize> = (0..self.rank()).filter(|i| !ca.contains(i)).collect();
        let free_b: Vec<usize> = (0..other.rank()).filter(|i| !cb.contains(i)).collect();

        let perm_a: Vec<usize> = free_a.iter().chain(&ca).copied().collect();
        let perm_b: Vec<usize> = cb.iter().chain(&free_b).copied().collect();
        let pa = self.permute(&perm_a)?;
        let pb = other.permute(&perm_b)?;

        let m: usize = free_a.iter().map(|&i| self.shape[i]).product();
        let k: usize = ca.iter().map(|&i| self.shape[i]).product();
        let n: usize = free_b.iter().map(|&i| other.shape[i]).product();
        let mut out = vec![ZERO; m * n];
        gemm(&mut out, &pa.data, &pb.data, m, k, n);

        let shape: Vec<usize> = free_a
            .iter()
            .map(|&i| self.shape[i])
            .chain(free_b.iter().map(|&i| other.shape[i]))
            .collect();
        let labels = match (&self.labels, &other.labels) {
            (Some(la), Some(lb)) => Some(
                free_a
                    .iter()
                    .map(|&i| la[i].clone())
                    .chain(free_b.iter().map(|&i| lb[i].clone()))
                    .collect(),
            ),
            _ => None,
        };
        Ok(DenseTensor {
            shape,
            data: out,
            labels,
        })
    }

    /// Contracts every label that appears on both operands.
    pub fn contract_shared(&self, other: &DenseTensor) -> Result<DenseTensor> {
        let (la, lb) = match (&self.labels, &other.labels) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::Dimension("both operands need labels".into())),
        };
        let pairs: Vec<(usize, usize)> = la
            .iter()
            .enumerate()
            .filter_map(|(i, l)| lb.iter().position(|m| m == l).map(|j| (i, j)))
            .collect();
        self.contract(other, &pairs)
    }
}

fn has_duplicates(v: &[usize]) -> bool {
    v.iter().enumerate().any(|(i, x)| v[..i].contains(x))
}

pub(crate) fn row_major_strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * shape[i + 1];
    }
    strides
}

/// Advances a row-major multi-index; wraps to all zeros after the last one.
pub(crate) fn increment(idx: &mut [usize], shape: &[usize]) {
    for ax in (0..idx.len()).rev() {
        idx[ax] += 1;
        if idx[ax] < shape[ax] {
            return;
        }
        idx[ax] = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_tensor(rng: &mut StdRng, shape: Vec<usize>) -> DenseTensor {
        DenseTensor::from_fn(shape, |_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
    }

    #[test]
    fn identity_contracted_with_vector() {
        let id = DenseTensor::new(vec![2, 2], vec![ONE, ZERO, ZERO, ONE]).unwrap();
        let v = DenseTensor::new(vec![2], vec![c(1.0, 0.0), c(2.0, 0.0)]).unwrap();
        let r = id.contract(&v, &[(1, 0)]).unwrap();
        assert_eq!(r.shape(), &[2]);
        assert_eq!(r.data(), &[c(1.0, 0.0), c(2.0, 0.0)]);
    }

    #[test]
    fn outer_product_contracted_with_conjugate() {
        let u = [c(1.0, 2.0), c(-0.5, 0.0), c(0.0, 3.0)];
        let v = [c(0.3, -1.0), c(2.0, 0.5)];
        let outer = DenseTensor::from_fn(vec![3, 2], |i| u[i[0]] * v[i[1]]);
        let vc = DenseTensor::new(vec![2], v.iter().map(|z| z.conj()).collect()).unwrap();
        let r = outer.contract(&vc, &[(1, 0)]).unwrap();
        let nv: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        for (a, b) in r.data().iter().zip(&u) {
            assert!((a - b * nv).norm() < 1e-14);
        }
    }

    #[test]
    fn contraction_matches_naive_loops() {
        let mut rng = StdRng::seed_from_u64(7);
        let a = random_tensor(&mut rng, vec![3, 4, 5]);
        let b = random_tensor(&mut rng, vec![5, 4]);
        let r = a.contract(&b, &[(1, 1), (2, 0)]).unwrap();
        assert_eq!(r.shape(), &[3]);
        for i in 0..3 {
            let mut acc = ZERO;
            for j in 0..4 {
                for k in 0..5 {
                    acc += a.get(&[i, j, k]) * b.get(&[k, j]);
                }
            }
            assert!((r.get(&[i]) - acc).norm() < 1e-13);
        }
    }

    #[test]
    fn contraction_extent_mismatch_is_rejected() {
        let a = DenseTensor::zeros(vec![2, 3]);
        let b = DenseTensor::zeros(vec![4, 2]);
        assert!(matches!(
            a.contract(&b, &[(1, 0)]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn labelled_contraction() {
        let mut rng = StdRng::seed_from_u64(3);
        let a = random_tensor(&mut rng, vec![2, 3])
            .with_labels(vec!["i", "j"])
            .unwrap();
        let b = random_tensor(&mut rng, vec![3, 4])
            .with_labels(vec!["j", "k"])
            .unwrap();
        let r = a.contract_shared(&b).unwrap();
        assert_eq!(r.labels().unwrap(), &["i".to_string(), "k".to_string()]);
        let expect = a
            .matricize(1)
            .unwrap()
            .matmul(&b.matricize(1).unwrap())
            .unwrap();
        assert!(r.matricize(1).unwrap().max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn reshape_and_permute() {
        let t = DenseTensor::from_fn(vec![2, 3], |i| c((i[0] * 3 + i[1]) as f64, 0.0));
        let r = t.clone().reshape(vec![3, 2]).unwrap();
        assert_eq!(r.data(), t.data());
        assert!(t.clone().reshape(vec![4, 2]).is_err());
        let p = t.permute(&[1, 0]).unwrap();
        assert_eq!(p.shape(), &[3, 2]);
        assert_eq!(p.get(&[2, 1]), t.get(&[1, 2]));
    }

    #[test]
    fn svd_drops_tiny_singular_value() {
        let m = Matrix::diag(&[ONE, c(1e-8, 0.0)]);
        let s = svd_truncate(&m, 1e-6).unwrap();
        assert_eq!(s.rank(), 1);
        assert!((s.discarded_weight - 1e-16).abs() < 1e-30);
    }

    #[test]
    fn svd_zero_cutoff_is_exact() {
        let mut rng = StdRng::seed_from_u64(11);
        let m = Matrix::from_fn(7, 5, |_, _| {
            c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let s = svd_truncate(&m, 0.0).unwrap();
        assert_eq!(s.rank(), 5);
        let err = s.reconstruct().sub(&m).unwrap().frobenius_norm();
        assert!(err <= 1e-12 * m.frobenius_norm());
        let uhu = s.u.adjoint().matmul(&s.u).unwrap();
        assert!(uhu.max_abs_diff(&Matrix::identity(5)) < 1e-12);
        let vvh = s.v_dag.matmul(&s.v_dag.adjoint()).unwrap();
        assert!(vvh.max_abs_diff(&Matrix::identity(5)) < 1e-12);
    }

    #[test]
    fn svd_rejects_non_finite() {
        let m = Matrix::diag(&[ONE, c(f64::NAN, 0.0)]);
        assert!(matches!(svd_truncate(&m, 0.0), Err(Error::Numeric(_))));
    }

    #[test]
    fn degenerate_multiplet_is_not_split() {
        // dropping the last of three equal values would stay within budget
        let s = [1.0, 0.01, 0.01, 0.01];
        assert_eq!(truncation_rank(&s, 0.0101), 4);
        assert_eq!(truncation_rank(&s, 0.02), 1);
    }
}
