//! Dense complex matrices that carry row and column [`Layout`]s.
//!
//! Conventions (see `docs/CONVENTIONS.md`):
//! * entries are stored row-major;
//! * `vec` is row-major stacking, so `vec(|a><b|) = |a>|b>`;
//! * Kronecker products follow the same row-major order, hence
//!   `vec(A B C) = (A ⊗ Cᵀ) vec(B)`.

use std::ops::Deref;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::layout::Layout;
use crate::scalar::{cone, creal, czero, Cx, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T: Real> {
    rows: Layout,
    cols: Layout,
    data: Vec<Cx<T>>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: Layout, cols: Layout) -> Self {
        let n = rows.total_dim() * cols.total_dim();
        Matrix { rows, cols, data: vec![czero(); n] }
    }

    pub fn identity(layout: &Layout) -> Self {
        let mut m = Self::zeros(layout.clone(), layout.clone());
        for i in 0..layout.total_dim() {
            m.set(i, i, cone());
        }
        m
    }

    pub fn from_vec(rows: Layout, cols: Layout, data: Vec<Cx<T>>) -> Result<Self> {
        let n = rows.total_dim() * cols.total_dim();
        if data.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "expected {n} entries for {rows} x {cols}, got {}",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_fn(rows: Layout, cols: Layout, mut f: impl FnMut(usize, usize) -> Cx<T>) -> Self {
        let (nr, nc) = (rows.total_dim(), cols.total_dim());
        let mut data = Vec::with_capacity(nr * nc);
        for r in 0..nr {
            for c in 0..nc {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    /// A column vector (column layout is the scalar layout).
    pub fn column(layout: Layout, data: Vec<Cx<T>>) -> Result<Self> {
        Self::from_vec(layout, Layout::scalar(), data)
    }

    /// Outer product `a b†` of two column vectors.
    pub fn outer(a: &[Cx<T>], b: &[Cx<T>], rows: Layout, cols: Layout) -> Result<Self> {
        if a.len() != rows.total_dim() || b.len() != cols.total_dim() {
            return Err(Error::DimensionMismatch("outer product operands".into()));
        }
        Ok(Self::from_fn(rows, cols, |r, c| a[r] * b[c].conj()))
    }

    pub fn row_layout(&self) -> &Layout {
        &self.rows
    }

    pub fn col_layout(&self) -> &Layout {
        &self.cols
    }

    pub fn nrows(&self) -> usize {
        self.rows.total_dim()
    }

    pub fn ncols(&self) -> usize {
        self.cols.total_dim()
    }

    pub fn is_square(&self) -> bool {
        self.nrows() == self.ncols()
    }

    pub fn data(&self) -> &[Cx<T>] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Cx<T>] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Cx<T>> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Cx<T> {
        self.data[r * self.cols.total_dim() + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Cx<T>) {
        let nc = self.cols.total_dim();
        self.data[r * nc + c] = v;
    }

    #[inline]
    pub fn add_at(&mut self, r: usize, c: usize, v: Cx<T>) {
        let nc = self.cols.total_dim();
        self.data[r * nc + c] += v;
    }

    pub fn column_data(&self, c: usize) -> Vec<Cx<T>> {
        (0..self.nrows()).map(|r| self.get(r, c)).collect()
    }

    /// Replaces both layouts; only the total dimensions must agree.
    pub fn with_layouts(self, rows: Layout, cols: Layout) -> Result<Self> {
        if rows.total_dim() != self.rows.total_dim() || cols.total_dim() != self.cols.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "cannot view {} x {} as {rows} x {cols}",
                self.rows, self.cols
            )));
        }
        Ok(Matrix { rows, cols, data: self.data })
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols.clone(), self.rows.clone(), |r, c| self.get(c, r).conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols.clone(), self.rows.clone(), |r, c| self.get(c, r))
    }

    pub fn conj(&self) -> Self {
        Matrix {
            rows: self.rows.clone(),
            cols: self.cols.clone(),
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Matrix product; the inner dimensions must agree. The result takes the
    /// row layout of `self` and the column layout of `rhs`.
    pub fn matmul(&self, rhs: &Matrix<T>) -> Result<Matrix<T>> {
        if self.ncols() != rhs.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "product of {} x {} with {} x {}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let (n, k, m) = (self.nrows(), self.ncols(), rhs.ncols());
        let mut out = vec![czero::<T>(); n * m];
        for i in 0..n {
            let orow = &mut out[i * m..(i + 1) * m];
            for p in 0..k {
                let a = self.data[i * k + p];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                let brow = &rhs.data[p * m..(p + 1) * m];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * *b;
                }
            }
        }
        Ok(Matrix { rows: self.rows.clone(), cols: rhs.cols.clone(), data: out })
    }

    pub fn mul_vec(&self, v: &[Cx<T>]) -> Result<Vec<Cx<T>>> {
        if v.len() != self.ncols() {
            return Err(Error::DimensionMismatch("matrix-vector product".into()));
        }
        let nc = self.ncols();
        Ok((0..self.nrows())
            .map(|r| {
                self.data[r * nc..(r + 1) * nc]
                    .iter()
                    .zip(v)
                    .fold(czero(), |acc, (a, b)| acc + *a * *b)
            })
            .collect())
    }

    fn check_same_shape(&self, other: &Matrix<T>) -> Result<()> {
        if self.nrows() != other.nrows() || self.ncols() != other.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} x {} vs {} x {}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_same_shape(other)?;
        Ok(Matrix {
            rows: self.rows.clone(),
            cols: self.cols.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a + *b).collect(),
        })
    }

    pub fn sub(&self, other: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_same_shape(other)?;
        Ok(Matrix {
            rows: self.rows.clone(),
            cols: self.cols.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a - *b).collect(),
        })
    }

    pub fn scale(&self, s: T) -> Matrix<T> {
        self.scale_complex(creal(s))
    }

    pub fn scale_complex(&self, s: Cx<T>) -> Matrix<T> {
        Matrix {
            rows: self.rows.clone(),
            cols: self.cols.clone(),
            data: self.data.iter().map(|a| *a * s).collect(),
        }
    }

    pub fn trace(&self) -> Cx<T> {
        (0..self.nrows().min(self.ncols())).fold(czero(), |acc, i| acc + self.get(i, i))
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    /// Hilbert–Schmidt inner product `Tr(self† other)`.
    pub fn inner(&self, other: &Matrix<T>) -> Result<Cx<T>> {
        self.check_same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).fold(czero(), |acc, (a, b)| acc + a.conj() * *b))
    }

    /// Kronecker product; row and column layouts are concatenated and must
    /// not share labels.
    pub fn tensor(&self, other: &Matrix<T>) -> Result<Matrix<T>> {
        let rows = self.rows.concat(&other.rows)?;
        let cols = self.cols.concat(&other.cols)?;
        let (r2, c2) = (other.nrows(), other.ncols());
        let nc = self.ncols() * c2;
        let mut data = vec![czero(); self.nrows() * r2 * nc];
        for i1 in 0..self.nrows() {
            for j1 in 0..self.ncols() {
                let a = self.get(i1, j1);
                if a == czero() {
                    continue;
                }
                for i2 in 0..r2 {
                    let base = (i1 * r2 + i2) * nc + j1 * c2;
                    for j2 in 0..c2 {
                        data[base + j2] = a * other.get(i2, j2);
                    }
                }
            }
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Reorders row and column factors independently.
    pub fn permute(&self, row_order: &[&str], col_order: &[&str]) -> Result<Matrix<T>> {
        let pr = self.rows.permutation_indices(row_order)?;
        let pc = self.cols.permutation_indices(col_order)?;
        let rows = self.rows.select(row_order)?;
        let cols = self.cols.select(col_order)?;
        let nc = self.ncols();
        let mut data = Vec::with_capacity(self.data.len());
        for &r in &pr {
            for &c in &pc {
                data.push(self.data[r * nc + c]);
            }
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Partial trace over factors present in both the row and column layouts.
    pub fn partial_trace(&self, labels: &[&str]) -> Result<Matrix<T>> {
        for l in labels {
            let dr = self.rows.dim_of(l)?;
            let dc = self.cols.dim_of(l)?;
            if dr != dc {
                return Err(Error::DimensionMismatch(format!("factor `{l}` differs between rows and columns")));
            }
        }
        let rows = self.rows.without(labels)?;
        let cols = self.cols.without(labels)?;
        let row_keep: Vec<&str> = rows.labels();
        let col_keep: Vec<&str> = cols.labels();
        let kr = self.rows.offsets(&row_keep)?;
        let kc = self.cols.offsets(&col_keep)?;
        let tr = self.rows.offsets(labels)?;
        let tc = self.cols.offsets(labels)?;
        let nc = self.ncols();
        let mut data = Vec::with_capacity(kr.len() * kc.len());
        for &r in &kr {
            for &c in &kc {
                let mut acc = czero();
                for (a, b) in tr.iter().zip(&tc) {
                    acc += self.data[(r + a) * nc + c + b];
                }
                data.push(acc);
            }
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Row-major vectorization: `vec(|a><b|) = |a>|b>`. The result is a
    /// column vector on the concatenated layout.
    pub fn vec(&self) -> Result<Matrix<T>> {
        let layout = self.rows.concat(&self.cols)?;
        Matrix::column(layout, self.data.clone())
    }

    /// Inverse of [`Matrix::vec`] for the given split of a vector.
    pub fn unvec(v: &[Cx<T>], rows: Layout, cols: Layout) -> Result<Matrix<T>> {
        Matrix::from_vec(rows, cols, v.to_vec())
    }

    /// Applies `op` to the row factors named by `op`'s column layout. The
    /// result keeps the remaining row factors in order and appends `op`'s
    /// row factors after them; columns are untouched.
    pub fn apply_left_on(&self, op: &Matrix<T>) -> Result<Matrix<T>> {
        let acted: Vec<&str> = op.cols.labels();
        for l in &acted {
            let d = self.rows.dim_of(l)?;
            if d != op.cols.dim_of(l)? {
                return Err(Error::DimensionMismatch(format!("factor `{l}`")));
            }
        }
        let rest = self.rows.without(&acted)?;
        let out_rows = rest.concat(&op.rows)?;
        let rest_off = self.rows.offsets(&rest.labels())?;
        let in_off = self.rows.offsets(&acted)?;
        let nc = self.ncols();
        let (no, ni) = (op.nrows(), op.ncols());
        let mut data = vec![czero(); out_rows.total_dim() * nc];
        for (ri, &r) in rest_off.iter().enumerate() {
            for o in 0..no {
                let dst = (ri * no + o) * nc;
                for (i, &io) in in_off.iter().enumerate() {
                    let a = op.data[o * ni + i];
                    if a == czero() {
                        continue;
                    }
                    let src = (r + io) * nc;
                    for c in 0..nc {
                        data[dst + c] += a * self.data[src + c];
                    }
                }
            }
        }
        Ok(Matrix { rows: out_rows, cols: self.cols.clone(), data })
    }

    /// Tensors in an identity on fresh factors (appended to both sides).
    pub fn extend_identity(&self, fresh: &Layout) -> Result<Matrix<T>> {
        if fresh.is_empty() {
            return Ok(self.clone());
        }
        self.tensor(&Matrix::identity(fresh))
    }

    pub fn hermiticity_deviation(&self) -> T {
        if !self.is_square() {
            return T::infinity();
        }
        let n = self.nrows();
        let mut dev = T::zero();
        for r in 0..n {
            for c in r..n {
                dev = dev.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        dev
    }
}

/// Square Hermitian matrix on a single layout, stored as `(M + M†)/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Hermitian<T: Real> {
    inner: Matrix<T>,
}

impl<T: Real> Deref for Hermitian<T> {
    type Target = Matrix<T>;

    fn deref(&self) -> &Matrix<T> {
        &self.inner
    }
}

impl<T: Real> Hermitian<T> {
    /// Default relative hermiticity tolerance.
    pub fn default_tol() -> T {
        T::lit(1e-12)
    }

    /// Accepts `m` if `‖m − m†‖_max ≤ tol · ‖m‖_max`, storing the
    /// Hermitian part.
    pub fn with_tol(m: Matrix<T>, tol: T) -> Result<Self> {
        if m.row_layout() != m.col_layout() {
            return Err(Error::LayoutMismatch(format!(
                "Hermitian operator needs equal row/column layouts, got {} and {}",
                m.row_layout(),
                m.col_layout()
            )));
        }
        let dev = m.hermiticity_deviation();
        let scale = m.max_abs();
        if dev > tol * scale && dev > T::epsilon() {
            return Err(Error::NotHermitian(dev.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Self::symmetrized(m))
    }

    pub fn new(m: Matrix<T>) -> Result<Self> {
        Self::with_tol(m, Self::default_tol())
    }

    /// Stores the Hermitian part of a square matrix without checking.
    pub fn symmetrized(mut m: Matrix<T>) -> Self {
        let n = m.nrows();
        let half = T::lit(0.5);
        for r in 0..n {
            let d = m.get(r, r);
            m.set(r, r, creal(d.re));
            for c in r + 1..n {
                let v = (m.get(r, c) + m.get(c, r).conj()) * half;
                m.set(r, c, v);
                m.set(c, r, v.conj());
            }
        }
        Hermitian { inner: m }
    }

    /// Symmetrizes a matrix with possibly different (but equal-dimension)
    /// row and column layouts, keeping the row layout.
    pub fn from_square(m: Matrix<T>) -> Result<Self> {
        let rows = m.row_layout().clone();
        let m = m.with_layouts(rows.clone(), rows)?;
        Ok(Self::symmetrized(m))
    }

    pub fn zeros(layout: &Layout) -> Self {
        Hermitian { inner: Matrix::zeros(layout.clone(), layout.clone()) }
    }

    pub fn identity(layout: &Layout) -> Self {
        Hermitian { inner: Matrix::identity(layout) }
    }

    /// `v v†` for a vector on `layout`.
    pub fn projector(v: &[Cx<T>], layout: &Layout) -> Result<Self> {
        Ok(Self::symmetrized(Matrix::outer(v, v, layout.clone(), layout.clone())?))
    }

    pub fn from_real_diagonal(layout: &Layout, diag: &[T]) -> Result<Self> {
        if diag.len() != layout.total_dim() {
            return Err(Error::DimensionMismatch("diagonal length".into()));
        }
        let mut m = Matrix::zeros(layout.clone(), layout.clone());
        for (i, d) in diag.iter().enumerate() {
            m.set(i, i, creal(*d));
        }
        Ok(Hermitian { inner: m })
    }

    pub fn layout(&self) -> &Layout {
        self.inner.row_layout()
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn as_matrix(&self) -> &Matrix<T> {
        &self.inner
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.inner
    }

    pub fn trace_real(&self) -> T {
        self.inner.trace().re
    }

    /// Real Hilbert–Schmidt inner product.
    pub fn inner_real(&self, other: &Hermitian<T>) -> Result<T> {
        Ok(self.inner.inner(&other.inner)?.re)
    }

    pub fn add(&self, other: &Hermitian<T>) -> Result<Self> {
        Ok(Hermitian { inner: self.inner.add(&other.inner)? })
    }

    pub fn sub(&self, other: &Hermitian<T>) -> Result<Self> {
        Ok(Hermitian { inner: self.inner.sub(&other.inner)? })
    }

    pub fn scale(&self, s: T) -> Self {
        Hermitian { inner: self.inner.scale(s) }
    }

    pub fn tensor(&self, other: &Hermitian<T>) -> Result<Self> {
        Ok(Hermitian { inner: self.inner.tensor(&other.inner)? })
    }

    pub fn partial_trace(&self, labels: &[&str]) -> Result<Self> {
        Ok(Self::symmetrized(self.inner.partial_trace(labels)?))
    }

    /// Conjugation by the factor-permutation isometry taking the current
    /// order to `target`.
    pub fn permute_factors(&self, target: &[&str]) -> Result<Self> {
        Ok(Hermitian { inner: self.inner.permute(target, target)? })
    }

    pub fn relabel(&self, renames: &[(&str, &str)]) -> Result<Self> {
        let l = self.layout().relabel(renames)?;
        Ok(Hermitian { inner: self.inner.clone().with_layouts(l.clone(), l)? })
    }

    /// Entrywise complex conjugate (equivalently the transpose).
    pub fn conj(&self) -> Self {
        Hermitian { inner: self.inner.conj() }
    }

    /// `K self K†`.
    pub fn conjugate_by(&self, k: &Matrix<T>) -> Result<Self> {
        let m = k.matmul(&self.inner)?.matmul(&k.adjoint())?;
        let rows = k.row_layout().clone();
        Ok(Self::symmetrized(m.with_layouts(rows.clone(), rows)?))
    }
}

/// Tensor product of two matrices (free-function form).
pub fn tensor_product<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    a.tensor(b)
}

pub fn partial_trace<T: Real>(m: &Hermitian<T>, labels: &[&str]) -> Result<Hermitian<T>> {
    m.partial_trace(labels)
}

pub fn permute_factors<T: Real>(m: &Hermitian<T>, target: &[&str]) -> Result<Hermitian<T>> {
    m.permute_factors(target)
}

/// The unitary `W` reversing the order of all factors of `layout`; it maps
/// `layout` to `layout.reversed()`.
pub fn reversal_isometry<T: Real>(layout: &Layout) -> Matrix<T> {
    let rev = layout.reversed();
    let target: Vec<&str> = rev.labels();
    let perm = layout
        .permutation_indices(&target)
        .expect("reversed labels form a permutation");
    let mut w = Matrix::zeros(rev.clone(), layout.clone());
    for (new, &old) in perm.iter().enumerate() {
        w.set(new, old, cone());
    }
    w
}

/// Row-major vectorization as a plain vector.
pub fn vec<T: Real>(m: &Matrix<T>) -> Vec<Cx<T>> {
    m.data().to_vec()
}

/// `vec(I)` on `layout ⊗ copy`, the unnormalized maximally entangled vector.
pub fn vec_identity<T: Real>(dim: usize) -> Vec<Cx<T>> {
    let mut v = vec![czero(); dim * dim];
    for a in 0..dim {
        v[a * dim + a] = Complex::new(T::one(), T::zero());
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = Matrix<f64>;

    fn lay(spec: &[(&str, usize)]) -> Layout {
        Layout::new(spec.iter().map(|(l, d)| (l.to_string(), *d))).unwrap()
    }

    fn seq(rows: Layout, cols: Layout) -> M {
        M::from_fn(rows, cols, |r, c| Complex::new(r as f64 + 0.5, c as f64 - 0.25 * r as f64))
    }

    #[test]
    fn identity_tensor_identity() {
        let a = M::identity(&lay(&[("a", 2)]));
        let b = M::identity(&lay(&[("b", 3)]));
        let ab = a.tensor(&b).unwrap();
        assert_eq!(ab.data(), M::identity(&lay(&[("a", 2), ("b", 3)])).data());
    }

    #[test]
    fn scalar_factor_tensor() {
        let one = M::from_vec(Layout::scalar(), Layout::scalar(), vec![Complex::new(1.0, 0.0)]).unwrap();
        let a = seq(lay(&[("a", 2)]), lay(&[("a", 2)]));
        let out = one.tensor(&a).unwrap();
        assert_eq!(out, a);
    }

    #[test]
    fn tensor_label_collision() {
        let a = M::identity(&lay(&[("a", 2)]));
        assert!(matches!(a.tensor(&a), Err(Error::LabelCollision(_))));
    }

    #[test]
    fn partial_trace_unknown_label() {
        let a = Hermitian::<f64>::identity(&lay(&[("a", 2)]));
        assert!(matches!(a.partial_trace(&["z"]), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn maximally_entangled_marginal() {
        let l = lay(&[("a", 3), ("b", 3)]);
        let v = vec_identity::<f64>(3);
        let p = Hermitian::projector(&v, &l).unwrap();
        let m = p.partial_trace(&["a"]).unwrap();
        assert_eq!(m.data(), M::identity(&lay(&[("b", 3)])).data());
    }

    #[test]
    fn vec_examples() {
        let i2 = M::identity(&lay(&[("a", 2)]));
        let v: Vec<f64> = vec(&i2).iter().map(|z| z.re).collect();
        assert_eq!(v, vec![1.0, 0.0, 0.0, 1.0]);
        let mut e01 = M::zeros(lay(&[("a", 2)]), lay(&[("b", 2)]));
        e01.set(0, 1, Complex::new(1.0, 0.0));
        let v: Vec<f64> = vec(&e01).iter().map(|z| z.re).collect();
        assert_eq!(v, vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn reversal_single_factor_is_identity() {
        let l = lay(&[("a", 4)]);
        let w = reversal_isometry::<f64>(&l);
        assert_eq!(w.data(), M::identity(&l).data());
    }

    #[test]
    fn hermitian_rejects_asymmetric() {
        let l = lay(&[("a", 2)]);
        let m = seq(l.clone(), l);
        assert!(matches!(Hermitian::new(m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn permute_identity_order_is_noop() {
        let l = lay(&[("a", 2), ("b", 3)]);
        let m = Hermitian::symmetrized(seq(l.clone(), l));
        assert_eq!(m.permute_factors(&["a", "b"]).unwrap(), m);
        assert_eq!(m.permute_factors(&["b"]), Err(Error::NotAPermutation));
    }
}
