//! Spectral routines for dense complex matrices.
//!
//! The Hermitian eigensolver reduces to a real symmetric tridiagonal matrix
//! by complex Householder reflections and a diagonal phase change, then
//! runs implicit QL with Wilkinson shifts. It is fully deterministic:
//! eigenvalues come out descending and each eigenvector has its first
//! non-negligible component real and positive.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::layout::Layout;
use crate::matrix::{Hermitian, Matrix};
use crate::scalar::{cone, creal, czero, Cx, Real};

/// Relative PSD tolerance: eigenvalues down to `-PSD_REL_TOL * max|λ|` are
/// clipped to zero, anything lower is rejected.
pub const PSD_REL_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct Eigen<T: Real> {
    /// Descending.
    pub values: Vec<T>,
    /// Orthonormal eigenvectors as columns; rows carry the operator layout.
    pub vectors: Matrix<T>,
}

impl<T: Real> Eigen<T> {
    pub fn vector(&self, j: usize) -> Vec<Cx<T>> {
        self.vectors.column_data(j)
    }

    pub fn max_abs_value(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Rebuilds `Σ f(λ_i) v_i v_i†` on `layout`.
    pub fn reconstruct_with(&self, layout: &Layout, f: impl Fn(T) -> T) -> Hermitian<T> {
        let n = self.values.len();
        let fv: Vec<T> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = Matrix::zeros(layout.clone(), layout.clone());
        for j in 0..n {
            if fv[j] == T::zero() {
                continue;
            }
            let v = self.vector(j);
            for r in 0..n {
                let a = v[r] * fv[j];
                if a == czero() {
                    continue;
                }
                for c in 0..n {
                    out.add_at(r, c, a * v[c].conj());
                }
            }
        }
        Hermitian::symmetrized(out)
    }
}

fn eig_layout(n: usize) -> Layout {
    Layout::single("eig", n).expect("positive dimension")
}

/// Eigendecomposition of a Hermitian operator.
pub fn eig_hermitian<T: Real>(m: &Hermitian<T>) -> Result<Eigen<T>> {
    let n = m.dim();
    let mut a: Vec<Cx<T>> = m.data().to_vec();
    let mut q: Vec<Cx<T>> = Matrix::<T>::identity(&eig_layout(n)).into_data();
    let two = T::lit(2.0);

    // Householder reduction to Hermitian tridiagonal form, A = Q T Q†.
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let x: Vec<Cx<T>> = (0..len).map(|i| a[(k + 1 + i) * n + k]).collect();
        let tail: T = x[1..].iter().map(|z| z.norm_sqr()).sum();
        if tail == T::zero() {
            continue;
        }
        let norm = (tail + x[0].norm_sqr()).sqrt();
        let phase = if x[0].norm() > T::zero() { x[0] / x[0].norm() } else { cone() };
        let alpha = -phase * norm;
        let mut v = x.clone();
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if vnorm == T::zero() {
            continue;
        }
        for z in v.iter_mut() {
            *z = *z / vnorm;
        }
        let off = k + 1;
        let mut p = vec![czero::<T>(); len];
        for i in 0..len {
            let row = &a[(off + i) * n + off..(off + i) * n + n];
            p[i] = row.iter().zip(&v).fold(czero(), |acc, (aij, vj)| acc + *aij * *vj);
        }
        let kk = v.iter().zip(&p).fold(czero::<T>(), |acc, (vi, pi)| acc + vi.conj() * *pi).re;
        let qv: Vec<Cx<T>> = p.iter().zip(&v).map(|(pi, vi)| *pi - *vi * kk).collect();
        for i in 0..len {
            for j in 0..len {
                let upd = (v[i] * qv[j].conj() + qv[i] * v[j].conj()) * two;
                a[(off + i) * n + off + j] -= upd;
            }
        }
        a[(k + 1) * n + k] = alpha;
        a[k * n + k + 1] = alpha.conj();
        for i in k + 2..n {
            a[i * n + k] = czero();
            a[k * n + i] = czero();
        }
        for r in 0..n {
            let row = &mut q[r * n + off..r * n + n];
            let s = row.iter().zip(&v).fold(czero::<T>(), |acc, (qi, vi)| acc + *qi * *vi);
            for (qi, vi) in row.iter_mut().zip(&v) {
                *qi -= s * vi.conj() * two;
            }
        }
    }

    // Phase change to a real symmetric tridiagonal matrix.
    let mut d: Vec<T> = (0..n).map(|i| a[i * n + i].re).collect();
    let mut e = vec![T::zero(); n];
    let mut phases = vec![cone::<T>(); n];
    for i in 0..n.saturating_sub(1) {
        let off = a[(i + 1) * n + i];
        let mag = off.norm();
        e[i] = mag;
        phases[i + 1] = if mag > T::zero() { phases[i] * (off / mag) } else { phases[i] };
    }

    let mut z = vec![T::zero(); n * n];
    for i in 0..n {
        z[i * n + i] = T::one();
    }
    tridiagonal_ql(&mut d, &mut e, &mut z, n)?;

    // Eigenvectors: Q · diag(phases) · Z.
    let mut qd = q;
    for r in 0..n {
        for c in 0..n {
            qd[r * n + c] *= phases[c];
        }
    }
    let mut vecs = vec![czero::<T>(); n * n];
    for r in 0..n {
        for k in 0..n {
            let a = qd[r * n + k];
            if a == czero() {
                continue;
            }
            for c in 0..n {
                vecs[r * n + c] += a * z[k * n + c];
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap_or(std::cmp::Ordering::Equal));
    let values: Vec<T> = order.iter().map(|&i| d[i]).collect();
    let mut sorted = vec![czero::<T>(); n * n];
    for (newc, &oldc) in order.iter().enumerate() {
        let col: Vec<Cx<T>> = (0..n).map(|r| vecs[r * n + oldc]).collect();
        let big = col.iter().fold(T::zero(), |m, z| m.max(z.norm()));
        let thresh = big * T::lit(1e-8);
        let phase = col
            .iter()
            .find(|z| z.norm() > thresh)
            .map(|z| z.conj() / z.norm())
            .unwrap_or_else(cone);
        for r in 0..n {
            sorted[r * n + newc] = col[r] * phase;
        }
    }
    let vectors = Matrix::from_vec(m.layout().clone(), eig_layout(n), sorted)?;
    Ok(Eigen { values, vectors })
}

/// Implicit QL iteration on a symmetric tridiagonal matrix with diagonal `d`
/// and subdiagonal `e` (`e[i]` couples `i` and `i+1`). Rotations accumulate
/// into the row-major `z`.
fn tridiagonal_ql<T: Real>(d: &mut [T], e: &mut [T], z: &mut [T], n: usize) -> Result<()> {
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = T::zero();
    let eps = T::epsilon();
    let two = T::lit(2.0);
    let mut f = T::zero();
    let mut tst1 = T::zero();
    for l in 0..n {
        let mut iter = 0;
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::NoConvergence);
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let zi1 = z[k * n + i + 1];
                        let zi = z[k * n + i];
                        z[k * n + i + 1] = s * zi + c * zi1;
                        z[k * n + i] = c * zi - s * zi1;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
    Ok(())
}

/// Absolute clipping threshold for an eigenvalue list.
pub fn psd_tolerance<T: Real>(values: &[T]) -> T {
    let big = values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    big * T::lit(PSD_REL_TOL)
}

/// Fails with [`Error::NotPsd`] if an eigenvalue lies below `-psd_tol`.
pub fn check_psd<T: Real>(eig: &Eigen<T>) -> Result<()> {
    let tol = psd_tolerance(&eig.values);
    if let Some(&min) = eig.values.last() {
        if min < -tol {
            return Err(Error::NotPsd(min.to_f64().unwrap_or(f64::NAN)));
        }
    }
    Ok(())
}

pub fn min_eigenvalue<T: Real>(m: &Hermitian<T>) -> Result<T> {
    Ok(*eig_hermitian(m)?.values.last().expect("nonempty"))
}

/// Square root of a PSD operator (small negative eigenvalues clipped).
pub fn matrix_sqrt_psd<T: Real>(m: &Hermitian<T>) -> Result<Hermitian<T>> {
    let eig = eig_hermitian(m)?;
    check_psd(&eig)?;
    Ok(eig.reconstruct_with(m.layout(), |l| l.max(T::zero()).sqrt()))
}

/// Singular values (descending) via the Hermitian dilation
/// `[[0, M], [M†, 0]]`, whose positive eigenvalues are the singular values.
pub fn singular_values<T: Real>(m: &Matrix<T>) -> Result<Vec<T>> {
    let (eig, r) = dilation_eig(m)?;
    let k = r.min(m.ncols());
    Ok(eig.values[..k].iter().map(|v| v.max(T::zero())).collect())
}

fn dilation_eig<T: Real>(m: &Matrix<T>) -> Result<(Eigen<T>, usize)> {
    let (r, c) = (m.nrows(), m.ncols());
    let n = r + c;
    let l = eig_layout(n);
    let mut d = Matrix::zeros(l.clone(), l);
    for i in 0..r {
        for j in 0..c {
            let v = m.get(i, j);
            d.set(i, r + j, v);
            d.set(r + j, i, v.conj());
        }
    }
    Ok((eig_hermitian(&Hermitian::symmetrized(d))?, r))
}

pub fn trace_norm<T: Real>(m: &Matrix<T>) -> Result<T> {
    Ok(singular_values(m)?.into_iter().sum())
}

/// Moore–Penrose pseudo-inverse; singular values `≤ rank_tol · σ_max` are
/// treated as zero.
pub fn pseudo_inverse<T: Real>(m: &Matrix<T>, rank_tol: T) -> Result<Matrix<T>> {
    let (eig, r) = dilation_eig(m)?;
    let c = m.ncols();
    let smax = eig.values.first().copied().unwrap_or(T::zero()).max(T::zero());
    let cut = rank_tol * smax;
    let mut out = Matrix::zeros(m.col_layout().clone(), m.row_layout().clone());
    let two = T::lit(2.0);
    for (j, &s) in eig.values.iter().enumerate() {
        if s <= cut || s <= T::zero() {
            break;
        }
        let w = eig.vector(j);
        // w = (u; v)/√2 with M v = s u.
        let (u, v) = w.split_at(r);
        let scale = two / s;
        for a in 0..c {
            let va = v[a] * scale;
            for b in 0..r {
                out.add_at(a, b, va * u[b].conj());
            }
        }
    }
    Ok(out)
}

/// Fidelity `‖√p √q‖₁` of two PSD operators on the same layout.
pub fn fidelity<T: Real>(p: &Hermitian<T>, q: &Hermitian<T>) -> Result<T> {
    if p.layout() != q.layout() {
        return Err(Error::LayoutMismatch(format!("{} vs {}", p.layout(), q.layout())));
    }
    let sp = matrix_sqrt_psd(p)?;
    let sq = matrix_sqrt_psd(q)?;
    trace_norm(&sp.matmul(&sq)?)
}

/// Cholesky factor `L` (lower triangular, row-major) with `m = L L†`.
pub fn cholesky<T: Real>(m: &Hermitian<T>) -> Result<Vec<Cx<T>>> {
    cholesky_raw(m.data(), m.dim())
}

pub(crate) fn cholesky_raw<T: Real>(a: &[Cx<T>], n: usize) -> Result<Vec<Cx<T>>> {
    let mut l = vec![czero::<T>(); n * n];
    for j in 0..n {
        let mut diag = a[j * n + j].re;
        for k in 0..j {
            diag -= l[j * n + k].norm_sqr();
        }
        if !(diag > T::zero()) {
            return Err(Error::NotPsd(diag.to_f64().unwrap_or(f64::NAN)));
        }
        let djj = diag.sqrt();
        l[j * n + j] = creal(djj);
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = s / djj;
        }
    }
    Ok(l)
}

/// Inverse of a lower-triangular row-major matrix.
pub(crate) fn lower_inverse<T: Real>(l: &[Cx<T>], n: usize) -> Vec<Cx<T>> {
    let mut inv = vec![czero::<T>(); n * n];
    for j in 0..n {
        inv[j * n + j] = cone::<T>() / l[j * n + j];
        for i in j + 1..n {
            let mut s = czero::<T>();
            for k in j..i {
                s += l[i * n + k] * inv[k * n + j];
            }
            inv[i * n + j] = -s / l[i * n + i];
        }
    }
    inv
}

/// Inverse of a Hermitian positive definite matrix.
pub fn inverse_pd<T: Real>(m: &Hermitian<T>) -> Result<Hermitian<T>> {
    let n = m.dim();
    let l = cholesky(m)?;
    let li = lower_inverse(&l, n);
    // m⁻¹ = L⁻† L⁻¹
    let mut out = Matrix::zeros(m.layout().clone(), m.layout().clone());
    for r in 0..n {
        for c in 0..n {
            let mut s = czero::<T>();
            for k in r.max(c)..n {
                s += li[k * n + r].conj() * li[k * n + c];
            }
            out.set(r, c, s);
        }
    }
    Ok(Hermitian::symmetrized(out))
}

fn householder_qr_vectors<T: Real>(a: &mut [Cx<T>], nr: usize, nc: usize) -> Vec<Vec<Cx<T>>> {
    let two = T::lit(2.0);
    let mut reflectors = Vec::with_capacity(nc);
    for j in 0..nc.min(nr) {
        let len = nr - j;
        let x: Vec<Cx<T>> = (0..len).map(|i| a[(j + i) * nc + j]).collect();
        let norm = x.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        let phase = if x[0].norm() > T::zero() { x[0] / x[0].norm() } else { cone() };
        let alpha = -phase * norm;
        let mut v = x;
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if vnorm > T::zero() {
            for z in v.iter_mut() {
                *z = *z / vnorm;
            }
            for c in j..nc {
                let s = (0..len).fold(czero::<T>(), |acc, i| acc + v[i].conj() * a[(j + i) * nc + c]);
                for i in 0..len {
                    a[(j + i) * nc + c] -= v[i] * s * two;
                }
            }
        } else {
            v.iter_mut().for_each(|z| *z = czero());
        }
        reflectors.push(v);
    }
    reflectors
}

/// Full unitary `Q` (row-major `n × n`) from a set of reflectors.
fn accumulate_reflectors<T: Real>(reflectors: &[Vec<Cx<T>>], n: usize) -> Vec<Cx<T>> {
    let two = T::lit(2.0);
    let mut q = Matrix::<T>::identity(&eig_layout(n)).into_data();
    for (j, v) in reflectors.iter().enumerate().rev() {
        let len = n - j;
        for c in 0..n {
            let s = (0..len).fold(czero::<T>(), |acc, i| acc + v[i].conj() * q[(j + i) * n + c]);
            if s == czero() {
                continue;
            }
            for i in 0..len {
                q[(j + i) * n + c] -= v[i] * s * two;
            }
        }
    }
    q
}

/// Extends a matrix with orthonormal columns to a square unitary whose
/// leading columns are exactly the input columns. The remaining columns come
/// from a Householder QR factorization and are deterministic.
pub fn complete_isometry<T: Real>(columns: &Matrix<T>) -> Result<Matrix<T>> {
    let (n, k) = (columns.nrows(), columns.ncols());
    if k > n {
        return Err(Error::DimensionMismatch(format!("{k} columns cannot be orthonormal in dimension {n}")));
    }
    let gram = columns.adjoint().matmul(columns)?;
    let mut resid = T::zero();
    for r in 0..k {
        for c in 0..k {
            let target = if r == c { cone() } else { czero() };
            resid = resid.max((gram.get(r, c) - target).norm());
        }
    }
    if resid > T::lit(1e-10).max(T::epsilon() * T::lit(64.0)) {
        return Err(Error::NotOrthonormal(resid.to_f64().unwrap_or(f64::NAN)));
    }
    let mut work = columns.data().to_vec();
    let refl = householder_qr_vectors(&mut work, n, k);
    let mut q = accumulate_reflectors(&refl, n);
    for c in 0..k {
        for r in 0..n {
            q[r * n + c] = columns.get(r, c);
        }
    }
    Matrix::from_vec(columns.row_layout().clone(), eig_layout(n), q)
}

/// QR factorization with the phase convention `R_jj > 0`; returns the
/// leading `k` columns of `Q` for an `n × k` input of full column rank.
pub fn thin_q<T: Real>(m: &Matrix<T>) -> Result<Matrix<T>> {
    let (n, k) = (m.nrows(), m.ncols());
    if k > n {
        return Err(Error::DimensionMismatch("thin QR needs rows >= columns".into()));
    }
    let mut work = m.data().to_vec();
    let refl = householder_qr_vectors(&mut work, n, k);
    let q = accumulate_reflectors(&refl, n);
    let mut out = Matrix::zeros(m.row_layout().clone(), m.col_layout().clone());
    for c in 0..k {
        let rjj = work[c * k + c];
        let phase = if rjj.norm() > T::zero() { rjj / rjj.norm() } else { cone() };
        for r in 0..n {
            out.set(r, c, q[r * n + c] * phase);
        }
    }
    Ok(out)
}

/// Gram–Schmidt orthonormalization of column vectors (two passes).
pub fn orthonormalize<T: Real>(vectors: &mut [Vec<Cx<T>>]) -> Result<()> {
    for i in 0..vectors.len() {
        for _pass in 0..2 {
            for j in 0..i {
                let (head, tail) = vectors.split_at_mut(i);
                let vj = &head[j];
                let vi = &mut tail[0];
                let s = vj.iter().zip(vi.iter()).fold(czero::<T>(), |acc, (a, b)| acc + a.conj() * *b);
                for (b, a) in vi.iter_mut().zip(vj) {
                    *b -= *a * s;
                }
            }
        }
        let norm = vectors[i].iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if norm <= T::lit(1e-6) {
            return Err(Error::RankFailure { gap: norm.to_f64().unwrap_or(0.0) });
        }
        for z in vectors[i].iter_mut() {
            *z = *z / norm;
        }
    }
    Ok(())
}

/// Real part helper used by callers converting from generic code.
pub fn re<T: Real>(z: Cx<T>) -> T {
    z.re
}

#[allow(dead_code)]
fn _assert_complex_is_copy<T: Real>(z: Complex<T>) -> (Complex<T>, Complex<T>) {
    (z, z)
}
