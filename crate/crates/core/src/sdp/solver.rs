//! Infeasible-start primal-dual path following with the HKM direction and
//! Mehrotra predictor-corrector, working directly on complex Hermitian
//! blocks.
//!
//! Each constraint with an `m × m` target contributes `m²` real equations,
//! one per element of the orthonormal basis `E_pp`, `(E_pq + E_qp)/√2`,
//! `i(E_pq − E_qp)/√2` (`p < q`). Pulling a basis element back through the
//! terms gives a sparse Hermitian `A_i` per block, so `𝒜(X)_i = ⟨A_i, X⟩`.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::layout::Layout;
use crate::linalg::eig_hermitian;
use crate::matrix::{Hermitian, Matrix};
use crate::sdp::{Residuals, SdpProblem, SdpSolution, SdpStatus, SolverOptions};
use crate::{HermitianOperator, C64};

const STEP_FRACTION: f64 = 0.98;
const BLOWUP: f64 = 1e12;
/// Fallback acceptance when progress stalls before the strict targets.
const LOOSE_GAP: f64 = 1e-7;
const LOOSE_FEAS: f64 = 1e-8;
const REFINE_STEPS: usize = 2;

type Dense = Vec<C64>;
type Entries = Vec<(usize, usize, C64)>;

#[derive(Clone, Copy)]
enum BasisElt {
    Diag(usize),
    Sym(usize, usize),
    Anti(usize, usize),
}

struct Equations {
    dims: Vec<usize>,
    /// `A_i` restricted to each block it touches.
    rows: Vec<Vec<(usize, Entries)>>,
    /// For each block, the `(i, k)` with `rows[i][k]` on that block.
    by_block: Vec<Vec<(usize, usize)>>,
    b: Vec<f64>,
    c: Vec<Dense>,
    /// Constraint and basis element of each equation.
    basis: Vec<(usize, BasisElt)>,
}

fn zeros(n: usize) -> Dense {
    vec![C64::new(0.0, 0.0); n * n]
}

fn identity(n: usize, s: f64) -> Dense {
    let mut m = zeros(n);
    for i in 0..n {
        m[i * n + i] = C64::new(s, 0.0);
    }
    m
}

fn mul(a: &[C64], b: &[C64], n: usize) -> Dense {
    let mut out = zeros(n);
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik.re == 0.0 && aik.im == 0.0 {
                continue;
            }
            let brow = &b[k * n..(k + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for (o, &bkj) in orow.iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
    }
    out
}

fn herm(a: &mut [C64], n: usize) {
    for i in 0..n {
        a[i * n + i].im = 0.0;
        for j in i + 1..n {
            let v = (a[i * n + j] + a[j * n + i].conj()) * 0.5;
            a[i * n + j] = v;
            a[j * n + i] = v.conj();
        }
    }
}

fn inner(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

fn norm(a: &[C64]) -> f64 {
    inner(a, a).sqrt()
}

fn axpy(y: &mut [C64], a: f64, x: &[C64]) {
    for (u, v) in y.iter_mut().zip(x) {
        *u += v * a;
    }
}

fn as_hermitian(data: &[C64], layout: &Layout) -> HermitianOperator {
    let m = Matrix::from_vec(layout.clone(), layout.clone(), data.to_vec()).expect("block shape");
    Hermitian::symmetrized(m)
}

fn eigenvalues(a: &[C64], n: usize) -> Result<Vec<f64>> {
    let l = Layout::single("b", n)?;
    Ok(eig_hermitian(&as_hermitian(a, &l))?.values)
}

fn cholesky(a: &[C64], n: usize) -> Option<Dense> {
    crate::linalg::cholesky_raw(a, n).ok()
}

/// Inverse of a positive definite block.
fn inverse(a: &[C64], n: usize) -> Option<Dense> {
    let l = cholesky(a, n)?;
    let li = crate::linalg::lower_inverse(&l, n);
    let mut out = zeros(n);
    for r in 0..n {
        for c in 0..=r {
            let mut s = C64::new(0.0, 0.0);
            for k in r..n {
                s += li[k * n + r].conj() * li[k * n + c];
            }
            out[r * n + c] = s;
            out[c * n + r] = s.conj();
        }
    }
    Some(out)
}

/// Largest `α` with `X + αD ⪰ 0`, or infinity.
fn max_step(x: &[C64], d: &[C64], n: usize) -> Result<f64> {
    let l = match cholesky(x, n) {
        Some(l) => l,
        None => return Ok(0.0),
    };
    let li = crate::linalg::lower_inverse(&l, n);
    let lid = mul(&li, d, n);
    // L⁻¹ D L⁻†
    let mut w = zeros(n);
    for i in 0..n {
        for j in 0..n {
            let mut s = C64::new(0.0, 0.0);
            for k in 0..=j {
                s += lid[i * n + k] * li[j * n + k].conj();
            }
            w[i * n + j] = s;
        }
    }
    herm(&mut w, n);
    let lo = *eigenvalues(&w, n)?.last().expect("nonempty");
    Ok(if lo >= 0.0 { f64::INFINITY } else { -1.0 / lo })
}

fn real_cholesky(m: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = m[j * n + j];
        for k in 0..j {
            d -= m[j * n + k] * m[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        m[j * n + j] = d;
        for i in j + 1..n {
            let mut s = m[i * n + j];
            let (ri, rj) = (&m[i * n..i * n + j], &m[j * n..j * n + j]);
            for k in 0..j {
                s -= ri[k] * rj[k];
            }
            m[i * n + j] = s / d;
        }
    }
    true
}

fn real_cholesky_solve(l: &[f64], n: usize, rhs: &mut [f64]) {
    for i in 0..n {
        let mut s = rhs[i];
        for k in 0..i {
            s -= l[i * n + k] * rhs[k];
        }
        rhs[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for k in i + 1..n {
            s -= l[k * n + i] * rhs[k];
        }
        rhs[i] = s / l[i * n + i];
    }
}

fn merge(mut e: Entries) -> Entries {
    e.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    let mut out: Entries = Vec::with_capacity(e.len());
    for (r, s, v) in e {
        match out.last_mut() {
            Some(last) if last.0 == r && last.1 == s => last.2 += v,
            _ => out.push((r, s, v)),
        }
    }
    let big = out.iter().fold(0.0f64, |m, x| m.max(x.2.norm()));
    out.retain(|x| x.2.norm() > 1e-14 * big);
    out
}

impl Equations {
    fn build(p: &SdpProblem) -> Result<Self> {
        let dims: Vec<usize> = p.blocks.iter().map(|b| b.dim()).collect();
        let mut rows = vec![];
        let mut b = vec![];
        let mut basis = vec![];
        for (ci, con) in p.constraints.iter().enumerate() {
            let m = con.target.dim();
            let t = con.target.data();
            // rows of each K_t: (col, value)
            let krows: Vec<Vec<Vec<(usize, C64)>>> = con
                .terms
                .iter()
                .map(|term| {
                    let mut kr = vec![vec![]; m];
                    for &(r, c, v) in &term.op.entries {
                        kr[r].push((c, v));
                    }
                    kr
                })
                .collect();
            let pull = |pp: usize, q: usize, coef: C64, acc: &mut Vec<Entries>| {
                for (ti, term) in con.terms.iter().enumerate() {
                    let kr = &krows[ti];
                    for &(r, kpr) in &kr[pp] {
                        for &(s, kqs) in &kr[q] {
                            acc[term.block].push((r, s, coef * kpr.conj() * kqs * term.weight));
                        }
                    }
                }
            };
            let mut push_row = |elt: BasisElt, rhs: f64| {
                let mut acc: Vec<Entries> = vec![vec![]; dims.len()];
                match elt {
                    BasisElt::Diag(a) => pull(a, a, C64::new(1.0, 0.0), &mut acc),
                    BasisElt::Sym(a, c) => {
                        pull(a, c, C64::new(FRAC_1_SQRT_2, 0.0), &mut acc);
                        pull(c, a, C64::new(FRAC_1_SQRT_2, 0.0), &mut acc);
                    }
                    BasisElt::Anti(a, c) => {
                        pull(a, c, C64::new(0.0, FRAC_1_SQRT_2), &mut acc);
                        pull(c, a, C64::new(0.0, -FRAC_1_SQRT_2), &mut acc);
                    }
                }
                let row: Vec<(usize, Entries)> =
                    acc.into_iter().enumerate().map(|(bi, e)| (bi, merge(e))).filter(|(_, e)| !e.is_empty()).collect();
                rows.push(row);
                b.push(rhs);
                basis.push((ci, elt));
            };
            for a in 0..m {
                push_row(BasisElt::Diag(a), t[a * m + a].re);
                for c in a + 1..m {
                    push_row(BasisElt::Sym(a, c), 2f64.sqrt() * t[a * m + c].re);
                    push_row(BasisElt::Anti(a, c), 2f64.sqrt() * t[a * m + c].im);
                }
            }
        }
        let mut by_block = vec![vec![]; dims.len()];
        for (i, row) in rows.iter().enumerate() {
            for (k, (bi, _)) in row.iter().enumerate() {
                by_block[*bi].push((i, k));
            }
        }
        let c = p
            .objective
            .iter()
            .zip(&dims)
            .map(|(c, &n)| c.as_ref().map(|h| h.data().to_vec()).unwrap_or_else(|| zeros(n)))
            .collect();
        Ok(Equations { dims, rows, by_block, b, c, basis })
    }

    fn m(&self) -> usize {
        self.rows.len()
    }

    fn apply(&self, xs: &[Dense]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|(bi, e)| {
                        let n = self.dims[*bi];
                        let x = &xs[*bi];
                        e.iter().map(|&(r, s, a)| (a.conj() * x[r * n + s]).re).sum::<f64>()
                    })
                    .sum()
            })
            .collect()
    }

    fn adjoint(&self, y: &[f64]) -> Vec<Dense> {
        let mut out: Vec<Dense> = self.dims.iter().map(|&n| zeros(n)).collect();
        for (row, &yi) in self.rows.iter().zip(y) {
            if yi == 0.0 {
                continue;
            }
            for (bi, e) in row {
                let n = self.dims[*bi];
                for &(r, s, a) in e {
                    out[*bi][r * n + s] += a * yi;
                }
            }
        }
        out
    }

    /// `M_ij = Re⟨A_i, X A_j Z⁻¹⟩`.
    fn schur(&self, xs: &[Dense], zinv: &[Dense]) -> Vec<f64> {
        let m = self.m();
        let mut out = vec![0.0; m * m];
        for (bi, list) in self.by_block.iter().enumerate() {
            let n = self.dims[bi];
            let (x, zi) = (&xs[bi], &zinv[bi]);
            let mut g = zeros(n);
            for &(j, kj) in list {
                g.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
                for &(p, q, a) in &self.rows[j][kj].1 {
                    for r in 0..n {
                        let xa = x[r * n + p] * a;
                        let zrow = &zi[q * n..(q + 1) * n];
                        let grow = &mut g[r * n..(r + 1) * n];
                        for (gv, &zv) in grow.iter_mut().zip(zrow) {
                            *gv += xa * zv;
                        }
                    }
                }
                for &(i, ki) in list {
                    let v: f64 = self.rows[i][ki].1.iter().map(|&(r, s, a)| (a.conj() * g[r * n + s]).re).sum();
                    out[i * m + j] += v;
                }
            }
        }
        for i in 0..m {
            for j in 0..i {
                let v = 0.5 * (out[i * m + j] + out[j * m + i]);
                out[i * m + j] = v;
                out[j * m + i] = v;
            }
        }
        out
    }

    /// `G_ij = Re⟨A_i, A_j⟩`, factored once; `None` if the constraints are
    /// linearly dependent.
    fn gram_factor(&self) -> Option<Vec<f64>> {
        let m = self.m();
        let mut g = vec![0.0; m * m];
        for list in &self.by_block {
            let mut buckets: std::collections::HashMap<(usize, usize), Vec<(usize, C64)>> = Default::default();
            for &(i, k) in list {
                for &(r, s, a) in &self.rows[i][k].1 {
                    buckets.entry((r, s)).or_default().push((i, a));
                }
            }
            for bucket in buckets.values() {
                for &(i, a) in bucket {
                    for &(j, c) in bucket {
                        g[i * m + j] += (a.conj() * c).re;
                    }
                }
            }
        }
        real_cholesky(&mut g, m).then_some(g)
    }

    fn multipliers(&self, p: &SdpProblem, y: &[f64]) -> Vec<HermitianOperator> {
        let mut out: Vec<Dense> = p.constraints.iter().map(|c| zeros(c.target.dim())).collect();
        for (&(ci, elt), &yi) in self.basis.iter().zip(y) {
            let m = p.constraints[ci].target.dim();
            let o = &mut out[ci];
            match elt {
                BasisElt::Diag(a) => o[a * m + a] += yi,
                BasisElt::Sym(a, c) => {
                    o[a * m + c] += yi * FRAC_1_SQRT_2;
                    o[c * m + a] += yi * FRAC_1_SQRT_2;
                }
                BasisElt::Anti(a, c) => {
                    o[a * m + c] += C64::new(0.0, yi * FRAC_1_SQRT_2);
                    o[c * m + a] += C64::new(0.0, -yi * FRAC_1_SQRT_2);
                }
            }
        }
        out.iter().zip(&p.constraints).map(|(d, c)| as_hermitian(d, c.target.layout())).collect()
    }
}

struct Direction {
    dx: Vec<Dense>,
    dy: Vec<f64>,
    dz: Vec<Dense>,
}

struct State {
    x: Vec<Dense>,
    y: Vec<f64>,
    z: Vec<Dense>,
}

struct Measures {
    pobj: f64,
    dobj: f64,
    rel_gap: f64,
    pinf: f64,
    dinf: f64,
    rp: Vec<f64>,
    rd: Vec<Dense>,
}

fn measure(eq: &Equations, s: &State, b_norm: f64, c_norm: f64) -> Measures {
    let ax = eq.apply(&s.x);
    let rp: Vec<f64> = eq.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let aty = eq.adjoint(&s.y);
    let rd: Vec<Dense> = (0..eq.dims.len())
        .map(|bi| eq.c[bi].iter().zip(&s.z[bi]).zip(&aty[bi]).map(|((c, z), a)| c + z - a).collect())
        .collect();
    let pobj: f64 = eq.c.iter().zip(&s.x).map(|(c, x)| inner(c, x)).sum();
    let dobj: f64 = eq.b.iter().zip(&s.y).map(|(b, y)| b * y).sum();
    let pinf = rp.iter().map(|v| v * v).sum::<f64>().sqrt() / (1.0 + b_norm);
    let dinf = rd.iter().map(|r| inner(r, r)).sum::<f64>().sqrt() / (1.0 + c_norm);
    let rel_gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
    Measures { pobj, dobj, rel_gap, pinf, dinf, rp, rd }
}

struct Schur {
    m: Vec<f64>,
    chol: Vec<f64>,
}

impl Schur {
    /// Solves `M x = rhs` with the (possibly shifted) factor and refines
    /// against the unshifted matrix.
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut x = rhs.to_vec();
        real_cholesky_solve(&self.chol, n, &mut x);
        for _ in 0..REFINE_STEPS {
            let mut r: Vec<f64> = (0..n)
                .map(|i| rhs[i] - self.m[i * n..(i + 1) * n].iter().zip(&x).map(|(a, b)| a * b).sum::<f64>())
                .collect();
            real_cholesky_solve(&self.chol, n, &mut r);
            x.iter_mut().zip(&r).for_each(|(a, b)| *a += b);
        }
        x
    }
}

fn direction(
    eq: &Equations,
    s: &State,
    zinv: &[Dense],
    schur: &Schur,
    gram: Option<&[f64]>,
    meas: &Measures,
    sigma_mu: f64,
    corr: Option<&Direction>,
) -> Direction {
    let nb = eq.dims.len();
    // G_b = σμ Z⁻¹ − X + X R_d Z⁻¹ − ΔX_a ΔZ_a Z⁻¹
    let mut g: Vec<Dense> = Vec::with_capacity(nb);
    for bi in 0..nb {
        let n = eq.dims[bi];
        let mut gb: Dense = zinv[bi].iter().map(|v| v * sigma_mu).collect();
        axpy(&mut gb, -1.0, &s.x[bi]);
        let xrd = mul(&s.x[bi], &meas.rd[bi], n);
        axpy(&mut gb, 1.0, &mul(&xrd, &zinv[bi], n));
        if let Some(a) = corr {
            let t = mul(&mul(&a.dx[bi], &a.dz[bi], n), &zinv[bi], n);
            axpy(&mut gb, -1.0, &t);
        }
        g.push(gb);
    }
    let ag = eq.apply(&g);
    let rhs: Vec<f64> = ag.iter().zip(&meas.rp).map(|(a, r)| a - r).collect();
    let dy = schur.solve(&rhs);
    let aty = eq.adjoint(&dy);
    let mut dz = Vec::with_capacity(nb);
    let mut dx = Vec::with_capacity(nb);
    for bi in 0..nb {
        let n = eq.dims[bi];
        let mut dzb = aty[bi].clone();
        axpy(&mut dzb, -1.0, &meas.rd[bi]);
        herm(&mut dzb, n);
        let mut dxb: Dense = zinv[bi].iter().map(|v| v * sigma_mu).collect();
        axpy(&mut dxb, -1.0, &s.x[bi]);
        let t = mul(&mul(&s.x[bi], &dzb, n), &zinv[bi], n);
        axpy(&mut dxb, -1.0, &t);
        if let Some(a) = corr {
            let t = mul(&mul(&a.dx[bi], &a.dz[bi], n), &zinv[bi], n);
            axpy(&mut dxb, -1.0, &t);
        }
        herm(&mut dxb, n);
        dz.push(dzb);
        dx.push(dxb);
    }
    // restore A(ΔX) = r_p, which the X ΔZ Z⁻¹ product loses as Z⁻¹ grows
    if let Some(gram) = gram {
        let adx = eq.apply(&dx);
        let mut w: Vec<f64> = meas.rp.iter().zip(&adx).map(|(r, a)| r - a).collect();
        real_cholesky_solve(gram, eq.m(), &mut w);
        for (bi, c) in eq.adjoint(&w).into_iter().enumerate() {
            let mut c = c;
            herm(&mut c, eq.dims[bi]);
            axpy(&mut dx[bi], 1.0, &c);
        }
    }
    Direction { dx, dy, dz }
}

fn step_lengths(eq: &Equations, s: &State, d: &Direction) -> Result<(f64, f64)> {
    let mut ap = f64::INFINITY;
    let mut ad = f64::INFINITY;
    for (bi, &n) in eq.dims.iter().enumerate() {
        ap = ap.min(max_step(&s.x[bi], &d.dx[bi], n)?);
        ad = ad.min(max_step(&s.z[bi], &d.dz[bi], n)?);
    }
    Ok(((STEP_FRACTION * ap).min(1.0), (STEP_FRACTION * ad).min(1.0)))
}

fn complementarity(eq: &Equations, s: &State, d: Option<(&Direction, f64, f64)>) -> f64 {
    let mut total = 0.0;
    for bi in 0..eq.dims.len() {
        match d {
            None => total += inner(&s.x[bi], &s.z[bi]),
            Some((d, ap, ad)) => {
                let mut x = s.x[bi].clone();
                axpy(&mut x, ap, &d.dx[bi]);
                let mut z = s.z[bi].clone();
                axpy(&mut z, ad, &d.dz[bi]);
                total += inner(&x, &z);
            }
        }
    }
    total
}

fn initial_point(eq: &Equations) -> State {
    let nb = eq.dims.len();
    let mut xi = vec![10f64; nb];
    let mut eta = vec![10f64; nb];
    for bi in 0..nb {
        let n = eq.dims[bi] as f64;
        xi[bi] = xi[bi].max(n.sqrt());
        eta[bi] = eta[bi].max(n.sqrt()).max(norm(&eq.c[bi]));
        for &(i, k) in &eq.by_block[bi] {
            let a_norm = eq.rows[i][k].1.iter().map(|e| e.2.norm_sqr()).sum::<f64>().sqrt();
            xi[bi] = xi[bi].max(n.sqrt() * (1.0 + eq.b[i].abs()) / (1.0 + a_norm));
            eta[bi] = eta[bi].max(a_norm);
        }
    }
    State {
        x: eq.dims.iter().zip(&xi).map(|(&n, &v)| identity(n, v)).collect(),
        y: vec![0.0; eq.m()],
        z: eq.dims.iter().zip(&eta).map(|(&n, &v)| identity(n, v)).collect(),
    }
}

/// Solves `p`. Runs to `opts.gap_tol` / `opts.feas_tol`; if progress stalls
/// first, the iterate is still reported optimal when the relative gap is at
/// most 1e-7 and both infeasibilities at most 1e-8.
pub fn solve(p: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    let size = p.real_dim();
    if size > opts.max_real_dim {
        return Err(Error::SizeCap { size, cap: opts.max_real_dim });
    }
    for (c, b) in p.objective.iter().zip(&p.blocks) {
        if let Some(c) = c {
            if c.layout() != &b.layout {
                return Err(Error::LayoutMismatch(format!("objective for block `{}`", b.label)));
            }
        }
    }
    let eq = Equations::build(p)?;
    let m = eq.m();
    let nb = eq.dims.len();
    let n_total: usize = eq.dims.iter().sum();
    let b_norm = eq.b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let c_norm = eq.c.iter().map(|c| inner(c, c)).sum::<f64>().sqrt();

    let gram = eq.gram_factor();
    let mut s = initial_point(&eq);
    let mut status = SdpStatus::MaxIter;
    let mut iterations = 0;
    let mut stalled = 0;
    loop {
        let meas = measure(&eq, &s, b_norm, c_norm);
        let mu = complementarity(&eq, &s, None) / n_total as f64;
        if meas.rel_gap <= opts.gap_tol && meas.pinf <= opts.feas_tol && meas.dinf <= opts.feas_tol {
            status = SdpStatus::Optimal;
            break;
        }
        let x_size: f64 = s.x.iter().map(|x| norm(x)).sum();
        if x_size > BLOWUP {
            status = SdpStatus::Unbounded;
            break;
        }
        if s.y.iter().any(|v| v.abs() > BLOWUP) && meas.pinf > LOOSE_FEAS {
            status = SdpStatus::Infeasible;
            break;
        }
        if iterations >= opts.max_iter || stalled >= 3 {
            break;
        }
        iterations += 1;

        let zinv: Option<Vec<Dense>> = (0..nb).map(|bi| inverse(&s.z[bi], eq.dims[bi])).collect();
        let zinv = match zinv {
            Some(z) => z,
            None => break,
        };
        let base = eq.schur(&s.x, &zinv);
        let max_diag = (0..m).map(|i| base[i * m + i]).fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
        let mut chol = base.clone();
        let mut shift = 0.0;
        let mut factored = real_cholesky(&mut chol, m);
        while !factored && shift < 1e-6 * max_diag {
            shift = if shift == 0.0 { 1e-14 * max_diag } else { shift * 100.0 };
            chol.copy_from_slice(&base);
            for i in 0..m {
                chol[i * m + i] += shift;
            }
            factored = real_cholesky(&mut chol, m);
        }
        if !factored {
            break;
        }
        let schur = Schur { m: base, chol };

        let pred = direction(&eq, &s, &zinv, &schur, gram.as_deref(), &meas, 0.0, None);
        let (ap, ad) = step_lengths(&eq, &s, &pred)?;
        let mu_aff = complementarity(&eq, &s, Some((&pred, ap, ad))) / n_total as f64;
        let sigma = if mu > 0.0 { (mu_aff / mu).max(0.0).powi(3).min(1.0) } else { 0.0 };
        let corr = direction(&eq, &s, &zinv, &schur, gram.as_deref(), &meas, sigma * mu, Some(&pred));
        let (ap, ad) = step_lengths(&eq, &s, &corr)?;
        for bi in 0..nb {
            axpy(&mut s.x[bi], ap, &corr.dx[bi]);
            axpy(&mut s.z[bi], ad, &corr.dz[bi]);
        }
        for (y, d) in s.y.iter_mut().zip(&corr.dy) {
            *y += ad * d;
        }
        stalled = if ap.max(ad) < 1e-8 { stalled + 1 } else { 0 };
    }

    let meas = measure(&eq, &s, b_norm, c_norm);
    if status == SdpStatus::MaxIter && meas.rel_gap <= LOOSE_GAP && meas.pinf <= LOOSE_FEAS && meas.dinf <= LOOSE_FEAS {
        status = SdpStatus::Optimal;
    }
    let mut psd_min = f64::INFINITY;
    for bi in 0..nb {
        let n = eq.dims[bi];
        for v in [&s.x[bi], &s.z[bi]] {
            if let Some(&lo) = eigenvalues(v, n)?.last() {
                psd_min = psd_min.min(lo);
            }
        }
    }
    let primal_value = meas.pobj + p.offset;
    let dual_value = meas.dobj + p.offset;
    Ok(SdpSolution {
        status,
        primal_blocks: s.x.iter().zip(&p.blocks).map(|(x, b)| as_hermitian(x, &b.layout)).collect(),
        dual_multipliers: eq.multipliers(p, &s.y),
        dual_slacks: s.z.iter().zip(&p.blocks).map(|(z, b)| as_hermitian(z, &b.layout)).collect(),
        primal_value,
        dual_value,
        gap: meas.rel_gap,
        weak_duality_violation: (primal_value - dual_value).max(0.0),
        residuals: Residuals { primal_eq: meas.pinf, dual_ineq: meas.dinf, psd_min_eig: psd_min },
        iterations,
    })
}
