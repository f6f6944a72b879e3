//! Sparse conjugation terms for common linear maps on labeled blocks.

use crate::error::{Error, Result};
use crate::layout::Layout;
use crate::matrix::Matrix;
use crate::sdp::SparseOp;
use crate::C64;

const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Operators `K_{t,f}` with `Σ K_{t,f} X K_{t,f}† = Tr_traced(X) ⊗ I_fresh`,
/// the result laid out in `out_order` (a permutation of the kept and fresh
/// labels).
pub fn factor_map(block: &Layout, traced: &[&str], fresh: &Layout, out_order: &[&str]) -> Result<Vec<SparseOp>> {
    let kept = block.without(traced)?;
    let traced_layout = block.select(traced)?;
    let all = kept.concat(fresh)?;
    let out = all.select(out_order)?;
    if out.len() != all.len() {
        return Err(Error::NotAPermutation);
    }
    let n_in = block.total_dim();
    let n_out = out.total_dim();
    let n_t = traced_layout.total_dim();
    let n_f = fresh.total_dim();
    let out_labels = out.labels();
    // for each output slot, where its value comes from
    enum Src {
        Block(usize),
        Fresh(usize),
    }
    let srcs: Vec<Src> = out_labels
        .iter()
        .map(|l| match block.position(l) {
            Some(p) => Src::Block(p),
            None => Src::Fresh(fresh.position(l).expect("fresh label")),
        })
        .collect();
    let traced_pos: Vec<usize> = traced.iter().map(|l| block.position(l).expect("traced label")).collect();
    let mut ops: Vec<Vec<(usize, usize, C64)>> = vec![Vec::with_capacity(n_in / n_t.max(1)); n_t * n_f];
    let mut out_multi = vec![0usize; out_labels.len()];
    let mut t_multi = vec![0usize; traced.len()];
    for i in 0..n_in {
        let multi = block.multi_index(i);
        for (j, &p) in traced_pos.iter().enumerate() {
            t_multi[j] = multi[p];
        }
        let t = traced_layout.flat_index(&t_multi);
        for f in 0..n_f {
            let fm = fresh.multi_index(f);
            for (slot, src) in srcs.iter().enumerate() {
                out_multi[slot] = match *src {
                    Src::Block(p) => multi[p],
                    Src::Fresh(p) => fm[p],
                };
            }
            ops[t * n_f + f].push((out.flat_index(&out_multi), i, ONE));
        }
    }
    ops.into_iter().map(|e| SparseOp::new(n_out, n_in, e)).collect()
}

pub fn identity_op(n: usize) -> SparseOp {
    SparseOp { rows: n, cols: n, entries: (0..n).map(|i| (i, i, ONE)).collect() }
}

/// `K[i, offset + i] = 1`: picks the diagonal sub-block `[offset, offset+size)`.
pub fn select_block(offset: usize, size: usize, total: usize) -> Result<SparseOp> {
    SparseOp::new(size, total, (0..size).map(|i| (i, offset + i, ONE)).collect())
}

/// Nonzero entries of a dense matrix.
pub fn dense_op(m: &Matrix<f64>) -> SparseOp {
    let cols = m.ncols();
    let entries = m
        .data()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm_sqr() > 0.0)
        .map(|(i, &v)| (i / cols, i % cols, v))
        .collect();
    SparseOp { rows: m.nrows(), cols, entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Hermitian;
    use crate::random::{random_hermitian, trial_rng};
    use crate::sdp::{Block, SdpProblem, Term};

    fn apply(ops: &[SparseOp], x: &Hermitian<f64>, target: &Layout) -> Hermitian<f64> {
        let mut p = SdpProblem::new(vec![Block { label: "x".into(), layout: x.layout().clone() }]);
        let terms = ops.iter().map(|k| Term { block: 0, weight: 1.0, op: k.clone() }).collect();
        p.add_constraint("c", terms, Hermitian::zeros(target)).unwrap();
        let out = p.apply_constraints(std::slice::from_ref(x)).unwrap().remove(0);
        Hermitian::new(Matrix::from_vec(target.clone(), target.clone(), out).unwrap()).unwrap()
    }

    #[test]
    fn partial_trace_and_embedding_match_dense_ops() {
        let l = Layout::new([("a", 2), ("b", 3), ("c", 2)]).unwrap();
        let x = random_hermitian(&l, &mut trial_rng(3, 0));
        let fresh = Layout::single("d", 2).unwrap();
        let ops = factor_map(&l, &["b"], &fresh, &["c", "d", "a"]).unwrap();
        assert_eq!(ops.len(), 6);
        let target = Layout::new([("c", 2), ("d", 2), ("a", 2)]).unwrap();
        let got = apply(&ops, &x, &target);
        let expect = x
            .partial_trace(&["b"])
            .unwrap()
            .tensor(&Hermitian::identity(&fresh))
            .unwrap()
            .permute_factors(&["c", "d", "a"])
            .unwrap();
        assert!(got.sub(&expect).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn block_selection() {
        let l = Layout::single("g", 4).unwrap();
        let x = random_hermitian(&l, &mut trial_rng(3, 1));
        let k = select_block(2, 2, 4).unwrap();
        let got = apply(&[k], &x, &Layout::single("s", 2).unwrap());
        assert_eq!(got.get(0, 1), x.get(2, 3));
        assert_eq!(got.get(1, 1), x.get(3, 3));
    }
}
