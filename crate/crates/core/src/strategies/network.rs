//! Sequential networks of isometries acting on labeled factors.

use crate::error::{Error, Result};
use crate::layout::Layout;
use crate::matrix::{Hermitian, Matrix};
use crate::strategies::RoundStructure;
use crate::{ComplexMatrix, HermitianOperator};

/// Pushes `init` through `steps`. Each step acts on the row factors named by
/// its column layout; named factors that are not yet present are fresh
/// inputs and get tensored in (as identity) on both sides first, so fresh
/// inputs accumulate in the columns in order of first use.
pub fn run_network(init: ComplexMatrix, steps: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    let mut m = init;
    for step in steps {
        let fresh_labels: Vec<&str> = step
            .col_layout()
            .labels()
            .into_iter()
            .filter(|l| !m.row_layout().contains(l))
            .collect();
        let fresh = step.col_layout().select(&fresh_labels)?;
        m = m.extend_identity(&fresh)?.apply_left_on(step)?;
    }
    Ok(m)
}

/// Choi operator of the map `ρ ↦ Tr_env(M ρ M†)` where `M` has rows
/// `(Y…, env…)` in any order and columns `(X…)`; every row factor that is
/// not an output of `rounds` counts as environment.
pub fn choi_from_network(m: &ComplexMatrix, rounds: &RoundStructure) -> Result<HermitianOperator> {
    let ys = rounds.y_labels();
    let xs = rounds.x_labels();
    let env: Vec<&str> = m.row_layout().labels().into_iter().filter(|l| !ys.contains(l)).collect();
    if m.col_layout().len() != xs.len() {
        return Err(Error::LayoutMismatch(format!("network inputs {} do not match rounds", m.col_layout())));
    }
    let mut row_order = ys.clone();
    row_order.extend(&env);
    let p = m.permute(&row_order, &xs)?;
    let y_dim = rounds.y_total();
    let x_dim = rounds.x_total();
    let e_dim = p.nrows() / y_dim;
    let layout = rounds.layout()?;
    let omega = Matrix::from_fn(layout.clone(), Layout::single("env", e_dim)?, |r, e| {
        let (y, x) = (r / x_dim, r % x_dim);
        p.get(y * e_dim + e, x)
    });
    Ok(Hermitian::symmetrized(omega.matmul(&omega.adjoint())?))
}
