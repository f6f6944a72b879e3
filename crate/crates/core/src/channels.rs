//! Completely positive maps in Choi form.
//!
//! `J(Φ) = Σ_{a,b} Φ(|a><b|) ⊗ |a><b|` with output factors first. Under the
//! row-major `vec` convention this equals `Σ_i vec(K_i) vec(K_i)†` for any
//! Kraus set `{K_i}`. When an input factor shares its label with an output
//! factor (the identity channel on `X`, say) the input copy inside the Choi
//! layout is renamed with an `_in` suffix; the channel's own input layout
//! keeps the original labels.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::Layout;
use crate::linalg::{check_psd, eig_hermitian};
use crate::matrix::{Hermitian, Matrix};
use crate::random::random_isometry;
use crate::{ComplexMatrix, HermitianOperator};

/// Tolerance on `Tr_out J = I` / `Tr_in J = I`.
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// Relative eigenvalue cutoff when extracting Kraus operators.
pub const KRAUS_RANK_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    /// Trace preserving.
    Channel,
    UnitalCp,
    GeneralCp,
}

impl ChannelKind {
    fn transposed(self) -> Self {
        match self {
            ChannelKind::Channel => ChannelKind::UnitalCp,
            ChannelKind::UnitalCp => ChannelKind::Channel,
            ChannelKind::GeneralCp => ChannelKind::GeneralCp,
        }
    }
}

/// Kraus operators, each a matrix with rows on the output layout and
/// columns on the input layout.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet {
    operators: Vec<ComplexMatrix>,
}

impl KrausSet {
    pub fn new(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let first = operators
            .first()
            .ok_or_else(|| Error::InvalidChannel("empty Kraus set".into()))?;
        for k in &operators {
            if k.row_layout() != first.row_layout() || k.col_layout() != first.col_layout() {
                return Err(Error::DimensionMismatch("Kraus operators disagree on layouts".into()));
            }
        }
        Ok(KrausSet { operators })
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn input_layout(&self) -> &Layout {
        self.operators[0].col_layout()
    }

    pub fn output_layout(&self) -> &Layout {
        self.operators[0].row_layout()
    }

    fn sum_products(&self, adjoint_first: bool) -> Result<ComplexMatrix> {
        let mut acc: Option<ComplexMatrix> = None;
        for k in &self.operators {
            let p = if adjoint_first { k.adjoint().matmul(k)? } else { k.matmul(&k.adjoint())? };
            acc = Some(match acc {
                None => p,
                Some(a) => a.add(&p)?,
            });
        }
        Ok(acc.expect("nonempty"))
    }

    /// `‖Σ K†K − I‖_F`.
    pub fn trace_preservation_residual(&self) -> Result<f64> {
        let s = self.sum_products(true)?;
        Ok(s.sub(&Matrix::identity(self.input_layout()))?.frobenius_norm())
    }

    /// `‖Σ KK† − I‖_F`.
    pub fn unitality_residual(&self) -> Result<f64> {
        let s = self.sum_products(false)?;
        Ok(s.sub(&Matrix::identity(self.output_layout()))?.frobenius_norm())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    choi: HermitianOperator,
    input: Layout,
    output: Layout,
    kind: ChannelKind,
    kraus: Option<KrausSet>,
}

/// Choi layout for a map `input → output`, plus the Choi-side labels of the
/// input factors.
pub fn choi_layout(input: &Layout, output: &Layout) -> Result<(Layout, Vec<String>)> {
    let mut renamed = Vec::with_capacity(input.len());
    let mut factors = output.factors().to_vec();
    for f in input.factors() {
        let mut g = f.clone();
        if output.contains(&f.label) {
            g.label = format!("{}_in", f.label);
        }
        renamed.push(g.label.clone());
        factors.push(g);
    }
    Ok((Layout::from_factors(factors)?, renamed))
}

impl Channel {
    /// Wraps a Choi matrix, checking positivity and the normalization
    /// demanded by `kind`.
    pub fn from_choi(choi: HermitianOperator, input: Layout, output: Layout, kind: ChannelKind) -> Result<Self> {
        let (layout, _) = choi_layout(&input, &output)?;
        if choi.layout().dims() != layout.dims() {
            return Err(Error::LayoutMismatch(format!("Choi layout {} does not fit {}", choi.layout(), layout)));
        }
        let choi = if choi.layout() == &layout {
            choi
        } else {
            Hermitian::symmetrized(choi.into_matrix().with_layouts(layout.clone(), layout)?)
        };
        check_psd(&eig_hermitian(&choi)?)?;
        let ch = Channel { choi, input, output, kind, kraus: None };
        ch.check_normalization()?;
        Ok(ch)
    }

    fn check_normalization(&self) -> Result<()> {
        let res = match self.kind {
            ChannelKind::Channel => self.trace_preservation_residual()?,
            ChannelKind::UnitalCp => self.unitality_residual()?,
            ChannelKind::GeneralCp => 0.0,
        };
        if res > NORMALIZATION_TOL {
            return Err(Error::InvalidChannel(format!("{:?} normalization residual {res:.3e}", self.kind)));
        }
        Ok(())
    }

    pub fn choi(&self) -> &HermitianOperator {
        &self.choi
    }

    pub fn input_layout(&self) -> &Layout {
        &self.input
    }

    pub fn output_layout(&self) -> &Layout {
        &self.output
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    fn choi_input_labels(&self) -> Vec<String> {
        choi_layout(&self.input, &self.output).expect("valid layouts").1
    }

    /// `‖Tr_out J − I_in‖_F`.
    pub fn trace_preservation_residual(&self) -> Result<f64> {
        let out: Vec<&str> = self.output.labels();
        let m = self.choi.partial_trace(&out)?;
        Ok(m.sub(&Hermitian::identity(m.layout()))?.frobenius_norm())
    }

    /// `‖Tr_in J − I_out‖_F`.
    pub fn unitality_residual(&self) -> Result<f64> {
        let labels = self.choi_input_labels();
        let ins: Vec<&str> = labels.iter().map(String::as_str).collect();
        let m = self.choi.partial_trace(&ins)?;
        Ok(m.sub(&Hermitian::identity(m.layout()))?.frobenius_norm())
    }

    /// Kraus operators: the stored set if the channel was built from one,
    /// otherwise extracted from the Choi spectrum.
    pub fn kraus(&self) -> Result<KrausSet> {
        match &self.kraus {
            Some(k) => Ok(k.clone()),
            None => kraus_from_choi(self, KRAUS_RANK_TOL),
        }
    }

    /// Applies the channel to the factors of `rho` named by its input
    /// layout. Untouched factors keep their order and the output factors
    /// are appended after them.
    pub fn apply_to_subsystems(&self, rho: &HermitianOperator) -> Result<HermitianOperator> {
        let kraus = self.kraus()?;
        let mut acc: Option<ComplexMatrix> = None;
        for k in kraus.operators() {
            let left = rho.apply_left_on(k)?;
            let both = left.adjoint().apply_left_on(k)?.adjoint();
            acc = Some(match acc {
                None => both,
                Some(a) => a.add(&both)?,
            });
        }
        Ok(Hermitian::symmetrized(acc.expect("nonempty")))
    }
}

pub fn choi_from_kraus(k: &KrausSet) -> Result<Channel> {
    let input = k.input_layout().clone();
    let output = k.output_layout().clone();
    let (layout, _) = choi_layout(&input, &output)?;
    let n = layout.total_dim();
    let mut j = Matrix::zeros(layout.clone(), layout.clone());
    for op in k.operators() {
        let v = op.data();
        for r in 0..n {
            if v[r] == num_complex::Complex::new(0.0, 0.0) {
                continue;
            }
            for c in 0..n {
                j.add_at(r, c, v[r] * v[c].conj());
            }
        }
    }
    let kind = if k.trace_preservation_residual()? <= NORMALIZATION_TOL {
        ChannelKind::Channel
    } else if k.unitality_residual()? <= NORMALIZATION_TOL {
        ChannelKind::UnitalCp
    } else {
        ChannelKind::GeneralCp
    };
    Ok(Channel { choi: Hermitian::symmetrized(j), input, output, kind, kraus: Some(k.clone()) })
}

/// `Φ(ρ) = Tr_in[J (I_out ⊗ ρᵀ)]`.
pub fn apply_channel(c: &Channel, rho: &HermitianOperator) -> Result<HermitianOperator> {
    if rho.layout() != c.input_layout() {
        return Err(Error::LayoutMismatch(format!("state on {} but channel input is {}", rho.layout(), c.input_layout())));
    }
    let dout = c.output.total_dim();
    let din = c.input.total_dim();
    let j = c.choi();
    let mut out = Matrix::zeros(c.output.clone(), c.output.clone());
    for i in 0..dout {
        for k in 0..dout {
            let mut acc = num_complex::Complex::new(0.0, 0.0);
            for a in 0..din {
                for b in 0..din {
                    acc += j.get(i * din + a, k * din + b) * rho.get(a, b);
                }
            }
            out.set(i, k, acc);
        }
    }
    Ok(Hermitian::symmetrized(out))
}

/// `Φ*(σ) = Σ K† σ K`, the Hilbert–Schmidt adjoint.
pub fn apply_adjoint(c: &Channel, sigma: &HermitianOperator) -> Result<HermitianOperator> {
    let kraus = c.kraus()?;
    let mut acc = Matrix::zeros(c.input.clone(), c.input.clone());
    for k in kraus.operators() {
        acc = acc.add(&k.adjoint().matmul(sigma)?.matmul(k)?)?;
    }
    Ok(Hermitian::symmetrized(acc))
}

/// Sequential composition `outer ∘ inner`. Inner output factors not read by
/// `outer` pass through; `outer` inputs not produced by `inner` become extra
/// inputs of the composite, appended after `inner`'s inputs.
pub fn compose(outer: &Channel, inner: &Channel) -> Result<Channel> {
    let ko = outer.kraus()?;
    let ki = inner.kraus()?;
    let fresh_labels: Vec<&str> = outer
        .input
        .labels()
        .into_iter()
        .filter(|l| !inner.output.contains(l))
        .collect();
    let fresh = outer.input.select(&fresh_labels)?;
    let mut ops = Vec::with_capacity(ko.operators().len() * ki.operators().len());
    for k in ki.operators() {
        let lifted = k.extend_identity(&fresh)?;
        for l in ko.operators() {
            ops.push(lifted.apply_left_on(l)?);
        }
    }
    let combined = choi_from_kraus(&KrausSet::new(ops)?)?;
    let kind = if outer.kind == ChannelKind::Channel && inner.kind == ChannelKind::Channel {
        ChannelKind::Channel
    } else {
        combined.kind
    };
    Ok(Channel { kraus: None, kind, ..combined })
}

/// Kraus operators `√λ_i · unvec(v_i)` from the Choi eigenpairs with
/// `λ_i > rank_tol · λ_max`.
pub fn kraus_from_choi(c: &Channel, rank_tol: f64) -> Result<KrausSet> {
    let eig = eig_hermitian(c.choi())?;
    let top = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    let mut ops = Vec::new();
    for (i, &l) in eig.values.iter().enumerate() {
        if l <= rank_tol * top || l <= 0.0 {
            break;
        }
        let v: Vec<_> = eig.vector(i).into_iter().map(|z| z * l.sqrt()).collect();
        ops.push(Matrix::from_vec(c.output.clone(), c.input.clone(), v)?);
    }
    if ops.is_empty() {
        ops.push(Matrix::zeros(c.output.clone(), c.input.clone()));
    }
    KrausSet::new(ops)
}

/// Label used for the environment factor of a Stinespring dilation.
pub const ENV_LABEL: &str = "env";

/// Isometry `V: in → out ⊗ env` with `Tr_env(V ρ V†) = Φ(ρ)`; the
/// environment dimension is the Kraus rank.
pub fn stinespring_from_choi(c: &Channel) -> Result<ComplexMatrix> {
    if c.kind != ChannelKind::Channel {
        return Err(Error::InvalidChannel("Stinespring dilation needs a trace-preserving map".into()));
    }
    let kraus = kraus_from_choi(c, KRAUS_RANK_TOL)?;
    let r = kraus.operators().len();
    let env = Layout::single(ENV_LABEL, r)?;
    let rows = c.output.concat(&env)?;
    let (dout, din) = (c.output.total_dim(), c.input.total_dim());
    let mut v = Matrix::zeros(rows, c.input.clone());
    for (e, k) in kraus.operators().iter().enumerate() {
        for o in 0..dout {
            for a in 0..din {
                v.set(o * r + e, a, k.get(o, a));
            }
        }
    }
    Ok(v)
}

/// The map with Kraus operators `K_iᵀ`. On the Choi side this swaps the
/// output and input factors; trace preserving and unital swap roles.
pub fn transpose_channel(c: &Channel) -> Result<Channel> {
    let (_, in_labels) = choi_layout(&c.input, &c.output)?;
    let mut order: Vec<&str> = in_labels.iter().map(String::as_str).collect();
    order.extend(c.output.labels());
    let swapped = c.choi.permute_factors(&order)?;
    let (layout, _) = choi_layout(&c.output, &c.input)?;
    let choi = Hermitian::symmetrized(swapped.into_matrix().with_layouts(layout.clone(), layout)?);
    let kraus = match &c.kraus {
        Some(k) => Some(KrausSet::new(k.operators().iter().map(Matrix::transpose).collect())?),
        None => None,
    };
    Ok(Channel { choi, input: c.output.clone(), output: c.input.clone(), kind: c.kind.transposed(), kraus })
}

pub fn identity_channel(layout: &Layout) -> Result<Channel> {
    choi_from_kraus(&KrausSet::new(vec![Matrix::identity(layout)])?)
}

pub fn unitary_channel(u: &ComplexMatrix) -> Result<Channel> {
    choi_from_kraus(&KrausSet::new(vec![u.clone()])?)
}

/// `ρ ↦ Tr(ρ) I/d` on `layout`.
pub fn depolarizing_channel(layout: &Layout) -> Result<Channel> {
    let d = layout.total_dim();
    let s = 1.0 / (d as f64).sqrt();
    let mut ops = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let mut k = Matrix::zeros(layout.clone(), layout.clone());
            k.set(i, j, num_complex::Complex::new(s, 0.0));
            ops.push(k);
        }
    }
    choi_from_kraus(&KrausSet::new(ops)?)
}

/// Haar-random isometry `in → out ⊗ env` with the environment traced out.
pub fn random_channel<R: Rng + ?Sized>(input: &Layout, output: &Layout, env_dim: usize, rng: &mut R) -> Result<Channel> {
    let env = Layout::single(ENV_LABEL, env_dim)?;
    let rows = output.concat(&env)?;
    if rows.total_dim() < input.total_dim() {
        return Err(Error::DimensionMismatch(format!(
            "isometry from dimension {} into {}",
            input.total_dim(),
            rows.total_dim()
        )));
    }
    let v = random_isometry(rows, input.clone(), rng)?;
    let (dout, din) = (output.total_dim(), input.total_dim());
    let ops = (0..env_dim)
        .map(|e| Matrix::from_fn(output.clone(), input.clone(), |o, a| v.get(o * env_dim + e, a)))
        .collect();
    let mut ch = choi_from_kraus(&KrausSet::new(ops)?)?;
    ch.kind = ChannelKind::Channel;
    debug_assert!(dout * env_dim >= din);
    Ok(ch)
}
