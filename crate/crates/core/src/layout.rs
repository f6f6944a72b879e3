//! Labeled tensor-factor bookkeeping.
//!
//! A [`Layout`] is the ordered list of `(label, dim)` factors that a vector
//! space decomposes into. Basis indices are row-major over the factors: the
//! last factor varies fastest. Every operation that reorders, traces out, or
//! appends factors goes through labels, so no code ever depends on an
//! implicit factor position.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "(String, usize)", into = "(String, usize)")]
pub struct Factor {
    pub label: String,
    pub dim: usize,
}

impl From<(String, usize)> for Factor {
    fn from((label, dim): (String, usize)) -> Self {
        Factor { label, dim }
    }
}

impl From<Factor> for (String, usize) {
    fn from(f: Factor) -> Self {
        (f.label, f.dim)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<Factor>", into = "Vec<Factor>")]
pub struct Layout {
    factors: Vec<Factor>,
}

impl TryFrom<Vec<Factor>> for Layout {
    type Error = Error;

    fn try_from(factors: Vec<Factor>) -> Result<Self> {
        Layout::from_factors(factors)
    }
}

impl From<Layout> for Vec<Factor> {
    fn from(l: Layout) -> Self {
        l.factors
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, fac) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}:{}", fac.label, fac.dim)?;
        }
        write!(f, "]")
    }
}

impl Layout {
    pub fn new<S: Into<String>>(factors: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        Self::from_factors(
            factors
                .into_iter()
                .map(|(l, d)| Factor { label: l.into(), dim: d })
                .collect(),
        )
    }

    pub fn from_factors(factors: Vec<Factor>) -> Result<Self> {
        let mut seen = HashSet::new();
        for f in &factors {
            if f.dim == 0 {
                return Err(Error::InvalidLayout(format!("factor `{}` has dimension 0", f.label)));
            }
            if !seen.insert(f.label.as_str()) {
                return Err(Error::LabelCollision(f.label.clone()));
            }
        }
        Ok(Layout { factors })
    }

    /// The empty layout; its total dimension is 1.
    pub fn scalar() -> Self {
        Layout::default()
    }

    pub fn single(label: impl Into<String>, dim: usize) -> Result<Self> {
        Self::new([(label.into(), dim)])
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.factors.iter().map(|f| f.label.as_str()).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim).product()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.label == label)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.position(label).is_some()
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        self.position(label)
            .map(|p| self.factors[p].dim)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Same labels and dimensions in the same order.
    pub fn same_as(&self, other: &Layout) -> bool {
        self == other
    }

    pub fn concat(&self, other: &Layout) -> Result<Layout> {
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        Layout::from_factors(factors)
    }

    /// Drops the named factors, keeping the order of the survivors.
    pub fn without(&self, labels: &[&str]) -> Result<Layout> {
        for l in labels {
            if !self.contains(l) {
                return Err(Error::UnknownLabel(l.to_string()));
            }
        }
        Ok(Layout {
            factors: self
                .factors
                .iter()
                .filter(|f| !labels.contains(&f.label.as_str()))
                .cloned()
                .collect(),
        })
    }

    /// The named factors, in the order given.
    pub fn select(&self, labels: &[&str]) -> Result<Layout> {
        let factors = labels
            .iter()
            .map(|l| {
                self.position(l)
                    .map(|p| self.factors[p].clone())
                    .ok_or_else(|| Error::UnknownLabel(l.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Layout::from_factors(factors)
    }

    pub fn reversed(&self) -> Layout {
        Layout { factors: self.factors.iter().rev().cloned().collect() }
    }

    /// Renames factors according to `(old, new)` pairs.
    pub fn relabel(&self, renames: &[(&str, &str)]) -> Result<Layout> {
        for (old, _) in renames {
            if !self.contains(old) {
                return Err(Error::UnknownLabel(old.to_string()));
            }
        }
        let factors = self
            .factors
            .iter()
            .map(|f| {
                let label = renames
                    .iter()
                    .find(|(o, _)| *o == f.label)
                    .map(|(_, n)| n.to_string())
                    .unwrap_or_else(|| f.label.clone());
                Factor { label, dim: f.dim }
            })
            .collect();
        Layout::from_factors(factors)
    }

    /// Row-major strides, one per factor.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.factors.len()];
        for i in (0..self.factors.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.factors[i + 1].dim;
        }
        strides
    }

    pub fn multi_index(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.factors.len()];
        for (i, f) in self.factors.iter().enumerate().rev() {
            out[i] = index % f.dim;
            index /= f.dim;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.factors)
            .fold(0, |acc, (&m, f)| acc * f.dim + m)
    }

    /// For every basis index of the sub-layout spanned by `labels` (row-major
    /// in the given order), the offset it contributes to a flat index of
    /// `self`. Summing the offsets of complementary label sets yields the
    /// full flat index.
    pub fn offsets(&self, labels: &[&str]) -> Result<Vec<usize>> {
        let strides = self.strides();
        let mut positions = Vec::with_capacity(labels.len());
        for l in labels {
            let p = self.position(l).ok_or_else(|| Error::UnknownLabel(l.to_string()))?;
            if positions.contains(&p) {
                return Err(Error::LabelCollision(l.to_string()));
            }
            positions.push(p);
        }
        let mut offs = vec![0usize];
        for &p in &positions {
            let d = self.factors[p].dim;
            let s = strides[p];
            let mut next = Vec::with_capacity(offs.len() * d);
            for &o in &offs {
                for k in 0..d {
                    next.push(o + k * s);
                }
            }
            offs = next;
        }
        Ok(offs)
    }

    /// Flat-index map for a reordering: entry `i` is the index in `self` of
    /// basis vector `i` of the layout reordered to `target`.
    pub fn permutation_indices(&self, target: &[&str]) -> Result<Vec<usize>> {
        if target.len() != self.factors.len() || target.iter().any(|l| !self.contains(l)) {
            return Err(Error::NotAPermutation);
        }
        let unique: HashSet<&&str> = target.iter().collect();
        if unique.len() != target.len() {
            return Err(Error::NotAPermutation);
        }
        self.offsets(target)
    }
}
