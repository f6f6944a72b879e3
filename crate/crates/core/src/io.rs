//! JSON formats.
//!
//! A matrix is `{"row_layout": [["label", dim], …], "col_layout": […],
//! "entries": [[re, im], …]}` with row-major entries and every real printed
//! with 17 significant digits. Channel, strategy and realization files add
//! their own fields next to these.

use std::path::Path;

use num_complex::Complex;
use serde::de::DeserializeOwned;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::channels::{Channel, ChannelKind};
use crate::error::{Error, Result};
use crate::layout::Layout;
use crate::matrix::{Hermitian, Matrix};
use crate::scalar::Real;
use crate::strategies::{validate_strategy, RoundStructure, StrategyOperator};
use crate::HermitianOperator;

/// A real that serializes with 17 significant digits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exact(pub f64);

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_f64(self.0);
        }
        let raw = RawValue::from_string(format!("{:.16e}", self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Exact {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        f64::deserialize(d).map(Exact)
    }
}

pub fn exact_vec(v: &[Complex<f64>]) -> Vec<(Exact, Exact)> {
    v.iter().map(|z| (Exact(z.re), Exact(z.im))).collect()
}

pub fn from_exact_vec(v: &[(Exact, Exact)]) -> Vec<Complex<f64>> {
    v.iter().map(|(a, b)| Complex::new(a.0, b.0)).collect()
}

impl<T: Real> Serialize for Matrix<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let entries: Vec<(Exact, Exact)> = self
            .data()
            .iter()
            .map(|z| (Exact(z.re.to_f64().unwrap_or(f64::NAN)), Exact(z.im.to_f64().unwrap_or(f64::NAN))))
            .collect();
        let mut st = s.serialize_struct("Matrix", 3)?;
        st.serialize_field("row_layout", self.row_layout())?;
        st.serialize_field("col_layout", self.col_layout())?;
        st.serialize_field("entries", &entries)?;
        st.end()
    }
}

#[derive(Deserialize)]
struct MatrixRepr {
    row_layout: Layout,
    col_layout: Layout,
    entries: Vec<(f64, f64)>,
}

impl<'de, T: Real> Deserialize<'de> for Matrix<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = MatrixRepr::deserialize(d)?;
        let data = r.entries.into_iter().map(|(a, b)| Complex::new(T::lit(a), T::lit(b))).collect();
        Matrix::from_vec(r.row_layout, r.col_layout, data).map_err(serde::de::Error::custom)
    }
}

impl<T: Real> Serialize for Hermitian<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.as_matrix().serialize(s)
    }
}

impl<'de, T: Real> Deserialize<'de> for Hermitian<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = Matrix::<T>::deserialize(d)?;
        Hermitian::new(m).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct ChannelFile {
    row_layout: Layout,
    col_layout: Layout,
    entries: Vec<(Exact, Exact)>,
    kind: ChannelKind,
    input_layout: Layout,
    output_layout: Layout,
}

impl Serialize for Channel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ChannelFile {
            row_layout: self.choi().layout().clone(),
            col_layout: self.choi().layout().clone(),
            entries: exact_vec(self.choi().data()),
            kind: self.kind(),
            input_layout: self.input_layout().clone(),
            output_layout: self.output_layout().clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Channel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = ChannelFile::deserialize(d)?;
        let m = Matrix::from_vec(f.row_layout, f.col_layout, from_exact_vec(&f.entries)).map_err(serde::de::Error::custom)?;
        let h = Hermitian::new(m).map_err(serde::de::Error::custom)?;
        Channel::from_choi(h, f.input_layout, f.output_layout, f.kind).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct StrategyFile {
    row_layout: Layout,
    col_layout: Layout,
    entries: Vec<(Exact, Exact)>,
    rounds: RoundStructure,
}

impl Serialize for StrategyOperator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StrategyFile {
            row_layout: self.op().layout().clone(),
            col_layout: self.op().layout().clone(),
            entries: exact_vec(self.op().data()),
            rounds: self.rounds().clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for StrategyOperator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = StrategyFile::deserialize(d)?;
        let m = Matrix::from_vec(f.row_layout, f.col_layout, from_exact_vec(&f.entries)).map_err(serde::de::Error::custom)?;
        let h = Hermitian::new(m).map_err(serde::de::Error::custom)?;
        validate_strategy(&h, &f.rounds).map_err(serde::de::Error::custom)
    }
}

/// Serde helper for complex vectors written as `[[re, im], …]` at full
/// precision.
pub mod exact_complex_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Complex<f64>], s: S) -> std::result::Result<S::Ok, S::Error> {
        exact_vec(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Complex<f64>>, D::Error> {
        let v = Vec::<(Exact, Exact)>::deserialize(d)?;
        Ok(from_exact_vec(&v))
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string(value)?)
}

pub fn from_json<T: DeserializeOwned>(s: &str) -> Result<T> {
    Ok(serde_json::from_str(s)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(value)?;
    std::fs::write(path, s).map_err(|e| Error::Serialization(format!("{}: {e}", path.display())))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let s = std::fs::read_to_string(path).map_err(|e| Error::Serialization(format!("{}: {e}", path.display())))?;
    from_json(&s)
}

/// Reads a Hermitian operator from a matrix file.
pub fn read_hermitian(path: &Path) -> Result<HermitianOperator> {
    read_json(path)
}
