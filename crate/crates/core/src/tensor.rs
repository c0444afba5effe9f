//! Named, ordered collections of `f32` tensors.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A dense row-major `f32` tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

/// Number of elements implied by a shape. The empty shape is a scalar.
pub fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let expected = numel(&shape);
        if expected != data.len() {
            return Err(Error::LengthMismatch {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = numel(&shape);
        Self {
            shape,
            data: alloc::vec![0.0; n],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn into_parts(self) -> (Vec<usize>, Vec<f32>) {
        (self.shape, self.data)
    }
}

/// Ordered map from tensor name to tensor. Iteration order is insertion
/// order, which is also the serialized order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TensorMap {
    entries: Vec<(String, Tensor)>,
    index: BTreeMap<String, usize>,
}

impl TensorMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a tensor. Names must be non-empty and unique.
    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) -> Result<()> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::InvalidName("empty tensor name".to_string()));
        }
        if self.index.contains_key(&name) {
            return Err(Error::DuplicateName(name));
        }
        self.index.insert(name.clone(), self.entries.len());
        self.entries.push((name, tensor));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.index.get(name).map(|&i| &self.entries[i].1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    /// Total number of scalar parameters.
    pub fn param_count(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.len()).sum()
    }

    /// All values concatenated in map order.
    pub fn flatten(&self) -> Vec<f32> {
        let mut out = Vec::with_capacity(self.param_count());
        for (_, t) in &self.entries {
            out.extend_from_slice(t.data());
        }
        out
    }

    /// Checks that `other` has the same names, in the same order, with the
    /// same shapes.
    pub fn check_compatible(&self, other: &TensorMap) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::ShapeMismatch(format!(
                "tensor count {} vs {}",
                self.len(),
                other.len()
            )));
        }
        for ((na, ta), (nb, tb)) in self.iter().zip(other.iter()) {
            if na != nb {
                return Err(Error::ShapeMismatch(format!(
                    "tensor name `{na}` vs `{nb}`"
                )));
            }
            if ta.shape() != tb.shape() {
                return Err(Error::ShapeMismatch(format!(
                    "tensor `{na}`: {:?} vs {:?}",
                    ta.shape(),
                    tb.shape()
                )));
            }
        }
        Ok(())
    }

    /// Builds a new map with the same names/shapes by combining each pair of
    /// tensors elementwise.
    pub fn zip_with(
        &self,
        other: &TensorMap,
        mut f: impl FnMut(f32, f32) -> f32,
    ) -> Result<TensorMap> {
        self.check_compatible(other)?;
        let mut out = TensorMap::new();
        for ((name, a), (_, b)) in self.iter().zip(other.iter()) {
            let data = a
                .data()
                .iter()
                .zip(b.data())
                .map(|(&x, &y)| f(x, y))
                .collect();
            out.push_unchecked(name, Tensor::new(a.shape().to_vec(), data)?);
        }
        Ok(out)
    }

    /// Builds a new map by transforming every tensor's data.
    pub fn map_data(&self, mut f: impl FnMut(&str, &[f32]) -> Vec<f32>) -> Result<TensorMap> {
        let mut out = TensorMap::new();
        for (name, t) in self.iter() {
            out.push_unchecked(name, Tensor::new(t.shape().to_vec(), f(name, t.data()))?);
        }
        Ok(out)
    }

    pub(crate) fn push_unchecked(&mut self, name: &str, tensor: Tensor) {
        self.index.insert(name.to_string(), self.entries.len());
        self.entries.push((name.to_string(), tensor));
    }

    /// Verifies every value is finite.
    pub fn check_finite(&self) -> Result<()> {
        for (name, t) in self.iter() {
            if t.data().iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(name.to_string()));
            }
        }
        Ok(())
    }
}

impl FromIterator<(String, Tensor)> for TensorMap {
    /// Panics on duplicate or empty names; use [`TensorMap::insert`] for
    /// fallible construction.
    fn from_iter<I: IntoIterator<Item = (String, Tensor)>>(iter: I) -> Self {
        let mut map = TensorMap::new();
        for (name, t) in iter {
            map.insert(name, t).expect("invalid tensor name");
        }
        map
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_shape_length_mismatch() {
        assert!(Tensor::new(vec![2, 2], vec![1.0; 3]).is_err());
        assert_eq!(Tensor::new(vec![], vec![1.0]).unwrap().len(), 1);
    }

    #[test]
    fn preserves_insertion_order_and_rejects_duplicates() {
        let mut m = TensorMap::new();
        m.insert("b", Tensor::zeros(vec![1])).unwrap();
        m.insert("a", Tensor::zeros(vec![2])).unwrap();
        assert_eq!(m.names().collect::<Vec<_>>(), ["b", "a"]);
        assert_eq!(
            m.insert("a", Tensor::zeros(vec![1])),
            Err(Error::DuplicateName("a".into()))
        );
        assert!(m.insert("", Tensor::zeros(vec![1])).is_err());
        assert_eq!(m.param_count(), 3);
    }

    #[test]
    fn compatibility_checks_names_and_shapes() {
        let mut a = TensorMap::new();
        a.insert("w", Tensor::zeros(vec![2])).unwrap();
        let mut b = TensorMap::new();
        b.insert("w", Tensor::zeros(vec![3])).unwrap();
        assert!(a.check_compatible(&b).is_err());
        let mut c = TensorMap::new();
        c.insert("v", Tensor::zeros(vec![2])).unwrap();
        assert!(a.check_compatible(&c).is_err());
        assert!(a.check_compatible(&a.clone()).is_ok());
    }
}
