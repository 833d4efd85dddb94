//! Named parameter tensors shared by the encoder, decoder, optimizer and
//! checkpoint code.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// One trainable tensor tagged with the identity of the layer it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Param {
    pub fn zeros(name: impl Into<String>, shape: &[usize]) -> Self {
        Param {
            name: name.into(),
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }
}

/// Ordered parameter collection. Gradients use the same type, built with
/// [`ParamSet::zeros_like`], so indices line up one to one.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet {
    params: Vec<Param>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a parameter and returns its index.
    pub fn push(&mut self, param: Param) -> usize {
        self.params.push(param);
        self.params.len() - 1
    }

    pub fn zeros_like(&self) -> Self {
        ParamSet {
            params: self
                .params
                .iter()
                .map(|p| Param {
                    name: p.name.clone(),
                    shape: p.shape.clone(),
                    data: vec![0.0; p.data.len()],
                })
                .collect(),
        }
    }

    pub fn fill(&mut self, value: f64) {
        for p in &mut self.params {
            p.data.iter_mut().for_each(|v| *v = value);
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.params.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    #[inline]
    pub fn get(&self, idx: usize) -> &Param {
        &self.params[idx]
    }

    #[inline]
    pub fn get_mut(&mut self, idx: usize) -> &mut Param {
        &mut self.params[idx]
    }

    #[inline]
    pub fn data(&self, idx: usize) -> &[f64] {
        &self.params[idx].data
    }

    #[inline]
    pub fn data_mut(&mut self, idx: usize) -> &mut [f64] {
        &mut self.params[idx].data
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param> {
        self.params.iter_mut()
    }

    pub fn by_name(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Total number of scalars.
    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.data.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.params
            .iter()
            .all(|p| p.data.iter().all(|v| v.is_finite()))
    }

    /// Replaces every tensor's values with those of `other`, which must have
    /// identical names and shapes.
    pub fn copy_from(&mut self, other: &ParamSet) -> Result<()> {
        self.check_layout(other)?;
        for (dst, src) in self.params.iter_mut().zip(&other.params) {
            dst.data.copy_from_slice(&src.data);
        }
        Ok(())
    }

    pub fn check_layout(&self, other: &ParamSet) -> Result<()> {
        if self.params.len() != other.params.len() {
            return Err(Error::shape(self.params.len(), other.params.len()));
        }
        for (a, b) in self.params.iter().zip(&other.params) {
            if a.name != b.name || a.shape != b.shape {
                return Err(Error::shape(
                    (&a.name, &a.shape),
                    (&b.name, &b.shape),
                ));
            }
        }
        Ok(())
    }

    /// Largest absolute elementwise difference; `None` if layouts differ.
    pub fn max_abs_diff(&self, other: &ParamSet) -> Option<f64> {
        self.check_layout(other).ok()?;
        Some(
            self.params
                .iter()
                .zip(&other.params)
                .flat_map(|(a, b)| a.data.iter().zip(&b.data).map(|(x, y)| (x - y).abs()))
                .fold(0.0, f64::max),
        )
    }
}
