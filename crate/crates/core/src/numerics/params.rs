use std::collections::HashMap;

use super::tensor::{Scalar, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Gradients produced by one backward pass, keyed by parameter.
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    pub(crate) entries: Vec<(ParamId, Tensor<T>)>,
}

impl<T: Scalar> Gradients<T> {
    pub fn get(&self, id: ParamId) -> Option<&Tensor<T>> {
        self.entries.iter().find(|(p, _)| *p == id).map(|(_, g)| g)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Tensor<T>)> {
        self.entries.iter().map(|(p, g)| (*p, g))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Named parameters with gradient accumulators and Adam moments.
#[derive(Debug, Clone)]
pub struct ParamStore<T> {
    names: Vec<String>,
    index: HashMap<String, ParamId>,
    pub(crate) values: Vec<Tensor<T>>,
    pub(crate) grads: Vec<Tensor<T>>,
    pub(crate) first_moment: Vec<Tensor<T>>,
    pub(crate) second_moment: Vec<Tensor<T>>,
    pub(crate) steps: Vec<u64>,
}

impl<T: Scalar> Default for ParamStore<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        ParamStore {
            names: Vec::new(),
            index: HashMap::new(),
            values: Vec::new(),
            grads: Vec::new(),
            first_moment: Vec::new(),
            second_moment: Vec::new(),
            steps: Vec::new(),
        }
    }

    pub fn insert(&mut self, name: &str, value: Tensor<T>) -> Result<ParamId> {
        if self.index.contains_key(name) {
            return Err(Error::Config(format!("duplicate parameter name {name:?}")));
        }
        let id = ParamId(self.names.len());
        let zeros = Tensor::zeros(value.shape());
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        self.grads.push(zeros.clone());
        self.first_moment.push(zeros.clone());
        self.second_moment.push(zeros);
        self.values.push(value);
        self.steps.push(0);
        Ok(id)
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.names.len()).map(ParamId)
    }

    pub fn value(&self, id: ParamId) -> &Tensor<T> {
        &self.values[id.0]
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor<T> {
        &mut self.values[id.0]
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.id(name).map(|id| self.value(id))
    }

    pub fn grad(&self, id: ParamId) -> &Tensor<T> {
        &self.grads[id.0]
    }

    /// Total number of scalar parameters.
    pub fn numel(&self) -> usize {
        self.values.iter().map(Tensor::len).sum()
    }

    /// Replaces a value; the shape must not change.
    pub fn set(&mut self, id: ParamId, value: Tensor<T>) -> Result<()> {
        if value.shape() != self.values[id.0].shape() {
            return Err(Error::Shape {
                op: "ParamStore::set",
                left: self.values[id.0].shape().to_vec(),
                right: value.shape().to_vec(),
            });
        }
        self.values[id.0] = value;
        Ok(())
    }

    /// `grad += scale * g` for every entry.
    pub fn accumulate(&mut self, grads: &Gradients<T>, scale: T) {
        for (id, g) in grads.iter() {
            self.grads[id.0].add_scaled(g, scale);
        }
    }

    pub fn zero_grad(&mut self) {
        for g in &mut self.grads {
            g.data_mut().iter_mut().for_each(|x| *x = T::zero());
        }
    }

    pub fn cast<U: Scalar>(&self) -> ParamStore<U> {
        let mut out = ParamStore::new();
        for (name, v) in self.names.iter().zip(&self.values) {
            out.insert(name, v.cast()).expect("names are unique");
        }
        out
    }
}
