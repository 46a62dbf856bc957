use super::Scalar;
use crate::error::{Error, Result};

/// Dense row-major tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T = f32> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let expect: usize = shape.iter().product();
        if shape.contains(&0) {
            return Err(Error::Shape(format!("zero-sized dimension in {shape:?}")));
        }
        if expect != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} holds {expect} values, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self { shape, data: vec![T::zero(); len] }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Tensor<U> {
        Tensor { shape: self.shape.clone(), data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub(crate) fn dims3(&self, what: &str) -> Result<(usize, usize, usize)> {
        match *self.shape.as_slice() {
            [c, h, w] => Ok((c, h, w)),
            ref s => Err(Error::Shape(format!("{what} must be C×H×W, got {s:?}"))),
        }
    }
}

/// The federated unit: named tensors in a fixed canonical order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelParams {
    pub tensors: Vec<(String, Tensor<f32>)>,
}

impl ModelParams {
    pub fn new(tensors: Vec<(String, Tensor<f32>)>) -> Self {
        Self { tensors }
    }

    pub fn scalar_count(&self) -> usize {
        self.tensors.iter().map(|(_, t)| t.len()).sum()
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<f32>> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    /// Same names and shapes, in the same order.
    pub fn same_layout(&self, other: &ModelParams) -> bool {
        self.tensors.len() == other.tensors.len()
            && self
                .tensors
                .iter()
                .zip(&other.tensors)
                .all(|((na, ta), (nb, tb))| na == nb && ta.shape() == tb.shape())
    }

    pub fn zeros_like(&self) -> ModelParams {
        ModelParams {
            tensors: self
                .tensors
                .iter()
                .map(|(n, t)| (n.clone(), Tensor::zeros(t.shape().to_vec())))
                .collect(),
        }
    }

    pub fn iter_values(&self) -> impl Iterator<Item = f32> + '_ {
        self.tensors.iter().flat_map(|(_, t)| t.data().iter().copied())
    }

    pub fn max_abs_diff(&self, other: &ModelParams) -> f32 {
        self.iter_values()
            .zip(other.iter_values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f32::max)
    }

    pub fn bitwise_eq(&self, other: &ModelParams) -> bool {
        self.same_layout(other) && self.iter_values().zip(other.iter_values()).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_checks() {
        assert!(Tensor::<f32>::new(vec![2, 3], vec![0.0; 6]).is_ok());
        assert!(matches!(Tensor::<f32>::new(vec![2, 3], vec![0.0; 5]), Err(Error::Shape(_))));
        assert!(matches!(Tensor::<f32>::new(vec![0], vec![]), Err(Error::Shape(_))));
        let t = Tensor::<f32>::zeros(vec![2, 2, 2]);
        assert_eq!(t.dims3("x").unwrap(), (2, 2, 2));
        assert!(Tensor::<f32>::zeros(vec![4]).dims3("x").is_err());
    }
}
