//! Dense `f64` tensors: either a `fan_out x fan_in` matrix or a flat vector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shape {
    /// Weight matrix, stored row-major with `fan_out` rows of `fan_in` entries.
    Matrix {
        fan_out: usize,
        fan_in: usize,
    },
    Flat(usize),
}

impl Shape {
    /// Builds a shape from a dimension list of length 1 or 2.
    pub fn from_dims(dims: &[usize]) -> Result<Self> {
        match *dims {
            [len] if len >= 1 => Ok(Shape::Flat(len)),
            [fan_out, fan_in] if fan_out >= 1 && fan_in >= 1 => {
                Ok(Shape::Matrix { fan_out, fan_in })
            }
            _ => Err(Error::InvalidShape(dims.to_vec())),
        }
    }

    pub fn len(&self) -> usize {
        match *self {
            Shape::Matrix { fan_out, fan_in } => fan_out * fan_in,
            Shape::Flat(len) => len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> Vec<usize> {
        match *self {
            Shape::Matrix { fan_out, fan_in } => vec![fan_out, fan_in],
            Shape::Flat(len) => vec![len],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    name: String,
    shape: Shape,
    data: Vec<f64>,
}

impl Tensor {
    /// A tensor of the given dimensions with every entry equal to `fill`.
    pub fn new(dims: &[usize], fill: f64) -> Result<Self> {
        let shape = Shape::from_dims(dims)?;
        Ok(Self::filled(shape, fill))
    }

    pub fn filled(shape: Shape, fill: f64) -> Self {
        Tensor {
            name: String::new(),
            shape,
            data: vec![fill; shape.len()],
        }
    }

    pub fn zeros_like(other: &Tensor) -> Self {
        Tensor {
            name: other.name.clone(),
            shape: other.shape,
            data: vec![0.0; other.data.len()],
        }
    }

    pub fn from_vec(dims: &[usize], data: Vec<f64>) -> Result<Self> {
        let shape = Shape::from_dims(dims)?;
        Self::with_shape(shape, data)
    }

    pub fn with_shape(shape: Shape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::LengthMismatch {
                len: data.len(),
                shape: shape.dims(),
            });
        }
        Ok(Tensor {
            name: String::new(),
            shape,
            data,
        })
    }

    /// Flat one-entry tensor, used for the scalar toy problems.
    pub fn scalar(value: f64) -> Self {
        Tensor {
            name: String::new(),
            shape: Shape::Flat(1),
            data: vec![value],
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Entry at `(row, col)` of a matrix tensor.
    pub fn at(&self, row: usize, col: usize) -> f64 {
        match self.shape {
            Shape::Matrix { fan_in, .. } => self.data[row * fan_in + col],
            Shape::Flat(_) => self.data[row + col],
        }
    }

    pub fn ensure_same_shape(&self, other: &Tensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                left: self.shape.dims(),
                right: other.shape.dims(),
            });
        }
        Ok(())
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Tensor {
        Tensor {
            name: self.name.clone(),
            shape: self.shape,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Tensor, mut f: impl FnMut(f64, f64) -> f64) -> Result<Tensor> {
        self.ensure_same_shape(other)?;
        Ok(Tensor {
            name: self.name.clone(),
            shape: self.shape,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_map(other, |a, b| a * b)
    }

    /// Division by an exact zero yields +-Inf (or NaN for 0/0); callers guard with epsilon.
    pub fn div(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_map(other, |a, b| a / b)
    }

    pub fn sqrt(&self) -> Tensor {
        self.map(f64::sqrt)
    }

    pub fn square(&self) -> Tensor {
        self.map(|x| x * x)
    }

    pub fn abs(&self) -> Tensor {
        self.map(f64::abs)
    }

    /// Sign with `sign(0) = 0`.
    pub fn sign(&self) -> Tensor {
        self.map(sign)
    }

    pub fn scale(&self, factor: f64) -> Tensor {
        self.map(|x| x * factor)
    }

    /// `self += factor * other`, in place.
    pub fn axpy(&mut self, factor: f64, other: &Tensor) -> Result<()> {
        self.ensure_same_shape(other)?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += factor * b;
        }
        Ok(())
    }

    pub fn sum_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.sum_sq().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn has_nan(&self) -> bool {
        self.data.iter().any(|x| x.is_nan())
    }
}

/// Sign convention used throughout the crate: `sign(0) = 0`.
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Global l2 norm over a list of tensors.
pub fn global_norm(tensors: &[Tensor]) -> f64 {
    tensors.iter().map(Tensor::sum_sq).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_fills_every_entry() {
        let t = Tensor::new(&[2, 3], 0.0).unwrap();
        assert_eq!(
            t.shape(),
            Shape::Matrix {
                fan_out: 2,
                fan_in: 3
            }
        );
        assert_eq!(t.data(), &[0.0; 6]);

        let t = Tensor::new(&[1], 5.5).unwrap();
        assert_eq!(t.data(), &[5.5]);
    }

    #[test]
    fn zero_dimension_is_rejected() {
        assert_eq!(
            Tensor::new(&[0, 3], 1.0),
            Err(Error::InvalidShape(vec![0, 3]))
        );
        assert!(Tensor::new(&[], 1.0).is_err());
        assert!(Tensor::new(&[2, 2, 2], 1.0).is_err());
    }

    #[test]
    fn from_vec_checks_length() {
        assert!(matches!(
            Tensor::from_vec(&[2, 2], vec![1.0; 3]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn elementwise_primitives() {
        let t = Tensor::from_vec(&[3], vec![-2.0, 0.0, 3.0]).unwrap();
        assert_eq!(t.sign().data(), &[-1.0, 0.0, 1.0]);
        assert_eq!(t.abs().data(), &[2.0, 0.0, 3.0]);
        assert_eq!(Tensor::scalar(3.0).square().data(), &[9.0]);
        assert_eq!(t.scale(2.0).data(), &[-4.0, 0.0, 6.0]);

        let a = Tensor::from_vec(&[2], vec![1.0, 4.0]).unwrap();
        let b = Tensor::from_vec(&[2], vec![2.0, 2.0]).unwrap();
        assert_eq!(a.add(&b).unwrap().data(), &[3.0, 6.0]);
        assert_eq!(a.sub(&b).unwrap().data(), &[-1.0, 2.0]);
        assert_eq!(a.mul(&b).unwrap().data(), &[2.0, 8.0]);
        assert_eq!(a.div(&b).unwrap().data(), &[0.5, 2.0]);
        assert_eq!(a.sqrt().data(), &[1.0, 2.0]);
    }

    #[test]
    fn div_by_zero_is_infinite() {
        let a = Tensor::from_vec(&[2], vec![1.0, -1.0]).unwrap();
        let z = Tensor::from_vec(&[2], vec![0.0, 0.0]).unwrap();
        let q = a.div(&z).unwrap();
        assert_eq!(q.data(), &[f64::INFINITY, f64::NEG_INFINITY]);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = Tensor::from_vec(&[2], vec![1.0, 2.0]).unwrap();
        let b = Tensor::from_vec(&[3], vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(
            a.add(&b),
            Err(Error::ShapeMismatch {
                left: vec![2],
                right: vec![3]
            })
        );
        // same length, different layout
        let m = Tensor::new(&[1, 2], 0.0).unwrap();
        assert!(a.add(&m).is_err());
    }

    #[test]
    fn matrix_indexing_is_row_major() {
        let m = Tensor::from_vec(&[2, 3], (0..6).map(f64::from).collect()).unwrap();
        assert_eq!(m.at(1, 0), 3.0);
        assert_eq!(m.at(0, 2), 2.0);
    }
}
