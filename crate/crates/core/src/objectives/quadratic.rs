//! Diagonal convex quadratic `f = 1/2 sum a_i (x_i - x*_i)^2`.

use super::{Evaluation, GradientOracle};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub fn quadratic_value_grad(x: &Tensor, a: &Tensor, x_star: &Tensor) -> Result<(f64, Tensor)> {
    x.ensure_same_shape(a)?;
    x.ensure_same_shape(x_star)?;
    if let Some(bad) = a.data().iter().find(|&&ai| ai <= 0.0 || !ai.is_finite()) {
        return Err(Error::config(format!("curvatures must be > 0, got {bad}")));
    }
    let diff = x.sub(x_star)?;
    let grad = a.mul(&diff)?.named(x.name());
    let value = 0.5
        * diff
            .data()
            .iter()
            .zip(a.data())
            .map(|(d, ai)| ai * d * d)
            .sum::<f64>();
    Ok((value, grad))
}

#[derive(Debug, Clone)]
pub struct QuadraticOracle {
    pub curvature: Tensor,
    pub minimizer: Tensor,
}

impl QuadraticOracle {
    pub fn new(curvature: Tensor, minimizer: Tensor) -> Result<Self> {
        // validate once up front
        quadratic_value_grad(&minimizer, &curvature, &minimizer)?;
        Ok(QuadraticOracle {
            curvature,
            minimizer,
        })
    }
}

impl GradientOracle for QuadraticOracle {
    fn evaluate(&mut self, params: &[Tensor], _step: u64) -> Result<Evaluation> {
        match params {
            [x] => {
                let (value, grad) = quadratic_value_grad(x, &self.curvature, &self.minimizer)?;
                Ok(Evaluation {
                    loss: Some(value),
                    grads: vec![grad],
                })
            }
            _ => Err(Error::config("quadratic expects one parameter tensor")),
        }
    }

    fn loss(&self, params: &[Tensor]) -> Option<f64> {
        let x = params.first()?;
        quadratic_value_grad(x, &self.curvature, &self.minimizer)
            .ok()
            .map(|(v, _)| v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(v: &[f64]) -> Tensor {
        Tensor::from_vec(&[v.len()], v.to_vec()).unwrap()
    }

    #[test]
    fn minimizer_is_zero() {
        let (f, g) =
            quadratic_value_grad(&t(&[1.0, -2.0]), &t(&[1.0, 3.0]), &t(&[1.0, -2.0])).unwrap();
        assert_eq!(f, 0.0);
        assert_eq!(g.data(), &[0.0, 0.0]);
    }

    #[test]
    fn worked_example() {
        let (f, g) = quadratic_value_grad(&t(&[3.0]), &t(&[2.0]), &t(&[0.0])).unwrap();
        assert_eq!(f, 9.0);
        assert_eq!(g.data(), &[6.0]);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let a = t(&[0.5, 2.0, 7.0]);
        let xs = t(&[1.0, -1.0, 0.25]);
        let x = t(&[0.3, 0.9, -2.0]);
        let (_, g) = quadratic_value_grad(&x, &a, &xs).unwrap();
        let h = 1e-6;
        for i in 0..3 {
            let mut up = x.clone();
            let mut dn = x.clone();
            up.data_mut()[i] += h;
            dn.data_mut()[i] -= h;
            let fd = (quadratic_value_grad(&up, &a, &xs).unwrap().0
                - quadratic_value_grad(&dn, &a, &xs).unwrap().0)
                / (2.0 * h);
            assert!((fd - g.data()[i]).abs() < 1e-6 * g.data()[i].abs().max(1.0));
        }
    }

    #[test]
    fn nonpositive_curvature_rejected() {
        assert!(matches!(
            quadratic_value_grad(&t(&[1.0]), &t(&[0.0]), &t(&[0.0])),
            Err(Error::InvalidConfig(_))
        ));
        assert!(QuadraticOracle::new(t(&[-1.0]), t(&[0.0])).is_err());
    }
}
