//! Piecewise polynomial/quadratic toy with flat odd-degree saddles at `x = +-b`.
//!
//! ```text
//! f(x) = (x - b)^n     x >= x_s
//!      = -(x + b)^n    x <= -x_s
//!      = x^2 + d       otherwise
//! ```
//! with `d = (x_s - b)^n - x_s^2`, so `f` is continuous at `+-x_s`.

use serde::{Deserialize, Serialize};

use super::{single_scalar, Evaluation, GradientOracle};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Which side of the bias the switch point sits on.
///
/// Both place the switch point where the polynomial branch has slope `s`
/// (`|x_s - b| = (s/n)^(1/(n-1))`). `Outer` puts it beyond `b`, which makes
/// the objective a single bowl. `Inner` puts it between `0` and `b`, so the
/// flat polynomial saddle at `x = -b` belongs to the objective and can trap
/// an optimizer that overshoots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SwitchRule {
    /// `x_s = (s/n)^(1/(n-1)) + b`
    #[default]
    Outer,
    /// `x_s = b - (s/n)^(1/(n-1))`
    Inner,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleParams {
    n: i32,
    b: f64,
    s: f64,
    rule: SwitchRule,
    x_s: f64,
    d: f64,
}

impl SaddleParams {
    pub fn new(n: u32, b: f64, s: f64) -> Result<Self> {
        Self::with_rule(n, b, s, SwitchRule::Outer)
    }

    pub fn with_rule(n: u32, b: f64, s: f64, rule: SwitchRule) -> Result<Self> {
        if n < 3 || n.is_multiple_of(2) {
            return Err(Error::config(format!(
                "saddle degree must be odd and >= 3, got {n}"
            )));
        }
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::config(format!("saddle slope must be > 0, got {s}")));
        }
        if !b.is_finite() {
            return Err(Error::config("saddle bias must be finite"));
        }
        let n = n as i32;
        let offset = (s / n as f64).powf(1.0 / (n - 1) as f64);
        let x_s = match rule {
            SwitchRule::Outer => offset + b,
            SwitchRule::Inner => b - offset,
        };
        if x_s <= 0.0 {
            return Err(Error::config(format!(
                "switch point must be positive, got {x_s} (b={b}, s={s}, n={n})"
            )));
        }
        let d = (x_s - b).powi(n) - x_s * x_s;
        Ok(SaddleParams {
            n,
            b,
            s,
            rule,
            x_s,
            d,
        })
    }

    /// The configuration used for the toy table: `n = 7, b = 1, s = 0.5`.
    pub fn toy(rule: SwitchRule) -> Self {
        Self::with_rule(7, 1.0, 0.5, rule).expect("toy parameters are valid")
    }

    pub fn degree(&self) -> u32 {
        self.n as u32
    }

    pub fn bias(&self) -> f64 {
        self.b
    }

    pub fn slope(&self) -> f64 {
        self.s
    }

    pub fn rule(&self) -> SwitchRule {
        self.rule
    }

    pub fn switch_point(&self) -> f64 {
        self.x_s
    }

    pub fn shift(&self) -> f64 {
        self.d
    }

    pub fn value(&self, x: f64) -> f64 {
        if x >= self.x_s {
            (x - self.b).powi(self.n)
        } else if x <= -self.x_s {
            -(x + self.b).powi(self.n)
        } else {
            x * x + self.d
        }
    }

    /// Derivative; exactly at `+-x_s` the polynomial branch is used.
    pub fn grad(&self, x: f64) -> f64 {
        let n = self.n as f64;
        if x >= self.x_s {
            n * (x - self.b).powi(self.n - 1)
        } else if x <= -self.x_s {
            -n * (x + self.b).powi(self.n - 1)
        } else {
            2.0 * x
        }
    }
}

#[derive(Debug, Clone)]
pub struct SaddleOracle {
    pub params: SaddleParams,
}

impl GradientOracle for SaddleOracle {
    fn evaluate(&mut self, params: &[Tensor], _step: u64) -> Result<Evaluation> {
        let x = single_scalar(params)?;
        Ok(Evaluation {
            loss: Some(self.params.value(x)),
            grads: vec![Tensor::scalar(self.params.grad(x)).named(params[0].name())],
        })
    }

    fn loss(&self, params: &[Tensor]) -> Option<f64> {
        single_scalar(params).ok().map(|x| self.params.value(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn toy_constants() {
        let p = SaddleParams::new(7, 1.0, 0.5).unwrap();
        // x_s = (1/14)^(1/6) + 1, d = (x_s - 1)^7 - x_s^2
        let x_s = (1.0f64 / 14.0).powf(1.0 / 6.0) + 1.0;
        assert!((p.switch_point() - x_s).abs() < 1e-15);
        assert!((p.value(0.0) - (-2.6571786664792323)).abs() < 1e-12);
        assert!((p.value(0.0) + 2.6572).abs() < 1e-4);
        // continuity value (s/n)^(n/(n-1))
        let at_switch = (0.5f64 / 7.0).powf(7.0 / 6.0);
        assert!((p.value(p.switch_point()) - at_switch).abs() < 1e-14);
        assert!((at_switch - 0.04601).abs() < 1e-5);
    }

    #[test]
    fn polynomial_branch() {
        let p = SaddleParams::new(7, 1.0, 0.5).unwrap();
        assert_eq!(p.value(10.0), 4_782_969.0);
        assert_eq!(p.value(-10.0), 4_782_969.0);
    }

    #[test]
    fn gradient_at_start_point() {
        for rule in [SwitchRule::Outer, SwitchRule::Inner] {
            let p = SaddleParams::toy(rule);
            assert_eq!(p.grad(0.0), 0.0);
            assert_eq!(p.grad(-1e-6), -2e-6);
        }
    }

    #[test]
    fn continuity_at_both_switch_points() {
        let mut rng = Rng::new(21, 0);
        let mut cases = vec![
            SaddleParams::toy(SwitchRule::Outer),
            SaddleParams::toy(SwitchRule::Inner),
        ];
        while cases.len() < 22 {
            let n = [3, 5, 7, 9][rng.index(4)];
            let b = 0.5 + 1.5 * rng.uniform();
            let s = 0.05 + rng.uniform();
            let rule = if rng.uniform() < 0.5 {
                SwitchRule::Outer
            } else {
                SwitchRule::Inner
            };
            if let Ok(p) = SaddleParams::with_rule(n, b, s, rule) {
                cases.push(p);
            }
        }
        for p in cases {
            let xs = p.switch_point();
            let inner = xs * xs + p.shift();
            let tol = 1e-12 * inner.abs().max(1.0);
            assert!((p.value(xs) - inner).abs() <= tol, "{p:?}");
            assert!((p.value(-xs) - inner).abs() <= tol, "{p:?}");
            // polynomial slope at the switch point is +-s
            assert!((p.grad(xs).abs() - p.slope()).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let h = 1e-6;
        for rule in [SwitchRule::Outer, SwitchRule::Inner] {
            let p = SaddleParams::toy(rule);
            let xs = p.switch_point();
            let mut x: f64 = -3.0;
            while x < 3.0 {
                if (x.abs() - xs).abs() > 1e-3 {
                    let fd = (p.value(x + h) - p.value(x - h)) / (2.0 * h);
                    let g = p.grad(x);
                    assert!(
                        (fd - g).abs() <= 1e-4 * g.abs().max(1e-2),
                        "x={x} fd={fd} g={g}"
                    );
                }
                x += 0.0137;
            }
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(SaddleParams::new(6, 1.0, 0.5).is_err());
        assert!(SaddleParams::new(1, 1.0, 0.5).is_err());
        assert!(SaddleParams::new(7, 1.0, 0.0).is_err());
        // inner switch point would be negative
        assert!(SaddleParams::with_rule(7, 0.1, 0.5, SwitchRule::Inner).is_err());
    }

    #[test]
    fn oracle_returns_scalar_gradient() {
        let mut o = SaddleOracle {
            params: SaddleParams::toy(SwitchRule::Inner),
        };
        let e = o.evaluate(&[Tensor::scalar(0.25)], 1).unwrap();
        assert_eq!(e.grads[0].data(), &[0.5]);
        assert!(o.evaluate(&[Tensor::new(&[2], 0.0).unwrap()], 1).is_err());
    }
}
