use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::{OptimizerConfig, ParamState};

fn begin(state: &mut ParamState, theta: &Tensor, g: &Tensor, lr_t: f64) -> Result<u64> {
    theta.ensure_same_shape(g)?;
    theta.ensure_same_shape(&state.m)?;
    if !(lr_t.is_finite() && lr_t > 0.0) {
        return Err(Error::config(format!(
            "step learning rate must be > 0, got {lr_t}"
        )));
    }
    if g.has_nan() {
        return Err(Error::GradientInvalid {
            name: g.name().to_string(),
        });
    }
    state.t += 1;
    Ok(state.t)
}

/// `1 - beta^t`
fn bias_correction(beta: f64, t: u64) -> f64 {
    1.0 - beta.powi(t.min(i32::MAX as u64) as i32)
}

fn apply(theta: &mut Tensor, delta: Vec<f64>) -> Result<Tensor> {
    let delta = Tensor::with_shape(theta.shape(), delta)?.named(theta.name());
    for (p, d) in theta.data_mut().iter_mut().zip(delta.data()) {
        *p += d;
    }
    Ok(delta)
}

/// Adam with bias correction applied to the full `v`, `v0` included.
pub fn adam_step(
    state: &mut ParamState,
    theta: &mut Tensor,
    g: &Tensor,
    cfg: &OptimizerConfig,
    lr_t: f64,
) -> Result<Tensor> {
    let t = begin(state, theta, g, lr_t)?;
    let (b1, b2, eps) = (cfg.beta1, cfg.beta2, cfg.eps);
    let bc1 = bias_correction(b1, t);
    let bc2 = bias_correction(b2, t);
    let delta = state
        .m
        .data_mut()
        .iter_mut()
        .zip(state.v.data_mut())
        .zip(g.data())
        .map(|((m, v), &gi)| {
            *m = b1 * *m + (1.0 - b1) * gi;
            *v = b2 * *v + (1.0 - b2) * gi * gi;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            -lr_t * m_hat / (v_hat.sqrt() + eps)
        })
        .collect();
    apply(theta, delta)
}

/// Adam plus decoupled weight decay `-lr * wd * theta`.
pub fn adamw_step(
    state: &mut ParamState,
    theta: &mut Tensor,
    g: &Tensor,
    cfg: &OptimizerConfig,
    lr_t: f64,
) -> Result<Tensor> {
    let t = begin(state, theta, g, lr_t)?;
    let (b1, b2, eps, wd) = (cfg.beta1, cfg.beta2, cfg.eps, cfg.weight_decay);
    let bc1 = bias_correction(b1, t);
    let bc2 = bias_correction(b2, t);
    let delta = state
        .m
        .data_mut()
        .iter_mut()
        .zip(state.v.data_mut())
        .zip(g.data())
        .zip(theta.data())
        .map(|(((m, v), &gi), &p)| {
            *m = b1 * *m + (1.0 - b1) * gi;
            *v = b2 * *v + (1.0 - b2) * gi * gi;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            -lr_t * m_hat / (v_hat.sqrt() + eps) - lr_t * wd * p
        })
        .collect();
    apply(theta, delta)
}

/// Heavy-ball SGD: `velocity = mu * velocity + g`, step `-lr * velocity`.
pub fn sgdm_step(
    state: &mut ParamState,
    theta: &mut Tensor,
    g: &Tensor,
    cfg: &OptimizerConfig,
    lr_t: f64,
) -> Result<Tensor> {
    begin(state, theta, g, lr_t)?;
    let mu = cfg.momentum;
    let delta = state
        .m
        .data_mut()
        .iter_mut()
        .zip(g.data())
        .map(|(vel, &gi)| {
            *vel = mu * *vel + gi;
            -lr_t * *vel
        })
        .collect();
    apply(theta, delta)
}

/// RMSprop without bias correction.
pub fn rmsprop_step(
    state: &mut ParamState,
    theta: &mut Tensor,
    g: &Tensor,
    cfg: &OptimizerConfig,
    lr_t: f64,
) -> Result<Tensor> {
    begin(state, theta, g, lr_t)?;
    let (b2, eps) = (cfg.beta2, cfg.eps);
    let delta = state
        .v
        .data_mut()
        .iter_mut()
        .zip(g.data())
        .map(|(v, &gi)| {
            *v = b2 * *v + (1.0 - b2) * gi * gi;
            -lr_t * gi / (v.sqrt() + eps)
        })
        .collect();
    apply(theta, delta)
}

/// Length of the approximated simple moving average, `rho_t`.
pub fn radam_rho(beta2: f64, t: u64) -> f64 {
    let rho_inf = 2.0 / (1.0 - beta2) - 1.0;
    let bt = beta2.powi(t.min(i32::MAX as u64) as i32);
    rho_inf - 2.0 * t as f64 * bt / (1.0 - bt)
}

/// Whether RAdam applies the variance rectification at step `t`.
pub fn radam_rectified(beta2: f64, t: u64) -> bool {
    radam_rho(beta2, t) > 4.0
}

/// RAdam: rectified adaptive step when the variance is tractable, momentum SGD otherwise.
pub fn radam_step(
    state: &mut ParamState,
    theta: &mut Tensor,
    g: &Tensor,
    cfg: &OptimizerConfig,
    lr_t: f64,
) -> Result<Tensor> {
    let t = begin(state, theta, g, lr_t)?;
    let (b1, b2, eps) = (cfg.beta1, cfg.beta2, cfg.eps);
    let bc1 = bias_correction(b1, t);
    let bc2 = bias_correction(b2, t);
    let rho_inf = 2.0 / (1.0 - b2) - 1.0;
    let rho = radam_rho(b2, t);
    let rect = if rho > 4.0 {
        Some(
            ((rho - 4.0) * (rho - 2.0) * rho_inf / ((rho_inf - 4.0) * (rho_inf - 2.0) * rho))
                .sqrt(),
        )
    } else {
        None
    };
    let delta = state
        .m
        .data_mut()
        .iter_mut()
        .zip(state.v.data_mut())
        .zip(g.data())
        .map(|((m, v), &gi)| {
            *m = b1 * *m + (1.0 - b1) * gi;
            *v = b2 * *v + (1.0 - b2) * gi * gi;
            let m_hat = *m / bc1;
            match rect {
                Some(r) => -lr_t * r * m_hat / ((*v / bc2).sqrt() + eps),
                None => -lr_t * m_hat,
            }
        })
        .collect();
    apply(theta, delta)
}

/// AdaBound: Adam's per-coordinate rate clipped into bounds that tighten toward `final_lr`.
pub fn adabound_step(
    state: &mut ParamState,
    theta: &mut Tensor,
    g: &Tensor,
    cfg: &OptimizerConfig,
    lr_t: f64,
) -> Result<Tensor> {
    let t = begin(state, theta, g, lr_t)?;
    let (b1, b2, eps) = (cfg.beta1, cfg.beta2, cfg.eps);
    let bc1 = bias_correction(b1, t);
    let bc2 = bias_correction(b2, t);
    let step_size = lr_t * bc2.sqrt() / bc1;
    let final_lr = cfg.final_lr * lr_t / cfg.lr;
    let gt = cfg.gamma * t as f64;
    let lower = final_lr * (1.0 - 1.0 / (gt + 1.0));
    let upper = final_lr * (1.0 + 1.0 / gt);
    let delta = state
        .m
        .data_mut()
        .iter_mut()
        .zip(state.v.data_mut())
        .zip(g.data())
        .map(|((m, v), &gi)| {
            *m = b1 * *m + (1.0 - b1) * gi;
            *v = b2 * *v + (1.0 - b2) * gi * gi;
            let rate = (step_size / (v.sqrt() + eps)).clamp(lower, upper);
            -rate * *m
        })
        .collect();
    apply(theta, delta)
}

/// AdaBelief: the `v` slot holds `s = EMA((g - m)^2) + eps`.
pub fn adabelief_step(
    state: &mut ParamState,
    theta: &mut Tensor,
    g: &Tensor,
    cfg: &OptimizerConfig,
    lr_t: f64,
) -> Result<Tensor> {
    let t = begin(state, theta, g, lr_t)?;
    let (b1, b2, eps) = (cfg.beta1, cfg.beta2, cfg.eps);
    let bc1 = bias_correction(b1, t);
    let bc2 = bias_correction(b2, t);
    let delta = state
        .m
        .data_mut()
        .iter_mut()
        .zip(state.v.data_mut())
        .zip(g.data())
        .map(|((m, s), &gi)| {
            *m = b1 * *m + (1.0 - b1) * gi;
            let r = gi - *m;
            *s = b2 * *s + (1.0 - b2) * r * r + eps;
            -lr_t * (*m / bc1) / ((*s / bc2).sqrt() + eps)
        })
        .collect();
    apply(theta, delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::Variant;

    fn scalar_state(v0: f64) -> ParamState {
        ParamState::new(&Tensor::scalar(0.0), Tensor::scalar(v0)).unwrap()
    }

    #[test]
    fn adam_first_step_is_sign_descent() {
        let cfg = OptimizerConfig::adam(1.0);
        let mut st = scalar_state(0.0);
        let mut theta = Tensor::scalar(0.0);
        let d = adam_step(&mut st, &mut theta, &Tensor::scalar(0.001), &cfg, 1.0).unwrap();
        let expected = -0.001 / (0.001 + 1e-8);
        assert!((d.data()[0] - expected).abs() < 1e-15);
        assert!((d.data()[0] + 0.99999).abs() < 1e-5);
        assert_eq!(theta.data()[0], d.data()[0]);
        assert_eq!(st.t, 1);
    }

    #[test]
    fn adam_first_step_with_nonzero_v0() {
        let cfg = OptimizerConfig::adam(1.0).with_eps(0.0);
        for (g, v0) in [(0.5, 0.01), (-3.0, 2.0), (1e-4, 1e-6)] {
            let mut st = scalar_state(v0);
            let mut theta = Tensor::scalar(0.0);
            let d = adam_step(&mut st, &mut theta, &Tensor::scalar(g), &cfg, 1.0).unwrap();
            let b2 = cfg.beta2;
            let expected = -g / (g * g + b2 / (1.0 - b2) * v0).sqrt();
            assert!((d.data()[0] - expected).abs() <= 1e-12 * expected.abs());
            assert!(d.data()[0].abs() < 1.0);
        }
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        for variant in [
            Variant::Adam,
            Variant::RmsProp,
            Variant::SgdMomentum,
            Variant::AdamW,
        ] {
            let cfg = OptimizerConfig::new(variant, 0.5);
            let mut st = scalar_state(0.0);
            let mut theta = Tensor::scalar(1.25);
            for _ in 0..100 {
                let d = match variant {
                    Variant::Adam => {
                        adam_step(&mut st, &mut theta, &Tensor::scalar(0.0), &cfg, 0.5)
                    }
                    Variant::AdamW => {
                        adamw_step(&mut st, &mut theta, &Tensor::scalar(0.0), &cfg, 0.5)
                    }
                    Variant::RmsProp => {
                        rmsprop_step(&mut st, &mut theta, &Tensor::scalar(0.0), &cfg, 0.5)
                    }
                    _ => sgdm_step(&mut st, &mut theta, &Tensor::scalar(0.0), &cfg, 0.5),
                }
                .unwrap();
                assert_eq!(d.data()[0], 0.0);
            }
            assert_eq!(theta.data()[0], 1.25);
        }
    }

    #[test]
    fn sgd_without_momentum_is_plain_sgd() {
        let cfg = OptimizerConfig::sgd(0.3, 0.0);
        let mut st = scalar_state(0.0);
        let mut theta = Tensor::scalar(0.0);
        for c in [1.0, -2.0, 0.5] {
            let d = sgdm_step(&mut st, &mut theta, &Tensor::scalar(c), &cfg, 0.3).unwrap();
            assert_eq!(d.data()[0], -0.3 * c);
        }
    }

    #[test]
    fn sgd_momentum_limit() {
        // velocity_t = sum_{k<t} 0.9^k -> 1 / (1 - 0.9)
        let cfg = OptimizerConfig::sgd(1.0, 0.9);
        let mut st = scalar_state(0.0);
        let mut theta = Tensor::scalar(0.0);
        let mut last = 0.0;
        for _ in 0..500 {
            last = sgdm_step(&mut st, &mut theta, &Tensor::scalar(1.0), &cfg, 1.0)
                .unwrap()
                .data()[0];
        }
        assert!((last + 10.0).abs() < 1e-9, "{last}");
    }

    #[test]
    fn rmsprop_first_step() {
        let cfg = OptimizerConfig::new(Variant::RmsProp, 1.0);
        let mut st = scalar_state(0.0);
        let mut theta = Tensor::scalar(0.0);
        let c = 0.2;
        let d = rmsprop_step(&mut st, &mut theta, &Tensor::scalar(c), &cfg, 1.0)
            .unwrap()
            .data()[0];
        let expected = -c / ((0.001 * c * c).sqrt() + 1e-8);
        assert!((d - expected).abs() < 1e-12 * expected.abs());
        assert!((d + 31.6227766).abs() < 1e-4);

        let mut st = scalar_state(c * c);
        let d = rmsprop_step(&mut st, &mut theta, &Tensor::scalar(c), &cfg, 1.0)
            .unwrap()
            .data()[0];
        assert!((d + 1.0).abs() < 1e-6, "{d}");
    }

    #[test]
    fn adamw_without_decay_matches_adam_bitwise() {
        let adam = OptimizerConfig::adam(0.01);
        let adamw = OptimizerConfig {
            variant: Variant::AdamW,
            ..adam
        };
        let mut sa = scalar_state(0.3);
        let mut sw = scalar_state(0.3);
        let mut ta = Tensor::scalar(0.7);
        let mut tw = Tensor::scalar(0.7);
        let mut rng = crate::rng::Rng::new(12, 0);
        for _ in 0..100 {
            let g = Tensor::scalar(rng.standard_normal());
            let da = adam_step(&mut sa, &mut ta, &g, &adam, 0.01).unwrap();
            let dw = adamw_step(&mut sw, &mut tw, &g, &adamw, 0.01).unwrap();
            assert_eq!(da.data()[0].to_bits(), dw.data()[0].to_bits());
        }
        assert_eq!(ta.data()[0].to_bits(), tw.data()[0].to_bits());
    }

    #[test]
    fn adamw_decays_with_zero_gradient() {
        let cfg = OptimizerConfig {
            variant: Variant::AdamW,
            weight_decay: 0.1,
            ..OptimizerConfig::adam(0.01)
        };
        let mut st = scalar_state(0.0);
        let mut theta = Tensor::scalar(2.0);
        adamw_step(&mut st, &mut theta, &Tensor::scalar(0.0), &cfg, 0.01).unwrap();
        assert!((theta.data()[0] - 2.0 * (1.0 - 0.001)).abs() < 1e-15);
    }

    #[test]
    fn radam_branches() {
        // rho_t = rho_inf - 2 t beta2^t / (1 - beta2^t), evaluated independently
        let b2: f64 = 0.999;
        let rho_inf = 2.0 / (1.0 - b2) - 1.0;
        for t in 1..=6u64 {
            let bt = (t as f64 * b2.ln()).exp();
            let rho = rho_inf - 2.0 * t as f64 * bt / (1.0 - bt);
            assert!((radam_rho(b2, t) - rho).abs() < 1e-6);
            assert_eq!(radam_rectified(b2, t), rho > 4.0);
        }
        for t in 1..=4 {
            assert!(!radam_rectified(b2, t), "t={t}");
        }
        assert!(radam_rectified(b2, 5));

        // the fallback branch is -lr * m_hat
        let cfg = OptimizerConfig::new(Variant::RAdam, 0.1);
        let mut st = scalar_state(0.0);
        let mut theta = Tensor::scalar(0.0);
        let d = radam_step(&mut st, &mut theta, &Tensor::scalar(3.0), &cfg, 0.1).unwrap();
        assert!((d.data()[0] + 0.3).abs() < 1e-12);
    }

    #[test]
    fn adabound_bounds_hold() {
        let cfg = OptimizerConfig::new(Variant::AdaBound, 1e-3);
        let mut st = scalar_state(0.0);
        let mut theta = Tensor::scalar(0.0);
        for t in 1..=2000u64 {
            let g = 1e-6;
            let m_before = st.m.data()[0];
            let d = adabound_step(&mut st, &mut theta, &Tensor::scalar(g), &cfg, 1e-3)
                .unwrap()
                .data()[0];
            let m = 0.9 * m_before + 0.1 * g;
            let rate = -d / m;
            let gt = 1e-3 * t as f64;
            assert!(rate >= 0.1 * (1.0 - 1.0 / (gt + 1.0)) - 1e-12);
            assert!(rate <= 0.1 * (1.0 + 1.0 / gt) + 1e-12);
        }
    }

    #[test]
    fn adabelief_constant_gradient_limit() {
        // With g = c constant, (g - m)^2 -> 0 and s approaches its fixed point
        // s* = eps / (1 - beta2); the step then tends to -lr * c / (sqrt(s*/bc2) + eps).
        let cfg = OptimizerConfig::new(Variant::AdaBelief, 1e-3);
        let c = 0.5;
        let mut st = scalar_state(0.0);
        let mut theta = Tensor::scalar(0.0);
        let mut last = 0.0;
        for _ in 0..1000 {
            last = adabelief_step(&mut st, &mut theta, &Tensor::scalar(c), &cfg, 1e-3)
                .unwrap()
                .data()[0];
        }
        // independent recursion for s, closed form for m
        let (b1, b2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
        let mut s = 0.0;
        for t in 1..=1000 {
            let m = c * (1.0 - b1.powi(t));
            s = b2 * s + (1.0 - b2) * (c - m) * (c - m) + eps;
        }
        let expected = -1e-3 * c / ((s / (1.0 - b2.powi(1000))).sqrt() + eps);
        assert!(
            (last - expected).abs() < 1e-9 * expected.abs(),
            "{last} vs {expected}"
        );
        // far larger than lr: no sign-descent-like saturation at alpha
        assert!(last.abs() > 10.0 * 1e-3);
    }

    #[test]
    fn nan_gradient_is_rejected() {
        let cfg = OptimizerConfig::adam(1.0);
        let mut st = scalar_state(0.0);
        let mut theta = Tensor::scalar(0.0);
        let err = adam_step(&mut st, &mut theta, &Tensor::scalar(f64::NAN), &cfg, 1.0).unwrap_err();
        assert!(matches!(err, Error::GradientInvalid { .. }));
        assert_eq!(st.t, 0);
    }

    #[test]
    fn bad_learning_rate_is_rejected() {
        let cfg = OptimizerConfig::adam(1.0);
        let mut st = scalar_state(0.0);
        let mut theta = Tensor::scalar(0.0);
        assert!(adam_step(&mut st, &mut theta, &Tensor::scalar(1.0), &cfg, 0.0).is_err());
    }
}
