//! Adaptive gradient optimizers with pluggable second-moment initialization.
//!
//! The crate is split into a few layers:
//!
//! * [`tensor`] and [`rng`]: dense `f64` tensors and a seeded, stream-split
//!   counter-based generator.
//! * [`init`]: how the second-moment state `v0` is produced (zero, scaled
//!   chi-squared, data-driven, constant) and the linear warmup comparator.
//! * [`optim`]: SGD-momentum, RMSprop, Adam, AdamW, RAdam, AdaBound and
//!   AdaBelief state machines that all accept an [`InitStrategy`].
//! * [`objectives`]: gradient oracles (saddle toy, noisy linear loss,
//!   exponentially decaying gradients, quadratic, tiny MLP).
//! * [`analysis`]: closed-form moment dynamics, the exponential-decay
//!   importance report, step statistics and loss-landscape scans.

pub mod analysis;
pub mod error;
pub mod init;
pub mod objectives;
pub mod optim;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
pub use init::{InitStrategy, WarmupSchedule};
pub use objectives::{Evaluation, GradientOracle};
pub use optim::{OptimizerConfig, OptimizerState, Variant};
pub use rng::Rng;
pub use tensor::{Shape, Tensor};
