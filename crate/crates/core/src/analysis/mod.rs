//! Closed-form dynamics and empirical step analysis.

mod decompose;
mod importance;
mod landscape;
mod moments;
mod stats;

pub use decompose::{decompose_step, StepDecomposition};
pub use importance::{expdecay_closed_moments, importance_report, ClosedMoments, ImportanceReport};
pub use landscape::{landscape_scan, LandscapeGrid};
pub use moments::{drift, expected_moments, rmsprop_expected_step};
pub use stats::{histogram_edges, sign_descent_fraction, step_stats, Histogram, StepStats};
