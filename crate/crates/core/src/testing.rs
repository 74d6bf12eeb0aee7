//! Profiles used only by tests.

use crate::radial_weights::{Profile, Tail};

/// `g(t) = e^{2t}`, i.e. the Gaussian weight `‖z‖²`. It grows faster than any
/// linear profile, so every monomial has a finite norm.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GaussianProfile;

impl Profile for GaussianProfile {
    fn value(&self, t: f64) -> f64 {
        (2.0 * t).exp()
    }

    fn slope(&self, t: f64) -> f64 {
        2.0 * (2.0 * t).exp()
    }

    fn curvature(&self, t: f64) -> f64 {
        4.0 * (2.0 * t).exp()
    }

    fn upper_tail(&self) -> Tail {
        Tail {
            slope: f64::INFINITY,
            log_power: 0.0,
        }
    }

    fn lower_slope(&self) -> f64 {
        0.0
    }

    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
}
