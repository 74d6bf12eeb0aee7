//! The cutoff `c(t) = χ(log(−εψ) − log N)` and its transition annulus.
//!
//! With `Λ(t) = −ψ(t) = log log(e + e^{2t})` the cutoff equals 1 while
//! `εΛ ≤ N/2` and 0 once `εΛ ≥ N`. `χ` is a cubic smoothstep on
//! `[−log 2, 0]`.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::radial_weights::{ln_e_plus_exp2t, logistic};

/// `max |χ'| = 3/(2 log 2)`.
pub const CHI_PRIME_MAX: f64 = 1.5 / LN_2;

/// Largest `N/ε` for which `e^{N/ε}` stays in double range.
const MAX_LEVEL: f64 = 700.0;

/// `3u² − 2u³` clamped to `[0, 1]`.
fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * (3.0 - 2.0 * u)
}

/// `χ(x)`: 1 on `x ≤ −log 2`, 0 on `x ≥ 0`.
pub fn chi(x: f64) -> f64 {
    // χ(x) = s(1 − u) with u = 1 + x/log 2, written to stay accurate near 0
    smoothstep(-x / LN_2)
}

/// `1 − χ(x)`.
pub fn one_minus_chi(x: f64) -> f64 {
    smoothstep(1.0 + x / LN_2)
}

/// `χ'(x)`.
pub fn chi_prime(x: f64) -> f64 {
    let u = 1.0 + x / LN_2;
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        -6.0 * u * (1.0 - u) / LN_2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CutoffProfile {
    #[serde(rename = "N")]
    pub big_n: u32,
    pub eps: f64,
    /// `c = 1` for `t ≤ t_half`.
    pub t_half: f64,
    /// `c = 0` for `t ≥ t_full`.
    pub t_full: f64,
}

/// Solves `ε log log(e + e^{2t}) = s` for `t`:
/// `t = ½ log(e^{E} − e)` with `E = e^{s/ε}`.
pub fn level_crossing(s: f64, eps: f64) -> f64 {
    let big_e = (s / eps).exp();
    0.5 * (big_e + (-(1.0 - big_e).exp()).ln_1p())
}

/// Builds the cutoff for `N ≥ 2` and `0 < ε ≤ 1`.
pub fn build_cutoff(big_n: u32, eps: f64) -> Result<CutoffProfile> {
    if big_n < 2 {
        return Err(Error::InvalidArgument(format!("cutoff needs N ≥ 2, got {big_n}")));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidArgument(format!("cutoff needs 0 < ε ≤ 1, got {eps}")));
    }
    if f64::from(big_n) / eps > MAX_LEVEL {
        return Err(Error::InvalidArgument(format!(
            "N/ε = {} puts the transition beyond double range",
            f64::from(big_n) / eps
        )));
    }
    let n = f64::from(big_n);
    Ok(CutoffProfile {
        big_n,
        eps,
        t_half: level_crossing(n / 2.0, eps),
        t_full: level_crossing(n, eps),
    })
}

/// `Λ(t) = log log(e + e^{2t})` and `Λ'(t)`.
fn lambda(t: f64) -> (f64, f64) {
    let ell = ln_e_plus_exp2t(t);
    let ell1 = 2.0 * logistic(2.0 * t - 1.0);
    (ell.ln(), ell1 / ell)
}

impl CutoffProfile {
    /// Argument `x(t) = log(εΛ(t)) − log N` of `χ`.
    pub fn arg(&self, t: f64) -> f64 {
        (self.eps * lambda(t).0).ln() - f64::from(self.big_n).ln()
    }

    pub fn value(&self, t: f64) -> f64 {
        if t <= self.t_half {
            1.0
        } else if t >= self.t_full {
            0.0
        } else {
            chi(self.arg(t))
        }
    }

    /// `1 − c(t)`, computed without cancellation.
    pub fn one_minus(&self, t: f64) -> f64 {
        if t <= self.t_half {
            0.0
        } else if t >= self.t_full {
            1.0
        } else {
            one_minus_chi(self.arg(t))
        }
    }

    /// `c'(t) = χ'(x)·Λ'/Λ`.
    pub fn derivative(&self, t: f64) -> f64 {
        if t <= self.t_half || t >= self.t_full {
            return 0.0;
        }
        let (l, l1) = lambda(t);
        chi_prime(self.arg(t)) * l1 / l
    }

    /// `χ'(x(t))² / (εΛ(t))²`, the pointwise factor of `|v|²_Θ / |f|²`.
    pub fn theta_factor(&self, t: f64) -> f64 {
        if t <= self.t_half || t >= self.t_full {
            return 0.0;
        }
        let d = chi_prime(self.arg(t));
        let el = self.eps * lambda(t).0;
        d * d / (el * el)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transition_bounds() {
        let c = build_cutoff(3, 1.0).unwrap();
        assert!((c.t_half - 2.225_225_388_449_158).abs() < 1e-13);
        assert!((c.t_full - 10.042_768_459_022_096).abs() < 1e-12);
        let c = build_cutoff(2, 1.0).unwrap();
        assert!((c.t_half - 1.260_296_958_586_384_7).abs() < 1e-13);
        assert!((c.t_full - 3.693_687_422_679_252).abs() < 1e-13);
    }

    #[test]
    fn crossing_solves_the_level_equation() {
        for &(s, eps) in &[(1.0, 1.0), (1.5, 0.5), (4.0, 1.0), (2.0, 0.25)] {
            let t = level_crossing(s, eps);
            assert!((eps * ln_e_plus_exp2t(t).ln() - s).abs() < 1e-12 * s);
        }
    }

    #[test]
    fn plateaus_and_continuity() {
        let c = build_cutoff(3, 1.0).unwrap();
        assert_eq!(c.value(c.t_half - 1.0), 1.0);
        assert_eq!(c.value(c.t_full + 1.0), 0.0);
        assert!((c.value(c.t_half + 1e-9) - 1.0).abs() < 1e-9);
        assert!(c.value(c.t_full - 1e-9) < 1e-9);
        assert!((c.arg(c.t_half) + LN_2).abs() < 1e-12);
        assert!(c.arg(c.t_full).abs() < 1e-12);
    }

    #[test]
    fn chi_prime_is_bounded_by_three() {
        let mut worst: f64 = 0.0;
        for i in 0..10_000 {
            let x = -1.0 + 1.2 * i as f64 / 9_999.0;
            worst = worst.max(chi_prime(x).abs());
        }
        assert!(worst <= 3.0);
        assert!((worst - CHI_PRIME_MAX).abs() < 1e-6);
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let c = build_cutoff(4, 0.5).unwrap();
        for i in 1..50 {
            let t = c.t_half + (c.t_full - c.t_half) * i as f64 / 50.0;
            let h = 1e-6;
            let fd = (c.value(t + h) - c.value(t - h)) / (2.0 * h);
            assert!((fd - c.derivative(t)).abs() < 1e-6 * (1.0 + c.derivative(t).abs()));
            assert!((c.value(t) + c.one_minus(t) - 1.0).abs() < 1e-15);
            assert!(c.derivative(t) <= 0.0);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_cutoff(1, 1.0).is_err());
        assert!(build_cutoff(3, 1.5).is_err());
        assert!(build_cutoff(3, 0.0).is_err());
        assert!(build_cutoff(400, 0.5).is_err());
    }
}
