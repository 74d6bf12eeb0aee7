//! Numerical checks on the minimal solution: the curvature condition behind
//! the twisted estimate, the `L²` bound chain, pointwise `∂̄`-exactness and
//! minimality.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::cutoff::CutoffProfile;
use super::solve::{mode_integral, ModeSolution};
use crate::error::{Error, Result};
use crate::logreal::{LogReal, SignedLogSum};
use crate::radial_weights::{psi, AuditGrid, Profile, RadialWeight, Witness};
use crate::series::ModeSeries;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Tolerance of the curvature margin.
pub const CURVATURE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct CurvatureReport {
    pub eps: f64,
    pub pass: bool,
    /// Smallest `½(g̃'' + εψ'') − (ε²/4)ψ'²` on the grid.
    pub worst_margin: Witness,
    /// Smallest jump `g̃'(t+) − g̃'(t−)` over the kinks.
    pub min_kink_jump: Option<Witness>,
}

/// `½(g̃''(t) + εψ''(t)) − (ε²/4)ψ'(t)²`.
pub fn curvature_margin<P: Profile + ?Sized>(profile: &P, eps: f64, t: f64) -> f64 {
    let (_, d1, d2) = psi(t);
    0.5 * (profile.curvature(t) + eps * d2) - 0.25 * eps * eps * d1 * d1
}

/// Uniform grid on `[−20, 200]` with step `0.01`.
pub fn curvature_grid() -> AuditGrid {
    AuditGrid::uniform(-20.0, 200.0, 22_001).expect("fixed bounds")
}

pub fn curvature_check<P: Profile + ?Sized>(profile: &P, eps: f64, grid: &AuditGrid) -> CurvatureReport {
    let kinks = profile.kinks();
    let mut worst = Witness { t: f64::NAN, value: f64::INFINITY };
    // the smooth part is sampled away from kinks, where g̃'' has an atom
    for &t in grid.points() {
        if kinks.iter().any(|&k| (t - k).abs() < 1e-9) {
            continue;
        }
        let m = curvature_margin(profile, eps, t);
        if m < worst.value {
            worst = Witness { t, value: m };
        }
    }
    let min_kink_jump = kinks
        .iter()
        .map(|&k| Witness {
            t: k,
            value: profile.slope(k) - profile.left_slope(k),
        })
        .min_by(|a, b| a.value.total_cmp(&b.value));
    let jumps_ok = min_kink_jump.is_none_or(|w| w.value >= -CURVATURE_TOL);
    CurvatureReport {
        eps,
        pass: worst.value >= -CURVATURE_TOL && jumps_ok,
        worst_margin: worst,
        min_kink_jump,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BerndtssonReport {
    #[serde(rename = "N")]
    pub big_n: u32,
    /// `‖u‖²_{φ̃_j}`.
    pub lhs: LogReal,
    /// `∫ |f|² χ'²/(εψ)² e^{−φ̃_j}`.
    pub theta_integral: LogReal,
    /// `∫_{t_half ≤ t ≤ t_full} |f|² e^{−φ̃_j}`.
    pub annulus_integral: LogReal,
    /// `lhs / (24·theta_integral)`.
    pub ratio_theta: f64,
    /// `lhs / ((864/N²)·annulus_integral)`.
    pub ratio_explicit: f64,
    /// `24·theta_integral / ((864/N²)·annulus_integral)`.
    pub ratio_chain: f64,
    pub pass: bool,
}

impl BerndtssonReport {
    pub fn into_result(self) -> Result<Self> {
        if self.pass {
            Ok(self)
        } else {
            Err(Error::AuditFailed(format!(
                "L² bound chain violated for N = {}: ratios {} / {} / {}",
                self.big_n, self.ratio_theta, self.ratio_explicit, self.ratio_chain
            )))
        }
    }
}

/// Audits `‖u‖² ≤ 24 ∫|v|²_Θ e^{−φ̃_j} ≤ (864/N²) ∫_annulus |f|² e^{−φ̃_j}`.
pub fn berndtsson_audit<P: Profile>(
    f: &ModeSeries,
    weight: &RadialWeight<P>,
    cutoff: &CutoffProfile,
    modes: &[ModeSolution],
) -> Result<BerndtssonReport> {
    let mut lhs = SignedLogSum::default();
    let mut theta = SignedLogSum::default();
    let mut annulus = SignedLogSum::default();
    for ((_, a), sol) in f.iter().zip(modes) {
        let scale = a.abs_powf(2.0) * LogReal::from_f64(TWO_PI);
        lhs.push(sol.u_norm_sq);
        let th = mode_integral(weight, sol.k, cutoff, cutoff.t_half, cutoff.t_full, |t| cutoff.theta_factor(t))?;
        theta.push(scale * th.value);
        let an = mode_integral(weight, sol.k, cutoff, cutoff.t_half, cutoff.t_full, |_| 1.0)?;
        annulus.push(scale * an.value);
    }
    let (lhs, theta, annulus) = (lhs.value().0, theta.value().0, annulus.value().0);
    let n2 = f64::from(cutoff.big_n).powi(2);
    let rhs_theta = LogReal::from_f64(24.0) * theta;
    let rhs_explicit = LogReal::from_f64(864.0 / n2) * annulus;
    let ratio = |x: LogReal, y: LogReal| if y.is_zero() { 0.0 } else { (x / y).to_f64() };
    let (r1, r2, r3) = (ratio(lhs, rhs_theta), ratio(lhs, rhs_explicit), ratio(rhs_theta, rhs_explicit));
    let slack = 1.0 + 1e-10;
    Ok(BerndtssonReport {
        big_n: cutoff.big_n,
        lhs,
        theta_integral: theta,
        annulus_integral: annulus,
        ratio_theta: r1,
        ratio_explicit: r2,
        ratio_chain: r3,
        pass: r1 <= slack && r2 <= slack && r3 <= slack,
    })
}

/// Quasi-random points `z = e^{t + iθ}` strictly inside the transition
/// annulus (2% margins in `t`), from the plastic-number Kronecker sequence
/// with a seeded random offset.
pub fn transition_samples(cutoff: &CutoffProfile, count: usize, seed: u64) -> Vec<Complex64> {
    const PLASTIC: f64 = 1.324_717_957_244_746;
    let (a1, a2) = (1.0 / PLASTIC, 1.0 / (PLASTIC * PLASTIC));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (o1, o2): (f64, f64) = (rng.gen(), rng.gen());
    let width = cutoff.t_full - cutoff.t_half;
    let (lo, span) = (cutoff.t_half + 0.02 * width, 0.96 * width);
    (1..=count)
        .map(|i| {
            let u = (o1 + i as f64 * a1).fract();
            let v = (o2 + i as f64 * a2).fract();
            Complex64::from_polar((lo + span * u).exp(), TWO_PI * v)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CrResidual {
    pub k: u32,
    pub samples: usize,
    /// Largest `|∂̄u − v| / (|z|^{k−1}(k|p| + |p'|))` over the samples.
    pub max_relative: f64,
}

/// Finite-difference `∂̄` of `u_k = z^k p(log|z|)` against `v_k = z^k c'/(2z̄)`.
///
/// Both sides are divided by `|z₀|^k` at each sample so large annuli stay in
/// range; the coefficient `a_k` cancels from the relative residual.
pub fn cr_residual(sol: &ModeSolution, cutoff: &CutoffProfile, points: &[Complex64]) -> CrResidual {
    let k = sol.k as i32;
    let mut worst: f64 = 0.0;
    for &z0 in points {
        let r0 = z0.norm();
        let u = |z: Complex64| (z / r0).powi(k) * sol.profile(cutoff, z.norm().ln());
        let h = 1e-5 * r0;
        let ux = (u(z0 + h) - u(z0 - h)) / (2.0 * h);
        let uy = (u(z0 + Complex64::i() * h) - u(z0 - Complex64::i() * h)) / (2.0 * h);
        let dbar = 0.5 * (ux + Complex64::i() * uy);
        let t = r0.ln();
        let v = (z0 / r0).powi(k) * cutoff.derivative(t) / (2.0 * z0.conj());
        let p = sol.profile(cutoff, t);
        let scale = (f64::from(sol.k) * p.abs() + cutoff.derivative(t).abs()) / r0;
        worst = worst.max((dbar - v).norm() / scale);
    }
    CrResidual {
        k: sol.k,
        samples: points.len(),
        max_relative: worst,
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PerturbationReport {
    pub k: u32,
    /// `δ / |a_k| = 10^{-3} ‖u_k‖ / (|a_k| ‖z^k‖)`.
    pub delta: f64,
    /// `(‖u + δz^k‖² − ‖u‖²) / ‖u‖²` for `+δ` and `−δ`.
    pub increase_plus: f64,
    pub increase_minus: f64,
    pub pass: bool,
}

/// Adds `±δ z^k` to a projected mode and recomputes the norm directly.
pub fn perturbation_test<P: Profile>(weight: &RadialWeight<P>, cutoff: &CutoffProfile, sol: &ModeSolution) -> Result<Option<PerturbationReport>> {
    let Some(m) = sol.mode_norm_sq else {
        return Ok(None);
    };
    let lo = f64::NEG_INFINITY;
    let hi = f64::INFINITY;
    let base = mode_integral(weight, sol.k, cutoff, lo, hi, |t| sol.profile(cutoff, t).powi(2))?.value;
    let mass = m / LogReal::from_f64(TWO_PI);
    let delta = 1e-3 * (base / mass).sqrt().to_f64();
    let shifted = |d: f64| -> Result<f64> {
        let v = mode_integral(weight, sol.k, cutoff, lo, hi, |t| (sol.profile(cutoff, t) + d).powi(2))?.value;
        Ok(((v - base) / base).to_f64())
    };
    let (plus, minus) = (shifted(delta)?, shifted(-delta)?);
    Ok(Some(PerturbationReport {
        k: sol.k,
        delta,
        increase_plus: plus,
        increase_minus: minus,
        pass: plus > 0.0 && minus > 0.0,
    }))
}
