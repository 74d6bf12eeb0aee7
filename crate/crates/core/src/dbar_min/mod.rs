//! Approximation of `f ∈ H(φ̃)` by `F_{j,N} ∈ H(φ̃_j)` in the plane, where
//! `φ̃_j = φ_j + ε log(1 + |z|²)`.
//!
//! `F_{j,N} = f·c_N − u`, with `c_N` a cutoff that is 1 on a large disc and
//! `u` the minimal solution of `∂̄u = f ∂̄c_N` in `L²(e^{−φ̃_j})`.

mod audit;
mod coefficient;
mod cutoff;
mod solve;

pub use audit::{
    berndtsson_audit, cr_residual, curvature_check, curvature_grid, curvature_margin, perturbation_test,
    transition_samples, BerndtssonReport, CrResidual, CurvatureReport, PerturbationReport, CURVATURE_TOL,
};
pub use coefficient::{hormander_coefficient, minimize_coefficient, CoefficientMinimum};
pub use cutoff::{build_cutoff, chi, chi_prime, level_crossing, one_minus_chi, CutoffProfile, CHI_PRIME_MAX};
pub use solve::{approximant, minimal_solution, solve_mode, Approximant, ModeSolution, ModeStatus};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::radial_weights::WeightSequence;
use crate::series::ModeSeries;

/// Orthogonality residual allowed for projected modes.
pub const ORTHOGONALITY_TOL: f64 = 1e-8;
/// Relative Cauchy–Riemann residual allowed at sample points.
pub const CR_TOL: f64 = 1e-6;
/// Sample points per mode for the Cauchy–Riemann check.
pub const CR_SAMPLES: usize = 100;

#[derive(Clone, Debug, Serialize)]
pub struct CellReport {
    pub j: usize,
    #[serde(rename = "N")]
    pub big_n: u32,
    pub eps: f64,
    pub cutoff: CutoffProfile,
    pub modes: Vec<ModeSolution>,
    pub approximant: Approximant,
    pub berndtsson: BerndtssonReport,
    pub cr: Vec<CrResidual>,
    pub perturbation: Vec<PerturbationReport>,
    pub max_orthogonality: f64,
    pub pass: bool,
}

/// Solves, builds `F_{j,N}` and runs every per-cell audit for the tilted
/// sequence `φ̃_j = φ_j + ε log(1+|z|²)`.
pub fn run_cell(f: &ModeSeries, weights: &WeightSequence, eps: f64, j: usize, big_n: u32, seed: u64) -> Result<CellReport> {
    let phi_j = weights
        .get(j)
        .ok_or_else(|| Error::InvalidArgument(format!("weight index j = {j} outside 1..={}", weights.len())))?;
    let weight = phi_j.tilted(eps);
    let limit = weights.limit().tilted(eps);
    let cutoff = build_cutoff(big_n, eps)?;
    let modes = minimal_solution(f, &weight, &cutoff)?;
    let approximant = approximant(f, &weight, &limit, &cutoff, &modes)?;
    let berndtsson = berndtsson_audit(f, &weight, &cutoff, &modes)?;
    let points = transition_samples(&cutoff, CR_SAMPLES, seed.wrapping_add(1000 * j as u64 + u64::from(big_n)));
    let cr: Vec<CrResidual> = modes.iter().map(|m| cr_residual(m, &cutoff, &points)).collect();
    let perturbation = modes
        .iter()
        .filter_map(|m| perturbation_test(&weight, &cutoff, m).transpose())
        .collect::<Result<Vec<_>>>()?;
    let max_orthogonality = modes.iter().map(|m| m.orthogonality).fold(0.0, f64::max);
    let pass = max_orthogonality < ORTHOGONALITY_TOL
        && cr.iter().all(|c| c.max_relative < CR_TOL)
        && perturbation.iter().all(|p| p.pass)
        && berndtsson.pass
        && approximant.triangle_holds;
    Ok(CellReport {
        j,
        big_n,
        eps,
        cutoff,
        modes,
        approximant,
        berndtsson,
        cr,
        perturbation,
        max_orthogonality,
        pass,
    })
}

/// Curvature reports for `φ̃_1, …, φ̃_{j_max}`.
pub fn curvature_for_sequence(weights: &WeightSequence, eps: f64, j_max: usize) -> Vec<CurvatureReport> {
    let grid = curvature_grid();
    weights
        .weights()
        .iter()
        .take(j_max)
        .map(|w| curvature_check(w.tilted(eps).profile(), eps, &grid))
        .collect()
}
