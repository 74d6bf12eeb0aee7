//! Mode-diagonal minimal solution of `∂̄u = f ∂̄c` in `L²(e^{−φ̃_j})`, n = 1.
//!
//! For `f = Σ a_k z^k` every solution of the mode-`k` equation has the form
//! `a_k z^k p(t)` with `p' = c'`, so `p = c − 1 + κ` for a constant `κ`.
//! Orthogonality to `z^k` fixes `κ = ∫(1−c)w_k / ∫w_k`, where
//! `w_k = e^{(2k+2)t − g̃_j(t)}`. When `z^k ∉ H(φ̃_j)` only `κ = 1` keeps `u`
//! square integrable and there is nothing to be orthogonal to.

use serde::Serialize;

use super::cutoff::CutoffProfile;
use crate::error::{Error, Result};
use crate::logreal::{LogReal, SignedLogSum};
use crate::quadrature::{monomial_norm, radial_integral, weighted_integral, Integral, QuadVerdict, Region, REPORTED_REL_TOL};
use crate::radial_weights::{Profile, RadialWeight};
use crate::series::{ModeSeries, MultiIndex};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ModeStatus {
    Projected { kappa: f64 },
    Dropped,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModeSolution {
    pub k: u32,
    pub coeff: LogReal,
    #[serde(flatten)]
    pub status: ModeStatus,
    /// `‖u_k‖²_{φ̃_j} = |a_k|² 2π ∫ p² w_k`.
    pub u_norm_sq: LogReal,
    /// `m_k(φ̃_j)`, absent for dropped modes.
    pub mode_norm_sq: Option<LogReal>,
    /// `|⟨u_k, z^k⟩| / (‖u_k‖ ‖z^k‖)`, zero for dropped modes.
    pub orthogonality: f64,
}

impl ModeSolution {
    /// `κ_k`, with `κ = 1` for dropped modes.
    pub fn kappa(&self) -> f64 {
        match self.status {
            ModeStatus::Projected { kappa } => kappa,
            ModeStatus::Dropped => 1.0,
        }
    }

    /// Profile `p(t)` of `u_k = a_k z^k p(t)`.
    pub fn profile(&self, cutoff: &CutoffProfile, t: f64) -> f64 {
        match self.status {
            ModeStatus::Projected { kappa } => kappa - cutoff.one_minus(t),
            ModeStatus::Dropped => cutoff.value(t),
        }
    }
}

pub(crate) fn checked(i: Integral) -> Result<Integral> {
    let rel = i.rel_err();
    if rel <= REPORTED_REL_TOL {
        Ok(i)
    } else {
        Err(Error::QuadratureFailed {
            rel_err: rel,
            panels: i.panels,
        })
    }
}

/// `∫_lo^hi factor(t) w_k(t) dt` split at the cutoff transition.
pub(crate) fn mode_integral<P, F>(weight: &RadialWeight<P>, k: u32, cutoff: &CutoffProfile, lo: f64, hi: f64, factor: F) -> Result<Integral>
where
    P: Profile,
    F: Fn(f64) -> f64,
{
    let e = 2.0 * f64::from(k) + 2.0;
    checked(weighted_integral(
        weight.profile(),
        e,
        lo,
        hi,
        &[cutoff.t_half, cutoff.t_full],
        |t| LogReal::from_f64(factor(t)),
    )?)
}

fn require_plane<P: Profile>(weight: &RadialWeight<P>, f: &ModeSeries) -> Result<()> {
    if weight.n() != 1 || f.n() != 1 {
        return Err(Error::InvalidArgument("the ∂̄ solver works in dimension n = 1 only".into()));
    }
    Ok(())
}

fn degree(alpha: &MultiIndex) -> u32 {
    alpha.exponents()[0]
}

pub fn solve_mode<P: Profile>(weight: &RadialWeight<P>, k: u32, coeff: LogReal, cutoff: &CutoffProfile) -> Result<ModeSolution> {
    let e = 2.0 * f64::from(k) + 2.0;
    let a2 = coeff.abs_powf(2.0);
    let (lo, hi) = (f64::NEG_INFINITY, f64::INFINITY);
    match radial_integral(weight.profile(), e, Region::WholeSpace)? {
        QuadVerdict::Finite { value: mass, .. } => {
            let sub = mode_integral(weight, k, cutoff, cutoff.t_half, hi, |t| cutoff.one_minus(t))?;
            let kappa = (sub.value / mass).to_f64();
            if !(0.0..1.0).contains(&kappa) {
                return Err(Error::AuditFailed(format!("mode {k}: κ = {kappa} outside [0, 1)")));
            }
            let p = |t: f64| kappa - cutoff.one_minus(t);
            let p2 = mode_integral(weight, k, cutoff, lo, hi, |t| p(t) * p(t))?;
            let p1 = mode_integral(weight, k, cutoff, lo, hi, p)?;
            let orthogonality = (p1.value.abs() / (p2.value * mass).sqrt()).to_f64();
            Ok(ModeSolution {
                k,
                coeff,
                status: ModeStatus::Projected { kappa },
                u_norm_sq: a2 * LogReal::from_f64(TWO_PI) * p2.value,
                mode_norm_sq: Some(LogReal::from_f64(TWO_PI) * mass),
                orthogonality,
            })
        }
        QuadVerdict::Divergent { .. } => {
            let p2 = mode_integral(weight, k, cutoff, lo, cutoff.t_full, |t| {
                let c = cutoff.value(t);
                c * c
            })?;
            Ok(ModeSolution {
                k,
                coeff,
                status: ModeStatus::Dropped,
                u_norm_sq: a2 * LogReal::from_f64(TWO_PI) * p2.value,
                mode_norm_sq: None,
                orthogonality: 0.0,
            })
        }
    }
}

/// Minimal solution of `∂̄u = f ∂̄c` in `L²(e^{−φ̃_j})`, one entry per mode of `f`.
pub fn minimal_solution<P: Profile>(f: &ModeSeries, weight: &RadialWeight<P>, cutoff: &CutoffProfile) -> Result<Vec<ModeSolution>> {
    require_plane(weight, f)?;
    f.iter().map(|(alpha, a)| solve_mode(weight, degree(alpha), a, cutoff)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct Approximant {
    /// `F = f c − u`, with coefficient `a_k(1 − κ_k)` on projected modes.
    pub coeffs: ModeSeries,
    /// `‖F − f‖²_{φ̃}`.
    pub error_sq: LogReal,
    /// `‖f‖²_{φ̃}`.
    pub f_norm_sq: LogReal,
    /// `‖F‖²_{φ̃_j}`.
    pub norm_sq: LogReal,
    /// `‖f c‖²_{φ̃_j}`.
    pub fc_norm_sq: LogReal,
    /// `‖u‖²_{φ̃_j}`.
    pub u_norm_sq: LogReal,
    /// `‖F‖_{φ̃_j} ≤ ‖fc‖_{φ̃_j} + ‖u‖_{φ̃_j}`.
    pub triangle_holds: bool,
    /// `C` in `‖F‖_{φ̃_j} = (1 + C/N)‖f‖_{φ̃}`.
    pub measured_c: f64,
}

/// Builds `F_{j,N}` from a minimal solution and measures it against the
/// limit weight `φ̃`, in which `f` must have finite norm.
pub fn approximant<P: Profile, Q: Profile>(
    f: &ModeSeries,
    weight: &RadialWeight<P>,
    limit: &RadialWeight<Q>,
    cutoff: &CutoffProfile,
    modes: &[ModeSolution],
) -> Result<Approximant> {
    require_plane(weight, f)?;
    if modes.len() != f.len() {
        return Err(Error::InvalidArgument("one mode solution per term of f is required".into()));
    }
    let mut coeffs = ModeSeries::zero(1)?;
    let mut error = SignedLogSum::default();
    let mut f_norm = SignedLogSum::default();
    let mut norm = SignedLogSum::default();
    let mut fc = SignedLogSum::default();
    let mut u = SignedLogSum::default();
    for ((alpha, a), sol) in f.iter().zip(modes) {
        if degree(alpha) != sol.k {
            return Err(Error::InvalidArgument(format!("mode solution {} does not match term {alpha}", sol.k)));
        }
        let m_limit = monomial_norm(limit, alpha, Region::WholeSpace)?
            .finite(&format!("f must lie in H(φ̃); mode {alpha}"))?;
        let a2 = a.abs_powf(2.0);
        f_norm.push(a2 * m_limit);
        u.push(sol.u_norm_sq);
        let c2 = mode_integral(weight, sol.k, cutoff, f64::NEG_INFINITY, cutoff.t_full, |t| {
            let c = cutoff.value(t);
            c * c
        })?;
        fc.push(a2 * LogReal::from_f64(TWO_PI) * c2.value);
        match (sol.status, sol.mode_norm_sq) {
            (ModeStatus::Projected { kappa }, Some(m_j)) => {
                let keep = a * LogReal::from_f64(1.0 - kappa);
                coeffs.add_term(alpha.clone(), keep)?;
                norm.push(keep.abs_powf(2.0) * m_j);
                error.push(a2 * LogReal::from_f64(kappa * kappa) * m_limit);
            }
            _ => error.push(a2 * m_limit),
        }
    }
    let (norm_sq, fc_sq, u_sq, f_sq) = (norm.value().0, fc.value().0, u.value().0, f_norm.value().0);
    let lhs = norm_sq.sqrt();
    let rhs = fc_sq.sqrt() + u_sq.sqrt();
    let big_n = f64::from(cutoff.big_n);
    let measured_c = if f_sq.is_zero() {
        0.0
    } else {
        big_n * ((lhs / f_sq.sqrt()).to_f64() - 1.0)
    };
    Ok(Approximant {
        coeffs,
        error_sq: error.value().0,
        f_norm_sq: f_sq,
        norm_sq,
        fc_norm_sq: fc_sq,
        u_norm_sq: u_sq,
        triangle_holds: lhs <= rhs * LogReal::from_f64(1.0 + 1e-10),
        measured_c,
    })
}

#[cfg(test)]
mod tests {
    use super::super::cutoff::build_cutoff;
    use super::*;
    use crate::radial_weights::{RadialProfile, Term};

    fn tilted_log_plus(slope: f64) -> RadialWeight {
        RadialWeight::new(1, RadialProfile::log_plus(slope)).unwrap().tilted(1.0)
    }

    #[test]
    fn kappa_in_unit_interval_and_orthogonal() {
        let w = tilted_log_plus(9.0);
        let cut = build_cutoff(3, 1.0).unwrap();
        let f = ModeSeries::first_axis(1, [(1, LogReal::ONE), (2, LogReal::from_f64(0.5))]).unwrap();
        let sols = minimal_solution(&f, &w, &cut).unwrap();
        for s in &sols {
            let k = s.kappa();
            assert!((0.0..1.0).contains(&k));
            assert!(s.orthogonality < 1e-8, "{s:?}");
        }
    }

    #[test]
    fn kappa_oracle_for_affine_weight() {
        // g = 9t on t ≥ 0 and 0 below: w_1 = e^{4t} then e^{−5t}; ∫w = 1/4 + 1/5
        let w = RadialWeight::new(1, RadialProfile::log_plus(9.0)).unwrap();
        let cut = build_cutoff(2, 1.0).unwrap();
        let s = solve_mode(&w, 1, LogReal::ONE, &cut).unwrap();
        let m = s.mode_norm_sq.unwrap().to_f64();
        assert!((m - 2.0 * std::f64::consts::PI * 0.45).abs() < 1e-12 * m);
        // beyond t_full the integrand of ∫(1−c)w is e^{−5t}
        let tail = (-5.0 * cut.t_full).exp() / 5.0 / 0.45;
        assert!(s.kappa() > tail && s.kappa() < (-5.0 * cut.t_half).exp() / 5.0 / 0.45);
    }

    #[test]
    fn dropped_modes_use_the_cutoff() {
        let w = tilted_log_plus(3.0);
        let cut = build_cutoff(2, 1.0).unwrap();
        let s = solve_mode(&w, 2, LogReal::ONE, &cut).unwrap();
        assert_eq!(s.status, ModeStatus::Dropped);
        assert_eq!(s.kappa(), 1.0);
        assert_eq!(s.profile(&cut, cut.t_full + 1.0), 0.0);
        assert!(s.u_norm_sq.is_positive());
    }

    #[test]
    fn zero_function_gives_zero_approximant() {
        let w = tilted_log_plus(9.0);
        let cut = build_cutoff(2, 1.0).unwrap();
        let f = ModeSeries::zero(1).unwrap();
        let sols = minimal_solution(&f, &w, &cut).unwrap();
        let ap = approximant(&f, &w, &w, &cut, &sols).unwrap();
        assert!(ap.coeffs.is_zero());
        assert!(ap.error_sq.is_zero());
    }

    #[test]
    fn kappa_decreases_with_n() {
        let w = tilted_log_plus(11.0);
        let f = ModeSeries::first_axis(1, [(1, LogReal::ONE)]).unwrap();
        let mut last = f64::INFINITY;
        for n in 2..=5 {
            let cut = build_cutoff(n, 1.0).unwrap();
            let k = minimal_solution(&f, &w, &cut).unwrap()[0].kappa();
            assert!(k <= last);
            last = k;
        }
    }

    #[test]
    fn rejects_higher_dimensions() {
        let w = RadialWeight::new(2, RadialProfile::single(Term::Linear { slope: 20.0 })).unwrap();
        let cut = build_cutoff(2, 1.0).unwrap();
        let f = ModeSeries::first_axis(2, [(1, LogReal::ONE)]).unwrap();
        assert!(minimal_solution(&f, &w, &cut).is_err());
    }
}
