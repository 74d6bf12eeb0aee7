//! An increasing sequence of radial psh weights `φ_k ↑ φ` on ℂⁿ and an
//! entire function `f` with `f ∈ H(φ)` but `f ∉ H(φ_k)` for every `k`.
//!
//! `φ₁ = max(1, log ‖z‖)`, and `φ_{k+1}` follows `φ_k` up to `‖z‖ = k+1`
//! and continues as `C_{k+1} + N_{k+1} log ‖z‖` with `N_k = 2n + 1 + 2k`.
//! The function is `f = Σ_k ε_k z₁^k`, where `ε_k` is small against the two
//! pieces `A_k`, `B_k` of the norm of `z₁^k` that dominate `‖z₁^k‖_φ`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logreal::{LogReal, SignedLogSum};
use crate::quadrature::{monomial_norm, series_norm, QuadVerdict, Region, SeriesVerdict};
use crate::radial_weights::{AuditGrid, Profile, RadialProfile, RadialWeight, SequenceReport, Term, WeightSequence};
use crate::series::{ModeSeries, MultiIndex};

/// Truncation depth used when none is given.
pub const DEFAULT_K_MAX: usize = 12;

/// `N_k = 2n + 1 + 2k`.
pub fn slope_for(n: usize, k: usize) -> f64 {
    (2 * n + 1 + 2 * k) as f64
}

/// Index of the affine stage that stands in for the limit `φ`.
fn limit_stage(k_max: usize) -> usize {
    5 * (k_max + 1)
}

/// Quantities attached to one level `k ≥ 2` of the construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub k: usize,
    /// Slope of `φ_k` beyond `‖z‖ = k`.
    #[serde(rename = "N")]
    pub big_n: f64,
    /// Continuity constant of `φ_k`.
    #[serde(rename = "C")]
    pub c: f64,
    /// `∫_{‖z‖≤k} |z₁|^{2k} e^{−φ₁}`.
    #[serde(rename = "A")]
    pub a: LogReal,
    /// `∫_{‖z‖≥k} |z₁|^{2k} e^{−φ_k}`.
    #[serde(rename = "B")]
    pub b: LogReal,
    pub eps: LogReal,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CounterexampleInstance {
    pub n: usize,
    pub k_max: usize,
    /// Levels `k = 2, …, k_max + 1`; the last one supplies the witness mode
    /// for `φ_{k_max}`.
    pub levels: Vec<Level>,
    /// `φ₁, …, φ_{k_max+1}`, with the limit represented by a far stage.
    pub weights: WeightSequence,
    /// `Σ ε_k z₁^k` over the levels.
    pub f: ModeSeries,
}

/// `φ₁ … φ_{last}` together with the continuity constants `C_k`
/// (`C_1` is unused and set to 0).
fn stages(n: usize, last: usize) -> Result<(Vec<RadialWeight>, Vec<f64>)> {
    let mut profiles = vec![RadialProfile::single(Term::MaxOneT)];
    let mut constants = vec![0.0];
    for k in 1..last {
        let (next, c) = profiles[k - 1].extend_affine(((k + 1) as f64).ln(), slope_for(n, k + 1))?;
        profiles.push(next);
        constants.push(c);
    }
    let weights = profiles
        .into_iter()
        .map(|p| RadialWeight::new(n, p))
        .collect::<Result<Vec<_>>>()?;
    Ok((weights, constants))
}

/// `φ₁, …, φ_{k_max+1}` and the limit. The limit is represented by the
/// stage `M = 5(k_max + 1)`, which equals `φ` on `‖z‖ ≤ M + 1` and lies
/// below it beyond, so norms taken against it are upper bounds.
pub fn build_weights(n: usize, k_max: usize) -> Result<WeightSequence> {
    Ok(build_weights_with_constants(n, k_max)?.0)
}

fn build_weights_with_constants(n: usize, k_max: usize) -> Result<(WeightSequence, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension n must be at least 1".into()));
    }
    if k_max < 2 {
        return Err(Error::InvalidArgument(format!("k_max must be at least 2, got {k_max}")));
    }
    let (mut all, constants) = stages(n, limit_stage(k_max))?;
    let limit = all.pop().expect("limit stage exists");
    all.truncate(k_max + 1);
    let agree = (1..=all.len()).map(|j| Some(((j + 1) as f64).ln())).collect();
    Ok((WeightSequence::new(all, limit, agree)?, constants))
}

/// `(A_ℓ, B_ℓ)` for `2 ≤ ℓ ≤ len(weights)`.
pub fn compute_ab(weights: &WeightSequence, l: usize) -> Result<(LogReal, LogReal)> {
    if l < 2 || l > weights.len() {
        return Err(Error::InvalidArgument(format!(
            "level {l} outside 2..={}",
            weights.len()
        )));
    }
    let n = weights.n();
    let alpha = MultiIndex::first_axis(n, l as u32);
    let cut = (l as f64).ln();
    let phi1 = weights.get(1).expect("nonempty");
    let a = monomial_norm(phi1, &alpha, Region::Ball { t_max: cut })?.finite("A")?;
    let phi_l = weights.get(l).expect("checked range");
    let b = monomial_norm(phi_l, &alpha, Region::Exterior { t_min: cut })?.finite("B")?;
    Ok((a, b))
}

/// `ε_ℓ = min(1, 2^{−(ℓ+1)} / (A_ℓ + B_ℓ))`.
pub fn choose_eps(l: usize, a: LogReal, b: LogReal) -> LogReal {
    let eps = pow2(-(l as f64 + 1.0)) / (a + b);
    if eps > LogReal::ONE {
        LogReal::ONE
    } else {
        eps
    }
}

fn pow2(e: f64) -> LogReal {
    LogReal::from_ln(e * std::f64::consts::LN_2)
}

impl CounterexampleInstance {
    pub fn build(n: usize, k_max: usize) -> Result<Self> {
        let (weights, constants) = build_weights_with_constants(n, k_max)?;
        let levels = (2..=k_max + 1)
            .into_par_iter()
            .map(|k| {
                let (a, b) = compute_ab(&weights, k)?;
                Ok(Level {
                    k,
                    big_n: slope_for(n, k),
                    c: constants[k - 1],
                    a,
                    b,
                    eps: choose_eps(k, a, b),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let f = ModeSeries::first_axis(n, levels.iter().map(|lv| (lv.k as u32, lv.eps)))?;
        Ok(Self {
            n,
            k_max,
            levels,
            weights,
            f,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TermCertificate {
    pub k: usize,
    /// `m_k(φ) = ‖z₁^k‖²_φ` (against the limit representative).
    pub norm: LogReal,
    /// `ε_k² m_k(φ)`.
    pub term: LogReal,
    /// `ε_k (A_k + B_k)`.
    pub term_bound: LogReal,
    /// Relative error of `ε_k(A_k+B_k) = 2^{−(k+1)}`.
    pub eps_identity_rel_err: f64,
    pub norm_below_ab: bool,
    pub term_below_pow2: bool,
    pub partial_sum: LogReal,
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessCertificate {
    pub j: usize,
    /// Smallest divergent mode of `f` under `φ_j`.
    pub witness: Option<MultiIndex>,
    pub deficit: Option<f64>,
    pub expected: MultiIndex,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConjectureVerdict {
    /// `φ_j` psh, increasing, converging to `φ`, and `f ∈ H(φ)`.
    pub hypotheses_hold: bool,
    /// Number of `j` with `f ∈ H(φ_j)`; openness would need some.
    pub members_among_phi_j: usize,
    pub falsified: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MembershipReport {
    pub terms: Vec<TermCertificate>,
    /// `Σ_{k≤K} ε_k² m_k(φ)` at the last level.
    pub norm_squared: LogReal,
    /// `Σ_{k>K} 2^{−k} = 2^{−K}`.
    pub tail_bound: LogReal,
    /// `∫_{‖z‖ ≥ M+1}` part of the last mode's norm under the limit
    /// representative, where it may differ from the true limit.
    pub truncation_gap: LogReal,
    pub witnesses: Vec<WitnessCertificate>,
    pub sequence: SequenceReport,
    pub conjecture: ConjectureVerdict,
    pub pass: bool,
}

impl MembershipReport {
    pub fn into_result(self) -> Result<Self> {
        if self.pass {
            return Ok(self);
        }
        let bad_terms: Vec<usize> = self
            .terms
            .iter()
            .filter(|t| !(t.norm_below_ab && t.term_below_pow2 && t.eps_identity_rel_err < 1e-12))
            .map(|t| t.k)
            .collect();
        let bad_witnesses: Vec<usize> = self.witnesses.iter().filter(|w| !w.ok).map(|w| w.j).collect();
        Err(Error::AuditFailed(format!(
            "membership certificate failed: terms {bad_terms:?}, witnesses {bad_witnesses:?}, sequence audit {}",
            if self.sequence.pass { "ok" } else { "failed" }
        )))
    }
}

/// Grid used for the psh and monotonicity audits of an instance.
pub fn audit_grid(weights: &WeightSequence) -> AuditGrid {
    let kinks: Vec<f64> = weights.limit().profile().kinks();
    weights.audit_grid(4000).densified(&kinks)
}

/// Both halves of the statement: `f ∈ H(φ)` with an explicit tail bound,
/// and `f ∉ H(φ_j)` for `j ≤ k_max` with a divergent witness mode.
pub fn certify_membership(inst: &CounterexampleInstance) -> Result<MembershipReport> {
    let limit = inst.weights.limit();
    let norms = inst
        .levels
        .par_iter()
        .map(|lv| {
            monomial_norm(limit, &MultiIndex::first_axis(inst.n, lv.k as u32), Region::WholeSpace)?
                .finite("norm under the limit weight")
        })
        .collect::<Result<Vec<_>>>()?;

    let mut sum = SignedLogSum::default();
    let mut terms = Vec::with_capacity(inst.levels.len());
    for (lv, &norm) in inst.levels.iter().zip(&norms) {
        let term = lv.eps.abs_powf(2.0) * norm;
        let ab = lv.a + lv.b;
        let term_bound = lv.eps * ab;
        sum.push(term);
        terms.push(TermCertificate {
            k: lv.k,
            norm,
            term,
            term_bound,
            eps_identity_rel_err: term_bound.rel_diff(pow2(-(lv.k as f64 + 1.0))),
            norm_below_ab: norm <= ab,
            term_below_pow2: term <= term_bound && term_bound <= pow2(-(lv.k as f64)),
            partial_sum: sum.value().0,
        });
    }
    let last_k = inst.levels.last().map_or(1, |lv| lv.k);
    let m = limit_stage(inst.k_max);
    let truncation_gap = match monomial_norm(
        limit,
        &MultiIndex::first_axis(inst.n, last_k as u32),
        Region::Exterior { t_min: ((m + 1) as f64).ln() },
    )? {
        QuadVerdict::Finite { value, .. } => value,
        QuadVerdict::Divergent { .. } => {
            return Err(Error::Divergent("limit representative is too shallow for the last mode".into()))
        }
    };

    let witnesses = (1..=inst.k_max)
        .into_par_iter()
        .map(|j| {
            let phi_j = inst.weights.get(j).expect("k_max + 1 weights");
            let expected = MultiIndex::first_axis(inst.n, j as u32 + 1);
            Ok(match series_norm(phi_j, &inst.f, Region::WholeSpace, None)? {
                SeriesVerdict::Divergent { witness, deficit, .. } => WitnessCertificate {
                    j,
                    ok: witness == expected,
                    witness: Some(witness),
                    deficit: Some(deficit),
                    expected,
                },
                SeriesVerdict::Finite { .. } => WitnessCertificate {
                    j,
                    witness: None,
                    deficit: None,
                    expected,
                    ok: false,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let sequence = inst.weights.audit(&audit_grid(&inst.weights))?;
    let terms_ok = terms
        .iter()
        .all(|t| t.norm_below_ab && t.term_below_pow2 && t.eps_identity_rel_err < 1e-12);
    let members = witnesses.iter().filter(|w| w.witness.is_none()).count();
    let hypotheses_hold = sequence.pass && terms_ok;
    let conjecture = ConjectureVerdict {
        hypotheses_hold,
        members_among_phi_j: members,
        falsified: hypotheses_hold && members == 0,
    };
    Ok(MembershipReport {
        pass: terms_ok && witnesses.iter().all(|w| w.ok) && sequence.pass,
        norm_squared: sum.value().0,
        tail_bound: pow2(-(last_k as f64)),
        truncation_gap,
        terms,
        witnesses,
        sequence,
        conjecture,
    })
}

/// Rebuilds `A`, `B`, `ε` and `f` from the stored weights, and `N`, `C`
/// from scratch, and reports the largest relative disagreement with the
/// stored values.
pub fn recompute_drift(inst: &CounterexampleInstance) -> Result<f64> {
    let rel = |x: f64, y: f64| {
        let d = (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE);
        if d.is_nan() {
            f64::INFINITY
        } else {
            d
        }
    };
    let (_, constants) = stages(inst.n, inst.k_max + 1)?;
    let mut worst: f64 = 0.0;
    for lv in &inst.levels {
        let c = constants.get(lv.k - 1).copied().unwrap_or(f64::NAN);
        worst = worst.max(rel(slope_for(inst.n, lv.k), lv.big_n)).max(rel(c, lv.c));
        let (a, b) = compute_ab(&inst.weights, lv.k)?;
        let eps = choose_eps(lv.k, a, b);
        worst = worst.max(a.rel_diff(lv.a)).max(b.rel_diff(lv.b)).max(eps.rel_diff(lv.eps));
        let stored = inst.f.coeff(&MultiIndex::first_axis(inst.n, lv.k as u32));
        worst = worst.max(stored.rel_diff(lv.eps));
    }
    if inst.f.len() != inst.levels.len() {
        worst = f64::INFINITY;
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial_weights::Profile;
    use std::f64::consts::{LN_2, PI};

    #[test]
    fn continuity_constant() {
        let (_, c) = build_weights_with_constants(1, 3).unwrap();
        // C₂ = 1 − 7 ln 2
        assert!((c[1] - (1.0 - 4.852_030_263_919_617)).abs() < 1e-14);
        assert!((c[1] - 1.0 + 7.0 * LN_2).abs() < 1e-14);
    }

    #[test]
    fn stages_agree_below_their_breakpoint() {
        let w = build_weights(1, 5).unwrap();
        for k in 1..w.len() {
            let (a, b) = (w.get(k).unwrap().profile(), w.get(k + 1).unwrap().profile());
            for i in 0..200 {
                let t = -5.0 + i as f64 * (((k + 1) as f64).ln() + 5.0) / 199.0;
                assert!((a.value(t) - b.value(t)).abs() <= 1e-14 * a.value(t).abs().max(1.0));
            }
            assert!(b.value(((k + 1) as f64).ln() + 1.0) > a.value(((k + 1) as f64).ln() + 1.0));
        }
        let slopes: Vec<f64> = w.limit().profile().breakpoints().iter().map(|&b| w.limit().profile().slope(b)).collect();
        assert!(slopes.windows(2).all(|s| s[0] < s[1]));
        assert_eq!(slopes[0], 7.0);
    }

    #[test]
    fn rejects_shallow_truncation() {
        assert!(build_weights(1, 1).is_err());
        assert!(build_weights(0, 4).is_err());
    }

    #[test]
    fn a2_matches_closed_form() {
        let w = build_weights(2 - 1, 3).unwrap();
        let (a, b) = compute_ab(&w, 2).unwrap();
        // φ₁ ≡ 1 on ‖z‖ ≤ 2 < e, so A₂ = 2π e^{−1} ∫_{−∞}^{log 2} e^{6t} dt = 64π/(3e)
        let expected = 64.0 * PI / (3.0 * std::f64::consts::E);
        assert!((a.to_f64() - expected).abs() / expected < 1e-12);
        assert!((a.to_f64() - 24.655_516_795_539_663).abs() / expected < 1e-12);
        // φ₂ = C₂ + 7t beyond log 2, so B₂ = 2π e^{−C₂} ∫_{log 2}^∞ e^{−t} dt
        let c2 = 1.0 - 7.0 * LN_2;
        let b_expected = 2.0 * PI * (-c2).exp() * 0.5;
        assert!((b.to_f64() - b_expected).abs() / b_expected < 1e-12);
    }

    #[test]
    fn small_instance_certifies() {
        let inst = CounterexampleInstance::build(1, 4).unwrap();
        assert_eq!(inst.levels.len(), 4);
        assert_eq!(inst.weights.len(), 5);
        let rep = certify_membership(&inst).unwrap().into_result().unwrap();
        for (j, w) in rep.witnesses.iter().enumerate() {
            assert_eq!(w.witness, Some(MultiIndex::first_axis(1, j as u32 + 2)));
        }
        assert!(rep.conjecture.falsified);
        assert!(rep.truncation_gap < rep.terms.last().unwrap().norm * LogReal::from_f64(1e-12));
        assert_eq!(recompute_drift(&inst).unwrap(), 0.0);
    }

    #[test]
    fn two_dimensional_instance_certifies() {
        let inst = CounterexampleInstance::build(2, 3).unwrap();
        let rep = certify_membership(&inst).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn instance_json_round_trip() {
        let inst = CounterexampleInstance::build(1, 2).unwrap();
        let s = serde_json::to_string(&inst).unwrap();
        let back: CounterexampleInstance = serde_json::from_str(&s).unwrap();
        assert_eq!(back.levels, inst.levels);
        assert_eq!(back.f, inst.f);
        assert_eq!(recompute_drift(&back).unwrap(), 0.0);
    }
}
