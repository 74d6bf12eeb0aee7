//! Finiteness of `∫_{‖z‖≥1} |z^α|² ‖z‖^{−N} dλ` and what it forces on
//! members of `H(N log ‖z‖)`.
//!
//! The integral is finite exactly when `N > 2|α| + 2n`. Both directions come
//! with explicit evidence: a lower bound summed over disjoint dyadic
//! polydisc shells, and a closed-form upper bound from `|z^α| ≤ ‖z‖^{|α|}`.

use std::f64::consts::{LN_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::logreal::{ln_factorial, LogReal, LogSum};
use crate::quadrature::tail_verdict;
use crate::radial_weights::{asymptotic_slope, Profile, RadialWeight};
use crate::series::{ModeSeries, MultiIndex};

/// `2|α| + 2n`, the growth exponent of `|z^α|²` against `dλ` in `t = log r`.
pub fn mode_exponent(n: usize, alpha: &MultiIndex) -> f64 {
    2.0 * alpha.degree() as f64 + 2.0 * n as f64
}

/// `N > 2|α| + 2n`.
pub fn threshold_finite(n: usize, alpha: &MultiIndex, big_n: f64) -> bool {
    big_n > mode_exponent(n, alpha)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DyadicVerdict {
    Diverges,
    Bounded,
}

#[derive(Clone, Debug, Serialize)]
pub struct DyadicEvidence {
    /// `c_N Σ_{k=1}^{K} 2^{k·exponent}` for `K = 1, 2, …`.
    pub partial_sums: Vec<LogReal>,
    /// `2|α| + 2n − N`.
    pub exponent: f64,
    pub verdict: DyadicVerdict,
}

/// Lower bound for the exterior integral from the shells
/// `{2^k ≤ |z_i| ≤ 2^{k+1} for all i}`, `k ≥ 1`.
///
/// On a shell `|z^α|² ≥ 2^{2k|α|}`, `‖z‖ ≤ √n·2^{k+1}` and the shell has
/// volume at least `(π 4^k)ⁿ`, which gives the constant `c_N = πⁿ/(2√n)^N`.
pub fn dyadic_lower_bound(n: usize, alpha: &MultiIndex, big_n: f64, k_terms: usize) -> Result<DyadicEvidence> {
    if k_terms < 1 {
        return Err(Error::InvalidArgument("dyadic evidence needs K ≥ 1".into()));
    }
    if n == 0 || alpha.dim() != n {
        return Err(Error::InvalidArgument(format!("multi-index {alpha} does not match n = {n}")));
    }
    let exponent = mode_exponent(n, alpha) - big_n;
    let ln_c = n as f64 * PI.ln() - big_n * (2.0 * (n as f64).sqrt()).ln();
    let mut acc = LogSum::default();
    let partial_sums = (1..=k_terms)
        .map(|k| {
            acc.push_ln(k as f64 * exponent * LN_2);
            LogReal::from_ln(ln_c + acc.ln_value())
        })
        .collect();
    Ok(DyadicEvidence {
        partial_sums,
        exponent,
        verdict: if exponent >= 0.0 {
            DyadicVerdict::Diverges
        } else {
            DyadicVerdict::Bounded
        },
    })
}

/// `2πⁿ / ((n−1)! (N − 2|α| − 2n))`, an upper bound for the exterior integral
/// when it is finite.
pub fn comparison_upper_bound(n: usize, alpha: &MultiIndex, big_n: f64) -> Option<LogReal> {
    let gap = big_n - mode_exponent(n, alpha);
    (n >= 1 && gap > 0.0).then(|| {
        LogReal::from_ln(LN_2 + n as f64 * PI.ln() - ln_factorial(n as u64 - 1) - gap.ln())
    })
}

/// Largest degree a nonzero entire function in `H(N log⁺‖z‖)` can have:
/// `⌊(N − 2n − 1)/2⌋`, or `None` when only `f = 0` qualifies.
pub fn degree_cap(n: usize, big_n: f64) -> Option<u64> {
    let cap = ((big_n - 2.0 * n as f64 - 1.0) / 2.0).floor();
    (cap >= 0.0).then_some(cap as u64)
}

#[derive(Clone, Debug, Serialize)]
pub struct MembershipVerdict {
    /// Modes of `f` whose monomial norm diverges.
    pub excluded: Vec<MultiIndex>,
    pub member: bool,
}

/// Decides `f ∈ H(weight)` mode by mode: a monomial is excluded when its
/// exponent reaches the weight's slope at infinity (or the weight is
/// singular at the origin for it). Equality already diverges.
pub fn membership_filter<P: Profile>(weight: &RadialWeight<P>, f: &ModeSeries) -> Result<MembershipVerdict> {
    if !asymptotic_slope(weight.profile()).is_finite() {
        return Err(Error::InvalidArgument("membership filter needs a finite asymptotic slope".into()));
    }
    if f.n() != weight.n() {
        return Err(Error::InvalidArgument("series and weight live in different dimensions".into()));
    }
    let excluded: Vec<MultiIndex> = f
        .iter()
        .filter(|(alpha, _)| {
            tail_verdict(
                weight.profile(),
                mode_exponent(weight.n(), alpha),
                f64::NEG_INFINITY,
                f64::INFINITY,
            )
            .is_some()
        })
        .map(|(alpha, _)| alpha.clone())
        .collect();
    Ok(MembershipVerdict {
        member: excluded.is_empty(),
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{monomial_norm, series_norm, Region};
    use crate::radial_weights::{RadialProfile, Term};
    use proptest::prelude::*;

    fn idx(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec()).unwrap()
    }

    #[test]
    fn threshold_examples() {
        assert!(threshold_finite(1, &idx(&[0]), 3.0));
        assert!(!threshold_finite(1, &idx(&[0]), 2.0));
        assert!(threshold_finite(2, &idx(&[1, 1]), 9.0));
        assert!(!threshold_finite(2, &idx(&[1, 1]), 8.0));
        // real N: strict inequality
        assert!(threshold_finite(1, &idx(&[0]), 2.0 + 1e-9));
    }

    #[test]
    fn dyadic_examples() {
        let ev = dyadic_lower_bound(1, &idx(&[1]), 4.0, 20).unwrap();
        assert_eq!(ev.verdict, DyadicVerdict::Diverges);
        assert_eq!(ev.exponent, 0.0);
        let c = ev.partial_sums[0].to_f64();
        assert!((ev.partial_sums[19].to_f64() / c - 20.0).abs() < 1e-12);

        let ev = dyadic_lower_bound(1, &idx(&[0]), 3.0, 60).unwrap();
        assert_eq!(ev.verdict, DyadicVerdict::Bounded);
        let c_n = PI / 8.0;
        assert!(ev.partial_sums.iter().all(|s| s.to_f64() < 2.0 * c_n));

        let ev = dyadic_lower_bound(1, &idx(&[2]), 3.0, 40).unwrap();
        assert!(ev.partial_sums[39].to_f64() > 1e6);
        assert!(dyadic_lower_bound(1, &idx(&[0]), 3.0, 0).is_err());
    }

    #[test]
    fn dyadic_bound_is_below_the_integral() {
        let w = RadialWeight::new(1, RadialProfile::single(Term::Linear { slope: 5.0 })).unwrap();
        let exact = monomial_norm(&w, &idx(&[1]), Region::Exterior { t_min: 0.0 }).unwrap().value().unwrap();
        let ev = dyadic_lower_bound(1, &idx(&[1]), 5.0, 50).unwrap();
        assert!(*ev.partial_sums.last().unwrap() <= exact);
        assert!(exact <= comparison_upper_bound(1, &idx(&[1]), 5.0).unwrap() * LogReal::from_f64(1.0 + 1e-12));
    }

    #[test]
    fn value_matches_closed_form() {
        let w = RadialWeight::new(1, RadialProfile::single(Term::Linear { slope: 3.0 })).unwrap();
        let v = monomial_norm(&w, &idx(&[0]), Region::Exterior { t_min: 0.0 }).unwrap().value().unwrap();
        assert!((v.to_f64() - 2.0 * PI).abs() / (2.0 * PI) < 1e-6);
    }

    #[test]
    fn degree_caps() {
        assert_eq!(degree_cap(1, 7.0), Some(2));
        assert_eq!(degree_cap(1, 3.0), Some(0));
        assert_eq!(degree_cap(2, 4.0), None);
    }

    #[test]
    fn membership_examples() {
        let w = RadialWeight::new(1, RadialProfile::log_plus(7.0)).unwrap();
        let z3 = ModeSeries::first_axis(1, [(3, LogReal::ONE)]).unwrap();
        let v = membership_filter(&w, &z3).unwrap();
        assert!(!v.member);
        assert_eq!(v.excluded, vec![MultiIndex::first_axis(1, 3)]);
        let z2 = ModeSeries::first_axis(1, [(2, LogReal::ONE)]).unwrap();
        assert!(membership_filter(&w, &z2).unwrap().member);
        assert!(membership_filter(&w, &ModeSeries::zero(1).unwrap()).unwrap().member);
    }

    #[test]
    fn oracle_agreement_with_quadrature() {
        let mut cases = 0;
        for n in 1..=2usize {
            for d in 0..=3u32 {
                for alpha in MultiIndex::with_degree(n, d).into_iter().take(1) {
                    let e = mode_exponent(n, &alpha) as i64;
                    for big_n in (e - 1)..=(e + 3) {
                        let w = RadialWeight::new(n, RadialProfile::single(Term::Linear { slope: big_n as f64 })).unwrap();
                        let q = monomial_norm(&w, &alpha, Region::Exterior { t_min: 0.0 }).unwrap();
                        assert_eq!(q.is_finite(), threshold_finite(n, &alpha, big_n as f64), "n={n} α={alpha} N={big_n}");
                        let ev = dyadic_lower_bound(n, &alpha, big_n as f64, 10).unwrap();
                        assert_eq!(ev.verdict == DyadicVerdict::Diverges, !q.is_finite());
                        cases += 1;
                    }
                }
            }
        }
        assert_eq!(cases, 40);
    }

    proptest! {
        #[test]
        fn partial_sums_nondecreasing(n in 1usize..4, d in 0u32..5, big_n in 0.5f64..20.0, k in 1usize..40) {
            let alpha = MultiIndex::first_axis(n, d);
            let ev = dyadic_lower_bound(n, &alpha, big_n, k).unwrap();
            prop_assert!(ev.partial_sums.windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!(ev.verdict == DyadicVerdict::Diverges, ev.exponent >= 0.0);
            if ev.verdict == DyadicVerdict::Diverges {
                prop_assert!(!threshold_finite(n, &alpha, big_n));
            }
        }

        #[test]
        fn degree_cap_matches_membership(n in 1usize..4, big_n in 0u32..30) {
            let big_n = f64::from(big_n);
            let w = RadialWeight::new(n, RadialProfile::log_plus(big_n)).unwrap();
            let admitted = |k: u64| {
                let f = ModeSeries::first_axis(n, [(k as u32, LogReal::ONE)]).unwrap();
                let v = membership_filter(&w, &f).unwrap();
                let s = series_norm(&w, &f, Region::WholeSpace, None).unwrap();
                assert_eq!(v.member, s.is_finite());
                v.member
            };
            match degree_cap(n, big_n) {
                Some(cap) => {
                    for k in 0..=cap {
                        prop_assert!(admitted(k));
                    }
                    prop_assert!(!admitted(cap + 1));
                }
                None => prop_assert!(!admitted(0)),
            }
        }
    }
}
