//! Radial weights `φ(z) = g(log ‖z‖)` on ℂⁿ.
//!
//! A radial function is plurisubharmonic exactly when its profile `g` is
//! convex and nondecreasing in `t = log r`, so everything here works in the
//! `t` coordinate. Profiles are sums of a closed set of primitive terms,
//! optionally restricted to the pieces cut out by a sorted list of
//! breakpoints.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Relative continuity tolerance at breakpoints.
pub const CONTINUITY_TOL: f64 = 1e-12;
/// Absolute tolerance of the sampled convexity / monotonicity audit.
pub const PSH_TOL: f64 = 1e-10;
/// Tolerance for pointwise sequence monotonicity and agreement.
pub const SEQUENCE_TOL: f64 = 1e-12;

/// `1 / (1 + e^{-x})` without overflow.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(e + e^{2t})`, the inner logarithm of ψ.
pub fn ln_e_plus_exp2t(t: f64) -> f64 {
    let x = 2.0 * t;
    x.max(1.0) + (-(x - 1.0).abs()).exp().ln_1p()
}

/// `log(1 + e^{2t})`.
pub fn ln_one_plus_exp2t(t: f64) -> f64 {
    let x = 2.0 * t;
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// ψ(t) = −log log(e + e^{2t}) and its first two derivatives.
pub fn psi(t: f64) -> (f64, f64, f64) {
    let l = ln_e_plus_exp2t(t);
    let s = logistic(2.0 * t - 1.0);
    let l1 = 2.0 * s;
    let l2 = 4.0 * s * (1.0 - s);
    let q = l1 / l;
    (-l.ln(), -q, -l2 / l + q * q)
}

/// One primitive summand of a profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Term {
    #[serde(rename = "constant")]
    Constant { value: f64 },
    /// `N·t`, i.e. `N log ‖z‖`.
    #[serde(rename = "linear")]
    Linear { slope: f64 },
    /// `max(1, t)`.
    #[serde(rename = "max_one_t")]
    MaxOneT,
    /// `ε·log(1 + e^{2t})`, the tilt `ε log(1 + ‖z‖²)`.
    #[serde(rename = "log_one_plus_r2")]
    LogOnePlusR2 { eps: f64 },
    /// `c·ψ(t)` with ψ = −log log(e + ‖z‖²).
    #[serde(rename = "neg_log_log_e_r2")]
    NegLogLogER2 { scale: f64 },
}

impl Term {
    fn params(&self) -> f64 {
        match *self {
            Term::Constant { value } => value,
            Term::Linear { slope } => slope,
            Term::MaxOneT => 1.0,
            Term::LogOnePlusR2 { eps } => eps,
            Term::NegLogLogER2 { scale } => scale,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Term::Constant { value } => value,
            Term::Linear { slope } => slope * t,
            Term::MaxOneT => t.max(1.0),
            Term::LogOnePlusR2 { eps } => eps * ln_one_plus_exp2t(t),
            Term::NegLogLogER2 { scale } => scale * psi(t).0,
        }
    }

    /// Right derivative.
    pub fn d1(&self, t: f64) -> f64 {
        match *self {
            Term::Constant { .. } => 0.0,
            Term::Linear { slope } => slope,
            Term::MaxOneT => {
                if t >= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Term::LogOnePlusR2 { eps } => 2.0 * eps * logistic(2.0 * t),
            Term::NegLogLogER2 { scale } => scale * psi(t).1,
        }
    }

    fn d1_left(&self, t: f64) -> f64 {
        match self {
            Term::MaxOneT => {
                if t > 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            _ => self.d1(t),
        }
    }

    /// Second derivative away from the term's own kink.
    pub fn d2(&self, t: f64) -> f64 {
        match *self {
            Term::Constant { .. } | Term::Linear { .. } | Term::MaxOneT => 0.0,
            Term::LogOnePlusR2 { eps } => {
                let s = logistic(2.0 * t);
                4.0 * eps * s * (1.0 - s)
            }
            Term::NegLogLogER2 { scale } => scale * psi(t).2,
        }
    }

    fn upper_slope(&self) -> f64 {
        match *self {
            Term::Linear { slope } => slope,
            Term::MaxOneT => 1.0,
            Term::LogOnePlusR2 { eps } => 2.0 * eps,
            Term::Constant { .. } | Term::NegLogLogER2 { .. } => 0.0,
        }
    }

    fn lower_slope(&self) -> f64 {
        match *self {
            Term::Linear { slope } => slope,
            _ => 0.0,
        }
    }

    /// Coefficient `c` in `g(t) = s·t − c·log t + O(1)` as `t → ∞`.
    fn log_power(&self) -> f64 {
        match *self {
            Term::NegLogLogER2 { scale } => scale,
            _ => 0.0,
        }
    }

    fn kink(&self) -> Option<f64> {
        matches!(self, Term::MaxOneT).then_some(1.0)
    }
}

/// Large-`t` behaviour `g(t) = slope·t − log_power·log t + O(1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tail {
    pub slope: f64,
    pub log_power: f64,
}

/// What the quadrature and audit code needs from a radial profile.
pub trait Profile {
    fn value(&self, t: f64) -> f64;
    /// Right derivative `g'(t+)`.
    fn slope(&self, t: f64) -> f64;
    /// Left derivative `g'(t−)`.
    fn left_slope(&self, t: f64) -> f64 {
        self.slope(t)
    }
    /// Smooth part of `g''(t)`; kinks contribute atoms that are not included.
    fn curvature(&self, t: f64) -> f64;
    fn upper_tail(&self) -> Tail;
    /// `lim g(t)/t` as `t → −∞`.
    fn lower_slope(&self) -> f64;
    /// Sorted points where `g` is not smooth.
    fn kinks(&self) -> Vec<f64>;
}

/// `lim_{t→∞} g(t)/t`.
pub fn asymptotic_slope<P: Profile + ?Sized>(profile: &P) -> f64 {
    profile.upper_tail().slope
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlacedTerm {
    #[serde(flatten)]
    pub term: Term,
    /// Piece index; `None` means the term is active everywhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub piece: Option<usize>,
}

impl PlacedTerm {
    pub fn global(term: Term) -> Self {
        Self { term, piece: None }
    }

    pub fn on_piece(term: Term, piece: usize) -> Self {
        Self {
            term,
            piece: Some(piece),
        }
    }
}

/// Piecewise sum of primitive terms. Piece `i` is `(b_{i-1}, b_i]`, with the
/// first piece unbounded below and the last unbounded above.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile")]
pub struct RadialProfile {
    terms: Vec<PlacedTerm>,
    breakpoints: Vec<f64>,
}

#[derive(Deserialize)]
struct RawProfile {
    terms: Vec<PlacedTerm>,
    #[serde(default)]
    breakpoints: Vec<f64>,
}

impl TryFrom<RawProfile> for RadialProfile {
    type Error = Error;

    fn try_from(raw: RawProfile) -> Result<Self> {
        RadialProfile::new(raw.terms, raw.breakpoints)
    }
}

impl RadialProfile {
    pub fn new(terms: Vec<PlacedTerm>, breakpoints: Vec<f64>) -> Result<Self> {
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidProfile("non-finite breakpoint".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidProfile(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        for pt in &terms {
            if !pt.term.params().is_finite() {
                return Err(Error::InvalidProfile(format!("non-finite parameter in {:?}", pt.term)));
            }
            if let Some(p) = pt.piece {
                if p > breakpoints.len() {
                    return Err(Error::InvalidProfile(format!(
                        "piece {p} out of range (profile has {} pieces)",
                        breakpoints.len() + 1
                    )));
                }
            }
        }
        let profile = Self { terms, breakpoints };
        for (i, &b) in profile.breakpoints.iter().enumerate() {
            let left = profile.piece_value(i, b);
            let right = profile.piece_value(i + 1, b);
            if (left - right).abs() > CONTINUITY_TOL * left.abs().max(right.abs()).max(1.0) {
                return Err(Error::InvalidProfile(format!(
                    "discontinuous at breakpoint t = {b}: {left} vs {right}"
                )));
            }
        }
        Ok(profile)
    }

    pub fn single(term: Term) -> Self {
        Self {
            terms: vec![PlacedTerm::global(term)],
            breakpoints: Vec::new(),
        }
    }

    /// `N·max(0, t)`, i.e. `N log⁺ ‖z‖`.
    pub fn log_plus(slope: f64) -> Self {
        Self::new(
            vec![PlacedTerm::on_piece(Term::Linear { slope }, 1)],
            vec![0.0],
        )
        .expect("log_plus is continuous")
    }

    pub fn terms(&self) -> &[PlacedTerm] {
        &self.terms
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn piece_count(&self) -> usize {
        self.breakpoints.len() + 1
    }

    fn active(&self, piece: usize) -> impl Iterator<Item = &Term> {
        self.terms
            .iter()
            .filter(move |pt| pt.piece.map_or(true, |p| p == piece))
            .map(|pt| &pt.term)
    }

    fn piece_value(&self, piece: usize, t: f64) -> f64 {
        self.active(piece).map(|term| term.value(t)).sum()
    }

    /// Piece owning `t` for evaluation (breakpoints belong to the left piece).
    fn piece_of(&self, t: f64) -> usize {
        self.breakpoints.partition_point(|&b| b < t)
    }

    /// Returns a copy with `term` added on every piece.
    pub fn with_global_term(&self, term: Term) -> Self {
        let mut out = self.clone();
        out.terms.push(PlacedTerm::global(term));
        out
    }

    /// Keeps `g` on `t ≤ at` and continues with the affine function
    /// `C + slope·t` beyond, `C` fixed by continuity at `at`. Returns the new
    /// profile and `C`.
    pub fn extend_affine(&self, at: f64, slope: f64) -> Result<(Self, f64)> {
        if let Some(&last) = self.breakpoints.last() {
            if at <= last {
                return Err(Error::InvalidArgument(format!(
                    "extension point {at} must exceed the last breakpoint {last}"
                )));
            }
        }
        let constant = self.value(at) - slope * at;
        let last_piece = self.breakpoints.len();
        let mut terms = Vec::with_capacity(self.terms.len() + 2);
        for pt in &self.terms {
            match pt.piece {
                Some(_) => terms.push(*pt),
                None => terms.extend((0..=last_piece).map(|p| PlacedTerm::on_piece(pt.term, p))),
            }
        }
        terms.push(PlacedTerm::on_piece(Term::Constant { value: constant }, last_piece + 1));
        terms.push(PlacedTerm::on_piece(Term::Linear { slope }, last_piece + 1));
        let mut breakpoints = self.breakpoints.clone();
        breakpoints.push(at);
        Ok((Self::new(terms, breakpoints)?, constant))
    }
}

impl Profile for RadialProfile {
    fn value(&self, t: f64) -> f64 {
        self.piece_value(self.piece_of(t), t)
    }

    fn slope(&self, t: f64) -> f64 {
        let piece = self.breakpoints.partition_point(|&b| b <= t);
        self.active(piece).map(|term| term.d1(t)).sum()
    }

    fn left_slope(&self, t: f64) -> f64 {
        self.active(self.piece_of(t)).map(|term| term.d1_left(t)).sum()
    }

    fn curvature(&self, t: f64) -> f64 {
        self.active(self.piece_of(t)).map(|term| term.d2(t)).sum()
    }

    fn upper_tail(&self) -> Tail {
        let last = self.breakpoints.len();
        Tail {
            slope: self.active(last).map(Term::upper_slope).sum(),
            log_power: self.active(last).map(Term::log_power).sum(),
        }
    }

    fn lower_slope(&self) -> f64 {
        self.active(0).map(Term::lower_slope).sum()
    }

    fn kinks(&self) -> Vec<f64> {
        let mut out = self.breakpoints.clone();
        for piece in 0..self.piece_count() {
            let lo = if piece == 0 { f64::NEG_INFINITY } else { self.breakpoints[piece - 1] };
            let hi = self.breakpoints.get(piece).copied().unwrap_or(f64::INFINITY);
            for k in self.active(piece).filter_map(Term::kink) {
                if k > lo && k < hi {
                    out.push(k);
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

/// A profile together with the complex dimension it lives in.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialWeight<P = RadialProfile> {
    n: usize,
    profile: P,
}

impl<P: Profile> RadialWeight<P> {
    pub fn new(n: usize, profile: P) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("dimension n must be at least 1".into()));
        }
        Ok(Self { n, profile })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn profile(&self) -> &P {
        &self.profile
    }
}

impl RadialWeight {
    /// `φ + ε log(1 + ‖z‖²)`.
    pub fn tilted(&self, eps: f64) -> Self {
        Self {
            n: self.n,
            profile: self.profile.with_global_term(Term::LogOnePlusR2 { eps }),
        }
    }

    /// `φ + c·ψ`.
    pub fn plus_psi(&self, scale: f64) -> Self {
        Self {
            n: self.n,
            profile: self.profile.with_global_term(Term::NegLogLogER2 { scale }),
        }
    }
}

#[derive(Serialize)]
struct WeightRef<'a> {
    n: usize,
    #[serde(flatten)]
    profile: &'a RadialProfile,
}

#[derive(Deserialize)]
struct WeightOwned {
    n: usize,
    #[serde(flatten)]
    profile: RadialProfile,
}

impl Serialize for RadialWeight {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        WeightRef {
            n: self.n,
            profile: &self.profile,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RadialWeight {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = WeightOwned::deserialize(d)?;
        RadialWeight::new(w.n, w.profile).map_err(serde::de::Error::custom)
    }
}

/// Sample points for the psh and sequence audits.
#[derive(Clone, Debug)]
pub struct AuditGrid {
    points: Vec<f64>,
}

impl AuditGrid {
    pub fn uniform(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo < hi) || count < 2 {
            return Err(Error::InvalidArgument(format!(
                "bad grid [{lo}, {hi}] with {count} points"
            )));
        }
        let step = (hi - lo) / (count - 1) as f64;
        Ok(Self {
            points: (0..count).map(|i| lo + step * i as f64).collect(),
        })
    }

    /// Uniform grid over `[first kink − 10, last kink + 10]`, densified near
    /// every kink.
    pub fn spanning(kinks: &[f64], count: usize) -> Self {
        let lo = kinks.first().copied().unwrap_or(0.0) - 10.0;
        let hi = kinks.last().copied().unwrap_or(0.0) + 10.0;
        Self::uniform(lo, hi, count.max(2))
            .expect("spanning grid bounds are ordered")
            .densified(kinks)
    }

    /// Adds 10 points within ±1e-3 of each kink.
    pub fn densified(mut self, kinks: &[f64]) -> Self {
        for &k in kinks {
            for i in 0..10 {
                let off = 1e-3 * (2.0 * i as f64 / 9.0 - 1.0);
                if off != 0.0 {
                    self.points.push(k + off);
                }
            }
        }
        self.points.sort_by(f64::total_cmp);
        self.points.dedup();
        self
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub t: f64,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PshReport {
    pub pass: bool,
    /// Smallest sampled first difference quotient.
    pub min_slope: Witness,
    /// Smallest sampled increase between consecutive difference quotients.
    pub min_slope_increase: Witness,
    pub tol: f64,
}

impl PshReport {
    pub fn into_result(self) -> Result<Self> {
        if self.pass {
            Ok(self)
        } else {
            Err(Error::AuditFailed(format!(
                "profile is not convex nondecreasing: slope {:e} at t = {}, slope increase {:e} at t = {}",
                self.min_slope.value, self.min_slope.t, self.min_slope_increase.value, self.min_slope_increase.t
            )))
        }
    }
}

/// Sampled test of convexity and monotonicity in `t`.
pub fn check_psh<P: Profile + ?Sized>(profile: &P, grid: &AuditGrid) -> Result<PshReport> {
    let ts = grid.points();
    if ts.len() < 100 {
        return Err(Error::InvalidArgument(format!(
            "psh audit needs at least 100 grid points, got {}",
            ts.len()
        )));
    }
    let gs: Vec<f64> = ts.iter().map(|&t| profile.value(t)).collect();
    let slopes: Vec<f64> = (0..ts.len() - 1)
        .map(|i| (gs[i + 1] - gs[i]) / (ts[i + 1] - ts[i]))
        .collect();

    let mut pass = true;
    let mut min_slope = Witness { t: ts[0], value: f64::INFINITY };
    for i in 0..slopes.len() {
        // rounding in g(t) shows up in the quotient at this size
        let slack = 4.0 * f64::EPSILON * (gs[i].abs() + gs[i + 1].abs()) / (ts[i + 1] - ts[i]);
        if slopes[i] < min_slope.value {
            min_slope = Witness { t: ts[i], value: slopes[i] };
        }
        if slopes[i] < -PSH_TOL - slack {
            pass = false;
        }
    }
    let mut min_inc = Witness { t: ts[0], value: f64::INFINITY };
    for i in 0..slopes.len().saturating_sub(1) {
        let h = (ts[i + 1] - ts[i]).min(ts[i + 2] - ts[i + 1]);
        let slack = 8.0 * f64::EPSILON * (gs[i].abs() + gs[i + 1].abs() + gs[i + 2].abs()) / h;
        let inc = slopes[i + 1] - slopes[i];
        if inc < min_inc.value {
            min_inc = Witness { t: ts[i + 1], value: inc };
        }
        if inc < -PSH_TOL - slack {
            pass = false;
        }
    }
    Ok(PshReport {
        pass,
        min_slope,
        min_slope_increase: min_inc,
        tol: PSH_TOL,
    })
}

/// Monotone sequence `φ₁ ≤ φ₂ ≤ …` with its (possibly truncated) limit.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawSequence")]
pub struct WeightSequence {
    weights: Vec<RadialWeight>,
    limit: RadialWeight,
    /// `φ_j` coincides with the limit for `t ≤ agree_up_to[j-1]`.
    agree_up_to: Vec<Option<f64>>,
}

#[derive(Deserialize)]
struct RawSequence {
    weights: Vec<RadialWeight>,
    limit: RadialWeight,
    #[serde(default)]
    agree_up_to: Vec<Option<f64>>,
}

impl TryFrom<RawSequence> for WeightSequence {
    type Error = Error;

    fn try_from(raw: RawSequence) -> Result<Self> {
        let mut agree = raw.agree_up_to;
        if agree.is_empty() {
            agree = vec![None; raw.weights.len()];
        }
        WeightSequence::new(raw.weights, raw.limit, agree)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SequenceReport {
    pub pass: bool,
    /// Largest sampled value of `g_j(t) − g_{j+1}(t)` (or `g_last − g_limit`),
    /// as `(j, t, excess)`.
    pub worst_order_gap: (usize, f64, f64),
    /// Largest disagreement with the limit on the declared agreement range.
    pub worst_agreement_gap: (usize, f64, f64),
    pub psh: Vec<PshReport>,
    pub limit_psh: PshReport,
}

impl WeightSequence {
    pub fn new(
        weights: Vec<RadialWeight>,
        limit: RadialWeight,
        agree_up_to: Vec<Option<f64>>,
    ) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("weight sequence is empty".into()));
        }
        if weights.iter().any(|w| w.n() != limit.n()) {
            return Err(Error::InvalidArgument(
                "all weights of a sequence must share the dimension n".into(),
            ));
        }
        if agree_up_to.len() != weights.len() {
            return Err(Error::InvalidArgument(
                "agree_up_to must have one entry per weight".into(),
            ));
        }
        Ok(Self {
            weights,
            limit,
            agree_up_to,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `φ_j`, 1-based.
    pub fn get(&self, j: usize) -> Option<&RadialWeight> {
        j.checked_sub(1).and_then(|i| self.weights.get(i))
    }

    pub fn weights(&self) -> &[RadialWeight] {
        &self.weights
    }

    pub fn limit(&self) -> &RadialWeight {
        &self.limit
    }

    pub fn n(&self) -> usize {
        self.limit.n()
    }

    pub fn agree_up_to(&self) -> &[Option<f64>] {
        &self.agree_up_to
    }

    /// Adds `ε log(1 + ‖z‖²)` to every member and to the limit.
    pub fn tilted(&self, eps: f64) -> Self {
        Self {
            weights: self.weights.iter().map(|w| w.tilted(eps)).collect(),
            limit: self.limit.tilted(eps),
            agree_up_to: self.agree_up_to.clone(),
        }
    }

    /// Grid covering every kink of every member ±10.
    pub fn audit_grid(&self, count: usize) -> AuditGrid {
        let mut kinks: Vec<f64> = self
            .weights
            .iter()
            .chain(std::iter::once(&self.limit))
            .flat_map(|w| w.profile().kinks())
            .collect();
        kinks.sort_by(f64::total_cmp);
        kinks.dedup();
        AuditGrid::spanning(&kinks, count)
    }

    pub fn audit(&self, grid: &AuditGrid) -> Result<SequenceReport> {
        let mut worst_order = (0, f64::NAN, f64::NEG_INFINITY);
        let mut worst_agree = (0, f64::NAN, 0.0);
        let chain: Vec<&RadialWeight> = self.weights.iter().chain(std::iter::once(&self.limit)).collect();
        for &t in grid.points() {
            let values: Vec<f64> = chain.iter().map(|w| w.profile().value(t)).collect();
            for j in 0..values.len() - 1 {
                let excess = values[j] - values[j + 1];
                if excess > worst_order.2 {
                    worst_order = (j + 1, t, excess);
                }
            }
            let lim = values[values.len() - 1];
            for (j, bound) in self.agree_up_to.iter().enumerate() {
                if matches!(bound, Some(b) if t <= *b) {
                    let gap = (values[j] - lim).abs();
                    if gap > worst_agree.2 {
                        worst_agree = (j + 1, t, gap);
                    }
                }
            }
        }
        let psh = self
            .weights
            .iter()
            .map(|w| check_psh(w.profile(), grid))
            .collect::<Result<Vec<_>>>()?;
        let limit_psh = check_psh(self.limit.profile(), grid)?;
        let scale = |t: f64| self.limit.profile().value(t).abs().max(1.0);
        let order_ok = worst_order.2 <= SEQUENCE_TOL * scale(worst_order.1);
        let agree_ok = worst_agree.2 <= SEQUENCE_TOL * scale(worst_agree.1.max(0.0));
        Ok(SequenceReport {
            pass: order_ok && agree_ok && psh.iter().all(|r| r.pass) && limit_psh.pass,
            worst_order_gap: worst_order,
            worst_agreement_gap: worst_agree,
            psh,
            limit_psh,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phi2() -> RadialProfile {
        let (p, _) = RadialProfile::single(Term::MaxOneT)
            .extend_affine(2f64.ln(), 7.0)
            .unwrap();
        p
    }

    #[test]
    fn eval_examples() {
        assert_eq!(Term::MaxOneT.value(0.0), 1.0);
        let lin = RadialProfile::single(Term::Linear { slope: 7.0 });
        assert!((lin.value(2f64.ln()) - 4.852030263919617).abs() < 1e-14);
        // oracle: -ln(ln(e + 1)) at 30 digits
        let psi0 = RadialProfile::single(Term::NegLogLogER2 { scale: 1.0 }).value(0.0);
        assert!((psi0 - (-0.272513880502583402550013888934)).abs() < 1e-15);
    }

    #[test]
    fn asymptotic_slopes() {
        assert_eq!(asymptotic_slope(&RadialProfile::single(Term::Linear { slope: 7.0 })), 7.0);
        let p = RadialProfile::single(Term::MaxOneT).with_global_term(Term::LogOnePlusR2 { eps: 1.0 });
        assert_eq!(asymptotic_slope(&p), 3.0);
        assert_eq!(asymptotic_slope(&RadialProfile::single(Term::NegLogLogER2 { scale: 1.0 })), 0.0);
        assert_eq!(asymptotic_slope(&phi2()), 7.0);
    }

    #[test]
    fn derivative_formulas_match_finite_differences() {
        let terms = [
            Term::LogOnePlusR2 { eps: 0.7 },
            Term::NegLogLogER2 { scale: 1.3 },
            Term::Linear { slope: 2.0 },
        ];
        for term in terms {
            for &t in &[-3.0, -0.2, 0.4, 1.7, 6.0, 40.0] {
                let h = 1e-5;
                let d1 = (term.value(t + h) - term.value(t - h)) / (2.0 * h);
                let d2 = (term.d1(t + h) - term.d1(t - h)) / (2.0 * h);
                assert!((d1 - term.d1(t)).abs() < 1e-8, "{term:?} d1 at {t}");
                assert!((d2 - term.d2(t)).abs() < 1e-7, "{term:?} d2 at {t}");
            }
        }
    }

    #[test]
    fn psh_examples() {
        let grid = AuditGrid::spanning(&[0.0, 1.0], 2000);
        assert!(check_psh(&RadialProfile::single(Term::MaxOneT), &grid).unwrap().pass);
        let p2 = phi2();
        let grid2 = AuditGrid::spanning(&p2.kinks(), 2000);
        assert!(check_psh(&p2, &grid2).unwrap().pass);
        let bad = check_psh(&RadialProfile::single(Term::Linear { slope: -1.0 }), &grid).unwrap();
        assert!(!bad.pass);
        assert!(bad.min_slope.value < -0.99);
        assert!(bad.into_result().is_err());
    }

    #[test]
    fn concave_profile_is_located() {
        // slope 2 then 1: monotone but not convex, kink at 0
        let p = RadialProfile::new(
            vec![
                PlacedTerm::on_piece(Term::Linear { slope: 2.0 }, 0),
                PlacedTerm::on_piece(Term::Linear { slope: 1.0 }, 1),
            ],
            vec![0.0],
        )
        .unwrap();
        let rep = check_psh(&p, &AuditGrid::spanning(&p.kinks(), 1000)).unwrap();
        assert!(!rep.pass);
        assert!(rep.min_slope_increase.t.abs() < 1e-3);
        assert!(rep.min_slope.value > 0.0);
    }

    #[test]
    fn rejects_discontinuity_and_bad_grid() {
        let err = RadialProfile::new(
            vec![PlacedTerm::on_piece(Term::Constant { value: 1.0 }, 1)],
            vec![0.0],
        );
        assert!(matches!(err, Err(Error::InvalidProfile(_))));
        let grid = AuditGrid::uniform(0.0, 1.0, 50).unwrap();
        assert!(check_psh(&phi2(), &grid).is_err());
    }

    #[test]
    fn breakpoint_semantics() {
        let p = phi2();
        let b = 2f64.ln();
        assert_eq!(p.value(b), 1.0);
        assert_eq!(p.left_slope(b), 0.0);
        assert_eq!(p.slope(b), 7.0);
        // MaxOneT's own kink at t = 1 is outside its piece here
        assert_eq!(p.kinks(), vec![b]);
        assert_eq!(RadialProfile::single(Term::MaxOneT).kinks(), vec![1.0]);
    }

    #[test]
    fn weight_json_round_trip() {
        let w = RadialWeight::new(2, phi2()).unwrap().tilted(0.5);
        let s = serde_json::to_string(&w).unwrap();
        let back: RadialWeight = serde_json::from_str(&s).unwrap();
        assert_eq!(back, w);
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["n"], 2);
        assert_eq!(v["terms"][0]["kind"], "max_one_t");
        assert!(serde_json::from_str::<RadialWeight>(r#"{"n":0,"terms":[]}"#).is_err());
    }

    #[test]
    fn sequence_audit_detects_order_violation() {
        let a = RadialWeight::new(1, RadialProfile::single(Term::MaxOneT)).unwrap();
        let b = RadialWeight::new(1, phi2()).unwrap();
        let good = WeightSequence::new(vec![a.clone()], b.clone(), vec![Some(2f64.ln())]).unwrap();
        let grid = good.audit_grid(1000);
        assert!(good.audit(&grid).unwrap().pass);
        let bad = WeightSequence::new(vec![b], a, vec![None]).unwrap();
        let rep = bad.audit(&grid).unwrap();
        assert!(!rep.pass);
        assert!(rep.worst_order_gap.2 > 0.0);
    }
}
