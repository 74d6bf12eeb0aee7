//! Weighted monomial integrals `∫ |z^α|² e^{−φ} dλ` for radial `φ`.
//!
//! Polar coordinates reduce every such integral on ℂⁿ to
//! `c_{n,α} ∫ e^{(2|α|+2n)t − g(t)} dt` with `t = log ‖z‖`. Whether that
//! one-dimensional integral converges is read off the profile's tail
//! slopes; only finite integrals are ever handed to the numerical rule,
//! which is an adaptive 7/15-point Gauss–Kronrod pair working entirely on
//! log magnitudes.

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::logreal::{ln_factorial, LogReal, LogSum, SignedLogSum};
use crate::radial_weights::{Profile, RadialWeight};
use crate::series::{ModeSeries, MultiIndex};

/// Relative accuracy every finite verdict must certify.
pub const REPORTED_REL_TOL: f64 = 1e-10;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            max_panels: 4000,
        }
    }
}

/// Result of [`integrate`].
#[derive(Clone, Copy, Debug)]
pub struct Integral {
    pub value: LogReal,
    /// `∫ |f|`.
    pub mass: LogReal,
    /// Natural log of the absolute error estimate.
    pub ln_abs_err: f64,
    pub panels: usize,
    pub converged: bool,
}

impl Integral {
    /// Error estimate relative to `∫ |f|`.
    pub fn rel_err(&self) -> f64 {
        if self.mass.is_zero() {
            0.0
        } else {
            (self.ln_abs_err - self.mass.ln_abs()).exp()
        }
    }
}

/// Length scales of the `s/(1−s)` maps used on infinite tails.
#[derive(Clone, Copy, Debug)]
pub struct TailScales {
    pub lower: f64,
    pub upper: f64,
}

impl Default for TailScales {
    fn default() -> Self {
        Self {
            lower: 1.0,
            upper: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Map {
    Identity,
    /// `t = t0 + scale·s/(1−s)`, `s ∈ [0, 1)`.
    Upper { t0: f64, scale: f64 },
    /// `t = t0 − scale·s/(1−s)`.
    Lower { t0: f64, scale: f64 },
}

impl Map {
    /// `(t, ln dt/ds)`.
    fn point(self, s: f64) -> (f64, f64) {
        match self {
            Map::Identity => (s, 0.0),
            Map::Upper { t0, scale } => {
                let q = 1.0 - s;
                (t0 + scale * s / q, scale.ln() - 2.0 * q.ln())
            }
            Map::Lower { t0, scale } => {
                let q = 1.0 - s;
                (t0 - scale * s / q, scale.ln() - 2.0 * q.ln())
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Panel {
    map: Map,
    lo: f64,
    hi: f64,
    value: LogReal,
    ln_mass: f64,
    ln_err: f64,
}

fn eval_panel<F: Fn(f64) -> LogReal>(f: &F, map: Map, lo: f64, hi: f64) -> Panel {
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let sample = |s: f64| -> LogReal {
        let (t, ln_jac) = map.point(s);
        if !t.is_finite() {
            return LogReal::ZERO;
        }
        let v = f(t);
        if v.is_zero() {
            v
        } else {
            v * LogReal::from_ln(ln_jac)
        }
    };
    // values[i] pairs (left, right) for XGK[i], i < 7; centre separately
    let mut pairs = [(LogReal::ZERO, LogReal::ZERO); 7];
    for (i, pair) in pairs.iter_mut().enumerate() {
        let dx = half * XGK[i];
        *pair = (sample(centre - dx), sample(centre + dx));
    }
    let mid = sample(centre);
    let top = pairs
        .iter()
        .flat_map(|(a, b)| [a.ln_abs(), b.ln_abs()])
        .chain(std::iter::once(mid.ln_abs()))
        .fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Panel {
            map,
            lo,
            hi,
            value: LogReal::ZERO,
            ln_mass: f64::NEG_INFINITY,
            ln_err: f64::NEG_INFINITY,
        };
    }
    let scaled = |x: LogReal| f64::from(x.sign()) * (x.ln_abs() - top).exp();
    let mut kronrod = WGK[7] * scaled(mid);
    let mut gauss = WG[3] * scaled(mid);
    let mut mass = WGK[7] * scaled(mid).abs();
    for (i, &(a, b)) in pairs.iter().enumerate() {
        let (sa, sb) = (scaled(a), scaled(b));
        kronrod += WGK[i] * (sa + sb);
        mass += WGK[i] * (sa.abs() + sb.abs());
        if i % 2 == 1 {
            gauss += WG[i / 2] * (sa + sb);
        }
    }
    let ln_scale = top + half.ln();
    let diff = (kronrod - gauss).abs().max(50.0 * f64::EPSILON * mass);
    Panel {
        map,
        lo,
        hi,
        value: LogReal::from_f64(kronrod) * LogReal::from_ln(ln_scale),
        ln_mass: mass.ln() + ln_scale,
        ln_err: diff.ln() + ln_scale,
    }
}

/// Adaptive integral of `f` over `[lo, hi]` (either end may be infinite),
/// with forced subdivision at `splits`.
///
/// Panels with the largest error estimate are bisected until the summed
/// error falls below `rel_tol` times `∫|f|`.
pub fn integrate<F: Fn(f64) -> LogReal>(
    f: F,
    lo: f64,
    hi: f64,
    splits: &[f64],
    tails: TailScales,
    opts: QuadOptions,
) -> Result<Integral> {
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(Error::InvalidArgument(format!("bad integration range [{lo}, {hi}]")));
    }
    let mut cuts: Vec<f64> = splits
        .iter()
        .copied()
        .filter(|&x| x.is_finite() && x > lo && x < hi)
        .collect();
    if lo.is_infinite() && hi.is_infinite() && cuts.is_empty() {
        cuts.push(0.0);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut nodes = Vec::with_capacity(cuts.len() + 2);
    nodes.push(lo);
    nodes.extend(cuts);
    nodes.push(hi);

    let mut panels: Vec<Panel> = nodes
        .windows(2)
        .map(|w| match (w[0].is_finite(), w[1].is_finite()) {
            (true, true) => eval_panel(&f, Map::Identity, w[0], w[1]),
            (false, _) => eval_panel(&f, Map::Lower { t0: w[1], scale: tails.lower }, 0.0, 1.0),
            (_, false) => eval_panel(&f, Map::Upper { t0: w[0], scale: tails.upper }, 0.0, 1.0),
        })
        .collect();

    let totals = |panels: &[Panel]| {
        let mut mass = LogSum::default();
        let mut err = LogSum::default();
        for p in panels {
            mass.push_ln(p.ln_mass);
            err.push_ln(p.ln_err);
        }
        (mass.ln_value(), err.ln_value())
    };
    let ln_tol = opts.rel_tol.ln();
    let (mut ln_mass, mut ln_err) = totals(&panels);
    while ln_mass > f64::NEG_INFINITY && ln_err > ln_tol + ln_mass && panels.len() < opts.max_panels {
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.ln_err.total_cmp(&b.1.ln_err))
            .expect("at least one panel");
        let p = panels[worst];
        let mid = 0.5 * (p.lo + p.hi);
        if !(mid > p.lo && mid < p.hi) {
            break;
        }
        panels[worst] = eval_panel(&f, p.map, p.lo, mid);
        panels.push(eval_panel(&f, p.map, mid, p.hi));
        (ln_mass, ln_err) = totals(&panels);
    }

    let mut acc = SignedLogSum::default();
    for p in &panels {
        acc.push(p.value);
    }
    Ok(Integral {
        value: acc.value().0,
        mass: LogReal::from_ln(ln_mass),
        ln_abs_err: ln_err,
        panels: panels.len(),
        converged: ln_mass == f64::NEG_INFINITY || ln_err <= ln_tol + ln_mass,
    })
}

/// Region of ℂⁿ described by bounds on `t = log ‖z‖`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    WholeSpace,
    Ball { t_max: f64 },
    Exterior { t_min: f64 },
    Annulus { t_min: f64, t_max: f64 },
}

impl Region {
    pub fn bounds(&self) -> Result<(f64, f64)> {
        let (lo, hi) = match *self {
            Region::WholeSpace => (f64::NEG_INFINITY, f64::INFINITY),
            Region::Ball { t_max } => (f64::NEG_INFINITY, t_max),
            Region::Exterior { t_min } => (t_min, f64::INFINITY),
            Region::Annulus { t_min, t_max } => (t_min, t_max),
        };
        let finite_ok = |x: f64| !x.is_nan() && (x.is_finite() || x == lo && x < 0.0 || x == hi && x > 0.0);
        if !finite_ok(lo) || !finite_ok(hi) || lo >= hi {
            return Err(Error::InvalidArgument(format!("invalid region {self:?}")));
        }
        Ok((lo, hi))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailSide {
    /// `‖z‖ → ∞`
    Upper,
    /// `‖z‖ → 0`
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum QuadVerdict {
    Finite { value: LogReal, ln_abs_err: f64 },
    /// The tail exponent exceeds the weight's slope by `deficit ≥ 0`.
    Divergent { deficit: f64, tail: TailSide },
}

impl QuadVerdict {
    pub fn is_finite(&self) -> bool {
        matches!(self, QuadVerdict::Finite { .. })
    }

    pub fn value(&self) -> Option<LogReal> {
        match *self {
            QuadVerdict::Finite { value, .. } => Some(value),
            QuadVerdict::Divergent { .. } => None,
        }
    }

    /// The finite value, or an error naming `what`.
    pub fn finite(&self, what: &str) -> Result<LogReal> {
        match *self {
            QuadVerdict::Finite { value, .. } => Ok(value),
            QuadVerdict::Divergent { deficit, tail } => Err(Error::Divergent(format!(
                "{what}: {tail:?} tail diverges with deficit {deficit}"
            ))),
        }
    }

    fn scaled(self, c: LogReal) -> Self {
        match self {
            QuadVerdict::Finite { value, ln_abs_err } => QuadVerdict::Finite {
                value: value * c,
                ln_abs_err: ln_abs_err + c.ln_abs(),
            },
            d => d,
        }
    }
}

impl Serialize for QuadVerdict {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct FiniteRepr {
            finite: bool,
            log_value: Option<f64>,
            sign: i8,
            log_abs_err: Option<f64>,
        }
        #[derive(Serialize)]
        struct DivergentRepr {
            finite: bool,
            deficit: f64,
            tail: TailSide,
        }
        let fin = |x: f64| x.is_finite().then_some(x);
        match *self {
            QuadVerdict::Finite { value, ln_abs_err } => FiniteRepr {
                finite: true,
                log_value: fin(value.ln_abs()),
                sign: value.sign(),
                log_abs_err: fin(ln_abs_err),
            }
            .serialize(s),
            QuadVerdict::Divergent { deficit, tail } => DivergentRepr {
                finite: false,
                deficit,
                tail,
            }
            .serialize(s),
        }
    }
}

/// `c_{n,α} = 2πⁿ α! / (n − 1 + |α|)!`, the constant with
/// `∫_{ℂⁿ} |z^α|² h(‖z‖) dλ = c_{n,α} ∫ e^{(2|α|+2n)t} h(e^t) dt`.
pub fn angular_constant(n: usize, alpha: &MultiIndex) -> Result<LogReal> {
    if n == 0 || alpha.dim() != n {
        return Err(Error::InvalidArgument(format!(
            "multi-index {alpha} does not match dimension {n}"
        )));
    }
    let ln_alpha_fact: f64 = alpha.exponents().iter().map(|&a| ln_factorial(u64::from(a))).sum();
    let ln_c = std::f64::consts::LN_2 + n as f64 * std::f64::consts::PI.ln() + ln_alpha_fact
        - ln_factorial(n as u64 - 1 + alpha.degree());
    Ok(LogReal::from_ln(ln_c))
}

/// Decides convergence of `∫ e^{Et − g(t)} dt` over `[lo, hi]` from the
/// profile's tail behaviour alone.
pub fn tail_verdict<P: Profile + ?Sized>(profile: &P, exponent: f64, lo: f64, hi: f64) -> Option<QuadVerdict> {
    if hi == f64::INFINITY {
        let tail = profile.upper_tail();
        let deficit = exponent - tail.slope;
        // on a slope tie the integrand behaves like t^{log_power}
        if deficit > 0.0 || (deficit == 0.0 && tail.log_power >= -1.0) {
            return Some(QuadVerdict::Divergent {
                deficit,
                tail: TailSide::Upper,
            });
        }
    }
    if lo == f64::NEG_INFINITY {
        let s = profile.lower_slope();
        if exponent <= s {
            return Some(QuadVerdict::Divergent {
                deficit: s - exponent,
                tail: TailSide::Lower,
            });
        }
    }
    None
}

/// Points where `E − g'(t)` changes sign from + to −, i.e. local maxima of
/// the log-integrand `Et − g(t)`.
fn integrand_modes<P: Profile + ?Sized>(profile: &P, exponent: f64) -> Vec<f64> {
    let h_right = |t: f64| exponent - profile.slope(t);
    let mut bounds = vec![f64::NEG_INFINITY];
    bounds.extend(profile.kinks());
    bounds.push(f64::INFINITY);
    let mut modes = Vec::new();
    for w in bounds.windows(2) {
        let (a, b) = (w[0], w[1]);
        // finite bracket [x0, x1] with h(x0) > 0 ≥ h(x1), if any
        let (mut x0, mut x1) = match (a.is_finite(), b.is_finite()) {
            (true, true) => (a, b),
            (true, false) => {
                let mut step = 1.0;
                let mut x = a + step;
                while h_right(x) > 0.0 && step < 1e6 {
                    step *= 2.0;
                    x = a + step;
                }
                (a, x)
            }
            (false, true) => {
                let mut step = 1.0;
                let mut x = b - step;
                while h_right(x) <= 0.0 && step < 1e6 {
                    step *= 2.0;
                    x = b - step;
                }
                (x, b)
            }
            (false, false) => {
                let (mut l, mut r) = (-1.0, 1.0);
                while h_right(l) <= 0.0 && l > -1e6 {
                    l *= 2.0;
                }
                while h_right(r) > 0.0 && r < 1e6 {
                    r *= 2.0;
                }
                (l, r)
            }
        };
        let right_end = if b.is_finite() { exponent - profile.left_slope(b) } else { h_right(x1) };
        if !(h_right(x0) > 0.0 && right_end <= 0.0) {
            continue;
        }
        for _ in 0..200 {
            let m = 0.5 * (x0 + x1);
            if !(m > x0 && m < x1) {
                break;
            }
            if h_right(m) > 0.0 {
                x0 = m;
            } else {
                x1 = m;
            }
        }
        let root = 0.5 * (x0 + x1);
        if root > a && root < b {
            modes.push(root);
        }
    }
    modes
}

/// `∫_lo^hi factor(t)·e^{Et − g(t)} dt`, split at the profile kinks, the
/// integrand modes and `extra_splits`. Convergence of the tails is the
/// caller's responsibility.
pub fn weighted_integral<P, F>(
    profile: &P,
    exponent: f64,
    lo: f64,
    hi: f64,
    extra_splits: &[f64],
    factor: F,
) -> Result<Integral>
where
    P: Profile + ?Sized,
    F: Fn(f64) -> LogReal,
{
    let mut splits = profile.kinks();
    splits.extend(integrand_modes(profile, exponent));
    splits.extend_from_slice(extra_splits);
    let clamp = |rate: f64| if rate.is_finite() && rate > 0.0 { (1.0 / rate).clamp(0.05, 1e6) } else { 0.5 };
    let tails = TailScales {
        lower: clamp(exponent - profile.lower_slope()),
        upper: clamp(profile.upper_tail().slope - exponent),
    };
    integrate(
        |t| {
            let c = factor(t);
            if c.is_zero() {
                return c;
            }
            let ln_w = exponent * t - profile.value(t);
            if ln_w.is_nan() || ln_w == f64::NEG_INFINITY {
                LogReal::ZERO
            } else {
                c * LogReal::from_ln(ln_w)
            }
        },
        lo,
        hi,
        &splits,
        tails,
        QuadOptions::default(),
    )
}

/// `∫_region e^{Et − g(t)} dt` in `t = log r`, with the exponent
/// `E = 2|α| + 2n`.
pub fn radial_integral<P: Profile + ?Sized>(profile: &P, exponent: f64, region: Region) -> Result<QuadVerdict> {
    if !(exponent > 0.0) {
        return Err(Error::InvalidArgument(format!("exponent must be positive, got {exponent}")));
    }
    let (lo, hi) = region.bounds()?;
    if let Some(div) = tail_verdict(profile, exponent, lo, hi) {
        return Ok(div);
    }
    let integral = weighted_integral(profile, exponent, lo, hi, &[], |_| LogReal::ONE)?;
    let rel = integral.rel_err();
    if !(rel <= REPORTED_REL_TOL) {
        return Err(Error::QuadratureFailed {
            rel_err: rel,
            panels: integral.panels,
        });
    }
    Ok(QuadVerdict::Finite {
        value: integral.value,
        ln_abs_err: integral.ln_abs_err,
    })
}

/// `∫_region |z^α|² e^{−φ} dλ`.
pub fn monomial_norm<P: Profile>(weight: &RadialWeight<P>, alpha: &MultiIndex, region: Region) -> Result<QuadVerdict> {
    let c = angular_constant(weight.n(), alpha)?;
    let exponent = 2.0 * alpha.degree() as f64 + 2.0 * weight.n() as f64;
    Ok(radial_integral(weight.profile(), exponent, region)?.scaled(c))
}

#[derive(Clone, Debug, PartialEq)]
pub enum SeriesVerdict {
    Finite {
        /// `Σ |a_α|² m_α`.
        value: LogReal,
        ln_abs_err: f64,
        /// Caller-certified bound on the omitted tail of the series.
        tail_bound: LogReal,
        per_mode: Vec<(MultiIndex, LogReal)>,
    },
    Divergent {
        /// Smallest (graded order) mode with a nonzero coefficient and a
        /// divergent norm.
        witness: MultiIndex,
        deficit: f64,
        tail: TailSide,
    },
}

impl SeriesVerdict {
    pub fn is_finite(&self) -> bool {
        matches!(self, SeriesVerdict::Finite { .. })
    }
}

/// Squared norm `‖Σ a_α z^α‖²` via orthogonality of monomials.
pub fn series_norm<P: Profile>(
    weight: &RadialWeight<P>,
    f: &ModeSeries,
    region: Region,
    tail_bound: Option<LogReal>,
) -> Result<SeriesVerdict> {
    if f.n() != weight.n() {
        return Err(Error::InvalidArgument(format!(
            "series in dimension {} against weight in dimension {}",
            f.n(),
            weight.n()
        )));
    }
    let mut sum = SignedLogSum::default();
    let mut err = LogSum::default();
    let mut per_mode = Vec::with_capacity(f.len());
    for (alpha, a) in f.iter() {
        match monomial_norm(weight, alpha, region)? {
            QuadVerdict::Divergent { deficit, tail } => {
                return Ok(SeriesVerdict::Divergent {
                    witness: alpha.clone(),
                    deficit,
                    tail,
                })
            }
            QuadVerdict::Finite { value, ln_abs_err } => {
                let w = a.abs_powf(2.0);
                sum.push(w * value);
                err.push_ln(w.ln_abs() + ln_abs_err);
                per_mode.push((alpha.clone(), value));
            }
        }
    }
    Ok(SeriesVerdict::Finite {
        value: sum.value().0,
        ln_abs_err: err.ln_value(),
        tail_bound: tail_bound.unwrap_or(LogReal::ZERO),
        per_mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial_weights::{RadialProfile, Term};
    use crate::testing::GaussianProfile;
    use std::f64::consts::{E, PI};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn lin(n: usize, slope: f64) -> RadialWeight {
        RadialWeight::new(n, RadialProfile::single(Term::Linear { slope })).unwrap()
    }

    #[test]
    fn kronrod_integrates_polynomials_exactly() {
        // 7-point Gauss is exact to degree 13; the pair agrees there
        let p = eval_panel(&|x: f64| LogReal::from_f64(x.powi(12) + 1.0), Map::Identity, 0.0, 1.0);
        assert!(rel(p.value.to_f64(), 1.0 / 13.0 + 1.0) < 1e-15);
        assert!(p.ln_err < (1e-13f64).ln());
    }

    #[test]
    fn integrates_across_infinite_ranges() {
        // ∫ e^{-x²} = √π, with a tail on each side
        let r = integrate(
            |x| LogReal::from_ln(-x * x),
            f64::NEG_INFINITY,
            f64::INFINITY,
            &[],
            TailScales::default(),
            QuadOptions::default(),
        )
        .unwrap();
        assert!(r.converged);
        assert!(rel(r.value.to_f64(), PI.sqrt()) < 1e-12);
        // signed integrand with cancellation: ∫_{-1}^{2} x dx = 3/2
        let s = integrate(|x| LogReal::from_f64(x), -1.0, 2.0, &[0.0], TailScales::default(), QuadOptions::default()).unwrap();
        assert!(rel(s.value.to_f64(), 1.5) < 1e-14);
        assert!(rel(s.mass.to_f64(), 2.5) < 1e-14);
    }

    #[test]
    fn angular_constants() {
        for k in 0..8 {
            let c = angular_constant(1, &MultiIndex::first_axis(1, k)).unwrap();
            assert!(rel(c.to_f64(), 2.0 * PI) < 1e-14);
        }
        let c = angular_constant(2, &MultiIndex::new(vec![1, 0]).unwrap()).unwrap();
        assert!(rel(c.to_f64(), PI * PI) < 1e-14);
        assert!(angular_constant(2, &MultiIndex::first_axis(1, 0)).is_err());
    }

    #[test]
    fn radial_integral_examples() {
        let g = GaussianProfile;
        let v = radial_integral(&g, 2.0, Region::WholeSpace).unwrap().value().unwrap();
        // ∫ e^{2t − e^{2t}} dt = 1/2, times 2π gives π
        assert!(rel(2.0 * PI * v.to_f64(), PI) < 1e-12);

        let l3 = RadialProfile::single(Term::Linear { slope: 3.0 });
        let v = radial_integral(&l3, 2.0, Region::Exterior { t_min: 0.0 }).unwrap();
        assert!(rel(2.0 * PI * v.value().unwrap().to_f64(), 2.0 * PI) < 1e-12);

        let d = radial_integral(&l3, 4.0, Region::Exterior { t_min: 0.0 }).unwrap();
        assert_eq!(d, QuadVerdict::Divergent { deficit: 1.0, tail: TailSide::Upper });

        assert!(radial_integral(&l3, 0.0, Region::WholeSpace).is_err());
        assert!(radial_integral(&l3, 2.0, Region::Annulus { t_min: 1.0, t_max: 0.0 }).is_err());
    }

    #[test]
    fn lower_tail_singularity_is_detected() {
        // r^{-3} near the origin against r^{2n-1} dr with n = 1
        let l3 = RadialProfile::single(Term::Linear { slope: 3.0 });
        let v = radial_integral(&l3, 2.0, Region::Ball { t_max: 0.0 }).unwrap();
        assert_eq!(v, QuadVerdict::Divergent { deficit: 1.0, tail: TailSide::Lower });
    }

    #[test]
    fn slope_tie_uses_log_correction() {
        // g = 4t + 2ψ·(−1): integrand ~ t^{-2}, finite; with +ψ it is t^{+1}
        let fin = RadialProfile::single(Term::Linear { slope: 4.0 }).with_global_term(Term::NegLogLogER2 { scale: -2.0 });
        assert!(radial_integral(&fin, 4.0, Region::Exterior { t_min: 0.0 }).unwrap().is_finite());
        let div = RadialProfile::single(Term::Linear { slope: 4.0 }).with_global_term(Term::NegLogLogER2 { scale: 1.0 });
        assert!(!radial_integral(&div, 4.0, Region::Exterior { t_min: 0.0 }).unwrap().is_finite());
    }

    #[test]
    fn monomial_norm_examples() {
        let gauss = RadialWeight::new(2, GaussianProfile).unwrap();
        let v = monomial_norm(&gauss, &MultiIndex::new(vec![1, 0]).unwrap(), Region::WholeSpace).unwrap();
        assert!(rel(v.value().unwrap().to_f64(), PI * PI) < 1e-10);

        let phi1 = RadialWeight::new(1, RadialProfile::single(Term::MaxOneT)).unwrap();
        let v = monomial_norm(&phi1, &MultiIndex::first_axis(1, 0), Region::Ball { t_max: 0.0 }).unwrap();
        assert!(rel(v.value().unwrap().to_f64(), PI / E) < 1e-12);

        let v = monomial_norm(&lin(1, 3.0), &MultiIndex::first_axis(1, 1), Region::Exterior { t_min: 0.0 }).unwrap();
        assert!(!v.is_finite());
    }

    #[test]
    fn region_additivity() {
        let w = RadialWeight::new(1, RadialProfile::single(Term::MaxOneT).with_global_term(Term::LogOnePlusR2 { eps: 2.0 })).unwrap();
        for k in 0..2u32 {
            let a = MultiIndex::first_axis(1, k);
            let whole = monomial_norm(&w, &a, Region::WholeSpace).unwrap().value().unwrap();
            for cut in [-1.0, 0.3, 1.0, 4.0] {
                let ball = monomial_norm(&w, &a, Region::Ball { t_max: cut }).unwrap().value().unwrap();
                let ext = monomial_norm(&w, &a, Region::Exterior { t_min: cut }).unwrap().value().unwrap();
                assert!((ball + ext).rel_diff(whole) < 1e-9);
            }
        }
    }

    #[test]
    fn series_norm_examples() {
        let gauss = RadialWeight::new(1, GaussianProfile).unwrap();
        let f = ModeSeries::first_axis(1, [(1, LogReal::ONE), (2, LogReal::ONE)]).unwrap();
        match series_norm(&gauss, &f, Region::WholeSpace, None).unwrap() {
            SeriesVerdict::Finite { value, per_mode, .. } => {
                assert!(rel(value.to_f64(), 3.0 * PI) < 1e-10);
                assert_eq!(per_mode.len(), 2);
            }
            other => panic!("expected finite, got {other:?}"),
        }

        let one = ModeSeries::first_axis(1, [(0, LogReal::ONE)]).unwrap();
        let phi1 = RadialWeight::new(1, RadialProfile::single(Term::MaxOneT)).unwrap();
        let m0 = monomial_norm(&phi1, &MultiIndex::first_axis(1, 0), Region::Ball { t_max: 0.0 }).unwrap();
        match series_norm(&phi1, &one, Region::Ball { t_max: 0.0 }, None).unwrap() {
            SeriesVerdict::Finite { value, .. } => assert_eq!(Some(value), m0.value()),
            other => panic!("expected finite, got {other:?}"),
        }

        let f5 = ModeSeries::first_axis(1, [(2, LogReal::ONE), (5, LogReal::from_f64(0.1)), (7, LogReal::ONE)]).unwrap();
        let v = series_norm(&lin(1, 12.0), &f5, Region::Exterior { t_min: 0.0 }, None).unwrap();
        match v {
            SeriesVerdict::Divergent { witness, deficit, .. } => {
                assert_eq!(witness, MultiIndex::first_axis(1, 5));
                assert_eq!(deficit, 0.0);
            }
            other => panic!("expected divergent, got {other:?}"),
        }
    }

    #[test]
    fn heavier_weight_gives_smaller_norm() {
        let light = RadialWeight::new(1, RadialProfile::log_plus(5.0)).unwrap();
        let heavy = RadialWeight::new(1, RadialProfile::log_plus(6.0)).unwrap();
        for k in 0..2 {
            let a = MultiIndex::first_axis(1, k);
            let ml = monomial_norm(&light, &a, Region::WholeSpace).unwrap().value().unwrap();
            let mh = monomial_norm(&heavy, &a, Region::WholeSpace).unwrap().value().unwrap();
            assert!(mh < ml);
        }
    }

    #[test]
    fn verdict_json_shape() {
        let v = QuadVerdict::Finite { value: LogReal::from_f64(2.0), ln_abs_err: -30.0 };
        let j = serde_json::to_value(v).unwrap();
        assert_eq!(j["finite"], true);
        assert_eq!(j["sign"], 1);
        assert!((j["log_value"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-15);
        let d = serde_json::to_value(QuadVerdict::Divergent { deficit: 1.0, tail: TailSide::Upper }).unwrap();
        assert_eq!(d["finite"], false);
        assert_eq!(d["deficit"], 1.0);
    }
}
