//! The coefficient `(1 + 1/t)/(1 − (1+t)r)` from the twisted `∂̄` estimate
//! and its minimum over `t`.

use serde::Serialize;

use crate::error::{Error, Result};

pub fn hormander_coefficient(r: f64, t: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) || !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("need 0 < r < 1 and t > 0, got r = {r}, t = {t}")));
    }
    let denom = 1.0 - (1.0 + t) * r;
    if !(denom > 0.0) {
        return Err(Error::InvalidArgument(format!("(1+t)r = {} ≥ 1", (1.0 + t) * r)));
    }
    Ok((1.0 + 1.0 / t) / denom)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CoefficientMinimum {
    pub r: f64,
    /// `1/√r − 1`.
    pub t_star: f64,
    /// `(1 − √r)^{−2}`.
    pub closed_form: f64,
    /// Minimum found by grid search and golden-section refinement.
    pub searched_min: f64,
    pub searched_t: f64,
    /// Infimum over `0 < t < 1`; for `t* ≥ 1` it is `2/(1−2r)`, approached
    /// as `t → 1` and not attained.
    pub constrained_min: f64,
    pub constrained_attained: bool,
    /// `6/(1 − r)²`.
    pub six_bound: f64,
    pub bound_holds: bool,
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Minimizes over the admissible range `0 < t < 1/r − 1`.
pub fn minimize_coefficient(r: f64) -> Result<CoefficientMinimum> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidArgument(format!("need 0 < r < 1, got {r}")));
    }
    let upper = 1.0 / r - 1.0;
    let f = |t: f64| hormander_coefficient(r, t).unwrap_or(f64::INFINITY);
    let count = 4000;
    let grid: Vec<f64> = (1..count).map(|i| upper * i as f64 / count as f64).collect();
    let best = (0..grid.len())
        .min_by(|&i, &j| f(grid[i]).total_cmp(&f(grid[j])))
        .expect("grid is nonempty");
    let lo = if best == 0 { 0.0 } else { grid[best - 1] };
    let hi = grid.get(best + 1).copied().unwrap_or(upper);
    let t = golden_section(&f, lo.max(upper * 1e-12), hi);

    let sr = r.sqrt();
    let t_star = 1.0 / sr - 1.0;
    let closed_form = (1.0 - sr).powi(-2);
    let (constrained_min, constrained_attained) = if t_star < 1.0 {
        (closed_form, true)
    } else {
        (2.0 / (1.0 - 2.0 * r), false)
    };
    let six_bound = 6.0 / ((1.0 - r) * (1.0 - r));
    Ok(CoefficientMinimum {
        r,
        t_star,
        closed_form,
        searched_min: f(t),
        searched_t: t,
        constrained_min,
        constrained_attained,
        six_bound,
        bound_holds: closed_form <= six_bound,
    })
}
