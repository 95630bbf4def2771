//! Fixed-point and closed-form rate calculators.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Entropy growth `ε^{-1/α} ≲ M(ε) ≲ ε^{-1/β} ln^b(2 + 1/ε)` with an extra
/// logarithmic factor `a` in the lower rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyRateParams {
    pub alpha: f64,
    pub beta: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl EntropyRateParams {
    pub fn new(alpha: f64, beta: f64, a: f64, b: f64, c: f64) -> Result<Self> {
        if !(beta > 0.0 && alpha >= beta && alpha.is_finite()) {
            return Err(LabError::Range(format!("need α ≥ β > 0, got α = {alpha}, β = {beta}")));
        }
        if !(a >= 0.0 && b >= 0.0 && c > 0.0) {
            return Err(LabError::Range(format!(
                "need a, b ≥ 0 and C > 0, got a = {a}, b = {b}, C = {c}"
            )));
        }
        Ok(EntropyRateParams { alpha, beta, a, b, c })
    }

    /// Parameters of the Barron horizon classes in dimension `d`.
    pub fn barron(d: usize) -> Result<Self> {
        let e = rate_exponents(d)?;
        let ab = ratio_f64(e.alpha_beta);
        EntropyRateParams::new(ab, ab, 0.0, 1.0, 1.0)
    }
}

/// `V(ε) = C · max{1, 1/ε}^α · ln^β(2 + 1/ε)`.
pub fn entropy_growth(c: f64, alpha: f64, beta: f64, eps: f64) -> f64 {
    c * (1.0 / eps).max(1.0).powf(alpha) * (2.0 + 1.0 / eps).ln().powf(beta)
}

/// Unique root of `n ε² = V(ε)` by bracketed bisection.
///
/// The left side increases and `V` decreases in ε, so the root is unique;
/// the bracket is widened geometrically and then bisected until adjacent
/// floats are reached.
pub fn solve_eps_n(c: f64, alpha: f64, beta: f64, n: f64) -> Result<f64> {
    if !(c > 0.0 && alpha > 0.0 && beta >= 0.0 && n >= 1.0) || ![c, alpha, beta, n].iter().all(|v| v.is_finite()) {
        return Err(LabError::Range(format!(
            "need C, α > 0, β ≥ 0, n ≥ 1; got {c}, {alpha}, {beta}, {n}"
        )));
    }
    let g = |e: f64| n * e * e - entropy_growth(c, alpha, beta, e);
    let (mut lo, mut hi) = (1.0, 1.0);
    while g(lo) > 0.0 {
        lo *= 0.5;
    }
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if g(lo).abs() <= g(hi).abs() { lo } else { hi })
}

/// Exponents of the Barron horizon problem in dimension `d ≥ 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateExponents {
    pub d: usize,
    /// `(d+1)/(3d−1)`.
    pub lower_exp: Ratio<i64>,
    /// `(d+1)(5d−3)/((3d−1)(2d−2))`.
    pub log_exp_lower: Ratio<i64>,
    /// `(5d−3)/(3d−1)`.
    pub log_exp_upper: Ratio<i64>,
    /// `α = β = (d+1)/(2(d−1))`.
    pub alpha_beta: Ratio<i64>,
}

pub fn rate_exponents(d: usize) -> Result<RateExponents> {
    if d < 2 {
        return Err(LabError::Range(format!("rate exponents need d ≥ 2, got {d}")));
    }
    let d = d as i64;
    Ok(RateExponents {
        d: d as usize,
        lower_exp: Ratio::new(d + 1, 3 * d - 1),
        log_exp_lower: Ratio::new((d + 1) * (5 * d - 3), (3 * d - 1) * (2 * d - 2)),
        log_exp_upper: Ratio::new(5 * d - 3, 3 * d - 1),
        alpha_beta: Ratio::new(d + 1, 2 * (d - 1)),
    })
}

pub fn ratio_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// `(κ₁(m), κ₂(m))` with leading constants `c1`, `c2`:
/// `κ₁ = c1 · m^{−α/(β+1)} ln(2m)^{−α(2+βb)/(β+1) − αa}` and
/// `κ₂ = c2 · m^{−β/(β+1)} ln(2m)^{(2+βb)/(β+1)}`.
pub fn kappa_bounds_with(p: &EntropyRateParams, m: f64, c1: f64, c2: f64) -> Result<(f64, f64)> {
    if !(m >= 1.0) {
        return Err(LabError::Range(format!("m must be at least 1, got {m}")));
    }
    let (a, b, al, be) = (p.a, p.b, p.alpha, p.beta);
    let l = (2.0 * m).ln();
    let k1 = c1 * m.powf(-al / (be + 1.0)) * l.powf(-al * (2.0 + be * b) / (be + 1.0) - al * a);
    let k2 = c2 * m.powf(-be / (be + 1.0)) * l.powf((2.0 + be * b) / (be + 1.0));
    Ok((k1, k2))
}

pub fn kappa_bounds(p: &EntropyRateParams, m: f64) -> Result<(f64, f64)> {
    kappa_bounds_with(p, m, 1.0, 1.0)
}

/// `W (10 + ln(1/δ) + 5 ln⌈B⌉ + 5 ln max{d, W})`.
pub fn nn_entropy_bound(delta: f64, d: usize, w: usize, b: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(LabError::Range(format!("δ = {delta} must lie in (0, 1]")));
    }
    if d == 0 || w == 0 || !(b > 0.0 && b.is_finite()) {
        return Err(LabError::Range(format!(
            "need d, W ≥ 1 and B > 0, got d = {d}, W = {w}, B = {b}"
        )));
    }
    let wf = w as f64;
    Ok(wf * (10.0 + (1.0 / delta).ln() + 5.0 * b.ceil().ln() + 5.0 * (d.max(w) as f64).ln()))
}
