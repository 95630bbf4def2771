//! Small numeric helpers shared by the calculators.

/// `⌈x⌉`, treating values within a few ulps above an integer as that integer
/// so that e.g. `3 / 0.1` gives 30.
pub fn ceil_tol(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 8.0 * f64::EPSILON * r.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// `ln Σ_{l=0}^{min(n,k)} C(k, l)`, accumulated in log space.
pub fn ln_binomial_partial_sum(k: f64, n: u64) -> f64 {
    let top = if k.is_finite() { n.min(k.floor() as u64) } else { n };
    let mut term = 0.0f64;
    let mut max = 0.0f64;
    let mut terms = Vec::with_capacity(top as usize + 1);
    terms.push(0.0);
    for l in 1..=top {
        term += (k - l as f64 + 1.0).ln() - (l as f64).ln();
        max = max.max(term);
        terms.push(term);
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}
