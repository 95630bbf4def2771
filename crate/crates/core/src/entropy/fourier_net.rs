//! Sparse quantized covering net for trigonometric series with bounded
//! weighted coefficient mass.
//!
//! The class `F(d, C)` holds `f = Σ_k c_k exp(2πi⟨k, x⟩)` over integer `k`
//! with `Σ_k (1 + ‖k‖_∞) |c_k| ≤ C`. Such an `f` is stored as a
//! [`BarronFourierRep`] whose keys are `2k` (the rep works on the
//! half-integer lattice). Net elements use at most `n` frequencies from the
//! box `‖k‖_∞ ≤ 2N` with coefficients on an `ε/(3n)` grid inside the disc of
//! radius 2. A general budget `C` is handled by covering `F(d, 1)` at `ε/C`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::barron::BarronFourierRep;
use crate::error::{LabError, Result};
use crate::num::{ceil_tol, ln_binomial_partial_sum};
use crate::par::map_indexed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierNetPlan {
    pub eps: f64,
    pub dim: usize,
    pub c1: f64,
    /// Mass budget `C` of the covered class.
    pub budget: f64,
    /// `ε / C`, the accuracy demanded of the normalized class.
    pub unit_eps: f64,
    /// Truncation order `N = ⌈3 / (ε/C)⌉`.
    pub truncation: u64,
    /// `λ = 1/2 + 1/d`.
    pub lambda: f64,
    /// Number of kept terms `n`.
    pub terms: u64,
    /// Half-width `2N` of the frequency box `I_N`.
    pub box_radius: u64,
    /// `|I_N| = (4N + 1)^d`.
    pub box_size: f64,
    /// Coefficient grid step `(ε/C) / (3n)` in normalized units.
    pub quant_step: f64,
    pub disc_radius: f64,
    /// `ln Σ_{l ≤ n} C(|I_N|, l)`, bounding the log-number of supports.
    pub ln_support_bound: f64,
    /// `ln|supports| + 2n ln(7n / (ε/C))`.
    pub ln_cardinality_bound: f64,
}

/// Plan for covering `F(d, 1)` at accuracy `eps`.
pub fn fourier_net_plan(eps: f64, dim: usize, c1: f64) -> Result<FourierNetPlan> {
    fourier_net_plan_for_budget(eps, dim, c1, 1.0)
}

/// Plan for covering `F(d, C)` at accuracy `eps`.
pub fn fourier_net_plan_for_budget(eps: f64, dim: usize, c1: f64, budget: f64) -> Result<FourierNetPlan> {
    if dim == 0 {
        return Err(LabError::Range("dimension must be positive".into()));
    }
    if !(c1 > 0.0 && c1.is_finite()) || !(budget > 0.0 && budget.is_finite()) {
        return Err(LabError::Range(format!("C1 = {c1} and C = {budget} must be positive")));
    }
    let unit_eps = eps / budget;
    if !(unit_eps > 0.0 && unit_eps < 0.5) {
        return Err(LabError::Range(format!("ε/C = {unit_eps} must lie in (0, 1/2)")));
    }
    let truncation = ceil_tol(3.0 / unit_eps) as u64;
    let lambda = 0.5 + 1.0 / dim as f64;
    let terms = (ceil_tol((3f64.powi(dim as i32 + 1) * c1 / unit_eps).powf(1.0 / lambda)) as u64).max(1);
    let box_radius = 2 * truncation;
    let box_size = ((2 * box_radius + 1) as f64).powi(dim as i32);
    let quant_step = unit_eps / (3.0 * terms as f64);
    let ln_support_bound = ln_binomial_partial_sum(box_size, terms);
    let ln_cardinality_bound = ln_support_bound + 2.0 * terms as f64 * (7.0 * terms as f64 / unit_eps).ln();
    Ok(FourierNetPlan {
        eps,
        dim,
        c1,
        budget,
        unit_eps,
        truncation,
        lambda,
        terms,
        box_radius,
        box_size,
        quant_step,
        disc_radius: 2.0,
        ln_support_bound,
        ln_cardinality_bound,
    })
}

/// Integer-frequency coefficients of a class member, checked against the
/// plan's dimension and mass budget.
pub fn class_coefficients(plan: &FourierNetPlan, rep: &BarronFourierRep) -> Result<BTreeMap<Vec<i64>, Complex64>> {
    if rep.dim() != plan.dim {
        return Err(LabError::DimensionMismatch {
            expected: plan.dim,
            got: rep.dim(),
        });
    }
    let mut out = BTreeMap::new();
    for (n, &c) in rep.coeffs() {
        if n.iter().any(|v| v % 2 != 0) {
            return Err(LabError::Membership(format!(
                "frequency {n:?}/2 is not an integer vector"
            )));
        }
        out.insert(n.iter().map(|v| v / 2).collect::<Vec<i64>>(), c);
    }
    let mass = class_mass(&out);
    if mass > plan.budget * (1.0 + 1e-12) {
        return Err(LabError::Membership(format!(
            "weighted mass {mass} exceeds C = {}",
            plan.budget
        )));
    }
    Ok(out)
}

/// `Σ_k (1 + ‖k‖_∞) |c_k|`.
pub fn class_mass(coeffs: &BTreeMap<Vec<i64>, Complex64>) -> f64 {
    coeffs.iter().map(|(k, c)| (1.0 + sup_norm(k) as f64) * c.norm()).sum()
}

fn sup_norm(k: &[i64]) -> u64 {
    k.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0)
}

/// Net element assigned to `coeffs`: truncate to `‖k‖_∞ ≤ N`, keep the `n`
/// largest coefficients (ties by frequency order), then round real and
/// imaginary parts to the quantization grid and project onto the disc.
pub fn net_approximant(plan: &FourierNetPlan, coeffs: &BTreeMap<Vec<i64>, Complex64>) -> BTreeMap<Vec<i64>, Complex64> {
    let mut kept: Vec<(&Vec<i64>, Complex64)> = coeffs
        .iter()
        .filter(|(k, _)| sup_norm(k) <= plan.truncation)
        .map(|(k, &c)| (k, c / plan.budget))
        .collect();
    kept.sort_by(|a, b| b.1.norm().total_cmp(&a.1.norm()));
    kept.truncate(plan.terms as usize);
    let step = plan.quant_step;
    kept.into_iter()
        .filter_map(|(k, c)| {
            let mut q = Complex64::new((c.re / step).round() * step, (c.im / step).round() * step);
            while q.norm() > plan.disc_radius {
                q = Complex64::new(q.re - step * q.re.signum(), q.im - step * q.im.signum());
            }
            (q.norm() > 0.0).then(|| (k.clone(), q * plan.budget))
        })
        .collect()
}

/// Sup of `|Σ_k c_k exp(2πi⟨k, x⟩)|` over the closed grid `{j/(res−1)}^d`.
pub fn grid_sup_norm(dim: usize, coeffs: &BTreeMap<Vec<i64>, Complex64>, res: usize) -> f64 {
    if coeffs.is_empty() {
        return 0.0;
    }
    let res = res.max(2);
    let total = res.pow(dim as u32);
    let step = 1.0 / (res - 1) as f64;
    let terms: Vec<(&Vec<i64>, Complex64)> = coeffs.iter().map(|(k, &c)| (k, c)).collect();
    let chunk = 4096;
    let maxima = map_indexed(total.div_ceil(chunk), |b| {
        let mut x = vec![0.0; dim];
        let mut best = 0.0f64;
        for idx in b * chunk..((b + 1) * chunk).min(total) {
            let mut r = idx;
            for a in (0..dim).rev() {
                x[a] = (r % res) as f64 * step;
                r /= res;
            }
            let mut s = Complex64::new(0.0, 0.0);
            for (k, c) in &terms {
                let phase: f64 = k.iter().zip(&x).map(|(&ki, &xi)| ki as f64 * xi).sum();
                s += c * Complex64::from_polar(1.0, 2.0 * PI * phase);
            }
            best = best.max(s.norm());
        }
        best
    });
    maxima.into_iter().fold(0.0, f64::max)
}

/// Outcome for one covered function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverResult {
    pub sup_distance: f64,
    pub passed: bool,
    pub kept_terms: usize,
    /// `Σ_{‖k‖_∞ > N} |c_k|`.
    pub truncated_mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    pub plan: FourierNetPlan,
    pub grid_res: usize,
    pub results: Vec<CoverResult>,
    pub pass_rate: f64,
}

/// Build each function's net approximant and measure the sup distance on a
/// dense grid with `grid_res` nodes per axis.
pub fn cover_with_fourier_net(
    plan: &FourierNetPlan,
    reps: &[BarronFourierRep],
    grid_res: usize,
) -> Result<CoverReport> {
    let coeffs = reps
        .iter()
        .map(|r| class_coefficients(plan, r))
        .collect::<Result<Vec<_>>>()?;
    let results: Vec<CoverResult> = coeffs
        .iter()
        .map(|c| {
            let approx = net_approximant(plan, c);
            let mut diff = c.clone();
            for (k, a) in &approx {
                *diff.entry(k.clone()).or_insert(Complex64::new(0.0, 0.0)) -= a;
            }
            diff.retain(|_, v| v.norm() > 0.0);
            let sup_distance = grid_sup_norm(plan.dim, &diff, grid_res);
            CoverResult {
                sup_distance,
                passed: sup_distance <= plan.eps,
                kept_terms: approx.len(),
                truncated_mass: c
                    .iter()
                    .filter(|(k, _)| sup_norm(k) > plan.truncation)
                    .map(|(_, v)| v.norm())
                    .sum(),
            }
        })
        .collect();
    let pass_rate = if results.is_empty() {
        1.0
    } else {
        results.iter().filter(|r| r.passed).count() as f64 / results.len() as f64
    };
    Ok(CoverReport {
        plan: plan.clone(),
        grid_res,
        results,
        pass_rate,
    })
}

/// Random real member of `F(d, C)`: a real constant plus `num_terms`
/// Hermitian pairs with `‖k‖_∞ ≤ max_freq`, scaled to a weighted mass drawn
/// uniformly from `[C/2, C]`.
pub fn sample_fourier_class_member(
    dim: usize,
    budget: f64,
    num_terms: usize,
    max_freq: u32,
    seed: u64,
) -> Result<BarronFourierRep> {
    if dim == 0 || !(budget > 0.0 && budget.is_finite()) {
        return Err(LabError::Range(format!(
            "need d ≥ 1 and C > 0, got d = {dim}, C = {budget}"
        )));
    }
    if num_terms > 0 && max_freq == 0 {
        return Err(LabError::Infeasible(
            "max_freq must be at least 1 to place oscillating terms".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = max_freq as i64;
    let side = 2 * max_freq as u64 + 1;
    let classes = side.checked_pow(dim as u32).map(|n| (n - 1) / 2).unwrap_or(u64::MAX);
    let k = (num_terms as u64).min(classes) as usize;
    let mut chosen: Vec<Vec<i64>> = Vec::with_capacity(k);
    while chosen.len() < k {
        let mut n: Vec<i64> = (0..dim).map(|_| rng.random_range(-f..=f)).collect();
        let Some(first) = n.iter().position(|&v| v != 0) else {
            continue;
        };
        if n[first] < 0 {
            n.iter_mut().for_each(|v| *v = -*v);
        }
        if !chosen.contains(&n) {
            chosen.push(n);
        }
    }
    let c0: f64 = rng.random_range(-1.0..=1.0);
    let pairs: Vec<(Vec<i64>, Complex64)> = chosen
        .into_iter()
        .map(|n| {
            let c = Complex64::from_polar(rng.random_range(0.1..=1.0), rng.random_range(0.0..2.0 * PI));
            (n, c)
        })
        .collect();
    let mass = c0.abs()
        + 2.0
            * pairs
                .iter()
                .map(|(n, c)| (1.0 + sup_norm(n) as f64) * c.norm())
                .sum::<f64>();
    let t = budget * rng.random_range(0.5..=1.0) / mass * (1.0 - 1e-12);
    let doubled: Vec<(Vec<i64>, Complex64)> = pairs
        .iter()
        .map(|(n, c)| (n.iter().map(|v| 2 * v).collect(), c * t))
        .collect();
    let moment = (c0 * t).abs()
        + 2.0
            * doubled
                .iter()
                .map(|(n, c)| (1.0 + n.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt()) * c.norm())
                .sum::<f64>();
    BarronFourierRep::from_pairs(dim, moment * (1.0 + 1e-9), c0 * t, &doubled)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_examples() {
        let p = fourier_net_plan(0.1, 1, 1.0).unwrap();
        assert_eq!(p.truncation, 30);
        assert_eq!(p.lambda, 1.5);
        assert_eq!(p.terms, 21);
        assert_eq!(p.box_radius, 60);
        assert_eq!(p.box_size, 121.0);
        assert_eq!(fourier_net_plan(0.1, 2, 1.0).unwrap().lambda, 1.0);
        assert!(fourier_net_plan(0.5, 1, 1.0).is_err());
        assert!(fourier_net_plan(0.0, 1, 1.0).is_err());
        for eps in [0.49, 0.3, 0.01] {
            let p = fourier_net_plan(eps, 3, 1.0).unwrap();
            assert!(p.truncation >= 7 && p.terms >= 1 && p.quant_step > 0.0);
        }
    }

    #[test]
    fn budget_rescales_eps() {
        let a = fourier_net_plan(0.1, 1, 1.0).unwrap();
        let b = fourier_net_plan_for_budget(0.4, 1, 1.0, 4.0).unwrap();
        assert_eq!((a.truncation, a.terms), (b.truncation, b.terms));
        assert_eq!(a.ln_cardinality_bound, b.ln_cardinality_bound);
    }

    #[test]
    fn zero_and_single_term() {
        let plan = fourier_net_plan(0.2, 1, 1.0).unwrap();
        let zero = BarronFourierRep::constant(1, 1.0, 0.0).unwrap();
        let r = cover_with_fourier_net(&plan, &[zero], 4096).unwrap();
        assert_eq!(r.results[0].sup_distance, 0.0);
        assert_eq!(r.results[0].kept_terms, 0);
        // A real cosine pair at frequency 3 stands in for a single exponential.
        let one = BarronFourierRep::with_slack(
            1,
            4.0,
            [
                (vec![6], Complex64::new(0.123, 0.0)),
                (vec![-6], Complex64::new(0.123, 0.0)),
            ],
            1.0,
        )
        .unwrap();
        let r = cover_with_fourier_net(&plan, &[one], 4096).unwrap();
        assert!(r.results[0].sup_distance <= 2.0 * plan.quant_step);
        assert!(r.pass_rate == 1.0);
    }

    #[test]
    fn membership_is_checked() {
        let plan = fourier_net_plan(0.2, 1, 1.0).unwrap();
        let odd = BarronFourierRep::from_pairs(1, 10.0, 0.0, &[(vec![1], Complex64::new(0.1, 0.0))]).unwrap();
        assert!(matches!(
            cover_with_fourier_net(&plan, &[odd], 64),
            Err(LabError::Membership(_))
        ));
        let heavy = BarronFourierRep::from_pairs(1, 10.0, 0.0, &[(vec![2], Complex64::new(0.3, 0.0))]).unwrap();
        assert!(matches!(
            cover_with_fourier_net(&plan, &[heavy], 64),
            Err(LabError::Membership(_))
        ));
    }

    #[test]
    fn sampled_members_are_in_class() {
        let plan = fourier_net_plan(0.2, 2, 1.0).unwrap();
        for seed in 0..20 {
            let rep = sample_fourier_class_member(2, 1.0, 5, 6, seed).unwrap();
            let c = class_coefficients(&plan, &rep).unwrap();
            let m = class_mass(&c);
            assert!((0.5 - 1e-9..=1.0).contains(&m), "{m}");
            let x = [0.3, 0.8];
            assert!(rep.eval_complex(&x).im.abs() < 1e-12);
        }
    }

    #[test]
    fn sup_norm_of_single_exponential() {
        let mut c = BTreeMap::new();
        c.insert(vec![3], Complex64::new(0.0, -0.7));
        assert!((grid_sup_norm(1, &c, 97) - 0.7).abs() < 1e-12);
        c.insert(vec![0], Complex64::new(0.3, 0.0));
        assert!((grid_sup_norm(1, &c, 4097) - 1.0).abs() < 1e-6);
    }
}
