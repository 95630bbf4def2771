//! Packing and covering studies behind `lab entropy pack|cover`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::EntropySpec;
use super::emit::fmt_float;
use super::sweep::fit_loglog_slope;
use crate::entropy::{
    bump_packing_set, cover_with_fourier_net, fourier_net_plan_for_budget, sample_fourier_class_member,
    BumpPackingConfig, FourierNetPlan,
};
use crate::error::Result;
use crate::par::map_indexed;

pub const ENTROPY_CSV_HEADER: &str = "eps,ln_packing,ln_cover_bound";

/// `eps,ln_packing,ln_cover_bound` with empty cells for missing values.
pub fn curve_csv(rows: &[(f64, Option<f64>, Option<f64>)]) -> String {
    let mut out = format!("{ENTROPY_CSV_HEADER}\n");
    let cell = |v: Option<f64>| v.map(fmt_float).unwrap_or_default();
    for &(eps, p, c) in rows {
        let _ = writeln!(out, "{},{},{}", fmt_float(eps), cell(p), cell(c));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PackingStudyRow {
    pub grid_size: usize,
    pub target: usize,
    pub count: usize,
    pub r: usize,
    pub min_units: usize,
    pub eps: f64,
    pub scale: f64,
    pub ln_packing: f64,
    /// Log-cardinality of the Fourier net at the same `ε`, when defined.
    pub ln_cover_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PackingSlopes {
    /// Fitted exponent of `ln(count)` against `ln(1/ε)`.
    pub fitted: Option<f64>,
    /// `2d/(2+d)`.
    pub reference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PackingStudy {
    pub plan: EntropySpec,
    pub achieved: Vec<PackingStudyRow>,
    pub slopes: PackingSlopes,
}

impl PackingStudy {
    pub fn csv(&self) -> String {
        let rows: Vec<_> = self
            .achieved
            .iter()
            .map(|r| (r.eps, Some(r.ln_packing), r.ln_cover_bound))
            .collect();
        curve_csv(&rows)
    }
}

/// Bump-lattice packing sets for every grid size in `spec`.
pub fn packing_study(spec: &EntropySpec) -> Result<PackingStudy> {
    let mut achieved = Vec::with_capacity(spec.grid_sizes.len());
    for &n in &spec.grid_sizes {
        let cfg = BumpPackingConfig {
            max_count: spec.max_count,
            ..BumpPackingConfig::new(spec.dim, n, spec.budget, spec.seed)
        };
        let set = bump_packing_set(&cfg)?;
        let ln_cover_bound = fourier_net_plan_for_budget(set.eps, spec.dim, 1.0, spec.budget)
            .ok()
            .map(|p| p.ln_cardinality_bound);
        achieved.push(PackingStudyRow {
            grid_size: n,
            target: set.target,
            count: set.members.len(),
            r: set.r,
            min_units: set.min_units,
            eps: set.eps,
            scale: set.scale,
            ln_packing: set.ln_count(),
            ln_cover_bound,
        });
    }
    let pts: Vec<(f64, f64)> = achieved.iter().map(|r| (1.0 / r.eps, r.ln_packing)).collect();
    let d = spec.dim as f64;
    Ok(PackingStudy {
        plan: spec.clone(),
        slopes: PackingSlopes {
            fitted: fit_loglog_slope(&pts).ok().map(|f| f.slope),
            reference: 2.0 * d / (2.0 + d),
        },
        achieved,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverStudyRow {
    pub eps: f64,
    pub members: usize,
    pub pass_rate: f64,
    pub worst_sup_distance: f64,
    pub ln_cover_bound: f64,
    /// `ln_cover_bound / (ε^{-1/λ}(1 + ln(1/ε)))`.
    pub normalized_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverStudy {
    pub plan: Vec<FourierNetPlan>,
    pub achieved: Vec<CoverStudyRow>,
    pub slopes: CoverSlopes,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverSlopes {
    /// Largest over smallest normalized bound.
    pub normalized_spread: Option<f64>,
}

impl CoverStudy {
    pub fn csv(&self) -> String {
        let rows: Vec<_> = self
            .achieved
            .iter()
            .map(|r| (r.eps, None, Some(r.ln_cover_bound)))
            .collect();
        curve_csv(&rows)
    }
}

/// Cover `members` random elements of `F(d, C)` at every `ε` in `eps`.
pub fn cover_study(
    eps: &[f64],
    dim: usize,
    budget: f64,
    members: usize,
    seed: u64,
    grid_res: usize,
) -> Result<CoverStudy> {
    let mut plans = Vec::with_capacity(eps.len());
    let mut achieved = Vec::with_capacity(eps.len());
    for &e in eps {
        let plan = fourier_net_plan_for_budget(e, dim, 1.0, budget)?;
        let max_freq = u32::try_from(2 * plan.truncation).unwrap_or(u32::MAX).max(1);
        let reps = map_indexed(members, |i| {
            sample_fourier_class_member(dim, budget, 6, max_freq, seed.wrapping_add(i as u64))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let report = cover_with_fourier_net(&plan, &reps, grid_res)?;
        let unit = plan.unit_eps;
        achieved.push(CoverStudyRow {
            eps: e,
            members,
            pass_rate: report.pass_rate,
            worst_sup_distance: report.results.iter().map(|r| r.sup_distance).fold(0.0, f64::max),
            ln_cover_bound: plan.ln_cardinality_bound,
            normalized_bound: plan.ln_cardinality_bound / (unit.powf(-1.0 / plan.lambda) * (1.0 + (1.0 / unit).ln())),
        });
        plans.push(plan);
    }
    let norms: Vec<f64> = achieved.iter().map(|r| r.normalized_bound).collect();
    let spread = (!norms.is_empty())
        .then(|| norms.iter().cloned().fold(0.0, f64::max) / norms.iter().cloned().fold(f64::INFINITY, f64::min));
    Ok(CoverStudy {
        plan: plans,
        achieved,
        slopes: CoverSlopes {
            normalized_spread: spread,
        },
    })
}
