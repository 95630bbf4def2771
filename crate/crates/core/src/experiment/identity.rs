//! Randomized checks of the density-lift and classifier identities.

use serde::{Deserialize, Serialize};

use super::config::IdentitySpec;
use crate::barron::{sample_boundary_rep, BarronFourierRep};
use crate::classifier::{boundary_l1, disagreement, Boundary, DisagreementMethod, HorizonClassifier, Indicator};
use crate::density::{hellinger_squared, kl_divergence, l1_distance, lift, total_mass, LabelDensity};
use crate::entropy::sample_fourier_class_member;
use crate::error::Result;
use crate::field::{midpoint_nodes, Integrator};
use crate::par::map_indexed;

/// One random instance of every check.
#[derive(Clone, Debug)]
pub struct IdentityInstance {
    /// Horizon boundaries on `[0,1]^{d-1}`.
    pub b1: BarronFourierRep,
    pub b2: BarronFourierRep,
    /// Functions on `[0,1]^d` whose range exceeds `[0, 1]`.
    pub f: BarronFourierRep,
    pub g: BarronFourierRep,
    /// Functions with values strictly inside `(0, 1)`.
    pub u: BarronFourierRep,
    pub v: BarronFourierRep,
    /// Added to `p(x, 0)` of the normalization check (negative control).
    pub corruption: Option<f64>,
}

/// Draw `n` instances in dimension `dim` from `seed`.
pub fn random_identity_instances(n: usize, dim: usize, seed: u64) -> Result<Vec<IdentityInstance>> {
    (0..n as u64)
        .map(|i| {
            let s = seed.wrapping_mul(1_000_003).wrapping_add(i * 8);
            Ok(IdentityInstance {
                b1: sample_boundary_rep(dim - 1, 2.0, 4, 4, s)?,
                b2: sample_boundary_rep(dim - 1, 2.0, 4, 4, s + 1)?,
                f: sample_fourier_class_member(dim, 2.0, 4, 3, s + 2)?,
                g: sample_fourier_class_member(dim, 2.0, 4, 3, s + 3)?,
                u: sample_boundary_rep(dim, 2.0, 4, 3, s + 4)?,
                v: sample_boundary_rep(dim, 2.0, 4, 3, s + 5)?,
                corruption: None,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityRow {
    pub name: String,
    pub tolerance: f64,
    pub max_violation: f64,
    pub instances: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IdentityTable {
    pub rows: Vec<IdentityRow>,
}

impl IdentityTable {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn row(&self, name: &str) -> Option<&IdentityRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "{:<28} {:>10} {:>14} {:>9}  result\n",
            "check", "tolerance", "max_violation", "instances"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<28} {:>10.1e} {:>14.3e} {:>9}  {}\n",
                r.name,
                r.tolerance,
                r.max_violation,
                r.instances,
                if r.passed { "pass" } else { "FAIL" }
            ));
        }
        out
    }
}

pub const HELLINGER_IDENTITY: &str = "hellinger_identity";
pub const L2_L1_IDENTITY: &str = "l2_l1_identity";
pub const LIFT_LIPSCHITZ: &str = "lift_lipschitz";
pub const KL_DOMINATES_HELLINGER: &str = "kl_dominates_hellinger";
pub const NORMALIZATION: &str = "normalization";

/// `(name, tolerance)` of every row, in table order.
pub const TOLERANCES: [(&str, f64); 5] = [
    (HELLINGER_IDENTITY, 1e-3),
    (L2_L1_IDENTITY, 1e-4),
    (LIFT_LIPSCHITZ, 1e-6),
    (KL_DOMINATES_HELLINGER, 1e-8),
    (NORMALIZATION, 1e-9),
];

/// Panels of the exact boundary quadrature.
const EXACT_PANELS: usize = 2048;

/// Violations of the five checks on one instance:
/// `|d_H² − 2‖h₁ − h₂‖²_{L²}|`, `|λ{h₁ ≠ h₂} − ‖b₁ − b₂‖_{L¹}|`,
/// `(‖p[f] − p[g]‖_{L¹} − 2‖f − g‖_{L¹})₊`, `(d_H² − D)₊` and the worst
/// normalization defect.
pub fn instance_violations(inst: &IdentityInstance, spec: &IdentitySpec) -> Result<[f64; 5]> {
    let dim = inst.f.dim();
    let fine = Integrator::Grid { res: spec.identity_res };
    let coarse = Integrator::Grid {
        res: spec.pointwise_res,
    };
    let h1 = HorizonClassifier::new(dim, Boundary::Fourier(inst.b1.clone()))?;
    let h2 = HorizonClassifier::new(dim, Boundary::Fourier(inst.b2.clone()))?;
    let exact = boundary_l1(&inst.b1, &inst.b2, EXACT_PANELS);

    let dh2 = hellinger_squared(&lift(Indicator(&h1)), &lift(Indicator(&h2)), fine)?.value;
    let hellinger = (dh2 - 2.0 * exact).abs();
    let dis = disagreement(&h1, &h2, DisagreementMethod::Grid { res: spec.identity_res })?.value;
    let l2l1 = (dis - exact).abs();

    let lifted = l1_distance(&lift(&inst.f), &lift(&inst.g), coarse)?.value;
    let fg = coarse.mean_of(dim, &[&inst.f, &inst.g], |v| (v[0] - v[1]).abs()).value;
    let lipschitz = (lifted - 2.0 * fg).max(0.0);

    let (p, q) = (lift(&inst.u), lift(&inst.v));
    let kl = kl_divergence(&p, &q, coarse)?.value;
    let kl_gap = (hellinger_squared(&p, &q, coarse)?.value - kl).max(0.0);

    let density = Shifted {
        inner: lift(&inst.f),
        shift: inst.corruption.unwrap_or(0.0),
    };
    let mass = (total_mass(&density, coarse).value - 1.0).abs();
    let nodes = midpoint_nodes(spec.pointwise_res);
    let pointwise = density
        .tensor_pairs(&nodes)
        .iter()
        .map(|p| (p[0] + p[1] - 2.0).abs())
        .fold(0.0, f64::max);
    Ok([hellinger, l2l1, lipschitz, kl_gap, mass.max(pointwise)])
}

/// Run every check on every instance; an empty list gives an empty table.
pub fn run_identity_suite(instances: &[IdentityInstance], spec: &IdentitySpec) -> Result<IdentityTable> {
    if instances.is_empty() {
        return Ok(IdentityTable::default());
    }
    let per = map_indexed(instances.len(), |i| instance_violations(&instances[i], spec));
    let per = per.into_iter().collect::<Result<Vec<_>>>()?;
    let rows = TOLERANCES
        .iter()
        .enumerate()
        .map(|(k, &(name, tolerance))| {
            let worst = per.iter().map(|v| v[k]).fold(0.0, f64::max);
            IdentityRow {
                name: name.to_string(),
                tolerance,
                max_violation: worst,
                instances: per.len(),
                passed: worst <= tolerance,
            }
        })
        .collect();
    Ok(IdentityTable { rows })
}

/// The default suite: `spec.instances` random instances.
pub fn run_default_identity_suite(spec: &IdentitySpec) -> Result<IdentityTable> {
    run_identity_suite(&random_identity_instances(spec.instances, spec.dim, spec.seed)?, spec)
}

/// A lifted density with `shift` added to the label-0 slice.
struct Shifted<D> {
    inner: D,
    shift: f64,
}

impl<D: LabelDensity> LabelDensity for Shifted<D> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn pair(&self, x: &[f64]) -> [f64; 2] {
        let [a, b] = self.inner.pair(x);
        [a + self.shift, b]
    }
    fn tensor_pairs(&self, nodes: &[f64]) -> Vec<[f64; 2]> {
        self.inner
            .tensor_pairs(nodes)
            .into_iter()
            .map(|[a, b]| [a + self.shift, b])
            .collect()
    }
}
