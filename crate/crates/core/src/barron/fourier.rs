//! Finite Fourier sums on the half-integer frequency lattice.
//!
//! A function is stored as `f = Σ_n c_n e_n` with `e_n(x) = exp(2πi⟨n/2, x⟩)`
//! and finitely many `n ∈ ℤ^d`. Hermitian symmetry `c_{-n} = conj(c_n)` keeps
//! the sum real, and the weighted moment `Σ (1 + |n|) |c_n|` certifies the
//! Barron constant.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::{in_unit_cube, Field};

/// Default certification slack between the weighted moment and the budget.
pub const DEFAULT_KAPPA_REP: f64 = 1.0;

/// Relative slack tolerated when re-verifying a loaded representation.
const LOAD_RTOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
struct Term {
    omega: Vec<f64>,
    c: Complex64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BarronFourierRep {
    dim: usize,
    budget: f64,
    coeffs: BTreeMap<Vec<i64>, Complex64>,
    terms: Vec<Term>,
}

impl BarronFourierRep {
    /// Validating constructor with the default slack `κ_rep = 1`.
    pub fn new(dim: usize, budget: f64, coeffs: impl IntoIterator<Item = (Vec<i64>, Complex64)>) -> Result<Self> {
        Self::with_slack(dim, budget, coeffs, DEFAULT_KAPPA_REP)
    }

    pub fn with_slack(
        dim: usize,
        budget: f64,
        coeffs: impl IntoIterator<Item = (Vec<i64>, Complex64)>,
        kappa_rep: f64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(LabError::InvalidRep("dimension must be positive".into()));
        }
        if !(budget.is_finite() && budget > 0.0) {
            return Err(LabError::InvalidRep(format!("budget must be positive, got {budget}")));
        }
        let mut map = BTreeMap::new();
        for (n, c) in coeffs {
            if n.len() != dim {
                return Err(LabError::DimensionMismatch {
                    expected: dim,
                    got: n.len(),
                });
            }
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(LabError::InvalidRep(format!("non-finite coefficient at {n:?}")));
            }
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            if map.insert(n.clone(), c).is_some() {
                return Err(LabError::InvalidRep(format!("duplicate frequency {n:?}")));
            }
        }
        for (n, c) in &map {
            let mirror: Vec<i64> = n.iter().map(|k| -k).collect();
            let cm = map.get(&mirror).copied().unwrap_or_default();
            let diff = (cm - c.conj()).norm();
            if diff > 1e-12 * c.norm().max(1.0) {
                return Err(LabError::InvalidRep(format!("Hermitian symmetry violated at {n:?}")));
            }
        }
        let rep = Self::from_map(dim, budget, map);
        let moment = rep.weighted_fourier_moment();
        if moment > kappa_rep * budget * (1.0 + LOAD_RTOL) {
            return Err(LabError::InvalidRep(format!(
                "weighted moment {moment} exceeds {kappa_rep} x budget {budget}"
            )));
        }
        Ok(rep)
    }

    fn from_map(dim: usize, budget: f64, coeffs: BTreeMap<Vec<i64>, Complex64>) -> Self {
        let terms = coeffs
            .iter()
            .map(|(n, &c)| Term {
                omega: n.iter().map(|&k| PI * k as f64).collect(),
                c,
            })
            .collect();
        BarronFourierRep {
            dim,
            budget,
            coeffs,
            terms,
        }
    }

    /// Constant function `c0` (no oscillating terms).
    pub fn constant(dim: usize, budget: f64, c0: f64) -> Result<Self> {
        Self::new(dim, budget, [(vec![0; dim], Complex64::new(c0, 0.0))])
    }

    /// Build from a real constant and one representative per Hermitian pair;
    /// the mirrored coefficient is added automatically.
    pub fn from_pairs(dim: usize, budget: f64, c0: f64, pairs: &[(Vec<i64>, Complex64)]) -> Result<Self> {
        let mut all = vec![(vec![0; dim], Complex64::new(c0, 0.0))];
        for (n, c) in pairs {
            if n.iter().all(|&k| k == 0) {
                return Err(LabError::InvalidRep("pair frequency must be nonzero".into()));
            }
            all.push((n.clone(), *c));
            all.push((n.iter().map(|k| -k).collect(), c.conj()));
        }
        Self::new(dim, budget, all)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn coeffs(&self) -> &BTreeMap<Vec<i64>, Complex64> {
        &self.coeffs
    }

    /// `Σ_n (1 + |n|₂) |c_n|`.
    pub fn weighted_fourier_moment(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|(n, c)| {
                let norm = n.iter().map(|&k| (k * k) as f64).sum::<f64>().sqrt();
                (1.0 + norm) * c.norm()
            })
            .sum()
    }

    /// `Σ_{n≠0} |c_n|`.
    pub fn oscillating_mass(&self) -> f64 {
        self.coeffs
            .iter()
            .filter(|(n, _)| n.iter().any(|&k| k != 0))
            .map(|(_, c)| c.norm())
            .sum()
    }

    /// Multiply all coefficients and the budget by `lambda ≥ 0`.
    pub fn scaled(&self, lambda: f64) -> Self {
        assert!(lambda >= 0.0);
        let map = self
            .coeffs
            .iter()
            .filter(|_| lambda > 0.0)
            .map(|(n, c)| (n.clone(), c * lambda))
            .collect();
        let budget = if lambda > 0.0 {
            self.budget * lambda
        } else {
            self.budget
        };
        Self::from_map(self.dim, budget, map)
    }

    /// Complex sum `Σ c_n e_n(x)` without domain checks.
    pub fn eval_complex(&self, x: &[f64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let phase: f64 = t.omega.iter().zip(x).map(|(w, x)| w * x).sum();
            let (s, c) = phase.sin_cos();
            acc += t.c * Complex64::new(c, s);
        }
        acc
    }

    /// Evaluate at `x ∈ [0,1]^d`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(LabError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if !in_unit_cube(x) {
            return Err(LabError::Domain { point: x.to_vec() });
        }
        let z = self.eval_complex(x);
        debug_assert!(z.im.abs() < 1e-10, "imaginary residue {}", z.im);
        Ok(z.re)
    }

    pub fn to_document(&self) -> RepDocument {
        RepDocument {
            dim: self.dim,
            budget: self.budget,
            coeffs: self
                .coeffs
                .iter()
                .map(|(n, c)| {
                    let mut row: Vec<f64> = n.iter().map(|&k| k as f64).collect();
                    row.push(c.re);
                    row.push(c.im);
                    row
                })
                .collect(),
        }
    }

    pub fn from_document(doc: &RepDocument) -> Result<Self> {
        let mut coeffs = Vec::with_capacity(doc.coeffs.len());
        for row in &doc.coeffs {
            if row.len() != doc.dim + 2 {
                return Err(LabError::Parse(format!(
                    "coefficient row has {} entries, expected {}",
                    row.len(),
                    doc.dim + 2
                )));
            }
            let mut n = Vec::with_capacity(doc.dim);
            for &k in &row[..doc.dim] {
                if k.fract() != 0.0 || !k.is_finite() {
                    return Err(LabError::Parse(format!("non-integer frequency {k}")));
                }
                n.push(k as i64);
            }
            coeffs.push((n, Complex64::new(row[doc.dim], row[doc.dim + 1])));
        }
        Self::new(doc.dim, doc.budget, coeffs)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("rep document serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: RepDocument = serde_json::from_str(s)?;
        Self::from_document(&doc)
    }
}

impl Field for BarronFourierRep {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.eval_complex(x).re
    }

    /// Each term factorizes over the axes, so it is expanded as an outer
    /// product of per-axis phase tables.
    fn tensor_values(&self, nodes: &[f64]) -> Vec<f64> {
        let total = nodes.len().pow(self.dim as u32);
        let mut out = vec![0.0; total];
        let mut cur: Vec<Complex64> = Vec::with_capacity(total);
        let mut next: Vec<Complex64> = Vec::with_capacity(total);
        for t in &self.terms {
            cur.clear();
            cur.push(t.c);
            for &w in &t.omega {
                let table: Vec<Complex64> = nodes.iter().map(|&x| Complex64::from_polar(1.0, w * x)).collect();
                next.clear();
                for p in &cur {
                    next.extend(table.iter().map(|e| p * e));
                }
                std::mem::swap(&mut cur, &mut next);
            }
            for (o, z) in out.iter_mut().zip(&cur) {
                *o += z.re;
            }
        }
        out
    }
}

/// Serialized form `{dim, budget, coeffs: [[n_1, …, n_d, re, im], …]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepDocument {
    pub dim: usize,
    pub budget: f64,
    pub coeffs: Vec<Vec<f64>>,
}

/// Random boundary-function generator.
///
/// The result has constant term 1/2 and `num_terms` Hermitian pairs with
/// `Σ_{n≠0} |c_n| ≤ 1/2` and weighted moment `≤ budget`, so its values stay
/// inside `[0, 1]`.
pub fn sample_boundary_rep(
    dim: usize,
    budget: f64,
    num_terms: usize,
    max_freq: u32,
    seed: u64,
) -> Result<BarronFourierRep> {
    if !(budget.is_finite() && budget >= 0.5) {
        return Err(LabError::Infeasible(format!(
            "budget {budget} cannot hold the constant term 1/2"
        )));
    }
    if dim == 0 {
        return Err(LabError::InvalidRep("dimension must be positive".into()));
    }
    if num_terms == 0 || budget == 0.5 {
        return BarronFourierRep::constant(dim, budget, 0.5);
    }
    if max_freq == 0 {
        return Err(LabError::Infeasible(
            "max_freq must be at least 1 to place oscillating terms".into(),
        ));
    }
    let side = 2 * max_freq as u64 + 1;
    let classes = side.checked_pow(dim as u32).map(|n| (n - 1) / 2).unwrap_or(u64::MAX);
    let k = (num_terms as u64).min(classes) as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = max_freq as i64;
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
    let raw: Vec<(Vec<i64>, f64, f64)> = chosen
        .into_iter()
        .map(|n| {
            let mag = rng.random_range(0.1..=1.0);
            let phase = rng.random_range(0.0..2.0 * PI);
            (n, mag, phase)
        })
        .collect();
    let mass: f64 = raw.iter().map(|(_, m, _)| m).sum();
    let weighted: f64 = raw
        .iter()
        .map(|(n, m, _)| (1.0 + n.iter().map(|&k| (k * k) as f64).sum::<f64>().sqrt()) * m)
        .sum();
    // Each pair contributes twice to both sums.
    let mut t = (0.25 * (1.0 - 1e-9) / mass).min((budget - 0.5) / (2.0 * weighted));
    loop {
        let pairs: Vec<(Vec<i64>, Complex64)> = raw
            .iter()
            .map(|(n, m, p)| (n.clone(), Complex64::from_polar(t * m, *p)))
            .collect();
        let rep = BarronFourierRep::from_pairs(dim, budget, 0.5, &pairs)?;
        if rep.weighted_fourier_moment() <= budget && rep.oscillating_mass() <= 0.5 {
            return Ok(rep);
        }
        t *= 1.0 - 1e-12;
    }
}
