//! Browser bindings for three small views of the library: a random Barron
//! horizon with a labelled sample, a signed bump-lattice member, and the
//! fixed-point rate curve `ε_n`.
//!
//! Each operation has a plain Rust form returning JSON text and a
//! `#[wasm_bindgen]` wrapper that turns errors into JavaScript exceptions.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use serde::Serialize;
use wasm_bindgen::prelude::*;

use barron_lab::barron::{
    estimate_bump_fourier_moment, sample_boundary_rep, select_signs, BumpFamily, MomentEstimator,
};
use barron_lab::bits::BitSet;
use barron_lab::classifier::{sample_noiseless, Boundary, HorizonClassifier};
use barron_lab::entropy::{entropy_growth, solve_eps_n};
use barron_lab::field::Field;
use barron_lab::{LabError, Result};

#[derive(Serialize)]
struct HorizonView {
    boundary: Vec<[f64; 2]>,
    points: Vec<[f64; 3]>,
    moment: f64,
    label_mean: f64,
}

#[derive(Serialize)]
struct BumpView {
    curve: Vec<[f64; 2]>,
    signs: Vec<i8>,
    moment: f64,
    unit_distance: f64,
}

#[derive(Serialize)]
struct RateView {
    /// `(n, ε_n, ε_n / (ln^β(2n)/n)^{1/(2+α)})`.
    points: Vec<[f64; 3]>,
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string(v).map_err(|e| LabError::Config(e.to_string()))
}

fn grid(res: usize) -> Vec<f64> {
    (0..=res).map(|i| i as f64 / res as f64).collect()
}

/// Boundary curve on `res + 1` nodes and `m` noiseless labelled points for a
/// random planar horizon classifier.
pub fn horizon_json(seed: u64, budget: f64, terms: usize, m: usize, res: usize) -> Result<String> {
    let rep = sample_boundary_rep(1, budget, terms, 4, seed)?;
    let moment = rep.weighted_fourier_moment();
    let h = HorizonClassifier::new(2, Boundary::Fourier(rep.clone()))?;
    let sample = sample_noiseless(&h, m, seed.wrapping_add(1))?;
    let boundary = grid(res.max(1)).into_iter().map(|t| [t, rep.value(&[t])]).collect();
    let points: Vec<[f64; 3]> = (0..sample.len())
        .map(|i| {
            let x = sample.point(i);
            [x[0], x[1], f64::from(sample.labels()[i])]
        })
        .collect();
    let label_mean = points.iter().map(|p| p[2]).sum::<f64>() / points.len().max(1) as f64;
    to_json(&HorizonView {
        boundary,
        points,
        moment,
        label_mean,
    })
}

/// Profile of a bump-lattice member on `[0,1]` with every cell active and
/// signs drawn from `seed`.
pub fn bump_json(cells: usize, scale: f64, seed: u64, res: usize) -> Result<String> {
    let fam = BumpFamily::new(1, cells)?;
    let kappa = fam.kappa();
    let est = MomentEstimator::new(fam, (16 * cells).next_power_of_two())?;
    let active = BitSet::full(cells);
    let sel = select_signs(&est, &active, seed, f64::INFINITY, 1)?;
    let member = fam.member_from_bits(active, sel.negative.clone(), scale)?;
    let moment = estimate_bump_fourier_moment(&member, (16 * cells).next_power_of_two())?.value;
    let curve = grid(res.max(1)).into_iter().map(|t| [t, member.value(&[t])]).collect();
    let signs = (0..cells)
        .map(|c| if sel.negative.contains(c) { -1 } else { 1 })
        .collect();
    to_json(&BumpView {
        curve,
        signs,
        moment,
        unit_distance: scale * kappa / cells as f64,
    })
}

/// `ε_n` on `count` log-spaced sample sizes from 1 to `n_max`.
pub fn rate_json(c: f64, alpha: f64, beta: f64, n_max: f64, count: usize) -> Result<String> {
    if !(n_max >= 1.0) || count < 2 {
        return Err(LabError::Range(format!(
            "need n_max ≥ 1 and at least 2 points, got {n_max}, {count}"
        )));
    }
    let points = (0..count)
        .map(|k| {
            let n = n_max.powf(k as f64 / (count - 1) as f64);
            let eps = solve_eps_n(c, alpha, beta, n)?;
            debug_assert!((n * eps * eps - entropy_growth(c, alpha, beta, eps)).abs() <= 1e-6 * n * eps * eps);
            let reference = ((2.0 * n).ln().powf(beta) / n).powf(1.0 / (2.0 + alpha));
            Ok([n, eps, eps / reference])
        })
        .collect::<Result<Vec<_>>>()?;
    to_json(&RateView { points })
}

fn js(r: Result<String>) -> std::result::Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn horizon(seed: u64, budget: f64, terms: usize, m: usize, res: usize) -> std::result::Result<String, JsError> {
    js(horizon_json(seed, budget, terms, m, res))
}

#[wasm_bindgen]
pub fn bump(cells: usize, scale: f64, seed: u64, res: usize) -> std::result::Result<String, JsError> {
    js(bump_json(cells, scale, seed, res))
}

#[wasm_bindgen]
pub fn rates(c: f64, alpha: f64, beta: f64, n_max: f64, count: usize) -> std::result::Result<String, JsError> {
    js(rate_json(c, alpha, beta, n_max, count))
}
