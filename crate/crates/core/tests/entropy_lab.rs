use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use barron_lab::barron::{BarronFourierRep, BumpFamily};
use barron_lab::entropy::{
    cover_with_fourier_net, exhaustive_packing, fourier_net_plan, greedy_cover, greedy_packing, kappa_bounds,
    kappa_bounds_with, min_external_cover, min_internal_cover, nn_entropy_bound, packing_entropy_curve, rate_exponents,
    ratio_f64, sample_fourier_class_member, separated_family, solve_eps_n, CloudMetric, EntropyRateParams,
    FunctionCloud,
};
use barron_lab::field::{ConstField, Field, FnField};
use barron_lab::LabError;

fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> FunctionCloud {
    let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.random(), rng.random()]).collect();
    let m = (0..n * n)
        .map(|k| {
            let (a, b) = (pts[k / n], pts[k % n]);
            (a[0] - b[0]).abs() + (a[1] - b[1]).abs()
        })
        .collect();
    FunctionCloud::from_distances(n, m).unwrap()
}

#[test]
fn greedy_packing_examples() {
    let tri = FunctionCloud::from_distances(3, vec![0.0, 0.3, 0.3, 0.3, 0.0, 0.3, 0.3, 0.3, 0.0]).unwrap();
    assert_eq!(greedy_packing(&tri, 0.2).len(), 3);
    assert_eq!(greedy_packing(&tri, 0.4).len(), 1);
}

#[test]
fn greedy_packing_is_maximal_and_separated() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let cloud = random_cloud(&mut rng, 30);
        let eps = 0.3;
        let kept = greedy_packing(&cloud, eps);
        for (a, &i) in kept.iter().enumerate() {
            for &j in &kept[a + 1..] {
                assert!(cloud.distance(i, j) > eps);
            }
        }
        for i in 0..cloud.len() {
            assert!(kept.iter().any(|&j| cloud.distance(i, j) <= eps));
        }
    }
}

#[test]
fn packing_covering_sandwich() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..40 {
        let cloud = random_cloud(&mut rng, 12);
        let eps = rng.random_range(0.1..0.6);
        let m_eps = exhaustive_packing(&cloud, eps).unwrap().len();
        let m_2eps = exhaustive_packing(&cloud, 2.0 * eps).unwrap().len();
        for v in [
            greedy_cover(&cloud, eps).len(),
            min_internal_cover(&cloud, eps).unwrap().len(),
        ] {
            assert!(m_2eps <= v && v <= m_eps, "{m_2eps} ≤ {v} ≤ {m_eps}");
        }
    }
}

#[test]
fn external_net_relations() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let values: Vec<f64> = (0..10).map(|_| rng.random()).collect();
        let fields: Vec<Arc<dyn Field>> = values
            .iter()
            .map(|&v| Arc::new(ConstField { dim: 1, value: v }) as Arc<dyn Field>)
            .collect();
        let cloud = FunctionCloud::new(fields, CloudMetric::L1Grid { res: 8 }).unwrap();
        let candidates: Vec<Arc<dyn Field>> = (0..=40)
            .map(|k| {
                Arc::new(ConstField {
                    dim: 1,
                    value: k as f64 / 40.0,
                }) as Arc<dyn Field>
            })
            .collect();
        for eps in [0.1, 0.2, 0.3] {
            let m = exhaustive_packing(&cloud, eps).unwrap().len();
            let ext_half = min_external_cover(&cloud, &candidates, eps / 2.0).unwrap().len();
            let ext = min_external_cover(&cloud, &candidates, eps).unwrap().len();
            assert!(m <= ext_half, "M(ε) = {m} > M_ext(ε/2) = {ext_half}");
            assert!(ext <= m);
        }
    }
}

#[test]
fn entropy_curve_examples() {
    let single = FunctionCloud::from_distances(1, vec![0.0]).unwrap();
    for p in packing_entropy_curve(&single, &[1.0, 0.1, 0.01]).unwrap() {
        assert_eq!(p.ln_packing, 0.0);
    }
    let fam = BumpFamily::new(1, 16).unwrap();
    let members: Vec<_> = (0..5).map(|c| fam.member(&[(c, 1)], 1.0).unwrap()).collect();
    let delta = members[0].l1_distance(&members[1]).unwrap();
    let cloud = FunctionCloud::bumps(members).unwrap();
    let curve = packing_entropy_curve(&cloud, &[2.0 * delta, 1.01 * delta, 0.99 * delta, 0.5 * delta]).unwrap();
    let sizes: Vec<f64> = curve.iter().map(|p| p.ln_packing.exp().round()).collect();
    assert_eq!(sizes, vec![1.0, 1.0, 5.0, 5.0]);
    assert!(packing_entropy_curve(&cloud, &[0.1, 0.2]).is_err());
    assert!(packing_entropy_curve(&cloud, &[0.1, 0.0]).is_err());

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cloud = random_cloud(&mut rng, 40);
    let eps: Vec<f64> = (1..=20).rev().map(|k| k as f64 * 0.05).collect();
    let curve = packing_entropy_curve(&cloud, &eps).unwrap();
    assert!(curve.windows(2).all(|w| w[1].ln_packing >= w[0].ln_packing));
}

#[test]
fn fourier_plan_examples() {
    assert_eq!(fourier_net_plan(0.1, 1, 1.0).unwrap().truncation, 30);
    assert_eq!(fourier_net_plan(0.1, 2, 1.0).unwrap().lambda, 1.0);
    let p = fourier_net_plan(0.1, 1, 1.0).unwrap();
    assert_eq!((p.lambda, p.terms), (1.5, 21));
    assert!(matches!(fourier_net_plan(0.5, 1, 1.0), Err(LabError::Range(_))));
    assert!(matches!(fourier_net_plan(0.0, 1, 1.0), Err(LabError::Range(_))));
}

#[test]
fn fourier_net_trivial_cases() {
    let plan = fourier_net_plan(0.2, 1, 1.0).unwrap();
    let zero = BarronFourierRep::new(1, 1.0, []).unwrap();
    let r = cover_with_fourier_net(&plan, &[zero], 512).unwrap();
    assert_eq!(r.results[0].sup_distance, 0.0);
    for seed in 0..5 {
        let single = sample_fourier_class_member(1, 1.0, 1, 2, seed).unwrap();
        let r = cover_with_fourier_net(&plan, &[single], 512).unwrap();
        assert!(r.results[0].passed && r.results[0].kept_terms <= 3);
    }
}

#[test]
fn fourier_net_covers_half_budget_class() {
    let plan = fourier_net_plan(0.2, 1, 1.0).unwrap();
    let reps: Vec<_> = (0..50)
        .map(|i| sample_fourier_class_member(1, 1.0, 6, 2 * plan.truncation as u32, 500 + i).unwrap())
        .collect();
    let r = cover_with_fourier_net(&plan, &reps, 4096).unwrap();
    assert_eq!(r.pass_rate, 1.0);
}

#[test]
fn fourier_net_size_scaling() {
    let norm: Vec<f64> = [0.4, 0.2, 0.1]
        .iter()
        .map(|&e| {
            let p = fourier_net_plan(e, 1, 1.0).unwrap();
            p.ln_cardinality_bound / (e.powf(-1.0 / p.lambda) * (1.0 + (1.0 / e).ln()))
        })
        .collect();
    let spread = norm.iter().cloned().fold(0.0, f64::max) / norm.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread < 1.5, "{norm:?}");
}

#[test]
fn separated_family_examples() {
    let one = separated_family(10, 1, 3, 0, 10).unwrap();
    assert_eq!(one.achieved(), 1);
    let distinct = separated_family(16, 16, 0, 1, 10_000).unwrap();
    assert_eq!(distinct.achieved(), 16);
    let ok = (0..50u64)
        .filter(|&s| {
            let f = separated_family(64, 256, 4, s, 4096).unwrap();
            assert!(f.min_separation().is_none_or(|m| m > 4));
            f.achieved() >= 64
        })
        .count();
    assert!(ok >= 45, "{ok} of 50");
    assert!(separated_family(8, 4, 8, 0, 10).is_err());
}

#[test]
fn separation_is_exact_pairwise() {
    let f = separated_family(40, 64, 10, 3, 10_000).unwrap();
    for (i, a) in f.subsets.iter().enumerate() {
        for b in &f.subsets[i + 1..] {
            assert!(a.sym_diff_count(b) > 10);
        }
    }
}

/// `n ε² − V(ε)` located by a dense scan followed by bisection.
fn scan_root(c: f64, alpha: f64, beta: f64, n: f64) -> f64 {
    let v = |e: f64| c * (1.0f64 / e).max(1.0).powf(alpha) * (2.0 + 1.0 / e).ln().powf(beta);
    let g = |e: f64| n * e * e - v(e);
    let grid: Vec<f64> = (0..=4000).map(|k| 10f64.powf(-6.0 + 9.0 * k as f64 / 4000.0)).collect();
    let k = grid.windows(2).position(|w| g(w[0]) < 0.0 && g(w[1]) >= 0.0).unwrap();
    let (mut lo, mut hi) = (grid[k], grid[k + 1]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[test]
fn fixed_point_solver() {
    assert!((solve_eps_n(1.0, 1.0, 0.0, 8.0).unwrap() - 0.5).abs() <= 1e-10);
    let e1 = solve_eps_n(1.0, 1.0, 0.0, 1.0).unwrap();
    assert!((e1 - scan_root(1.0, 1.0, 0.0, 1.0)).abs() <= 1e-10 * e1);
    for (c, a, b) in [(1.0, 1.0, 1.0), (0.3, 1.5, 0.5), (2.0, 0.5, 2.0)] {
        let mut prev = f64::INFINITY;
        for n in [1.0, 10.0, 1e2, 1e3, 1e4, 1e5, 1e6] {
            let e = solve_eps_n(c, a, b, n).unwrap();
            let v = c * (1.0f64 / e).max(1.0).powf(a) * (2.0 + 1.0 / e).ln().powf(b);
            assert!((n * e * e - v).abs() / v < 1e-9);
            assert!((e - scan_root(c, a, b, n)).abs() <= 1e-9 * e);
            assert!(e < prev);
            prev = e;
        }
    }
    let ratios: Vec<f64> = [1e2, 1e3, 1e4, 1e5, 1e6]
        .iter()
        .map(|&n| solve_eps_n(1.0, 1.0, 1.0, n).unwrap() / ((2.0 * n).ln() / n).powf(1.0 / 3.0))
        .collect();
    let spread = ratios.iter().cloned().fold(0.0, f64::max) / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread < 3.0);
}

#[test]
fn rate_calculators() {
    let e = rate_exponents(2).unwrap();
    assert_eq!(ratio_f64(e.lower_exp), 0.6);
    assert_eq!(ratio_f64(e.log_exp_lower), 2.1);
    let large = ratio_f64(rate_exponents(10_000).unwrap().lower_exp);
    assert!((large - 1.0 / 3.0).abs() < 1e-3);
    assert!(rate_exponents(1).is_err());

    let p = EntropyRateParams::new(1.0, 1.0, 0.0, 0.0, 1.0).unwrap();
    let (k1, _) = kappa_bounds(&p, 4.0).unwrap();
    assert!((k1 - 0.5 / 8f64.ln()).abs() < 1e-12);
    for m in [2.0, 10.0, 1e3, 1e6] {
        for (a, b) in [(1.0, 1.0), (2.0, 1.0), (1.5, 0.5)] {
            let p = EntropyRateParams::new(a, b, 0.5, 1.0, 1.0).unwrap();
            let (k1, k2) = kappa_bounds(&p, m).unwrap();
            assert!(k1 <= k2);
        }
    }
    let b3 = EntropyRateParams::barron(3).unwrap();
    assert_eq!((b3.alpha, b3.beta, b3.a, b3.b), (1.0, 1.0, 0.0, 1.0));
    let (_, k2a) = kappa_bounds_with(&b3, 100.0, 1.0, 1.0).unwrap();
    let (_, k2b) = kappa_bounds_with(&b3, 400.0, 1.0, 1.0).unwrap();
    let log_part = (800f64.ln() / 200f64.ln()).powf(3.0 / 2.0);
    let exponent = ((k2b / k2a) / log_part).ln() / 4f64.ln();
    assert!((exponent + ratio_f64(rate_exponents(3).unwrap().lower_exp)).abs() < 1e-12);

    assert_eq!(nn_entropy_bound(1.0, 1, 1, 1.0).unwrap(), 10.0);
    let base = nn_entropy_bound(0.1, 2, 50, 3.0).unwrap();
    assert!(nn_entropy_bound(0.1, 2, 100, 3.0).unwrap() > 2.0 * base);
    assert!((nn_entropy_bound(0.1 / std::f64::consts::E, 2, 50, 3.0).unwrap() - base - 50.0).abs() < 1e-9);
    assert!(nn_entropy_bound(0.0, 1, 1, 1.0).is_err());
}

#[test]
fn l1_grid_metric_matches_closed_form() {
    let f: Arc<dyn Field> = Arc::new(FnField::new(1, |x: &[f64]| x[0]));
    let g: Arc<dyn Field> = Arc::new(ConstField { dim: 1, value: 0.5 });
    let cloud = FunctionCloud::new(vec![f, g], CloudMetric::L1Grid { res: 1000 }).unwrap();
    assert!((cloud.distance(0, 1) - 0.25).abs() < 1e-12);
}
