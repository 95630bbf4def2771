use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use barron_lab::barron::{
    estimate_bump_fourier_moment, sample_boundary_rep, select_signs, BarronFourierRep, BumpFamily, MomentEstimator,
};
use barron_lab::bits::BitSet;
use barron_lab::field::{composite_gauss_legendre, tensor_quadrature, Field};
use barron_lab::LabError;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[test]
fn moment_of_mirrored_pair() {
    let rep = BarronFourierRep::new(2, 2.0, [(vec![3, 4], c(0.1)), (vec![-3, -4], c(0.1))]).unwrap();
    assert!((rep.weighted_fourier_moment() - 1.2).abs() < 1e-15);
    assert_eq!(
        BarronFourierRep::new(1, 1.0, []).unwrap().weighted_fourier_moment(),
        0.0
    );
    assert_eq!(
        BarronFourierRep::constant(3, 1.0, 0.5)
            .unwrap()
            .weighted_fourier_moment(),
        0.5
    );
}

#[test]
fn cosine_pair_and_constant() {
    let rep = BarronFourierRep::new(2, 1.0, [(vec![1, 0], c(0.25)), (vec![-1, 0], c(0.25))]).unwrap();
    assert!((rep.eval(&[0.0, 0.7]).unwrap() - 0.5).abs() < 1e-15);
    assert!((rep.eval(&[1.0, 0.2]).unwrap() + 0.5).abs() < 1e-15);
    let k = BarronFourierRep::constant(2, 1.0, 0.3).unwrap();
    assert_eq!(k.eval(&[0.9, 0.1]).unwrap(), 0.3);
    assert!(matches!(rep.eval(&[1.5, 0.0]), Err(LabError::Domain { .. })));
}

/// `Re Σ c_n exp(iπ⟨n, x⟩)` summed term by term.
fn naive(rep: &BarronFourierRep, x: &[f64]) -> Complex64 {
    rep.coeffs()
        .iter()
        .map(|(n, c)| {
            let phase: f64 = n.iter().zip(x).map(|(&k, &t)| k as f64 * t).sum();
            c * Complex64::from_polar(1.0, std::f64::consts::PI * phase)
        })
        .sum()
}

#[test]
fn twenty_term_rep_matches_direct_summation() {
    let rep = sample_boundary_rep(3, 8.0, 20, 5, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let x: Vec<f64> = (0..3).map(|_| rng.random()).collect();
        let v = naive(&rep, &x);
        assert!((rep.eval(&x).unwrap() - v.re).abs() < 1e-12);
        assert!(v.im.abs() < 1e-10);
    }
}

#[test]
fn sampler_range_on_grid() {
    for (dim, seed) in [(1, 0), (2, 5), (3, 9)] {
        let rep = sample_boundary_rep(dim, 1.5, 6, 4, seed).unwrap();
        assert!(rep.weighted_fourier_moment() <= 1.5);
        let nodes: Vec<f64> = (0..33).map(|i| i as f64 / 32.0).collect();
        for v in rep.tensor_values(&nodes) {
            assert!((0.0..=1.0).contains(&v), "value {v}");
        }
    }
    let zero = sample_boundary_rep(2, 1.0, 0, 4, 1).unwrap();
    assert_eq!(zero.eval(&[0.3, 0.4]).unwrap(), 0.5);
    assert_eq!(
        sample_boundary_rep(2, 1.0, 5, 4, 42).unwrap(),
        sample_boundary_rep(2, 1.0, 5, 4, 42).unwrap()
    );
    assert!(matches!(
        sample_boundary_rep(2, 0.4, 3, 4, 1),
        Err(LabError::Infeasible(_))
    ));
}

#[test]
fn bump_distances_match_quadrature() {
    let fam = BumpFamily::new(1, 16).unwrap();
    let (x, w) = composite_gauss_legendre(0.0, 1.0, 16 * 8, 16);
    let l1 = |a: &dyn Field, b: &dyn Field| tensor_quadrature(1, &x, &w, |p| (a.value(p) - b.value(p)).abs());
    let s = 0.7;
    let empty = fam.member(&[], s).unwrap();
    let one = fam.member(&[(3, 1)], s).unwrap();
    let flipped = fam.member(&[(3, -1)], s).unwrap();
    let unit = s * fam.kappa() / 16.0;
    assert_eq!(empty.l1_distance(&empty).unwrap(), 0.0);
    let d1 = one.l1_distance(&empty).unwrap();
    let d2 = one.l1_distance(&flipped).unwrap();
    assert!((d1 - unit).abs() < 1e-15 && (d2 - 2.0 * unit).abs() < 1e-15);
    assert!((l1(&one, &empty) - d1).abs() / d1 < 1e-6);
    assert!((l1(&one, &flipped) - d2).abs() / d2 < 1e-6);
    assert!(matches!(fam.member(&[(16, 1)], s), Err(LabError::Index(_))));
}

#[test]
fn moment_is_linear_in_scale_and_zero_at_zero() {
    let fam = BumpFamily::new(1, 16).unwrap();
    let m = fam.member(&[(0, 1), (5, -1), (9, 1)], 1.0).unwrap();
    let base = estimate_bump_fourier_moment(&m, 256).unwrap();
    let scaled = estimate_bump_fourier_moment(&m.with_scale(3.0), 256).unwrap();
    assert!((scaled.value - 3.0 * base.value).abs() <= 1e-12 * scaled.value);
    assert_eq!(
        estimate_bump_fourier_moment(&m.with_scale(0.0), 256).unwrap().value,
        0.0
    );
    assert!(base.refinement_delta >= 0.0);
}

#[test]
fn moment_grows_with_lattice_power() {
    let mut pts = Vec::new();
    for n in [16usize, 32, 64] {
        let fam = BumpFamily::new(1, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let cells: Vec<(usize, i8)> = (0..n).map(|c| (c, if rng.random() { 1 } else { -1 })).collect();
        let est =
            estimate_bump_fourier_moment(&fam.member(&cells, 1.0).unwrap(), (16 * n).next_power_of_two()).unwrap();
        pts.push(((n as f64).ln(), est.value.ln()));
    }
    let slope = (pts[2].1 - pts[0].1) / (pts[2].0 - pts[0].0);
    assert!((slope - 1.5).abs() <= 0.35, "slope {slope}");
}

#[test]
fn sign_selection_calibration() {
    let fam = BumpFamily::new(1, 16).unwrap();
    let est = MomentEstimator::new(fam, 256).unwrap();
    let active = BitSet::full(16);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mean = (0..32)
        .map(|_| {
            let neg = BitSet::from_indices(16, (0..16).filter(|_| rng.random::<bool>())).unwrap();
            est.unscaled_moment(&active, &neg)
        })
        .sum::<f64>()
        / 32.0;
    let quick = (0..100u64)
        .filter(|&s| select_signs(&est, &active, s, 2.0 * mean, 8).is_ok())
        .count();
    assert!(quick >= 95, "{quick} of 100 runs accepted within 8 attempts");

    let none = select_signs(&est, &BitSet::new(16), 3, f64::INFINITY, 4).unwrap();
    assert_eq!((none.attempts, none.negative.count()), (1, 0));
    let a = select_signs(&est, &active, 3, f64::INFINITY, 4).unwrap();
    assert_eq!(a, select_signs(&est, &active, 3, f64::INFINITY, 4).unwrap());
    assert!(matches!(
        select_signs(&est, &active, 3, 1e-9, 3),
        Err(LabError::Exhausted { .. })
    ));
}

#[test]
fn json_document_round_trip() {
    let rep = sample_boundary_rep(2, 1.0, 3, 3, 8).unwrap();
    assert_eq!(BarronFourierRep::from_json(&rep.to_json()).unwrap(), rep);
    assert!(BarronFourierRep::from_json(r#"{"dim":1,"budget":0.1,"coeffs":[[0,0.5,0.0]]}"#).is_err());
}
