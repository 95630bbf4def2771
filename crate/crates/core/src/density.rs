//! Densities on `Λ = [0,1]^d × {0,1}` obtained by lifting `[0,1]`-valued
//! functions, and L¹ / Hellinger / Kullback–Leibler distances with respect
//! to `θ = λ ⊗ uniform{0,1}`.
//!
//! Every Λ-integral splits as `½ (∫ slice ι=0 + ∫ slice ι=1)`; each slice is
//! handled by an [`Integrator`] over `[0,1]^d`.

use crate::classifier::{disagreement, Classifier, DisagreementMethod};
use crate::error::{LabError, Result};
use crate::field::{for_each_tensor_point, Estimate, Field, Integrator};

/// `Ψ(x) = min{1, max{0, x}}`.
pub fn clamp_unit(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// A density on Λ, evaluated as the pair `(p(x,0), p(x,1))`.
pub trait LabelDensity: Send + Sync {
    fn dim(&self) -> usize;

    fn pair(&self, x: &[f64]) -> [f64; 2];

    fn tensor_pairs(&self, nodes: &[f64]) -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity(nodes.len().pow(self.dim() as u32));
        for_each_tensor_point(nodes, self.dim(), |x| out.push(self.pair(x)));
        out
    }
}

/// `p[f](x, 1) = 2Ψ(f(x))`, `p[f](x, 0) = 2 − 2Ψ(f(x))`.
#[derive(Clone, Debug)]
pub struct BinaryDensity<F> {
    source: F,
}

impl<F: Field> BinaryDensity<F> {
    pub fn source(&self) -> &F {
        &self.source
    }

    /// `p(x, label)`.
    pub fn density(&self, x: &[f64], label: u8) -> f64 {
        self.pair(x)[usize::from(label != 0)]
    }
}

fn lifted(v: f64) -> [f64; 2] {
    let psi = clamp_unit(v);
    [2.0 - 2.0 * psi, 2.0 * psi]
}

impl<F: Field> LabelDensity for BinaryDensity<F> {
    fn dim(&self) -> usize {
        self.source.dim()
    }

    fn pair(&self, x: &[f64]) -> [f64; 2] {
        lifted(self.source.value(x))
    }

    fn tensor_pairs(&self, nodes: &[f64]) -> Vec<[f64; 2]> {
        self.source.tensor_values(nodes).into_iter().map(lifted).collect()
    }
}

pub fn lift<F: Field>(f: F) -> BinaryDensity<F> {
    BinaryDensity { source: f }
}

/// Mean over `[0,1]^d` of `½ Σ_ι g(p(x,ι), q(x,ι))`, i.e. `∫_Λ g(p, q) dθ`.
fn lambda_integral(
    p: &dyn LabelDensity,
    q: &dyn LabelDensity,
    integrator: Integrator,
    g: impl Fn(f64, f64) -> f64,
) -> Result<Estimate> {
    if p.dim() != q.dim() {
        return Err(LabError::DimensionMismatch {
            expected: p.dim(),
            got: q.dim(),
        });
    }
    let a = PairField { inner: p, slot: 0 };
    let b = PairField { inner: p, slot: 1 };
    let c = PairField { inner: q, slot: 0 };
    let d = PairField { inner: q, slot: 1 };
    Ok(integrator.mean_of(p.dim(), &[&a, &b, &c, &d], |v| 0.5 * (g(v[0], v[2]) + g(v[1], v[3]))))
}

/// One label slice of a density, as a field.
struct PairField<'a> {
    inner: &'a dyn LabelDensity,
    slot: usize,
}

impl Field for PairField<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.inner.pair(x)[self.slot]
    }
    fn tensor_values(&self, nodes: &[f64]) -> Vec<f64> {
        self.inner
            .tensor_pairs(nodes)
            .into_iter()
            .map(|p| p[self.slot])
            .collect()
    }
}

/// `∫_Λ p dθ` (1 for every lifted density).
pub fn total_mass(p: &dyn LabelDensity, integrator: Integrator) -> Estimate {
    let a = PairField { inner: p, slot: 0 };
    let b = PairField { inner: p, slot: 1 };
    integrator.mean_of(p.dim(), &[&a, &b], |v| 0.5 * (v[0] + v[1]))
}

/// `∫_Λ |p − q| dθ`.
pub fn l1_distance(p: &dyn LabelDensity, q: &dyn LabelDensity, integrator: Integrator) -> Result<Estimate> {
    lambda_integral(p, q, integrator, |a, b| (a - b).abs())
}

/// `(∫_Λ (√p − √q)² dθ)^{1/2}`.
///
/// The Monte Carlo half-width is propagated to the square root by the delta
/// method (and left as the squared-scale width when the estimate is zero).
pub fn hellinger(p: &dyn LabelDensity, q: &dyn LabelDensity, integrator: Integrator) -> Result<Estimate> {
    let sq = hellinger_squared(p, q, integrator)?;
    let value = sq.value.max(0.0).sqrt();
    let half_width = sq
        .half_width
        .map(|hw| if value > 0.0 { hw / (2.0 * value) } else { hw.sqrt() });
    Ok(Estimate {
        value,
        half_width,
        integrator,
    })
}

/// `d_H²(p, q)`.
pub fn hellinger_squared(p: &dyn LabelDensity, q: &dyn LabelDensity, integrator: Integrator) -> Result<Estimate> {
    lambda_integral(p, q, integrator, |a, b| {
        let d = a.max(0.0).sqrt() - b.max(0.0).sqrt();
        d * d
    })
}

/// `D(p‖q) = ∫_Λ p ln(p/q) dθ` with `0 · ln(0/q) = 0`; `+∞` as soon as a
/// node has `p > 0` and `q ≤ 0`.
pub fn kl_divergence(p: &dyn LabelDensity, q: &dyn LabelDensity, integrator: Integrator) -> Result<Estimate> {
    lambda_integral(p, q, integrator, |a, b| {
        if a <= 0.0 {
            0.0
        } else if b <= 0.0 {
            f64::INFINITY
        } else {
            a * (a / b).ln()
        }
    })
    .map(|mut e| {
        if e.value.is_infinite() || e.value.is_nan() {
            e.value = f64::INFINITY;
            e.half_width = None;
        }
        e
    })
}

/// `d_H(p[h1], p[h2]) = √(2 · λ{h1 ≠ h2})` for binary classifiers, without
/// integrating over Λ.
pub fn hellinger_from_classifiers(h1: &dyn Classifier, h2: &dyn Classifier, method: DisagreementMethod) -> Result<f64> {
    let dis = disagreement(h1, h2, method)?;
    Ok((2.0 * dis.value).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barron::{sample_boundary_rep, BarronFourierRep};
    use crate::classifier::{Boundary, Complement, HorizonClassifier, Indicator};
    use crate::field::ConstField;

    const GRID: Integrator = Integrator::Grid { res: 64 };

    fn horizon(seed: u64) -> HorizonClassifier {
        let rep = sample_boundary_rep(1, 2.0, 4, 4, seed).unwrap();
        HorizonClassifier::new(2, Boundary::Fourier(rep)).unwrap()
    }

    #[test]
    fn lift_examples() {
        let one = lift(ConstField { dim: 2, value: 1.0 });
        assert_eq!(one.pair(&[0.1, 0.2]), [0.0, 2.0]);
        let half = lift(ConstField { dim: 2, value: 0.5 });
        assert_eq!(half.pair(&[0.1, 0.2]), [1.0, 1.0]);
        let two = lift(ConstField { dim: 2, value: 2.0 });
        assert_eq!(two.density(&[0.3, 0.3], 1), 2.0);
        let neg = lift(ConstField { dim: 1, value: -3.0 });
        assert_eq!(neg.pair(&[0.3]), [2.0, 0.0]);
    }

    #[test]
    fn distance_examples() {
        let one = lift(ConstField { dim: 2, value: 1.0 });
        let zero = lift(ConstField { dim: 2, value: 0.0 });
        assert_eq!(l1_distance(&one, &one, GRID).unwrap().value, 0.0);
        assert!((l1_distance(&one, &zero, GRID).unwrap().value - 2.0).abs() < 1e-12);
        assert_eq!(hellinger(&one, &one, GRID).unwrap().value, 0.0);
        assert_eq!(kl_divergence(&one, &one, GRID).unwrap().value, 0.0);
        assert_eq!(kl_divergence(&one, &zero, GRID).unwrap().value, f64::INFINITY);
    }

    #[test]
    fn hellinger_of_opposite_horizons() {
        let b0 =
            HorizonClassifier::new(2, Boundary::Fourier(BarronFourierRep::constant(1, 1.0, 0.0).unwrap())).unwrap();
        let b1 =
            HorizonClassifier::new(2, Boundary::Fourier(BarronFourierRep::constant(1, 1.0, 1.0).unwrap())).unwrap();
        // b ≡ 1 is label 1 only on the null set x_d = 1
        let d = hellinger(&lift(Indicator(&b0)), &lift(Indicator(&b1)), GRID)
            .unwrap()
            .value;
        assert!((d - 2f64.sqrt()).abs() < 1e-12);
        let direct = hellinger_from_classifiers(&b0, &b1, DisagreementMethod::ExactHorizon { res: 16 }).unwrap();
        assert!((direct - 2f64.sqrt()).abs() < 1e-12);
        let comp = Complement(&b0);
        assert!(
            (hellinger_from_classifiers(&b0, &comp, DisagreementMethod::Grid { res: 16 }).unwrap() - 2f64.sqrt()).abs()
                < 1e-12
        );
        assert_eq!(
            hellinger_from_classifiers(&b0, &b0, DisagreementMethod::Grid { res: 16 }).unwrap(),
            0.0
        );
    }

    #[test]
    fn lifted_mass_is_one() {
        for seed in 0..5 {
            let h = horizon(seed);
            let rep = sample_boundary_rep(2, 3.0, 6, 3, seed).unwrap();
            for est in [total_mass(&lift(Indicator(&h)), GRID), total_mass(&lift(&rep), GRID)] {
                assert!((est.value - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn grid_and_mc_hellinger_agree() {
        let (a, b) = (horizon(1), horizon(2));
        let (p, q) = (lift(Indicator(&a)), lift(Indicator(&b)));
        let g = hellinger_squared(&p, &q, Integrator::Grid { res: 512 }).unwrap();
        let m = hellinger_squared(
            &p,
            &q,
            Integrator::MonteCarlo {
                samples: 200_000,
                seed: 3,
            },
        )
        .unwrap();
        assert!((g.value - m.value).abs() <= 3.0 * m.half_width.unwrap(), "{g:?} {m:?}");
        let hm = hellinger(&p, &q, Integrator::MonteCarlo { samples: 1000, seed: 3 }).unwrap();
        assert!(hm.half_width.unwrap() > 0.0);
    }

    #[test]
    fn kl_dominates_squared_hellinger() {
        for seed in 0..10 {
            let f = sample_boundary_rep(2, 2.0, 5, 3, seed).unwrap();
            let g = sample_boundary_rep(2, 2.0, 5, 3, seed + 100).unwrap();
            let (p, q) = (lift(&f), lift(&g));
            let kl = kl_divergence(&p, &q, GRID).unwrap().value;
            let h2 = hellinger_squared(&p, &q, GRID).unwrap().value;
            assert!(h2 <= kl + 1e-8, "{h2} > {kl}");
        }
    }
}
