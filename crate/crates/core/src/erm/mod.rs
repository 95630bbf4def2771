//! Hinge-loss empirical risk minimization over range-constrained
//! three-hidden-layer ReLU networks, with plug-in classification.

mod net;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use net::{hinge, LayerDocument, NetDocument, Objective, ReluNet};

use crate::classifier::{disagreement, Classifier, DisagreementEstimate, DisagreementMethod, Indicator, LabeledSample};
use crate::error::{LabError, Result};
use crate::field::{Estimate, Field, Integrator};
use crate::num::ceil_tol;
use crate::par::map_indexed;

/// Architecture sizes for sample size `m`.
///
/// With `Ñ = ⌈144 τ² d⁴ M² R² m^{2/3}⌉`, the unscaled sizes are
/// `N = ⌈M(Ñ + 4d + 2)⌉`, `W = ⌈54 d² M Ñ⌉` and
/// `B = ⌈5d(1 + τ√d R) + 2√Ñ⌉`. A scale factor `c` replaces `Ñ`, `N` and
/// `W` by `max{1, ⌈c · value⌉}`; `B` is then computed from the scaled `Ñ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchitecturePlan {
    pub m: usize,
    pub d: usize,
    pub big_m: usize,
    pub r: f64,
    pub tau: f64,
    pub scale_factor: f64,
    pub n_tilde: u64,
    /// Neurons per hidden layer.
    pub width: u64,
    /// Budget of nonzero weights and biases.
    pub weights: u64,
    pub bound: u64,
}

pub fn plan_architecture(
    m: usize,
    d: usize,
    big_m: usize,
    r: f64,
    tau: f64,
    scale_factor: f64,
) -> Result<ArchitecturePlan> {
    if m == 0 || d < 2 || big_m == 0 || !(r >= 1.0) || !(tau >= 1.0) {
        return Err(LabError::Range(format!(
            "need m ≥ 1, d ≥ 2, M ≥ 1, R ≥ 1, τ ≥ 1; got m = {m}, d = {d}, M = {big_m}, R = {r}, τ = {tau}"
        )));
    }
    if !(scale_factor > 0.0 && scale_factor <= 1.0) {
        return Err(LabError::Range(format!(
            "scale factor {scale_factor} must lie in (0, 1]"
        )));
    }
    let (df, mf) = (d as f64, big_m as f64);
    let n_tilde = ceil_tol(144.0 * tau * tau * df.powi(4) * mf * mf * r * r * (m as f64).powf(2.0 / 3.0));
    let width = ceil_tol(mf * (n_tilde + 4.0 * df + 2.0));
    let weights = ceil_tol(54.0 * df * df * mf * n_tilde);
    let scaled = |v: f64| {
        if scale_factor == 1.0 {
            v
        } else {
            ceil_tol(scale_factor * v).max(1.0)
        }
    };
    let n_tilde = scaled(n_tilde);
    let bound = ceil_tol(5.0 * df * (1.0 + tau * df.sqrt() * r) + 2.0 * n_tilde.sqrt());
    Ok(ArchitecturePlan {
        m,
        d,
        big_m,
        r,
        tau,
        scale_factor,
        n_tilde: n_tilde as u64,
        width: scaled(width) as u64,
        weights: scaled(weights) as u64,
        bound: bound as u64,
    })
}

impl ArchitecturePlan {
    pub fn widths(&self) -> [usize; 3] {
        [self.width as usize; 3]
    }
}

/// First-order training settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Random restarts; the zero network is always added as one more.
    pub restarts: usize,
    pub epochs: usize,
    /// Adam step size at epoch 0.
    pub step_size: f64,
    /// Step size at epoch `t` is `step_size / (1 + decay · t)`.
    pub decay: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Project onto the constraint set every this many steps (and at the end
    /// of every epoch).
    pub projection_every: usize,
    pub objective: Objective,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            restarts: 2,
            epochs: 60,
            step_size: 0.01,
            decay: 0.02,
            batch_size: 32,
            seed: 0,
            projection_every: 10,
            objective: Objective::Raw,
        }
    }
}

/// `(1/m) Σ φ((2y_i − 1)(2 f(x_i) − 1))`.
pub fn empirical_hinge_risk(f: &dyn Field, sample: &LabeledSample) -> Result<f64> {
    if f.dim() != sample.dim() {
        return Err(LabError::DimensionMismatch {
            expected: sample.dim(),
            got: f.dim(),
        });
    }
    let total: f64 = (0..sample.len())
        .map(|i| hinge((2.0 * f64::from(sample.labels()[i]) - 1.0) * (2.0 * f.value(sample.point(i)) - 1.0)))
        .sum();
    Ok(total / sample.len().max(1) as f64)
}

/// `E_{X∼λ} φ((2h(X) − 1)(2f(X) − 1))`.
pub fn population_hinge_risk(f: &dyn Field, h: &dyn Classifier, integrator: Integrator) -> Result<Estimate> {
    if f.dim() != h.dim() {
        return Err(LabError::DimensionMismatch {
            expected: h.dim(),
            got: f.dim(),
        });
    }
    let ind = Indicator(h);
    Ok(integrator.mean_of(h.dim(), &[f, &ind], |v| hinge((2.0 * v[1] - 1.0) * (2.0 * v[0] - 1.0))))
}

/// The plug-in classifier `1{f ≥ 1/2}`.
pub struct Plugin<F>(pub F);

impl<F: Field> Classifier for Plugin<F> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn classify(&self, x: &[f64]) -> u8 {
        plugin_label(self.0.value(x))
    }
}

fn plugin_label(v: f64) -> u8 {
    u8::from(v >= 0.5)
}

/// `1` iff `net(x) ≥ 1/2`.
pub fn plugin_classify(net: &ReluNet, x: &[f64]) -> u8 {
    plugin_label(net.output(x))
}

/// Monte Carlo estimate of `λ{x : plugin(net)(x) ≠ h(x)}` with a binomial
/// 95% half-width.
pub fn misclassification_error(
    net: &ReluNet,
    h: &dyn Classifier,
    n_mc: usize,
    seed: u64,
) -> Result<DisagreementEstimate> {
    if n_mc == 0 {
        return Err(LabError::Range("n_mc must be at least 1".into()));
    }
    disagreement(&Plugin(net), h, DisagreementMethod::MonteCarlo { samples: n_mc, seed })
}

/// Per-restart outcome.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartOutcome {
    /// 0 for the zero network, `k ≥ 1` for the k-th random start.
    pub restart: usize,
    pub risk: f64,
    pub epochs_run: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainResult {
    pub net: ReluNet,
    pub achieved_risk: f64,
    pub restarts: Vec<RestartOutcome>,
}

/// Multi-restart projected Adam on the hinge objective.
///
/// The returned net is the restart with the lowest empirical hinge risk
/// (lowest restart index on ties), and `achieved_risk` is recomputed on it.
pub fn train_erm(sample: &LabeledSample, plan: &ArchitecturePlan, cfg: &TrainConfig) -> Result<TrainResult> {
    if sample.is_empty() {
        return Err(LabError::Range("training sample is empty".into()));
    }
    if sample.dim() != plan.d {
        return Err(LabError::DimensionMismatch {
            expected: plan.d,
            got: sample.dim(),
        });
    }
    if cfg.restarts == 0 || cfg.batch_size == 0 || cfg.projection_every == 0 || !(cfg.step_size > 0.0) {
        return Err(LabError::Config(
            "restarts, batch size, projection cadence and step size must be positive".into(),
        ));
    }
    let budget = usize::try_from(plan.weights).unwrap_or(usize::MAX);
    let zero = ReluNet::zeros(plan.d, plan.widths(), plan.bound as f64, budget)?;
    let runs = map_indexed(cfg.restarts + 1, |k| -> Result<(ReluNet, RestartOutcome)> {
        if k == 0 {
            let risk = empirical_hinge_risk(&zero, sample)?;
            return Ok((
                zero.clone(),
                RestartOutcome {
                    restart: 0,
                    risk,
                    epochs_run: 0,
                },
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(k as u64);
        let mut net = ReluNet::random(plan.d, plan.widths(), plan.bound as f64, budget, &mut rng)?;
        net.project();
        run_restart(net, sample, cfg, &mut rng, k)
    });
    let mut outcomes = Vec::with_capacity(runs.len());
    let mut best: Option<(ReluNet, f64)> = None;
    for run in runs {
        let (net, out) = run?;
        if best.as_ref().is_none_or(|(_, r)| out.risk < *r) {
            best = Some((net, out.risk));
        }
        outcomes.push(out);
    }
    let (net, _) = best.expect("the zero network always runs");
    let achieved_risk = empirical_hinge_risk(&net, sample)?;
    Ok(TrainResult {
        net,
        achieved_risk,
        restarts: outcomes,
    })
}

fn run_restart(
    mut net: ReluNet,
    sample: &LabeledSample,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
    k: usize,
) -> Result<(ReluNet, RestartOutcome)> {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const ADAM_EPS: f64 = 1e-8;
    let p = net.num_params();
    let (mut m1, mut m2, mut grad) = (vec![0.0; p], vec![0.0; p], vec![0.0; p]);
    let mut order: Vec<usize> = (0..sample.len()).collect();
    let mut best = net.clone();
    let mut best_risk = checked_risk(&net, sample)?;
    let mut step = 0usize;
    let mut epochs_run = 0;
    for epoch in 0..cfg.epochs {
        if best_risk == 0.0 {
            break;
        }
        epochs_run = epoch + 1;
        let lr = cfg.step_size / (1.0 + cfg.decay * epoch as f64);
        order.shuffle(rng);
        for batch in order.chunks(cfg.batch_size) {
            net.loss_and_gradient(sample, Some(batch), cfg.objective, &mut grad);
            step += 1;
            let (c1, c2) = (1.0 - BETA1.powi(step as i32), 1.0 - BETA2.powi(step as i32));
            for (((w, g), a), b) in net
                .params_mut()
                .iter_mut()
                .zip(&grad)
                .zip(m1.iter_mut())
                .zip(m2.iter_mut())
            {
                *a = BETA1 * *a + (1.0 - BETA1) * g;
                *b = BETA2 * *b + (1.0 - BETA2) * g * g;
                *w -= lr * (*a / c1) / ((*b / c2).sqrt() + ADAM_EPS);
            }
            if step.is_multiple_of(cfg.projection_every) {
                project_checked(&mut net);
            }
        }
        project_checked(&mut net);
        let risk = checked_risk(&net, sample)?;
        if risk < best_risk {
            best_risk = risk;
            best = net.clone();
        }
    }
    Ok((
        best,
        RestartOutcome {
            restart: k,
            risk: best_risk,
            epochs_run,
        },
    ))
}

fn project_checked(net: &mut ReluNet) {
    net.project();
    assert!(net.is_feasible(), "projection left the constraint set");
}

fn checked_risk(net: &ReluNet, sample: &LabeledSample) -> Result<f64> {
    let risk = empirical_hinge_risk(net, sample)?;
    if !(risk <= 2.0 + 1e-6) {
        return Err(LabError::Divergence(format!("empirical hinge risk {risk} exceeds 2")));
    }
    Ok(risk)
}

/// Serialized training outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedNetDocument {
    pub plan: ArchitecturePlan,
    pub layer_shapes: Vec<[usize; 2]>,
    pub net: NetDocument,
    pub achieved_risk: f64,
    pub seed: u64,
}

impl TrainedNetDocument {
    pub fn new(plan: &ArchitecturePlan, net: &ReluNet, achieved_risk: f64, seed: u64) -> Self {
        TrainedNetDocument {
            plan: plan.clone(),
            layer_shapes: net.layer_shapes().iter().map(|&(r, c)| [r, c]).collect(),
            net: net.to_document(),
            achieved_risk,
            seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barron::BarronFourierRep;
    use crate::classifier::{sample_noiseless, Boundary, ConstClassifier, HorizonClassifier};
    use crate::field::ConstField;

    #[test]
    fn plan_examples() {
        let p = plan_architecture(1000, 2, 1, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(
            (p.n_tilde, p.width, p.weights, p.bound),
            (230_400, 230_410, 49_766_400, 985)
        );
        let s = plan_architecture(1000, 2, 1, 1.0, 1.0, 1e-3).unwrap();
        assert_eq!((s.n_tilde, s.width, s.weights), (231, 231, 49_767));
        assert_eq!(
            s.bound,
            (10.0 * (1.0 + 2f64.sqrt()) + 2.0 * 231f64.sqrt()).ceil() as u64
        );
        let q = plan_architecture(4000, 2, 1, 1.0, 1.0, 1.0).unwrap();
        let ratio = q.n_tilde as f64 / p.n_tilde as f64;
        assert!((ratio - 4f64.powf(2.0 / 3.0)).abs() < 1e-5);
        assert!(plan_architecture(10, 1, 1, 1.0, 1.0, 1.0).is_err());
        assert!(plan_architecture(10, 2, 1, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn hinge_risk_examples() {
        let pts = vec![0.1, 0.2, 0.7, 0.4];
        let ones = LabeledSample::new(2, pts.clone(), vec![1, 1]).unwrap();
        let zeros = LabeledSample::new(2, pts, vec![0, 0]).unwrap();
        let one = ConstField { dim: 2, value: 1.0 };
        let half = ConstField { dim: 2, value: 0.5 };
        assert_eq!(empirical_hinge_risk(&one, &ones).unwrap(), 0.0);
        assert_eq!(empirical_hinge_risk(&half, &ones).unwrap(), 1.0);
        assert_eq!(empirical_hinge_risk(&one, &zeros).unwrap(), 2.0);
    }

    #[test]
    fn population_risk_examples() {
        let h =
            HorizonClassifier::new(2, Boundary::Fourier(BarronFourierRep::constant(1, 1.0, 0.25).unwrap())).unwrap();
        let g = Integrator::Grid { res: 64 };
        let r = population_hinge_risk(&Indicator(&h), &h, g).unwrap().value;
        assert_eq!(r, 0.0);
        // μ₊ = 3/4
        let one = ConstField { dim: 2, value: 1.0 };
        assert!((population_hinge_risk(&one, &h, g).unwrap().value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn plugin_ties_go_to_one() {
        let mut net = ReluNet::zeros(2, [1, 1, 1], 1.0, 100).unwrap();
        let last = net.num_params() - 1;
        for (v, want) in [(0.5, 1), (0.49, 0), (1.0, 1), (3.0, 1)] {
            net.params_mut()[last] = v;
            assert_eq!(plugin_classify(&net, &[0.2, 0.2]), want);
        }
        net.params_mut()[last] = 1.0;
        let one = ConstClassifier { dim: 2, label: 1 };
        let zero = ConstClassifier { dim: 2, label: 0 };
        assert_eq!(misclassification_error(&net, &one, 1000, 1).unwrap().value, 0.0);
        assert_eq!(misclassification_error(&net, &zero, 1000, 1).unwrap().value, 1.0);
    }

    #[test]
    fn all_ones_sample_is_learned() {
        let h = ConstClassifier { dim: 2, label: 1 };
        let s = sample_noiseless(&h, 64, 3).unwrap();
        let plan = plan_architecture(64, 2, 1, 1.0, 1.0, 1e-4).unwrap();
        let res = train_erm(&s, &plan, &TrainConfig::default()).unwrap();
        assert!(res.achieved_risk <= 1e-3, "{}", res.achieved_risk);
        assert_eq!(
            res.achieved_risk,
            res.restarts.iter().map(|o| o.risk).fold(f64::INFINITY, f64::min)
        );
    }

    #[test]
    fn training_is_deterministic_and_feasible() {
        let h = HorizonClassifier::new(2, Boundary::Fourier(BarronFourierRep::constant(1, 1.0, 0.5).unwrap())).unwrap();
        let s = sample_noiseless(&h, 128, 4).unwrap();
        let plan = plan_architecture(128, 2, 1, 1.0, 1.0, 1e-4).unwrap();
        let cfg = TrainConfig {
            epochs: 20,
            ..TrainConfig::default()
        };
        let a = train_erm(&s, &plan, &cfg).unwrap();
        let b = train_erm(&s, &plan, &cfg).unwrap();
        assert_eq!(a.net, b.net);
        assert!(a.net.is_feasible());
        let zero_risk = a.restarts[0].risk;
        assert!(a.achieved_risk <= zero_risk);
    }
}
