//! Three-hidden-layer ReLU networks with an output clamp to `[0, 1]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::LabeledSample;
use crate::error::{LabError, Result};
use crate::field::Field;

/// Position of one affine layer inside the flat parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct LayerSpan {
    rows: usize,
    cols: usize,
    weights: usize,
    biases: usize,
}

/// `x ↦ min{1, max{0, A₄ ρ(A₃ ρ(A₂ ρ(A₁ x)))}}` with affine `A_i` and ReLU `ρ`.
///
/// All weights and biases live in one flat vector, layer by layer, each
/// layer as a row-major weight matrix followed by its bias vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ReluNet {
    dim: usize,
    widths: [usize; 3],
    params: Vec<f64>,
    spans: [LayerSpan; 4],
    bound: f64,
    budget: usize,
}

/// Which hinge objective a gradient refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// `φ((2y−1)(2 clamp(raw) − 1))`, the empirical hinge risk of the net.
    Clamped,
    /// `φ((2y−1)(2 raw − 1))`; an upper bound on the clamped loss whose
    /// gradient does not vanish when the clamp saturates on the wrong side.
    Raw,
}

/// `φ(t) = max{0, 1 − t}`.
pub fn hinge(t: f64) -> f64 {
    (1.0 - t).max(0.0)
}

impl ReluNet {
    /// The zero network with the given architecture and constraints.
    pub fn zeros(dim: usize, widths: [usize; 3], bound: f64, budget: usize) -> Result<Self> {
        if dim == 0 || widths.contains(&0) {
            return Err(LabError::Range(format!(
                "input dimension and widths must be positive, got {dim}, {widths:?}"
            )));
        }
        if !(bound > 0.0) {
            return Err(LabError::Range(format!("weight bound must be positive, got {bound}")));
        }
        let shape = [
            (widths[0], dim),
            (widths[1], widths[0]),
            (widths[2], widths[1]),
            (1, widths[2]),
        ];
        let mut offset = 0;
        let spans = shape.map(|(rows, cols)| {
            let s = LayerSpan {
                rows,
                cols,
                weights: offset,
                biases: offset + rows * cols,
            };
            offset += rows * cols + rows;
            s
        });
        Ok(ReluNet {
            dim,
            widths,
            params: vec![0.0; offset],
            spans,
            bound,
            budget,
        })
    }

    /// Uniform initialization on `[−B₀, B₀]` per layer with
    /// `B₀ = min{B, fan_in^{-1/2}}`, weights and biases alike.
    pub fn random(dim: usize, widths: [usize; 3], bound: f64, budget: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        let mut net = Self::zeros(dim, widths, bound, budget)?;
        for s in net.spans {
            let b0 = bound.min(1.0 / (s.cols as f64).sqrt());
            for p in &mut net.params[s.weights..s.biases + s.rows] {
                *p = rng.random_range(-b0..=b0);
            }
        }
        Ok(net)
    }

    pub fn seeded(dim: usize, widths: [usize; 3], bound: f64, budget: usize, seed: u64) -> Result<Self> {
        Self::random(dim, widths, bound, budget, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn input_dim(&self) -> usize {
        self.dim
    }

    pub fn widths(&self) -> [usize; 3] {
        self.widths
    }

    pub fn weight_bound(&self) -> f64 {
        self.bound
    }

    pub fn sparsity_budget(&self) -> usize {
        self.budget
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn nonzero_count(&self) -> usize {
        self.params.iter().filter(|p| **p != 0.0).count()
    }

    pub fn max_abs(&self) -> f64 {
        self.params.iter().fold(0.0, |m, p| m.max(p.abs()))
    }

    pub fn is_feasible(&self) -> bool {
        self.max_abs() <= self.bound && self.nonzero_count() <= self.budget
    }

    /// `(rows, cols)` of the four weight matrices.
    pub fn layer_shapes(&self) -> [(usize, usize); 4] {
        self.spans.map(|s| (s.rows, s.cols))
    }

    /// Weight matrix `k` (row-major) and bias vector `k`.
    pub fn layer(&self, k: usize) -> (&[f64], &[f64]) {
        let s = self.spans[k];
        (
            &self.params[s.weights..s.biases],
            &self.params[s.biases..s.biases + s.rows],
        )
    }

    /// Clip every parameter to `[−B, B]`, then zero all but the `W`
    /// largest in magnitude (earlier parameters win ties).
    pub fn project(&mut self) {
        let b = self.bound;
        for p in self.params.iter_mut() {
            *p = p.clamp(-b, b);
        }
        if self.nonzero_count() > self.budget {
            let mut order: Vec<usize> = (0..self.params.len()).collect();
            order.sort_by(|&i, &j| self.params[j].abs().total_cmp(&self.params[i].abs()).then(i.cmp(&j)));
            for &i in &order[self.budget..] {
                self.params[i] = 0.0;
            }
        }
    }

    /// Output before the clamp.
    pub fn raw(&self, x: &[f64]) -> f64 {
        let mut a = x.to_vec();
        let mut z = Vec::new();
        for (k, s) in self.spans.iter().enumerate() {
            self.affine(s, &a, &mut z);
            if k < 3 {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            std::mem::swap(&mut a, &mut z);
        }
        a[0]
    }

    /// `min{1, max{0, raw(x)}}`.
    pub fn output(&self, x: &[f64]) -> f64 {
        self.raw(x).clamp(0.0, 1.0)
    }

    fn affine(&self, s: &LayerSpan, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        let w = &self.params[s.weights..s.biases];
        let b = &self.params[s.biases..s.biases + s.rows];
        for r in 0..s.rows {
            let row = &w[r * s.cols..(r + 1) * s.cols];
            out.push(b[r] + row.iter().zip(input).map(|(a, c)| a * c).sum::<f64>());
        }
    }

    /// Mean hinge loss over `indices` (all points when `None`) and its
    /// gradient, accumulated into `grad` (which is overwritten).
    ///
    /// Subgradient convention: derivative 0 at the hinge kink, at ReLU(0)
    /// and at both clamp corners.
    pub fn loss_and_gradient(
        &self,
        sample: &LabeledSample,
        indices: Option<&[usize]>,
        objective: Objective,
        grad: &mut [f64],
    ) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut ws = Workspace::new(self);
        let mut total = 0.0;
        let count = indices.map_or(sample.len(), |i| i.len());
        let mut visit = |i: usize| {
            let raw = self.forward(sample.point(i), &mut ws);
            let s = 2.0 * f64::from(sample.labels()[i]) - 1.0;
            let (f, df_draw) = match objective {
                Objective::Raw => (raw, 1.0),
                Objective::Clamped => (raw.clamp(0.0, 1.0), if raw > 0.0 && raw < 1.0 { 1.0 } else { 0.0 }),
            };
            let t = s * (2.0 * f - 1.0);
            total += hinge(t);
            if t < 1.0 && df_draw != 0.0 {
                self.backward(-2.0 * s * df_draw, &mut ws, grad);
            }
        };
        match indices {
            Some(idx) => idx.iter().for_each(|&i| visit(i)),
            None => (0..sample.len()).for_each(&mut visit),
        }
        let scale = 1.0 / count.max(1) as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        total * scale
    }

    fn forward(&self, x: &[f64], ws: &mut Workspace) -> f64 {
        ws.acts[0].clear();
        ws.acts[0].extend_from_slice(x);
        for k in 0..4 {
            let (head, tail) = ws.acts.split_at_mut(k + 1);
            self.affine(&self.spans[k], &head[k], &mut ws.pre[k]);
            tail[0].clear();
            tail[0].extend(ws.pre[k].iter().map(|&v| if k < 3 { v.max(0.0) } else { v }));
        }
        ws.acts[4][0]
    }

    fn backward(&self, dout: f64, ws: &mut Workspace, grad: &mut [f64]) {
        ws.delta.clear();
        ws.delta.push(dout);
        for k in (0..4).rev() {
            let s = self.spans[k];
            let input = &ws.acts[k];
            for r in 0..s.rows {
                let d = ws.delta[r];
                if d == 0.0 {
                    continue;
                }
                let gw = &mut grad[s.weights + r * s.cols..s.weights + (r + 1) * s.cols];
                for (g, a) in gw.iter_mut().zip(input) {
                    *g += d * a;
                }
                grad[s.biases + r] += d;
            }
            if k == 0 {
                break;
            }
            ws.next.clear();
            ws.next.resize(s.cols, 0.0);
            let w = &self.params[s.weights..s.biases];
            for r in 0..s.rows {
                let d = ws.delta[r];
                if d == 0.0 {
                    continue;
                }
                for (c, n) in ws.next.iter_mut().enumerate() {
                    *n += d * w[r * s.cols + c];
                }
            }
            for (n, z) in ws.next.iter_mut().zip(&ws.pre[k - 1]) {
                if *z <= 0.0 {
                    *n = 0.0;
                }
            }
            std::mem::swap(&mut ws.delta, &mut ws.next);
        }
    }

    /// Smallest distance of any hidden pre-activation to 0, of the raw
    /// output to the clamp corners, or of a hinge argument to 1, over the
    /// sample; used to keep finite-difference checks away from kinks.
    pub fn kink_margin(&self, sample: &LabeledSample, objective: Objective) -> f64 {
        let mut ws = Workspace::new(self);
        let mut margin = f64::INFINITY;
        for i in 0..sample.len() {
            let raw = self.forward(sample.point(i), &mut ws);
            for z in ws.pre[..3].iter().flatten() {
                margin = margin.min(z.abs());
            }
            let s = 2.0 * f64::from(sample.labels()[i]) - 1.0;
            let f = match objective {
                Objective::Raw => raw,
                Objective::Clamped => {
                    margin = margin.min(raw.abs()).min((raw - 1.0).abs());
                    raw.clamp(0.0, 1.0)
                }
            };
            margin = margin.min((s * (2.0 * f - 1.0) - 1.0).abs());
        }
        margin
    }

    pub fn to_document(&self) -> NetDocument {
        NetDocument {
            dim: self.dim,
            widths: self.widths,
            weight_bound: self.bound,
            sparsity_budget: self.budget,
            layers: (0..4)
                .map(|k| {
                    let (w, b) = self.layer(k);
                    let (rows, cols) = (self.spans[k].rows, self.spans[k].cols);
                    LayerDocument {
                        shape: [rows, cols],
                        weights: w.chunks(cols).map(<[f64]>::to_vec).collect(),
                        biases: b.to_vec(),
                    }
                })
                .collect(),
        }
    }

    pub fn from_document(doc: &NetDocument) -> Result<Self> {
        let mut net = Self::zeros(doc.dim, doc.widths, doc.weight_bound, doc.sparsity_budget)?;
        if doc.layers.len() != 4 {
            return Err(LabError::Parse(format!(
                "expected 4 layers, found {}",
                doc.layers.len()
            )));
        }
        for (k, l) in doc.layers.iter().enumerate() {
            let s = net.spans[k];
            if l.shape != [s.rows, s.cols] || l.weights.len() != s.rows || l.biases.len() != s.rows {
                return Err(LabError::Parse(format!(
                    "layer {k} does not have shape {}x{}",
                    s.rows, s.cols
                )));
            }
            for (r, row) in l.weights.iter().enumerate() {
                if row.len() != s.cols {
                    return Err(LabError::Parse(format!("layer {k} row {r} has {} entries", row.len())));
                }
                net.params[s.weights + r * s.cols..s.weights + (r + 1) * s.cols].copy_from_slice(row);
            }
            net.params[s.biases..s.biases + s.rows].copy_from_slice(&l.biases);
        }
        if !net.is_feasible() {
            return Err(LabError::Parse(
                "stored parameters violate the weight bound or sparsity budget".into(),
            ));
        }
        Ok(net)
    }
}

impl Field for ReluNet {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.output(x)
    }
}

struct Workspace {
    acts: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    delta: Vec<f64>,
    next: Vec<f64>,
}

impl Workspace {
    fn new(net: &ReluNet) -> Self {
        let widest = net.widths.iter().copied().max().unwrap_or(1).max(net.dim);
        Workspace {
            acts: (0..5).map(|_| Vec::with_capacity(widest)).collect(),
            pre: (0..4).map(|_| Vec::with_capacity(widest)).collect(),
            delta: Vec::with_capacity(widest),
            next: Vec::with_capacity(widest),
        }
    }
}

/// Dense serialized network; pruned entries appear as explicit zeros.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetDocument {
    pub dim: usize,
    pub widths: [usize; 3],
    pub weight_bound: f64,
    pub sparsity_budget: usize,
    pub layers: Vec<LayerDocument>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerDocument {
    pub shape: [usize; 2],
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ReluNet {
        ReluNet::seeded(2, [3, 4, 2], 5.0, 1000, 9).unwrap()
    }

    #[test]
    fn raw_matches_manual_forward() {
        let net = tiny();
        let x = [0.3, 0.7];
        let mut a = x.to_vec();
        for k in 0..4 {
            let (w, b) = net.layer(k);
            let (rows, cols) = net.layer_shapes()[k];
            let z: Vec<f64> = (0..rows)
                .map(|r| b[r] + (0..cols).map(|c| w[r * cols + c] * a[c]).sum::<f64>())
                .collect();
            a = if k < 3 {
                z.iter().map(|v| v.max(0.0)).collect()
            } else {
                z
            };
        }
        assert!((net.raw(&x) - a[0]).abs() < 1e-15);
        assert_eq!(net.num_params(), 3 * 2 + 3 + 4 * 3 + 4 + 2 * 4 + 2 + 2 + 1);
    }

    #[test]
    fn projection_enforces_constraints() {
        let mut net = ReluNet::seeded(2, [5, 5, 5], 0.1, 12, 3).unwrap();
        net.params_mut()[0] = 7.0;
        net.params_mut()[1] = -7.0;
        net.project();
        assert!(net.is_feasible());
        assert_eq!(net.nonzero_count(), 12);
        assert_eq!(net.params()[0], 0.1);
        assert_eq!(net.params()[1], -0.1);
    }

    #[test]
    fn init_respects_fan_in() {
        let net = ReluNet::seeded(4, [16, 16, 16], 10.0, usize::MAX, 1).unwrap();
        let (w, _) = net.layer(1);
        assert!(w.iter().all(|v| v.abs() <= 0.25));
        assert!(net.max_abs() <= 0.5);
    }

    #[test]
    fn zero_net_loss() {
        let net = ReluNet::zeros(2, [2, 2, 2], 1.0, 10).unwrap();
        let s = LabeledSample::new(2, vec![0.1, 0.2, 0.5, 0.5], vec![1, 0]).unwrap();
        let mut g = vec![0.0; net.num_params()];
        // f = 0: label 1 costs φ(−1) = 2, label 0 costs φ(1) = 0.
        assert_eq!(net.loss_and_gradient(&s, None, Objective::Clamped, &mut g), 1.0);
        assert_eq!(net.loss_and_gradient(&s, None, Objective::Raw, &mut g), 1.0);
        assert_eq!(g[net.num_params() - 1], -1.0);
    }

    #[test]
    fn document_round_trip() {
        let mut net = ReluNet::seeded(3, [4, 3, 2], 2.0, 20, 5).unwrap();
        net.project();
        let doc = net.to_document();
        let text = serde_json::to_string(&doc).unwrap();
        let back = ReluNet::from_document(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, net);
        assert_eq!(doc.layers[0].weights.len(), 4);
    }
}
