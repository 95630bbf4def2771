//! Horizon functions, piecewise classifiers with regular decision boundaries,
//! noiseless sampling, and disagreement measures between classifiers.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::barron::{sample_boundary_rep, BarronFourierRep, BumpDescriptor, BumpMember, RepDocument};
use crate::error::{LabError, Result};
use crate::field::{composite_gauss_legendre, for_each_tensor_point, in_unit_cube, midpoint_nodes, Field, Z95};

/// A binary classifier on `[0,1]^d`.
pub trait Classifier: Send + Sync {
    fn dim(&self) -> usize;

    /// Label in `{0, 1}`. Callers guarantee `x.len() == self.dim()`.
    fn classify(&self, x: &[f64]) -> u8;

    /// Labels on the tensor grid `nodes^dim`, last coordinate fastest.
    fn classify_tensor(&self, nodes: &[f64]) -> Vec<u8> {
        let mut out = Vec::with_capacity(nodes.len().pow(self.dim() as u32));
        for_each_tensor_point(nodes, self.dim(), |x| out.push(self.classify(x)));
        out
    }

    /// The underlying horizon function when the classifier is one in
    /// standard orientation.
    fn as_horizon(&self) -> Option<&HorizonClassifier> {
        None
    }
}

impl<T: Classifier + ?Sized> Classifier for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn classify(&self, x: &[f64]) -> u8 {
        (**self).classify(x)
    }
    fn classify_tensor(&self, nodes: &[f64]) -> Vec<u8> {
        (**self).classify_tensor(nodes)
    }
    fn as_horizon(&self) -> Option<&HorizonClassifier> {
        (**self).as_horizon()
    }
}

impl<T: Classifier + ?Sized> Classifier for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn classify(&self, x: &[f64]) -> u8 {
        (**self).classify(x)
    }
    fn classify_tensor(&self, nodes: &[f64]) -> Vec<u8> {
        (**self).classify_tensor(nodes)
    }
    fn as_horizon(&self) -> Option<&HorizonClassifier> {
        (**self).as_horizon()
    }
}

/// Boundary function of a horizon classifier.
#[derive(Clone)]
pub enum Boundary {
    Fourier(BarronFourierRep),
    Bump(BumpMember),
    /// Arbitrary evaluator; not serializable.
    Custom(Arc<dyn Field>),
}

impl fmt::Debug for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Fourier(r) => f.debug_tuple("Fourier").field(r).finish(),
            Boundary::Bump(b) => f.debug_tuple("Bump").field(b).finish(),
            Boundary::Custom(c) => write!(f, "Custom(dim = {})", c.dim()),
        }
    }
}

impl Field for Boundary {
    fn dim(&self) -> usize {
        match self {
            Boundary::Fourier(r) => r.dim(),
            Boundary::Bump(b) => b.dim(),
            Boundary::Custom(c) => c.dim(),
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        match self {
            Boundary::Fourier(r) => r.value(x),
            Boundary::Bump(b) => b.value(x),
            Boundary::Custom(c) => c.value(x),
        }
    }

    fn tensor_values(&self, nodes: &[f64]) -> Vec<f64> {
        match self {
            Boundary::Fourier(r) => r.tensor_values(nodes),
            Boundary::Bump(b) => b.tensor_values(nodes),
            Boundary::Custom(c) => c.tensor_values(nodes),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundaryDocument {
    Fourier(RepDocument),
    Bump(BumpDescriptor),
}

impl Boundary {
    pub fn to_document(&self) -> Result<BoundaryDocument> {
        match self {
            Boundary::Fourier(r) => Ok(BoundaryDocument::Fourier(r.to_document())),
            Boundary::Bump(b) => Ok(BoundaryDocument::Bump(b.to_descriptor())),
            Boundary::Custom(_) => Err(LabError::Unsupported("custom boundaries cannot be serialized".into())),
        }
    }

    pub fn from_document(doc: &BoundaryDocument) -> Result<Self> {
        match doc {
            BoundaryDocument::Fourier(r) => Ok(Boundary::Fourier(BarronFourierRep::from_document(r)?)),
            BoundaryDocument::Bump(b) => Ok(Boundary::Bump(BumpMember::from_descriptor(b)?)),
        }
    }
}

/// `h_b(x) = 1{ b(x_1, …, x_{d-1}) ≤ x_d }`.
#[derive(Clone, Debug)]
pub struct HorizonClassifier {
    dim: usize,
    boundary: Boundary,
}

impl HorizonClassifier {
    pub fn new(dim: usize, boundary: Boundary) -> Result<Self> {
        if dim < 2 {
            return Err(LabError::InvalidRep("horizon classifiers need d ≥ 2".into()));
        }
        if boundary.dim() != dim - 1 {
            return Err(LabError::DimensionMismatch {
                expected: dim - 1,
                got: boundary.dim(),
            });
        }
        Ok(HorizonClassifier { dim, boundary })
    }

    /// Horizon classifier with a closure boundary.
    pub fn from_fn<F>(dim: usize, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::new(dim, Boundary::Custom(Arc::new(crate::field::FnField::new(dim - 1, f))))
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }
}

impl Classifier for HorizonClassifier {
    fn dim(&self) -> usize {
        self.dim
    }

    fn classify(&self, x: &[f64]) -> u8 {
        let (head, last) = x.split_at(self.dim - 1);
        u8::from(self.boundary.value(head) <= last[0])
    }

    fn classify_tensor(&self, nodes: &[f64]) -> Vec<u8> {
        let heights = self.boundary.tensor_values(nodes);
        let mut out = Vec::with_capacity(heights.len() * nodes.len());
        for b in heights {
            out.extend(nodes.iter().map(|&t| u8::from(b <= t)));
        }
        out
    }

    fn as_horizon(&self) -> Option<&HorizonClassifier> {
        Some(self)
    }
}

/// Checked evaluation of a horizon classifier; ties `b = x_d` give 1.
pub fn eval_horizon(h: &HorizonClassifier, x: &[f64]) -> Result<u8> {
    check_point(h.dim, x)?;
    Ok(h.classify(x))
}

fn check_point(dim: usize, x: &[f64]) -> Result<()> {
    if x.len() != dim {
        return Err(LabError::DimensionMismatch {
            expected: dim,
            got: x.len(),
        });
    }
    if !in_unit_cube(x) {
        return Err(LabError::Domain { point: x.to_vec() });
    }
    Ok(())
}

/// One rectangle of a piecewise classifier.
#[derive(Clone, Debug)]
pub struct Piece {
    /// `[a_i, b_i]` per axis.
    pub rect: Vec<[f64; 2]>,
    /// 0-based coordinate permutation: `(P x)_j = x[perm[j]]`.
    pub perm: Vec<usize>,
    pub flip: bool,
    pub horizon: HorizonClassifier,
}

impl Piece {
    fn contains(&self, x: &[f64]) -> bool {
        self.rect.iter().zip(x).all(|(r, &t)| r[0] <= t && t <= r[1])
    }

    fn label(&self, x: &[f64]) -> u8 {
        let permuted: Vec<f64> = self.perm.iter().map(|&j| x[j]).collect();
        let v = self.horizon.classify(&permuted);
        if self.flip {
            1 - v
        } else {
            v
        }
    }
}

/// Classifier equal to a (permuted, possibly flipped) horizon function on
/// each of `M` rectangles and 0 outside their union.
#[derive(Clone, Debug)]
pub struct PiecewiseClassifier {
    dim: usize,
    pieces: Vec<Piece>,
}

impl PiecewiseClassifier {
    pub fn new(dim: usize, pieces: Vec<Piece>) -> Result<Self> {
        for (i, p) in pieces.iter().enumerate() {
            if p.rect.len() != dim || p.perm.len() != dim || p.horizon.dim() != dim {
                return Err(LabError::DimensionMismatch {
                    expected: dim,
                    got: p.rect.len().min(p.perm.len()).min(p.horizon.dim()),
                });
            }
            for r in &p.rect {
                if !(0.0 <= r[0] && r[0] < r[1] && r[1] <= 1.0) {
                    return Err(LabError::InvalidRep(format!("piece {i}: degenerate interval {r:?}")));
                }
            }
            let mut seen = vec![false; dim];
            for &j in &p.perm {
                if j >= dim || std::mem::replace(&mut seen[j], true) {
                    return Err(LabError::InvalidRep(format!(
                        "piece {i}: {:?} is not a permutation",
                        p.perm
                    )));
                }
            }
        }
        for i in 0..pieces.len() {
            for j in (i + 1)..pieces.len() {
                let separated = pieces[i]
                    .rect
                    .iter()
                    .zip(&pieces[j].rect)
                    .any(|(a, b)| a[1] <= b[0] || b[1] <= a[0]);
                if !separated {
                    return Err(LabError::InvalidRep(format!(
                        "pieces {i} and {j} have overlapping interiors"
                    )));
                }
            }
        }
        Ok(PiecewiseClassifier { dim, pieces })
    }

    /// One piece covering the cube with identity permutation.
    pub fn single(horizon: HorizonClassifier, flip: bool) -> Self {
        let dim = horizon.dim();
        PiecewiseClassifier {
            dim,
            pieces: vec![Piece {
                rect: vec![[0.0, 1.0]; dim],
                perm: (0..dim).collect(),
                flip,
                horizon,
            }],
        }
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Random instance: `pieces` equal slabs along the first axis, each with
    /// a random permutation, flip and Fourier boundary.
    pub fn random_regular(
        dim: usize,
        pieces: usize,
        budget: f64,
        terms: usize,
        max_freq: u32,
        seed: u64,
    ) -> Result<Self> {
        if pieces == 0 {
            return Err(LabError::InvalidRep("need at least one piece".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(pieces);
        for i in 0..pieces {
            let mut rect = vec![[0.0, 1.0]; dim];
            rect[0] = [i as f64 / pieces as f64, (i + 1) as f64 / pieces as f64];
            let mut perm: Vec<usize> = (0..dim).collect();
            let flip = if pieces == 1 {
                false
            } else {
                perm.shuffle(&mut rng);
                rng.random::<bool>()
            };
            let rep = sample_boundary_rep(dim - 1, budget, terms, max_freq, rng.random())?;
            out.push(Piece {
                rect,
                perm,
                flip,
                horizon: HorizonClassifier::new(dim, Boundary::Fourier(rep))?,
            });
        }
        Self::new(dim, out)
    }

    pub fn to_document(&self) -> Result<ClassifierDocument> {
        Ok(ClassifierDocument {
            dim: self.dim,
            pieces: self
                .pieces
                .iter()
                .map(|p| {
                    Ok(PieceDocument {
                        rect: p.rect.clone(),
                        perm: p.perm.clone(),
                        flip: p.flip,
                        boundary: p.horizon.boundary().to_document()?,
                    })
                })
                .collect::<Result<_>>()?,
        })
    }

    pub fn from_document(doc: &ClassifierDocument) -> Result<Self> {
        let pieces = doc
            .pieces
            .iter()
            .map(|p| {
                Ok(Piece {
                    rect: p.rect.clone(),
                    perm: p.perm.clone(),
                    flip: p.flip,
                    horizon: HorizonClassifier::new(doc.dim, Boundary::from_document(&p.boundary)?)?,
                })
            })
            .collect::<Result<_>>()?;
        Self::new(doc.dim, pieces)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document()?)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_document(&serde_json::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::from_json(&s)
    }
}

impl Classifier for PiecewiseClassifier {
    fn dim(&self) -> usize {
        self.dim
    }

    fn classify(&self, x: &[f64]) -> u8 {
        self.pieces.iter().find(|p| p.contains(x)).map_or(0, |p| p.label(x))
    }

    fn as_horizon(&self) -> Option<&HorizonClassifier> {
        match self.pieces.as_slice() {
            [p] if !p.flip
                && p.perm.iter().enumerate().all(|(i, &j)| i == j)
                && p.rect.iter().all(|r| r[0] == 0.0 && r[1] == 1.0) =>
            {
                Some(&p.horizon)
            }
            _ => None,
        }
    }
}

/// Checked evaluation of a piecewise classifier.
pub fn eval_piecewise(c: &PiecewiseClassifier, x: &[f64]) -> Result<u8> {
    check_point(c.dim, x)?;
    Ok(c.classify(x))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassifierDocument {
    pub dim: usize,
    pub pieces: Vec<PieceDocument>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PieceDocument {
    pub rect: Vec<[f64; 2]>,
    pub perm: Vec<usize>,
    pub flip: bool,
    pub boundary: BoundaryDocument,
}

/// `1 − h`.
#[derive(Clone, Debug)]
pub struct Complement<C>(pub C);

impl<C: Classifier> Classifier for Complement<C> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn classify(&self, x: &[f64]) -> u8 {
        1 - self.0.classify(x)
    }
    fn classify_tensor(&self, nodes: &[f64]) -> Vec<u8> {
        self.0.classify_tensor(nodes).into_iter().map(|v| 1 - v).collect()
    }
}

/// Constant classifier.
#[derive(Clone, Copy, Debug)]
pub struct ConstClassifier {
    pub dim: usize,
    pub label: u8,
}

impl Classifier for ConstClassifier {
    fn dim(&self) -> usize {
        self.dim
    }
    fn classify(&self, _x: &[f64]) -> u8 {
        self.label
    }
}

/// A classifier viewed as a `{0,1}`-valued [`Field`].
#[derive(Clone, Debug)]
pub struct Indicator<C>(pub C);

impl<C: Classifier> Field for Indicator<C> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        f64::from(self.0.classify(x))
    }
    fn tensor_values(&self, nodes: &[f64]) -> Vec<f64> {
        self.0.classify_tensor(nodes).into_iter().map(f64::from).collect()
    }
}

/// How `λ{x : h1(x) ≠ h2(x)}` is computed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DisagreementMethod {
    /// `‖b1 − b2‖_{L¹}` by composite Gauss–Legendre with `res` panels per
    /// axis (Monte Carlo with `res²` draws beyond two boundary dimensions).
    ExactHorizon {
        res: usize,
    },
    Grid {
        res: usize,
    },
    MonteCarlo {
        samples: usize,
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisagreementEstimate {
    pub value: f64,
    /// 95% binomial half-width for the Monte Carlo path.
    pub half_width: Option<f64>,
}

const EXACT_ORDER: usize = 4;

pub fn disagreement(
    h1: &dyn Classifier,
    h2: &dyn Classifier,
    method: DisagreementMethod,
) -> Result<DisagreementEstimate> {
    if h1.dim() != h2.dim() {
        return Err(LabError::DimensionMismatch {
            expected: h1.dim(),
            got: h2.dim(),
        });
    }
    let dim = h1.dim();
    match method {
        DisagreementMethod::ExactHorizon { res } => {
            let (Some(a), Some(b)) = (h1.as_horizon(), h2.as_horizon()) else {
                return Err(LabError::Unsupported(
                    "exact_horizon needs two horizon classifiers in standard orientation".into(),
                ));
            };
            Ok(DisagreementEstimate {
                value: boundary_l1(a.boundary(), b.boundary(), res),
                half_width: None,
            })
        }
        DisagreementMethod::Grid { res } => {
            let nodes = midpoint_nodes(res);
            let t1 = h1.classify_tensor(&nodes);
            let t2 = h2.classify_tensor(&nodes);
            let mismatches = t1.iter().zip(&t2).filter(|(a, b)| a != b).count();
            Ok(DisagreementEstimate {
                value: mismatches as f64 / t1.len() as f64,
                half_width: None,
            })
        }
        DisagreementMethod::MonteCarlo { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut x = vec![0.0; dim];
            let mut hits = 0usize;
            for _ in 0..samples {
                x.iter_mut().for_each(|t| *t = rng.random());
                if h1.classify(&x) != h2.classify(&x) {
                    hits += 1;
                }
            }
            let p = hits as f64 / samples.max(1) as f64;
            Ok(DisagreementEstimate {
                value: p,
                half_width: Some(binomial_half_width(p, samples)),
            })
        }
    }
}

/// 95% normal-approximation half-width of a binomial proportion.
pub fn binomial_half_width(p: f64, n: usize) -> f64 {
    Z95 * (p * (1.0 - p) / n.max(1) as f64).sqrt()
}

/// `∫ |clip(b1) − clip(b2)|` over `[0,1]^{d-1}`.
pub fn boundary_l1(b1: &dyn Field, b2: &dyn Field, res: usize) -> f64 {
    let k = b1.dim();
    let clip = |v: f64| v.clamp(0.0, 1.0);
    if k <= 2 {
        let (nodes, weights) = composite_gauss_legendre(0.0, 1.0, res.max(1), EXACT_ORDER);
        let v1 = b1.tensor_values(&nodes);
        let v2 = b2.tensor_values(&nodes);
        let n = nodes.len();
        let mut acc = crate::field::KahanSum::default();
        for (i, (a, b)) in v1.iter().zip(&v2).enumerate() {
            let w = if k == 1 {
                weights[i]
            } else {
                weights[i / n] * weights[i % n]
            };
            acc.add(w * (clip(*a) - clip(*b)).abs());
        }
        acc.total()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let samples = res * res;
        let mut x = vec![0.0; k];
        let mut acc = 0.0;
        for _ in 0..samples {
            x.iter_mut().for_each(|t| *t = rng.random());
            acc += (clip(b1.value(&x)) - clip(b2.value(&x))).abs();
        }
        acc / samples as f64
    }
}

/// Noiseless training sample `(X_i, h(X_i))`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSample {
    dim: usize,
    points: Vec<f64>,
    labels: Vec<u8>,
}

impl LabeledSample {
    pub fn new(dim: usize, points: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        if dim == 0 || points.len() != dim * labels.len() {
            return Err(LabError::DimensionMismatch {
                expected: dim * labels.len(),
                got: points.len(),
            });
        }
        if labels.iter().any(|&y| y > 1) {
            return Err(LabError::InvalidRep("labels must be 0 or 1".into()));
        }
        Ok(LabeledSample { dim, points, labels })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// CSV with header `x_1,…,x_d,label`.
    pub fn to_csv(&self) -> String {
        let mut s = (1..=self.dim).map(|i| format!("x_{i}")).collect::<Vec<_>>().join(",");
        s.push_str(",label\n");
        for i in 0..self.len() {
            for v in self.point(i) {
                s.push_str(&format!("{v},"));
            }
            s.push_str(&format!("{}\n", self.labels[i]));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| LabError::Parse("empty sample file".into()))?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() < 2 || cols.last() != Some(&"label") {
            return Err(LabError::Parse(format!("unexpected header {header:?}")));
        }
        let dim = cols.len() - 1;
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for (ln, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != dim + 1 {
                return Err(LabError::Parse(format!("row {}: expected {} columns", ln + 2, dim + 1)));
            }
            for f in &fields[..dim] {
                points.push(
                    f.trim()
                        .parse::<f64>()
                        .map_err(|e| LabError::Parse(format!("row {}: {e}", ln + 2)))?,
                );
            }
            labels.push(
                fields[dim]
                    .trim()
                    .parse::<u8>()
                    .map_err(|e| LabError::Parse(format!("row {}: {e}", ln + 2)))?,
            );
        }
        Self::new(dim, points, labels)
    }
}

/// Draw `m` uniform points from the seeded stream and label them with `h`.
pub fn sample_noiseless(h: &dyn Classifier, m: usize, seed: u64) -> Result<LabeledSample> {
    if m == 0 {
        return Err(LabError::Range("sample size must be at least 1".into()));
    }
    let dim = h.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(m * dim);
    let mut labels = Vec::with_capacity(m);
    for _ in 0..m {
        let start = points.len();
        for _ in 0..dim {
            points.push(rng.random::<f64>());
        }
        labels.push(h.classify(&points[start..]));
    }
    LabeledSample::new(dim, points, labels)
}
