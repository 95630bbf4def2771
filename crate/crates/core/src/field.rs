//! Real-valued functions on the unit cube and the integration rules used
//! throughout the crate: midpoint tensor grids, seeded Monte Carlo, and
//! composite Gauss–Legendre quadrature.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A real function on `[0,1]^dim` (or beyond, for functions with larger support).
pub trait Field: Send + Sync {
    fn dim(&self) -> usize;

    /// Pointwise value. Callers guarantee `x.len() == self.dim()`.
    fn value(&self, x: &[f64]) -> f64;

    /// Values on the tensor grid `nodes^dim`, row-major with the last
    /// coordinate varying fastest.
    fn tensor_values(&self, nodes: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(nodes.len().pow(self.dim() as u32));
        for_each_tensor_point(nodes, self.dim(), |x| out.push(self.value(x)));
        out
    }
}

impl<T: Field + ?Sized> Field for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn tensor_values(&self, nodes: &[f64]) -> Vec<f64> {
        (**self).tensor_values(nodes)
    }
}

impl<T: Field + ?Sized> Field for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn tensor_values(&self, nodes: &[f64]) -> Vec<f64> {
        (**self).tensor_values(nodes)
    }
}

impl<T: Field + ?Sized> Field for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn tensor_values(&self, nodes: &[f64]) -> Vec<f64> {
        (**self).tensor_values(nodes)
    }
}

/// Adapter turning a closure into a [`Field`].
#[derive(Clone)]
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnField { dim, f }
    }
}

impl<F> Field for FnField<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// Constant function.
#[derive(Clone, Copy, Debug)]
pub struct ConstField {
    pub dim: usize,
    pub value: f64,
}

impl Field for ConstField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _x: &[f64]) -> f64 {
        self.value
    }
}

/// Visit every point of `nodes^dim` in row-major order (last axis fastest).
pub fn for_each_tensor_point(nodes: &[f64], dim: usize, mut visit: impl FnMut(&[f64])) {
    if dim == 0 {
        visit(&[]);
        return;
    }
    if nodes.is_empty() {
        return;
    }
    let mut idx = vec![0usize; dim];
    let mut x: Vec<f64> = vec![nodes[0]; dim];
    loop {
        visit(&x);
        let mut axis = dim;
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < nodes.len() {
                x[axis] = nodes[idx[axis]];
                break;
            }
            idx[axis] = 0;
            x[axis] = nodes[0];
        }
    }
}

/// Midpoint nodes `(j + 1/2)/res` of the uniform grid on `[0,1]`.
pub fn midpoint_nodes(res: usize) -> Vec<f64> {
    (0..res).map(|j| (j as f64 + 0.5) / res as f64).collect()
}

/// Check `x ∈ [0,1]^d`.
pub fn in_unit_cube(x: &[f64]) -> bool {
    x.iter().all(|&t| (0.0..=1.0).contains(&t))
}

/// How an integral over `[0,1]^d` is approximated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Integrator {
    /// Tensor midpoint rule with `res` nodes per axis.
    Grid { res: usize },
    /// Mean over `samples` seeded uniform draws.
    MonteCarlo { samples: usize, seed: u64 },
}

/// An integral estimate with the integrator that produced it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// 95% normal half-width; only reported for Monte Carlo.
    pub half_width: Option<f64>,
    pub integrator: Integrator,
}

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

impl Integrator {
    /// Mean of `combine(values of fields at x)` over `[0,1]^dim`.
    ///
    /// All fields are evaluated at the same nodes; the grid path uses
    /// [`Field::tensor_values`] so fields with tensor structure can be fast.
    pub fn mean_of(&self, dim: usize, fields: &[&dyn Field], combine: impl Fn(&[f64]) -> f64) -> Estimate {
        match *self {
            Integrator::Grid { res } => {
                let nodes = midpoint_nodes(res);
                let tables: Vec<Vec<f64>> = fields.iter().map(|f| f.tensor_values(&nodes)).collect();
                let n = res.pow(dim as u32);
                let mut buf = vec![0.0; fields.len()];
                let mut acc = KahanSum::default();
                for i in 0..n {
                    for (b, t) in buf.iter_mut().zip(&tables) {
                        *b = t[i];
                    }
                    acc.add(combine(&buf));
                }
                Estimate {
                    value: acc.total() / n as f64,
                    half_width: None,
                    integrator: *self,
                }
            }
            Integrator::MonteCarlo { samples, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut x = vec![0.0; dim];
                let mut buf = vec![0.0; fields.len()];
                let mut mean = 0.0;
                let mut m2 = 0.0;
                for k in 0..samples {
                    for t in x.iter_mut() {
                        *t = rng.random::<f64>();
                    }
                    for (b, f) in buf.iter_mut().zip(fields) {
                        *b = f.value(&x);
                    }
                    let v = combine(&buf);
                    let delta = v - mean;
                    mean += delta / (k + 1) as f64;
                    m2 += delta * (v - mean);
                }
                let var = if samples > 1 { m2 / (samples - 1) as f64 } else { 0.0 };
                Estimate {
                    value: mean,
                    half_width: Some(Z95 * (var / samples.max(1) as f64).sqrt()),
                    integrator: *self,
                }
            }
        }
    }
}

/// Compensated summation.
#[derive(Default, Clone, Copy, Debug)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, v: f64) {
        let y = v - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for i in 0..order.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(order, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(order, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre rule on `[a, b]` with `panels` equal panels.
pub fn composite_gauss_legendre(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (gn, gw) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (t, w) in gn.iter().zip(&gw) {
            nodes.push(lo + 0.5 * h * (t + 1.0));
            weights.push(0.5 * h * w);
        }
    }
    (nodes, weights)
}

/// Tensor-product integral of `f` over `[0,1]^dim` using a 1-D rule.
pub fn tensor_quadrature(dim: usize, nodes: &[f64], weights: &[f64], f: impl Fn(&[f64]) -> f64) -> f64 {
    let mut acc = KahanSum::default();
    let mut widx = vec![0usize; dim];
    let mut counter = 0usize;
    let n = nodes.len();
    for_each_tensor_point(nodes, dim, |x| {
        let mut rem = counter;
        for axis in (0..dim).rev() {
            widx[axis] = rem % n;
            rem /= n;
        }
        let w: f64 = widx.iter().map(|&i| weights[i]).product();
        acc.add(w * f(x));
        counter += 1;
    });
    acc.total()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for order in [1usize, 2, 5, 10, 20] {
            let (x, w) = gauss_legendre(order);
            for deg in 0..(2 * order) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "order {order} deg {deg}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn tensor_points_are_row_major() {
        let mut pts = Vec::new();
        for_each_tensor_point(&[0.0, 1.0, 2.0], 2, |x| pts.push((x[0], x[1])));
        assert_eq!(pts.len(), 9);
        assert_eq!(pts[0], (0.0, 0.0));
        assert_eq!(pts[1], (0.0, 1.0));
        assert_eq!(pts[3], (1.0, 0.0));
        assert_eq!(pts[8], (2.0, 2.0));
    }

    #[test]
    fn grid_and_mc_agree_on_smooth_integrand() {
        let f = FnField::new(2, |x: &[f64]| x[0] * x[0] + x[1]);
        let g = Integrator::Grid { res: 256 }.mean_of(2, &[&f], |v| v[0]);
        let m = Integrator::MonteCarlo {
            samples: 100_000,
            seed: 3,
        }
        .mean_of(2, &[&f], |v| v[0]);
        let exact = 1.0 / 3.0 + 0.5;
        assert!((g.value - exact).abs() < 1e-5);
        assert!((m.value - exact).abs() < 3.0 * m.half_width.unwrap());
    }

    #[test]
    fn tensor_quadrature_matches_closed_form() {
        let (x, w) = composite_gauss_legendre(0.0, 1.0, 4, 6);
        let q = tensor_quadrature(3, &x, &w, |p| p[0] * p[1].exp() * (p[2] * 3.0).cos());
        let exact = 0.5 * (1f64.exp() - 1.0) * (3f64.sin() / 3.0);
        assert!((q - exact).abs() < 1e-12);
    }
}
