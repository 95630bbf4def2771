//! Finite function clouds, packings and covers.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::barron::BumpMember;
use crate::error::{LabError, Result};
use crate::field::{midpoint_nodes, Field};
use crate::par::map_indexed;

/// Distance used on a [`FunctionCloud`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CloudMetric {
    /// Midpoint-rule `L¹` with `res` nodes per axis.
    L1Grid { res: usize },
    /// Maximum over the midpoint grid.
    LinfGrid { res: usize },
    /// Closed-form `L¹` distance between members of one bump family.
    ExactBump,
    /// A user-supplied distance matrix.
    Precomputed,
}

enum Members {
    Fields(Vec<Arc<dyn Field>>),
    Bumps(Vec<BumpMember>),
    Matrix(usize),
}

/// A finite set of functions with a lazily computed distance matrix.
pub struct FunctionCloud {
    members: Members,
    metric: CloudMetric,
    cache: OnceLock<Vec<f64>>,
}

impl FunctionCloud {
    /// Cloud of arbitrary fields under a grid metric.
    pub fn new(fields: Vec<Arc<dyn Field>>, metric: CloudMetric) -> Result<Self> {
        match metric {
            CloudMetric::L1Grid { res } | CloudMetric::LinfGrid { res } if res >= 1 => {}
            CloudMetric::L1Grid { .. } | CloudMetric::LinfGrid { .. } => {
                return Err(LabError::Resolution {
                    resolution: 0,
                    reason: "grid metrics need at least one node per axis".into(),
                })
            }
            _ => return Err(LabError::Unsupported(format!("{metric:?} is not a grid metric"))),
        }
        if let Some(first) = fields.first() {
            if let Some(bad) = fields.iter().find(|f| f.dim() != first.dim()) {
                return Err(LabError::DimensionMismatch {
                    expected: first.dim(),
                    got: bad.dim(),
                });
            }
        }
        Ok(FunctionCloud {
            members: Members::Fields(fields),
            metric,
            cache: OnceLock::new(),
        })
    }

    /// Members of one bump family at one scale, under the exact metric.
    pub fn bumps(members: Vec<BumpMember>) -> Result<Self> {
        if let Some(first) = members.first() {
            for m in &members[1..] {
                first.l1_distance(m)?;
            }
        }
        Ok(FunctionCloud {
            members: Members::Bumps(members),
            metric: CloudMetric::ExactBump,
            cache: OnceLock::new(),
        })
    }

    /// Abstract cloud given by a row-major `n × n` distance matrix.
    pub fn from_distances(n: usize, matrix: Vec<f64>) -> Result<Self> {
        if matrix.len() != n * n {
            return Err(LabError::DimensionMismatch {
                expected: n * n,
                got: matrix.len(),
            });
        }
        for i in 0..n {
            if matrix[i * n + i] != 0.0 {
                return Err(LabError::InvalidRep(format!("nonzero diagonal entry at {i}")));
            }
            for j in 0..n {
                let v = matrix[i * n + j];
                if !(v.is_finite() && v >= 0.0) || v != matrix[j * n + i] {
                    return Err(LabError::InvalidRep(format!(
                        "entry ({i}, {j}) breaks symmetry or positivity"
                    )));
                }
            }
        }
        let cache = OnceLock::new();
        let _ = cache.set(matrix);
        Ok(FunctionCloud {
            members: Members::Matrix(n),
            metric: CloudMetric::Precomputed,
            cache,
        })
    }

    pub fn len(&self) -> usize {
        match &self.members {
            Members::Fields(f) => f.len(),
            Members::Bumps(b) => b.len(),
            Members::Matrix(n) => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn metric(&self) -> CloudMetric {
        self.metric
    }

    /// Row-major distance matrix, computed on first use.
    pub fn distances(&self) -> &[f64] {
        self.cache.get_or_init(|| self.fill())
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.distances()[i * self.len() + j]
    }

    fn fill(&self) -> Vec<f64> {
        let n = self.len();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let values: Vec<f64> = match &self.members {
            Members::Fields(fields) => {
                let tables = self.tables(fields);
                let linf = matches!(self.metric, CloudMetric::LinfGrid { .. });
                map_indexed(pairs.len(), |k| {
                    let (i, j) = pairs[k];
                    grid_distance(&tables[i], &tables[j], linf)
                })
            }
            Members::Bumps(b) => map_indexed(pairs.len(), |k| {
                let (i, j) = pairs[k];
                b[i].l1_distance(&b[j]).expect("members validated at construction")
            }),
            Members::Matrix(_) => unreachable!("precomputed matrices are cached at construction"),
        };
        let mut out = vec![0.0; n * n];
        for (&(i, j), v) in pairs.iter().zip(values) {
            out[i * n + j] = v;
            out[j * n + i] = v;
        }
        out
    }

    fn tables(&self, fields: &[Arc<dyn Field>]) -> Vec<Vec<f64>> {
        let nodes = match self.metric {
            CloudMetric::L1Grid { res } | CloudMetric::LinfGrid { res } => midpoint_nodes(res),
            _ => unreachable!(),
        };
        map_indexed(fields.len(), |i| fields[i].tensor_values(&nodes))
    }

    /// Distances from every candidate centre (rows) to every member
    /// (columns); grid metrics only.
    pub fn cross_distances(&self, candidates: &[Arc<dyn Field>]) -> Result<Vec<f64>> {
        let Members::Fields(fields) = &self.members else {
            return Err(LabError::Unsupported("external centres need a grid metric".into()));
        };
        let linf = matches!(self.metric, CloudMetric::LinfGrid { .. });
        let mine = self.tables(fields);
        let theirs = self.tables(candidates);
        let n = fields.len();
        Ok(map_indexed(candidates.len() * n, |k| {
            grid_distance(&theirs[k / n], &mine[k % n], linf)
        }))
    }
}

fn grid_distance(a: &[f64], b: &[f64], linf: bool) -> f64 {
    let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
    if linf {
        diffs.fold(0.0, f64::max)
    } else {
        diffs.sum::<f64>() / a.len().max(1) as f64
    }
}

/// Greedy maximal ε-packing: members are scanned by index and kept when
/// farther than `eps` from everything kept so far.
pub fn greedy_packing(cloud: &FunctionCloud, eps: f64) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for i in 0..cloud.len() {
        if kept.iter().all(|&j| cloud.distance(i, j) > eps) {
            kept.push(i);
        }
    }
    kept
}

/// Adjacency bitmasks of the "too close" graph `d(i, j) ≤ eps`.
fn conflict_masks(cloud: &FunctionCloud, eps: f64) -> Result<Vec<u64>> {
    let n = cloud.len();
    if n > 64 {
        return Err(LabError::Unsupported(format!(
            "exhaustive search is limited to 64 members, got {n}"
        )));
    }
    Ok((0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && cloud.distance(i, j) <= eps)
                .fold(0u64, |m, j| m | 1 << j)
        })
        .collect())
}

/// Largest ε-packing by branch and bound (at most 64 members).
pub fn exhaustive_packing(cloud: &FunctionCloud, eps: f64) -> Result<Vec<usize>> {
    let adj = conflict_masks(cloud, eps)?;
    let all = if cloud.len() == 64 {
        u64::MAX
    } else {
        (1u64 << cloud.len()) - 1
    };
    let mut best = 0u64;
    max_independent(all, 0, &adj, &mut best);
    Ok(bits(best))
}

fn max_independent(cand: u64, chosen: u64, adj: &[u64], best: &mut u64) {
    if chosen.count_ones() + cand.count_ones() <= best.count_ones() {
        return;
    }
    if cand == 0 {
        *best = chosen;
        return;
    }
    let v = cand.trailing_zeros() as usize;
    let bit = 1u64 << v;
    max_independent(cand & !bit & !adj[v], chosen | bit, adj, best);
    if adj[v] & cand != 0 {
        max_independent(cand & !bit, chosen, adj, best);
    }
}

fn bits(mask: u64) -> Vec<usize> {
    (0..64).filter(|i| mask >> i & 1 == 1).collect()
}

/// Greedy ε-net with centres taken from the cloud: the smaller of the
/// max-gain set cover (lowest index on ties) and the greedy maximal packing,
/// which is itself an ε-net. The size therefore lies between `M(2ε)` and `M(ε)`.
pub fn greedy_cover(cloud: &FunctionCloud, eps: f64) -> Vec<usize> {
    let by_gain = max_gain_cover(cloud, eps);
    let packing = greedy_packing(cloud, eps);
    if packing.len() < by_gain.len() {
        packing
    } else {
        by_gain
    }
}

fn max_gain_cover(cloud: &FunctionCloud, eps: f64) -> Vec<usize> {
    let n = cloud.len();
    let mut covered = vec![false; n];
    let mut left = n;
    let mut centres = Vec::new();
    while left > 0 {
        let (c, gain) = (0..n)
            .map(|c| {
                (
                    c,
                    (0..n).filter(|&j| !covered[j] && cloud.distance(c, j) <= eps).count(),
                )
            })
            .fold((0, 0), |best, cur| if cur.1 > best.1 { cur } else { best });
        for (j, flag) in covered.iter_mut().enumerate() {
            if !*flag && cloud.distance(c, j) <= eps {
                *flag = true;
            }
        }
        left -= gain;
        centres.push(c);
    }
    centres
}

/// Smallest ε-net with centres in the cloud (at most 64 members).
pub fn min_internal_cover(cloud: &FunctionCloud, eps: f64) -> Result<Vec<usize>> {
    let n = cloud.len();
    let adj = conflict_masks(cloud, eps)?;
    let sets: Vec<u64> = adj.iter().enumerate().map(|(i, m)| m | 1 << i).collect();
    Ok(min_set_cover(&sets, n))
}

/// Smallest ε-net with centres among the members and the extra candidates.
/// Returned indices address members first, then candidates.
pub fn min_external_cover(cloud: &FunctionCloud, candidates: &[Arc<dyn Field>], eps: f64) -> Result<Vec<usize>> {
    let n = cloud.len();
    let adj = conflict_masks(cloud, eps)?;
    let cross = cloud.cross_distances(candidates)?;
    let mut sets: Vec<u64> = adj.iter().enumerate().map(|(i, m)| m | 1 << i).collect();
    for row in cross.chunks(n.max(1)).take(candidates.len()) {
        sets.push(
            row.iter()
                .enumerate()
                .filter(|(_, &d)| d <= eps)
                .fold(0u64, |m, (j, _)| m | 1 << j),
        );
    }
    Ok(min_set_cover(&sets, n))
}

/// Exact minimum set cover of `{0..n}` by iterative deepening.
fn min_set_cover(sets: &[u64], n: usize) -> Vec<usize> {
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    if all == 0 {
        return Vec::new();
    }
    let widest = sets.iter().map(|s| (s & all).count_ones()).max().unwrap_or(0).max(1);
    let mut path = Vec::new();
    for depth in 1..=n {
        if search_cover(sets, all, 0, depth, widest, &mut path) {
            return path;
        }
    }
    unreachable!("every point lies in its own set")
}

fn search_cover(sets: &[u64], all: u64, covered: u64, depth: usize, widest: u32, path: &mut Vec<usize>) -> bool {
    let open = all & !covered;
    if open == 0 {
        return true;
    }
    if depth == 0 || (open.count_ones()).div_ceil(widest) as usize > depth {
        return false;
    }
    let target = open.trailing_zeros();
    for (k, s) in sets.iter().enumerate() {
        if s >> target & 1 == 1 {
            path.push(k);
            if search_cover(sets, all, covered | s, depth - 1, widest, path) {
                return true;
            }
            path.pop();
        }
    }
    false
}

/// One row of an entropy curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub eps: f64,
    /// `ln` of the packing size found.
    pub ln_packing: f64,
    /// `ln` of an ε-net size (an upper bound on the covering entropy).
    pub ln_cover_bound: f64,
}

/// Packing-entropy curve over a descending ε list.
///
/// Each ε is packed greedily; since an ε′-packing is also an ε-packing for
/// ε < ε′, the reported size is the running maximum, which keeps the curve
/// nonincreasing in ε.
pub fn packing_entropy_curve(cloud: &FunctionCloud, eps_list: &[f64]) -> Result<Vec<CurvePoint>> {
    if eps_list.iter().any(|e| !(*e > 0.0)) {
        return Err(LabError::Range("every ε must be positive".into()));
    }
    if eps_list.windows(2).any(|w| w[1] > w[0]) {
        return Err(LabError::Range("ε list must be sorted in descending order".into()));
    }
    cloud.distances();
    let raw = map_indexed(eps_list.len(), |k| {
        (
            greedy_packing(cloud, eps_list[k]).len(),
            greedy_cover(cloud, eps_list[k]).len(),
        )
    });
    let mut best = 0usize;
    Ok(eps_list
        .iter()
        .zip(raw)
        .map(|(&eps, (pack, cover))| {
            best = best.max(pack);
            CurvePoint {
                eps,
                ln_packing: (best.max(1) as f64).ln(),
                ln_cover_bound: (cover.max(1) as f64).ln(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ConstField;

    fn line(points: &[f64]) -> FunctionCloud {
        let n = points.len();
        let m = (0..n * n).map(|k| (points[k / n] - points[k % n]).abs()).collect();
        FunctionCloud::from_distances(n, m).unwrap()
    }

    #[test]
    fn greedy_examples() {
        let c = line(&[0.0, 0.3, 0.6]);
        let m = vec![0.0, 0.3, 0.3, 0.3, 0.0, 0.3, 0.3, 0.3, 0.0];
        let tri = FunctionCloud::from_distances(3, m).unwrap();
        assert_eq!(greedy_packing(&tri, 0.2).len(), 3);
        assert_eq!(greedy_packing(&tri, 0.4).len(), 1);
        assert_eq!(greedy_packing(&c, 0.4), vec![0, 2]);
    }

    #[test]
    fn grid_metric_on_constants() {
        let fields: Vec<Arc<dyn Field>> = [0.0, 0.25, 1.0]
            .iter()
            .map(|&v| Arc::new(ConstField { dim: 2, value: v }) as Arc<dyn Field>)
            .collect();
        let c = FunctionCloud::new(fields.clone(), CloudMetric::L1Grid { res: 8 }).unwrap();
        assert!((c.distance(0, 2) - 1.0).abs() < 1e-15);
        assert!((c.distance(1, 2) - 0.75).abs() < 1e-15);
        let ext: Vec<Arc<dyn Field>> = vec![Arc::new(ConstField { dim: 2, value: 0.5 })];
        assert_eq!(c.cross_distances(&ext).unwrap(), vec![0.5, 0.25, 0.5]);
        assert_eq!(min_external_cover(&c, &ext, 0.5).unwrap(), vec![3]);
        assert_eq!(min_internal_cover(&c, 0.5).unwrap().len(), 2);
    }

    #[test]
    fn singleton_curve_is_flat() {
        let c = line(&[0.4]);
        let curve = packing_entropy_curve(&c, &[1.0, 0.1, 0.01]).unwrap();
        assert!(curve.iter().all(|p| p.ln_packing == 0.0 && p.ln_cover_bound == 0.0));
        assert!(packing_entropy_curve(&c, &[0.1, 1.0]).is_err());
    }

    #[test]
    fn exhaustive_beats_greedy_on_path() {
        // Index order makes greedy take the middle point first.
        let c = line(&[1.0, 0.0, 2.0, 3.0]);
        assert_eq!(greedy_packing(&c, 1.0).len(), 2);
        assert_eq!(exhaustive_packing(&c, 1.0).unwrap().len(), 2);
        let c = line(&[1.0, 0.0, 2.0]);
        assert_eq!(greedy_packing(&c, 1.0).len(), 1);
        assert_eq!(exhaustive_packing(&c, 1.0).unwrap(), vec![1, 2]);
        assert_eq!(min_internal_cover(&c, 1.0).unwrap(), vec![0]);
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(FunctionCloud::from_distances(2, vec![0.0, 1.0, 2.0, 0.0]).is_err());
        assert!(FunctionCloud::from_distances(2, vec![0.1, 1.0, 1.0, 0.0]).is_err());
        assert!(FunctionCloud::from_distances(2, vec![0.0; 3]).is_err());
    }
}
