//! Bump-lattice functions: a fixed plateau plus signed, disjointly supported
//! copies of a smooth bump on the cells of an `N^d` lattice, together with a
//! DFT-based estimate of their first Fourier moment.

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::bits::BitSet;
use crate::error::{LabError, Result};
use crate::field::{composite_gauss_legendre, Field};

fn raw_bump(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        (-1.0 / (t * (1.0 - t))).exp()
    }
}

/// Smooth transition: 0 for `t ≤ 0`, 1 for `t ≥ 1`, C^∞ in between.
fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

/// Equal to 1 on `[0,1]`, 0 outside `(-1, 2)`.
fn ramp(t: f64) -> f64 {
    if t < 0.0 {
        smooth_step(t + 1.0)
    } else if t <= 1.0 {
        1.0
    } else {
        smooth_step(2.0 - t)
    }
}

/// Normalization data for the one-dimensional bump.
#[derive(Clone, Copy, Debug)]
pub struct BumpProfile {
    /// Factor making the 1-D bump integrate to one.
    pub normalizer: f64,
    /// Maximum of the normalized 1-D bump (attained at 1/2).
    pub sup: f64,
    /// `‖φ‖_{L¹}` of the normalized 1-D bump, recomputed with a second rule.
    pub l1: f64,
}

pub fn bump_profile() -> &'static BumpProfile {
    static PROFILE: OnceLock<BumpProfile> = OnceLock::new();
    PROFILE.get_or_init(|| {
        let (x, w) = composite_gauss_legendre(0.0, 1.0, 64, 16);
        let mass: f64 = x.iter().zip(&w).map(|(x, w)| w * raw_bump(*x)).sum();
        let normalizer = 1.0 / mass;
        let (x2, w2) = composite_gauss_legendre(0.0, 1.0, 97, 12);
        let l1: f64 = x2.iter().zip(&w2).map(|(x, w)| w * normalizer * raw_bump(*x)).sum();
        BumpProfile {
            normalizer,
            sup: normalizer * raw_bump(0.5),
            l1,
        }
    })
}

/// Normalized 1-D bump `φ₁`.
pub fn bump_1d(t: f64) -> f64 {
    bump_profile().normalizer * raw_bump(t)
}

/// Lattice parameters shared by all members of a family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BumpFamily {
    pub dim: usize,
    pub grid_size: usize,
}

impl BumpFamily {
    pub fn new(dim: usize, grid_size: usize) -> Result<Self> {
        if dim == 0 || grid_size == 0 {
            return Err(LabError::InvalidRep(
                "bump family needs positive dim and grid size".into(),
            ));
        }
        grid_size
            .checked_pow(dim as u32)
            .ok_or_else(|| LabError::InvalidRep("lattice too large".into()))?;
        Ok(BumpFamily { dim, grid_size })
    }

    /// `|Ω_N| = N^d`.
    pub fn num_cells(&self) -> usize {
        self.grid_size.pow(self.dim as u32)
    }

    pub fn cell_index(&self, coords: &[usize]) -> Result<usize> {
        if coords.len() != self.dim {
            return Err(LabError::DimensionMismatch {
                expected: self.dim,
                got: coords.len(),
            });
        }
        let mut idx = 0;
        for &c in coords {
            if c >= self.grid_size {
                return Err(LabError::Index(format!(
                    "cell {coords:?} outside lattice of size {}",
                    self.grid_size
                )));
            }
            idx = idx * self.grid_size + c;
        }
        Ok(idx)
    }

    pub fn cell_coords(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        for slot in out.iter_mut().rev() {
            *slot = index % self.grid_size;
            index /= self.grid_size;
        }
        out
    }

    /// `‖φ‖_∞` of the d-dimensional bump.
    pub fn phi_sup(&self) -> f64 {
        bump_profile().sup.powi(self.dim as i32)
    }

    /// `κ = ‖φ‖_{L¹}`.
    pub fn kappa(&self) -> f64 {
        bump_profile().l1.powi(self.dim as i32)
    }

    /// `‖ψ‖_∞`; the plateau equals `‖φ‖_∞` on the unit cube.
    pub fn psi_sup(&self) -> f64 {
        self.phi_sup()
    }

    pub fn psi(&self, x: &[f64]) -> f64 {
        self.phi_sup() * x.iter().map(|&t| ramp(t)).product::<f64>()
    }

    /// The lattice cell containing `x`, with local coordinates `N x - ω`.
    fn locate(&self, x: &[f64]) -> Option<usize> {
        let n = self.grid_size;
        let mut idx = 0;
        for &t in x {
            if !(0.0..=1.0).contains(&t) {
                return None;
            }
            let c = ((t * n as f64) as usize).min(n - 1);
            idx = idx * n + c;
        }
        Some(idx)
    }

    fn local_bump(&self, x: &[f64], cell: usize) -> f64 {
        let coords = self.cell_coords(cell);
        let n = self.grid_size as f64;
        x.iter()
            .zip(&coords)
            .map(|(&t, &c)| bump_1d(n * t - c as f64))
            .product()
    }

    /// Member `scale · (ψ + Σ_{ω∈Ω} θ_ω φ(N(· − ω/N)))` from `(cell, sign)` pairs.
    pub fn member(&self, cells: &[(usize, i8)], scale: f64) -> Result<BumpMember> {
        let total = self.num_cells();
        let mut active = BitSet::new(total);
        let mut negative = BitSet::new(total);
        for &(cell, sign) in cells {
            if cell >= total {
                return Err(LabError::Index(format!(
                    "cell index {cell} outside Ω_N of size {total}"
                )));
            }
            if sign != 1 && sign != -1 {
                return Err(LabError::InvalidRep(format!("sign must be ±1, got {sign}")));
            }
            active.insert(cell);
            negative.set(cell, sign < 0);
        }
        self.member_from_bits(active, negative, scale)
    }

    /// Member from lattice coordinates.
    pub fn member_at(&self, cells: &[(Vec<usize>, i8)], scale: f64) -> Result<BumpMember> {
        let flat = cells
            .iter()
            .map(|(c, s)| Ok((self.cell_index(c)?, *s)))
            .collect::<Result<Vec<_>>>()?;
        self.member(&flat, scale)
    }

    /// Member from an active-cell set and the set of cells carrying sign −1.
    pub fn member_from_bits(&self, active: BitSet, negative: BitSet, scale: f64) -> Result<BumpMember> {
        let total = self.num_cells();
        if active.len() != total || negative.len() != total {
            return Err(LabError::Index(format!("cell sets must have length {total}")));
        }
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(LabError::InvalidRep(format!("scale must be nonnegative, got {scale}")));
        }
        let negative = BitSet::from_words(
            total,
            negative
                .words()
                .iter()
                .zip(active.words())
                .map(|(n, a)| n & a)
                .collect(),
        );
        Ok(BumpMember {
            family: *self,
            active,
            negative,
            scale,
        })
    }
}

/// One function of a bump family.
#[derive(Clone, Debug, PartialEq)]
pub struct BumpMember {
    family: BumpFamily,
    active: BitSet,
    negative: BitSet,
    scale: f64,
}

impl BumpMember {
    pub fn family(&self) -> BumpFamily {
        self.family
    }

    pub fn active(&self) -> &BitSet {
        &self.active
    }

    /// Cells with sign −1 (a subset of the active cells).
    pub fn negative(&self) -> &BitSet {
        &self.negative
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn with_scale(&self, scale: f64) -> Self {
        BumpMember { scale, ..self.clone() }
    }

    /// `s · (‖φ‖_∞ + ‖ψ‖_∞)`, the upper end of the pointwise range.
    pub fn range_bound(&self) -> f64 {
        self.scale * (self.family.phi_sup() + self.family.psi_sup())
    }

    /// Exact `L¹` distance from the disjoint-support structure:
    /// `s κ N^{-d} (Σ_{Ω∩Ω'} |θ − θ'| + |Ω∖Ω'| + |Ω'∖Ω|)`.
    pub fn l1_distance(&self, other: &BumpMember) -> Result<f64> {
        if self.family != other.family {
            return Err(LabError::Unsupported("members of different families".into()));
        }
        if self.scale != other.scale {
            return Err(LabError::Unsupported(
                "closed-form distance needs a common scale".into(),
            ));
        }
        let units = self.separation_units(other);
        Ok(self.scale * self.family.kappa() * (self.family.num_cells() as f64).recip() * units as f64)
    }

    /// `|Ω Δ Ω'| + 2·#{ω ∈ Ω∩Ω' : θ_ω ≠ θ'_ω}`.
    pub fn separation_units(&self, other: &BumpMember) -> usize {
        let mut total = 0usize;
        for i in 0..self.active.words().len() {
            let a = self.active.words()[i];
            let b = other.active.words()[i];
            let na = self.negative.words()[i];
            let nb = other.negative.words()[i];
            total += (a ^ b).count_ones() as usize;
            total += 2 * ((a & b) & (na ^ nb)).count_ones() as usize;
        }
        total
    }

    pub fn to_descriptor(&self) -> BumpDescriptor {
        BumpDescriptor {
            dim: self.family.dim,
            grid_size: self.family.grid_size,
            active: self.active.iter().collect(),
            negative: self.negative.iter().collect(),
            scale: self.scale,
        }
    }

    pub fn from_descriptor(d: &BumpDescriptor) -> Result<Self> {
        let fam = BumpFamily::new(d.dim, d.grid_size)?;
        let total = fam.num_cells();
        let active = BitSet::from_indices(total, d.active.iter().copied())
            .ok_or_else(|| LabError::Index("active cell outside lattice".into()))?;
        let negative = BitSet::from_indices(total, d.negative.iter().copied())
            .ok_or_else(|| LabError::Index("negative cell outside lattice".into()))?;
        if negative.iter().any(|c| !active.contains(c)) {
            return Err(LabError::InvalidRep("negative cell not active".into()));
        }
        fam.member_from_bits(active, negative, d.scale)
    }
}

impl Field for BumpMember {
    fn dim(&self) -> usize {
        self.family.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        if self.scale == 0.0 {
            return 0.0;
        }
        let mut v = self.family.psi(x);
        if let Some(cell) = self.family.locate(x) {
            if self.active.contains(cell) {
                let b = self.family.local_bump(x, cell);
                v += if self.negative.contains(cell) { -b } else { b };
            }
        }
        self.scale * v
    }
}

/// Serialized bump member.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpDescriptor {
    pub dim: usize,
    pub grid_size: usize,
    pub active: Vec<usize>,
    pub negative: Vec<usize>,
    pub scale: f64,
}

/// Numerical `∫ (1 + |ξ|) |ĝ(ξ)| dξ` for members of one family at one
/// resolution.
///
/// Members are sampled on the uniform grid of `[-1, 2]^d` (the plateau is
/// supported in `(-1, 2)^d`, so this is a zero-padded window) and
/// transformed with a d-dimensional FFT. The plateau samples and the bump
/// samples per lattice point are tabulated once.
pub struct MomentEstimator {
    family: BumpFamily,
    res: usize,
    psi_grid: Vec<f64>,
    bump_samples: Vec<(u32, u32, f64)>,
    weights: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for MomentEstimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MomentEstimator")
            .field("family", &self.family)
            .field("res", &self.res)
            .finish()
    }
}

const WINDOW_LO: f64 = -1.0;
const WINDOW_LEN: f64 = 3.0;

impl MomentEstimator {
    pub fn new(family: BumpFamily, res: usize) -> Result<Self> {
        if !res.is_power_of_two() || res < 64 {
            return Err(LabError::Resolution {
                resolution: res,
                reason: "must be a power of two ≥ 64".into(),
            });
        }
        let per_cell = res as f64 / (WINDOW_LEN * family.grid_size as f64);
        if per_cell < 4.0 {
            return Err(LabError::Resolution {
                resolution: res,
                reason: format!("{per_cell:.2} samples per lattice cell, need ≥ 4"),
            });
        }
        let total = res
            .checked_pow(family.dim as u32)
            .filter(|&t| t <= 1 << 26)
            .ok_or_else(|| LabError::Resolution {
                resolution: res,
                reason: "grid too large".into(),
            })?;
        let h = WINDOW_LEN / res as f64;
        let axis: Vec<f64> = (0..res).map(|j| WINDOW_LO + j as f64 * h).collect();
        let mut psi_grid = Vec::with_capacity(total);
        let mut bump_samples = Vec::new();
        let mut x = vec![0.0; family.dim];
        for p in 0..total {
            let mut rem = p;
            for slot in x.iter_mut().rev() {
                *slot = axis[rem % res];
                rem /= res;
            }
            psi_grid.push(family.psi(&x));
            if let Some(cell) = family.locate(&x) {
                let b = family.local_bump(&x, cell);
                if b != 0.0 {
                    bump_samples.push((p as u32, cell as u32, b));
                }
            }
        }
        let half = res as i64 / 2;
        let norm = (total as f64).recip();
        let mut weights = Vec::with_capacity(total);
        let mut k = vec![0i64; family.dim];
        for p in 0..total {
            let mut rem = p;
            for slot in k.iter_mut().rev() {
                let raw = (rem % res) as i64;
                *slot = if raw >= half { raw - res as i64 } else { raw };
                rem /= res;
            }
            let xi = k.iter().map(|&v| (v as f64 / WINDOW_LEN).powi(2)).sum::<f64>().sqrt();
            weights.push((1.0 + xi) * norm);
        }
        let fft = FftPlanner::new().plan_fft_forward(res);
        Ok(MomentEstimator {
            family,
            res,
            psi_grid,
            bump_samples,
            weights,
            fft,
        })
    }

    pub fn family(&self) -> BumpFamily {
        self.family
    }

    pub fn resolution(&self) -> usize {
        self.res
    }

    /// Moment estimate of `scale · g` for the member's cells and signs.
    pub fn estimate(&self, member: &BumpMember) -> Result<f64> {
        if member.family != self.family {
            return Err(LabError::Unsupported("member belongs to a different family".into()));
        }
        Ok(member.scale * self.unscaled_moment(&member.active, &member.negative))
    }

    /// Moment estimate of the unscaled member with these cells and signs.
    pub fn unscaled_moment(&self, active: &BitSet, negative: &BitSet) -> f64 {
        let mut buf: Vec<Complex64> = self.psi_grid.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        for &(p, cell, b) in &self.bump_samples {
            let cell = cell as usize;
            if active.contains(cell) {
                buf[p as usize].re += if negative.contains(cell) { -b } else { b };
            }
        }
        self.transform(&mut buf);
        buf.iter().zip(&self.weights).map(|(z, w)| w * z.norm()).sum()
    }

    fn transform(&self, buf: &mut [Complex64]) {
        let res = self.res;
        let dim = self.family.dim;
        // Last axis is contiguous.
        self.fft.process(buf);
        if dim == 1 {
            return;
        }
        let mut line = vec![Complex64::new(0.0, 0.0); res];
        for axis in 0..dim - 1 {
            let stride = res.pow((dim - 1 - axis) as u32);
            let block = stride * res;
            for start in (0..buf.len()).step_by(block) {
                for offset in 0..stride {
                    let base = start + offset;
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = buf[base + j * stride];
                    }
                    self.fft.process(&mut line);
                    for (j, v) in line.iter().enumerate() {
                        buf[base + j * stride] = *v;
                    }
                }
            }
        }
    }
}

/// Moment estimate with the change observed when the resolution doubles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub value: f64,
    pub resolution: usize,
    pub refined_value: f64,
    pub refinement_delta: f64,
}

pub fn estimate_bump_fourier_moment(member: &BumpMember, res: usize) -> Result<MomentEstimate> {
    let coarse = MomentEstimator::new(member.family, res)?.estimate(member)?;
    let fine = MomentEstimator::new(member.family, res * 2)?.estimate(member)?;
    Ok(MomentEstimate {
        value: coarse,
        resolution: res,
        refined_value: fine,
        refinement_delta: (fine - coarse).abs(),
    })
}

/// Outcome of [`select_signs`].
#[derive(Clone, Debug, PartialEq)]
pub struct SignSelection {
    /// Cells assigned sign −1.
    pub negative: BitSet,
    /// Moment estimate of the unscaled member `ψ + f`.
    pub moment: f64,
    pub attempts: usize,
}

/// Rejection-sample uniform sign patterns on `active` until the unscaled
/// moment estimate is at most `threshold`.
pub fn select_signs(
    estimator: &MomentEstimator,
    active: &BitSet,
    seed: u64,
    threshold: f64,
    max_attempts: usize,
) -> Result<SignSelection> {
    let total = estimator.family.num_cells();
    if active.len() != total {
        return Err(LabError::Index(format!("active set must have length {total}")));
    }
    if !(threshold > 0.0) {
        return Err(LabError::Range(format!(
            "moment threshold must be positive, got {threshold}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    let cells: Vec<usize> = active.iter().collect();
    for attempt in 1..=max_attempts.max(1) {
        let mut negative = BitSet::new(total);
        for &c in &cells {
            if rng.random::<bool>() {
                negative.insert(c);
            }
        }
        let moment = estimator.unscaled_moment(active, &negative);
        if moment <= threshold {
            return Ok(SignSelection {
                negative,
                moment,
                attempts: attempt,
            });
        }
        best = best.min(moment);
    }
    Err(LabError::Exhausted {
        attempts: max_attempts,
        best_moment: best,
        threshold,
    })
}

/// Largest scale keeping every listed unscaled moment within `budget`.
pub fn scale_for_budget(moments: impl IntoIterator<Item = f64>, budget: f64) -> f64 {
    let worst = moments.into_iter().fold(0.0f64, f64::max);
    if worst == 0.0 {
        f64::INFINITY
    } else {
        budget / worst
    }
}
