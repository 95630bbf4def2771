//! Separated subset families and the bump-lattice packing sets built on them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::barron::{select_signs, BumpFamily, BumpMember, MomentEstimator};
use crate::bits::BitSet;
use crate::error::{LabError, Result};
use crate::par::map_indexed;

/// Subsets of `{0, …, n_items − 1}` with pairwise symmetric difference `> r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparatedFamily {
    pub n_items: usize,
    pub r: usize,
    pub target: usize,
    pub subsets: Vec<BitSet>,
    /// Candidate subsets drawn.
    pub tries: usize,
}

impl SeparatedFamily {
    pub fn achieved(&self) -> usize {
        self.subsets.len()
    }

    /// Re-check every pair; returns the smallest symmetric difference seen
    /// (`None` for fewer than two subsets).
    pub fn min_separation(&self) -> Option<usize> {
        min_pairwise(&self.subsets, |a, b| a.sym_diff_count(b))
    }
}

/// Rejection sampling: draw uniform subsets and keep those farther than `r`
/// from all kept ones, until `target_count` are kept or `max_tries` draws
/// are used.
pub fn separated_family(
    n_items: usize,
    target_count: usize,
    r: usize,
    seed: u64,
    max_tries: usize,
) -> Result<SeparatedFamily> {
    if r >= n_items {
        return Err(LabError::Range(format!(
            "separation r = {r} must be below n = {n_items}"
        )));
    }
    let words = n_items.div_ceil(64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flat: Vec<u64> = Vec::new();
    let mut count = 0usize;
    let mut tries = 0usize;
    let mut cand = vec![0u64; words];
    while count < target_count && tries < max_tries {
        tries += 1;
        for w in cand.iter_mut() {
            *w = rng.random();
        }
        if !n_items.is_multiple_of(64) {
            cand[words - 1] &= (1u64 << (n_items % 64)) - 1;
        }
        let ok = flat.chunks_exact(words).all(|s| {
            s.iter()
                .zip(&cand)
                .map(|(a, b)| (a ^ b).count_ones() as usize)
                .sum::<usize>()
                > r
        });
        if ok {
            flat.extend_from_slice(&cand);
            count += 1;
        }
    }
    let subsets = flat
        .chunks_exact(words)
        .map(|w| BitSet::from_words(n_items, w.to_vec()))
        .collect();
    Ok(SeparatedFamily {
        n_items,
        r,
        target: target_count,
        subsets,
        tries,
    })
}

fn min_pairwise<T: Sync>(items: &[T], dist: impl Fn(&T, &T) -> usize + Sync + Send) -> Option<usize> {
    if items.len() < 2 {
        return None;
    }
    map_indexed(items.len() - 1, |i| {
        items[i + 1..]
            .iter()
            .map(|b| dist(&items[i], b))
            .min()
            .unwrap_or(usize::MAX)
    })
    .into_iter()
    .min()
}

/// Parameters of the bump-lattice packing construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpPackingConfig {
    pub dim: usize,
    /// Lattice size `N`, a positive multiple of 16.
    pub grid_size: usize,
    /// Fourier-moment budget `C` the scaled members must respect.
    pub budget: f64,
    pub seed: u64,
    /// Cap on the subset count `2^{N^d / 4}`.
    pub max_count: usize,
    /// Sign patterns are accepted below `threshold_factor` times the mean
    /// moment of random patterns.
    pub threshold_factor: f64,
    pub calibration_draws: usize,
    pub max_sign_attempts: usize,
    /// FFT resolution; defaults to the smallest power of two `≥ max(64, 12N)`.
    pub moment_res: Option<usize>,
}

impl BumpPackingConfig {
    pub fn new(dim: usize, grid_size: usize, budget: f64, seed: u64) -> Self {
        BumpPackingConfig {
            dim,
            grid_size,
            budget,
            seed,
            max_count: 1 << 16,
            threshold_factor: 2.0,
            calibration_draws: 32,
            max_sign_attempts: 256,
            moment_res: None,
        }
    }
}

/// A separated set of bump-family members scaled into a moment budget.
#[derive(Clone, Debug)]
pub struct BumpPackingSet {
    pub family: BumpFamily,
    pub members: Vec<BumpMember>,
    /// Required cell-set separation `r = N^d / 16`.
    pub r: usize,
    /// Requested count `min(2^{N^d/4}, max_count)`.
    pub target: usize,
    /// Smallest `|Ω Δ Ω'| + 2·#sign changes` over all pairs.
    pub min_units: usize,
    /// Smallest pairwise `L¹` distance, from the closed form.
    pub eps: f64,
    pub scale: f64,
    /// Largest unscaled moment estimate among the members.
    pub max_moment: f64,
    pub moment_threshold: f64,
    pub moment_res: usize,
}

impl BumpPackingSet {
    pub fn ln_count(&self) -> f64 {
        (self.members.len() as f64).ln()
    }
}

/// Build the packing set: a separated family of active-cell sets, one
/// low-moment sign pattern per set, and a common scale meeting the budget.
pub fn bump_packing_set(cfg: &BumpPackingConfig) -> Result<BumpPackingSet> {
    if cfg.grid_size == 0 || !cfg.grid_size.is_multiple_of(16) {
        return Err(LabError::Range(format!(
            "N = {} must be a positive multiple of 16",
            cfg.grid_size
        )));
    }
    if !(cfg.budget > 0.0) || !(cfg.threshold_factor > 0.0) {
        return Err(LabError::Range("budget and threshold factor must be positive".into()));
    }
    let family = BumpFamily::new(cfg.dim, cfg.grid_size)?;
    let n = family.num_cells();
    let r = n / 16;
    let k = n / 4;
    let target = if k >= usize::BITS as usize - 1 {
        cfg.max_count
    } else {
        (1usize << k).min(cfg.max_count)
    };
    let sep = separated_family(n, target, r, cfg.seed, target.saturating_mul(8).max(64))?;
    let res = cfg
        .moment_res
        .unwrap_or_else(|| (12 * cfg.grid_size).max(64).next_power_of_two());
    let est = MomentEstimator::new(family, res)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x005e_ed0f_5167);
    let draws = cfg.calibration_draws.max(1);
    let mut mean = 0.0;
    for _ in 0..draws {
        let active = &sep.subsets[rng.random_range(0..sep.subsets.len())];
        let negative = BitSet::from_indices(n, active.iter().filter(|_| rng.random::<bool>())).expect("in range");
        mean += est.unscaled_moment(active, &negative) / draws as f64;
    }
    let threshold = cfg.threshold_factor * mean;

    let picks = map_indexed(sep.subsets.len(), |i| {
        select_signs(
            &est,
            &sep.subsets[i],
            cfg.seed.wrapping_add(1 + i as u64),
            threshold,
            cfg.max_sign_attempts,
        )
    });
    let picks = picks.into_iter().collect::<Result<Vec<_>>>()?;
    let max_moment = picks.iter().map(|p| p.moment).fold(0.0, f64::max);
    let scale = cfg.budget / max_moment;
    let members = sep
        .subsets
        .iter()
        .zip(&picks)
        .map(|(a, p)| family.member_from_bits(a.clone(), p.negative.clone(), scale))
        .collect::<Result<Vec<_>>>()?;
    let min_units = min_pairwise(&members, |a, b| a.separation_units(b)).unwrap_or(0);
    let eps = scale * family.kappa() * min_units as f64 / n as f64;
    Ok(BumpPackingSet {
        family,
        members,
        r,
        target,
        min_units,
        eps,
        scale,
        max_moment,
        moment_threshold: threshold,
        moment_res: res,
    })
}
