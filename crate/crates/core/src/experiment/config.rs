//! Versioned TOML experiment configuration.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::barron::sample_boundary_rep;
use crate::classifier::{Boundary, Classifier, ConstClassifier, HorizonClassifier, PiecewiseClassifier};
use crate::erm::TrainConfig;
use crate::error::{LabError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    RateSweep,
    EntropyCurve,
    IdentitySuite,
    Calc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// Random regular boundary with Fourier pieces.
    Barron,
    /// `h ≡ 1`.
    ConstantOne,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierSpec {
    pub dim: usize,
    /// Number of pieces `M`.
    pub pieces: usize,
    /// Barron budget `R` of each boundary.
    pub budget: f64,
    pub boundary_seed: u64,
    pub terms: usize,
    pub max_freq: u32,
    pub target: Target,
}

impl Default for ClassifierSpec {
    fn default() -> Self {
        ClassifierSpec {
            dim: 2,
            pieces: 1,
            budget: 1.0,
            boundary_seed: 7,
            terms: 4,
            max_freq: 4,
            target: Target::Barron,
        }
    }
}

impl ClassifierSpec {
    /// The target classifier. A single piece is a horizon function with
    /// boundary drawn from `boundary_seed`.
    pub fn build(&self) -> Result<Arc<dyn Classifier>> {
        if self.dim < 2 {
            return Err(LabError::Config(format!(
                "classifier dimension must be at least 2, got {}",
                self.dim
            )));
        }
        Ok(match self.target {
            Target::ConstantOne => Arc::new(ConstClassifier {
                dim: self.dim,
                label: 1,
            }),
            Target::Barron if self.pieces == 1 => {
                let rep =
                    sample_boundary_rep(self.dim - 1, self.budget, self.terms, self.max_freq, self.boundary_seed)?;
                Arc::new(HorizonClassifier::new(self.dim, Boundary::Fourier(rep))?)
            }
            Target::Barron => Arc::new(PiecewiseClassifier::random_regular(
                self.dim,
                self.pieces,
                self.budget,
                self.terms,
                self.max_freq,
                self.boundary_seed,
            )?),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub m_grid: Vec<usize>,
    pub seeds: Vec<u64>,
    pub scale_factor: f64,
    pub tau: f64,
    pub n_mc: usize,
    /// `κ` in the upper exponent `1/3 − κ`.
    pub kappa_report: f64,
    /// Slope window used for acceptance.
    pub slope_window: [f64; 2],
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            m_grid: vec![128, 256, 512, 1024, 2048, 4096],
            seeds: vec![0, 1, 2, 3, 4],
            scale_factor: 1.5e-4,
            tau: 1.0,
            n_mc: 100_000,
            kappa_report: 0.05,
            slope_window: [-0.9, -0.15],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropySpec {
    pub dim: usize,
    pub grid_sizes: Vec<usize>,
    pub budget: f64,
    pub seed: u64,
    pub max_count: usize,
}

impl Default for EntropySpec {
    fn default() -> Self {
        EntropySpec {
            dim: 1,
            grid_sizes: vec![16, 32, 64],
            budget: 1.0,
            seed: 11,
            max_count: 1 << 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentitySpec {
    pub instances: usize,
    pub dim: usize,
    pub seed: u64,
    /// Grid for the horizon identities.
    pub identity_res: usize,
    /// Grid for the pointwise inequalities.
    pub pointwise_res: usize,
}

impl Default for IdentitySpec {
    fn default() -> Self {
        IdentitySpec {
            instances: 200,
            dim: 2,
            seed: 0,
            identity_res: 1024,
            pointwise_res: 128,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    #[serde(default)]
    pub classifier: ClassifierSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub entropy: EntropySpec,
    #[serde(default)]
    pub identity: IdentitySpec,
    /// Dimension for `calc`.
    #[serde(default = "default_calc_dim")]
    pub calc_dim: usize,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_calc_dim() -> usize {
    2
}

impl ExperimentConfig {
    pub fn rate_sweep() -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            kind: ExperimentKind::RateSweep,
            classifier: ClassifierSpec::default(),
            sweep: SweepSpec::default(),
            train: TrainConfig::default(),
            entropy: EntropySpec::default(),
            identity: IdentitySpec::default(),
            calc_dim: default_calc_dim(),
            output: OutputSpec::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            LabError::Config(msg) => LabError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(LabError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let s = &self.sweep;
        if s.m_grid.is_empty() || s.m_grid.windows(2).any(|w| w[1] <= w[0]) || s.m_grid[0] == 0 {
            return Err(LabError::Config(
                "m_grid must be nonempty, positive and strictly increasing".into(),
            ));
        }
        if s.seeds.is_empty() {
            return Err(LabError::Config("at least one seed is required".into()));
        }
        let mut seen = s.seeds.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(LabError::Config("seeds must be distinct".into()));
        }
        if s.n_mc == 0 {
            return Err(LabError::Config("n_mc must be positive".into()));
        }
        if !(s.slope_window[0] < s.slope_window[1]) {
            return Err(LabError::Config("slope_window must be an increasing pair".into()));
        }
        if self.classifier.pieces == 0 {
            return Err(LabError::Config("classifier needs at least one piece".into()));
        }
        if self.train.restarts == 0 {
            return Err(LabError::Config("train.restarts must be at least 1".into()));
        }
        Ok(())
    }
}
